// Copyright 2026 The qflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Umbrella header.

#ifndef QFLOW_QFLOW_H
#define QFLOW_QFLOW_H

#include "qflow/data.h"
#include "qflow/encode.h"
#include "qflow/error.h"
#include "qflow/generate.h"
#include "qflow/model.h"
#include "qflow/qsim.h"
#include "qflow/rng.h"
#include "qflow/scenario.h"

#endif
