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

#ifndef QFLOW_TESTS_TEST_UTIL_H
#define QFLOW_TESTS_TEST_UTIL_H

#include <cmath>
#include <random>
#include <vector>

#include "qflow/model.h"

namespace qflow::testing {

/// Training data whose codebook has A_dt = (-1, +1) and M_dt = 0 for every cell,
/// with uniform transitions and undefined correlations. Callers overwrite pieces.
inline TrainingData blank_data(std::size_t ports, std::size_t n, std::size_t steps) {
    TrainingData data;
    for (std::size_t d = 0; d < ports; d++) data.port_names.push_back("p" + std::to_string(d));
    SaxCodebook &cb = data.codebook;
    cb.states_per_port = n;
    cb.num_ports = ports;
    cb.num_times = steps;
    cb.breakpoints.assign(ports * steps * (n - 1), 0.0);
    for (std::size_t k = 0; k < cb.breakpoints.size(); k++) cb.breakpoints[k] = static_cast<double>(k % (n - 1));
    cb.representatives.resize(ports * steps * n);
    for (std::size_t k = 0; k < cb.representatives.size(); k++) {
        double j = static_cast<double>(k % n);
        cb.representatives[k] = n == 2 ? 2 * j - 1 : j - 0.5 * static_cast<double>(n - 1);
    }
    cb.means.assign(ports * steps, 0.0);
    cb.bin_counts.assign(ports * steps * n, 1);
    cb.degenerate.assign(ports * steps, 0);

    TransitionTensor &tt = data.transitions;
    tt.states_per_port = n;
    tt.num_ports = ports;
    tt.num_times = steps;
    tt.tallies.assign(ports * steps * n * n, 0.0);
    tt.probs.assign(ports * steps * n * n, 1.0 / static_cast<double>(n));
    tt.empty_rows.assign(ports * steps * n, 0);

    CorrelationTable &ct = data.correlations;
    ct.num_ports = ports;
    ct.num_times = steps;
    ct.rho.assign(ports * ports * steps, 0.0);
    ct.defined.assign(ports * ports * steps, 0);

    std::size_t joint = 1;
    for (std::size_t d = 0; d < ports; d++) joint *= n;
    data.initial_distribution.assign(joint, 1.0 / static_cast<double>(joint));
    data.initial_counts.assign(ports, 10.0);
    return data;
}

/// Makes `data` self-consistent with `params`: transitions equal the model
/// conditionals and correlations equal the model correlations. Requires each
/// port's from-state to determine the joint from-state.
inline void fit_data_to_model(TrainingData &data, const AnsatzParams &params, const CircuitLayout &layout) {
    std::size_t n = data.states_per_port();
    for (std::size_t f : data.from_indices()) {
        JointState from = joint_state_from_index(f, n, data.num_ports());
        for (std::size_t t = 1; t < data.num_steps(); t++) {
            auto table = joint_outcome_distribution(params, layout, from, static_cast<double>(t));
            for (std::size_t d = 0; d < data.num_ports(); d++) {
                auto m = port_marginal(table, d);
                for (std::size_t j = 0; j < n; j++) {
                    data.transitions.probs[data.transitions.row_offset(d, t, from[d]) + j] = m[j];
                }
            }
        }
    }
    for (std::size_t t = 1; t < data.num_steps(); t++)
        for (std::size_t d = 0; d < data.num_ports(); d++)
            for (std::size_t e = 0; e < data.num_ports(); e++) {
                if (d == e) continue;
                auto mc = model_correlation(params, layout, data, static_cast<double>(t), d, e);
                data.correlations.rho[data.correlations.index(d, e, t)] = mc.value;
                data.correlations.defined[data.correlations.index(d, e, t)] = mc.defined;
            }
}

/// Two-state stationary Markov chain K^t as transition targets for one port.
inline TrainingData markov_data(double p01, double p10, std::size_t steps) {
    TrainingData data = blank_data(1, 2, steps);
    double lambda = 1 - p01 - p10;
    double pi1 = p01 / (p01 + p10);
    for (std::size_t t = 0; t < steps; t++) {
        double decay = std::pow(lambda, static_cast<double>(t));
        double k01 = pi1 * (1 - decay);
        double k10 = (1 - pi1) * (1 - decay);
        std::size_t r0 = data.transitions.row_offset(0, t, 0);
        std::size_t r1 = data.transitions.row_offset(0, t, 1);
        data.transitions.probs[r0] = 1 - k01;
        data.transitions.probs[r0 + 1] = k01;
        data.transitions.probs[r1] = k10;
        data.transitions.probs[r1 + 1] = 1 - k10;
    }
    data.initial_distribution = {0.5, 0.5};
    return data;
}

inline double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace qflow::testing

#endif
