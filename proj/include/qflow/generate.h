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

// Sample paths from a trained model.
//
// A path draws the joint state at t = 0 from the observed initial law, then
// repeatedly measures the circuit to get the state at t = 1, 2, ... and
// rebuilds counts with X[t+1] = X[t] + A_t(J[t]). Counts are not floored.

#ifndef QFLOW_GENERATE_H
#define QFLOW_GENERATE_H

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qflow/encode.h"
#include "qflow/error.h"
#include "qflow/model.h"
#include "qflow/qsim.h"
#include "qflow/rng.h"

namespace qflow {

enum class SamplingMode {
    /// Re-prepare the measured state and evolve it with the next step's time index.
    kReinjection,
    /// Evolve the day's t = 0 state directly to each time index.
    kFromOrigin,
};

inline std::string_view to_string(SamplingMode mode) {
    return mode == SamplingMode::kReinjection ? "reinjection" : "from-origin";
}

inline SamplingMode parse_sampling_mode(std::string_view s) {
    if (s == "reinjection") {
        return SamplingMode::kReinjection;
    }
    if (s == "from-origin") {
        return SamplingMode::kFromOrigin;
    }
    throw ConfigError("unknown sampling mode '" + std::string(s) + "' (expected reinjection or from-origin)");
}

/// One generated day: states[d][t] and counts[d][t] on num_points grid points.
struct SamplePath {
    std::size_t num_ports = 0;
    std::size_t num_points = 0;
    std::vector<std::uint32_t> states;
    std::vector<double> counts;

    SamplePath() = default;
    SamplePath(std::size_t ports, std::size_t points)
        : num_ports(ports), num_points(points), states(ports * points, 0), counts(ports * points, 0.0) {
    }

    std::uint32_t state(std::size_t d, std::size_t t) const {
        return states[d * num_points + t];
    }
    double count(std::size_t d, std::size_t t) const {
        return counts[d * num_points + t];
    }
    std::span<const double> series(std::size_t d) const {
        return std::span<const double>(counts).subspan(d * num_points, num_points);
    }

    bool operator==(const SamplePath &) const = default;
};

struct Ensemble {
    std::vector<SamplePath> paths;
    std::uint64_t seed = 0;
    SamplingMode mode = SamplingMode::kReinjection;

    bool operator==(const Ensemble &) const = default;
};

/// One measurement step: the joint state at t_next given the current state
/// (reinjection) or the day's origin state (from-origin).
inline JointState step(
    const JointState &current,
    const JointState &origin,
    std::size_t t_next,
    const TrainedModel &model,
    SamplingMode mode,
    Rng &rng) {
    if (t_next < 1 || t_next > model.data.num_steps()) {
        throw ContractError("step time must lie in 1.." + std::to_string(model.data.num_steps()));
    }
    const JointState &from = mode == SamplingMode::kReinjection ? current : origin;
    JointTable table = joint_outcome_distribution(model.params, model.layout, from, static_cast<double>(t_next));
    return joint_state_from_index(sample_one(table.probs, rng), table.states_per_port, table.num_ports);
}

/// Path sampler with every outcome distribution precomputed.
class PathSampler {
   public:
    PathSampler(const TrainedModel &model, SamplingMode mode) : model_(&model), mode_(mode) {
        std::size_t ports = model.data.num_ports();
        n_ = model.data.states_per_port();
        steps_ = model.data.num_steps();
        joint_ = 1;
        for (std::size_t d = 0; d < ports; d++) {
            joint_ *= n_;
        }
        if (model.data.initial_distribution.size() != joint_) {
            throw ContractError("initial distribution does not match the model's joint state space");
        }
        std::vector<double> times;
        for (std::size_t t = 1; t <= steps_; t++) {
            times.push_back(static_cast<double>(t));
        }
        tables_.resize(joint_ * steps_);
        for (std::size_t f = 0; f < joint_; f++) {
            // From-origin paths only ever evolve from states with positive weight.
            if (mode == SamplingMode::kFromOrigin && model.data.initial_distribution[f] <= 0) {
                continue;
            }
            auto tables = joint_outcome_distributions(model.params, model.layout, joint_state_from_index(f, n_, ports), times);
            for (std::size_t k = 0; k < steps_; k++) {
                tables_[f * steps_ + k] = std::move(tables[k].probs);
            }
        }
    }

    /// Outcome distribution over joint states at time t (1..num_steps) from `from`.
    std::span<const double> distribution(std::size_t from, std::size_t t) const {
        return tables_[from * steps_ + (t - 1)];
    }

    SamplePath path(std::span<const double> x0, Rng &rng) const {
        const TrainingData &data = model_->data;
        std::size_t ports = data.num_ports();
        if (x0.size() != ports) {
            throw ContractError("initial counts must have one entry per port");
        }
        SamplePath p(ports, steps_ + 1);
        std::size_t origin = sample_one(data.initial_distribution, rng);
        std::size_t current = origin;
        write_state(p, 0, current);
        for (std::size_t t = 1; t <= steps_; t++) {
            std::size_t from = mode_ == SamplingMode::kReinjection ? current : origin;
            current = sample_one(distribution(from, t), rng);
            write_state(p, t, current);
        }
        for (std::size_t d = 0; d < ports; d++) {
            double x = x0[d];
            p.counts[d * p.num_points] = x;
            for (std::size_t t = 0; t < steps_; t++) {
                x += data.codebook.representative(d, t, p.state(d, t));
                p.counts[d * p.num_points + t + 1] = x;
            }
        }
        return p;
    }

    SamplingMode mode() const {
        return mode_;
    }

   private:
    void write_state(SamplePath &p, std::size_t t, std::size_t joint) const {
        for (std::size_t d = p.num_ports; d-- > 0;) {
            p.states[d * p.num_points + t] = static_cast<std::uint32_t>(joint % n_);
            joint /= n_;
        }
    }

    const TrainedModel *model_;
    SamplingMode mode_;
    std::size_t n_ = 0;
    std::size_t steps_ = 0;
    std::size_t joint_ = 0;
    std::vector<std::vector<double>> tables_;
};

/// Mean observed t = 0 count of each port.
inline std::vector<double> default_initial_counts(const TrainedModel &model) {
    return model.data.initial_counts;
}

inline SamplePath generate_path(
    const TrainedModel &model, std::span<const double> x0, Rng &rng, SamplingMode mode = SamplingMode::kReinjection) {
    return PathSampler(model, mode).path(x0, rng);
}

/// n_paths paths, path k drawn from substream(seed, k).
inline Ensemble generate_ensemble(
    const TrainedModel &model,
    std::span<const double> x0,
    std::size_t n_paths,
    std::uint64_t seed,
    SamplingMode mode = SamplingMode::kReinjection) {
    if (n_paths == 0) {
        throw ConfigError("n_paths must be at least 1");
    }
    PathSampler sampler(model, mode);
    Ensemble e;
    e.seed = seed;
    e.mode = mode;
    e.paths.reserve(n_paths);
    for (std::size_t k = 0; k < n_paths; k++) {
        Rng rng = substream(seed, k);
        e.paths.push_back(sampler.path(x0, rng));
    }
    return e;
}

struct EnsembleStatistics {
    std::size_t num_ports = 0;
    std::size_t num_points = 0;
    std::vector<double> mean;    // [d][t]
    std::vector<double> stddev;  // [d][t], population
    /// Pearson correlation across paths of the increments X[t+1] - X[t], [d][e][t].
    CorrelationTable increment_correlation;

    double mean_at(std::size_t d, std::size_t t) const {
        return mean[d * num_points + t];
    }
    double stddev_at(std::size_t d, std::size_t t) const {
        return stddev[d * num_points + t];
    }
};

inline EnsembleStatistics ensemble_statistics(const Ensemble &e) {
    if (e.paths.empty()) {
        throw ContractError("ensemble statistics need at least one path");
    }
    const SamplePath &first = e.paths.front();
    std::size_t ports = first.num_ports, points = first.num_points;
    for (const auto &p : e.paths) {
        if (p.num_ports != ports || p.num_points != points) {
            throw ContractError("ensemble paths must share the grid and port count");
        }
    }
    double n = static_cast<double>(e.paths.size());
    EnsembleStatistics s;
    s.num_ports = ports;
    s.num_points = points;
    s.mean.assign(ports * points, 0.0);
    s.stddev.assign(ports * points, 0.0);
    for (std::size_t k = 0; k < ports * points; k++) {
        double m = 0;
        for (const auto &p : e.paths) {
            m += p.counts[k];
        }
        m /= n;
        double v = 0;
        for (const auto &p : e.paths) {
            v += (p.counts[k] - m) * (p.counts[k] - m);
        }
        s.mean[k] = m;
        s.stddev[k] = std::sqrt(v / n);
    }

    std::size_t steps = points - 1;
    CorrelationTable &ct = s.increment_correlation;
    ct.num_ports = ports;
    ct.num_times = steps;
    ct.rho.assign(ports * ports * steps, 0.0);
    ct.defined.assign(ports * ports * steps, 0);
    std::vector<std::vector<double>> inc(ports, std::vector<double>(e.paths.size()));
    std::vector<double> centre(ports);
    for (std::size_t t = 0; t < steps; t++) {
        for (std::size_t d = 0; d < ports; d++) {
            double m = 0;
            for (std::size_t k = 0; k < e.paths.size(); k++) {
                const auto &p = e.paths[k];
                inc[d][k] = p.count(d, t + 1) - p.count(d, t);
                m += inc[d][k];
            }
            centre[d] = m / n;
        }
        for (std::size_t d = 0; d < ports; d++) {
            for (std::size_t f = 0; f < ports; f++) {
                if (d == f) {
                    continue;
                }
                double r = 0;
                if (centred_correlation(inc[d], inc[f], centre[d], centre[f], r)) {
                    ct.rho[ct.index(d, f, t)] = r;
                    ct.defined[ct.index(d, f, t)] = 1;
                }
            }
        }
    }
    return s;
}

/// Increment deviations from the ensemble mean for ports (d, e) at step t,
/// one pair per path.
inline std::vector<std::pair<double, double>> increment_deviations(
    const Ensemble &e, std::size_t d, std::size_t f, std::size_t t) {
    std::vector<std::pair<double, double>> out;
    double md = 0, mf = 0;
    for (const auto &p : e.paths) {
        md += p.count(d, t + 1) - p.count(d, t);
        mf += p.count(f, t + 1) - p.count(f, t);
    }
    md /= static_cast<double>(e.paths.size());
    mf /= static_cast<double>(e.paths.size());
    for (const auto &p : e.paths) {
        out.emplace_back(p.count(d, t + 1) - p.count(d, t) - md, p.count(f, t + 1) - p.count(f, t) - mf);
    }
    return out;
}

/// Agreement between two correlation tables over steps where both are defined.
struct CorrelationAgreement {
    std::size_t compared = 0;
    std::size_t sign_matches = 0;
    double mean_abs_diff = 0;

    double sign_rate() const {
        return compared == 0 ? 0.0 : static_cast<double>(sign_matches) / static_cast<double>(compared);
    }
};

inline CorrelationAgreement compare_correlations(
    const CorrelationTable &reference, const CorrelationTable &other, std::size_t d, std::size_t e, std::size_t t_begin = 0) {
    CorrelationAgreement out;
    std::size_t steps = std::min(reference.num_times, other.num_times);
    for (std::size_t t = t_begin; t < steps; t++) {
        if (!reference.is_defined(d, e, t) || !other.is_defined(d, e, t)) {
            continue;
        }
        double a = reference.at(d, e, t), b = other.at(d, e, t);
        out.compared++;
        if ((a > 0 && b > 0) || (a < 0 && b < 0)) {
            out.sign_matches++;
        }
        out.mean_abs_diff += std::abs(a - b);
    }
    if (out.compared > 0) {
        out.mean_abs_diff /= static_cast<double>(out.compared);
    }
    return out;
}

/// Model correlations rho^theta for every port pair and cost time.
inline CorrelationTable model_correlation_table(const TrainedModel &model) {
    const TrainingData &data = model.data;
    CorrelationTable ct;
    ct.num_ports = data.num_ports();
    ct.num_times = data.num_steps();
    ct.rho.assign(ct.num_ports * ct.num_ports * ct.num_times, 0.0);
    ct.defined.assign(ct.rho.size(), 0);
    for (std::size_t t = 1; t < data.num_steps(); t++) {
        for (std::size_t d = 0; d < ct.num_ports; d++) {
            for (std::size_t e = 0; e < ct.num_ports; e++) {
                if (d == e) {
                    continue;
                }
                auto mc = model_correlation(model.params, model.layout, data, static_cast<double>(t), d, e);
                ct.rho[ct.index(d, e, t)] = mc.value;
                ct.defined[ct.index(d, e, t)] = mc.defined;
            }
        }
    }
    return ct;
}

}  // namespace qflow

#endif
