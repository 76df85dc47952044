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

// Training objective and optimizer.
//
// The cost is
//
//     C = sum_{f,t,d} w_f KL(P_dt(. | f) || T_dt(. | f_d))
//       + sum_{d != e} sum_t alpha_de (rho_det - rho^model_det)^2
//
// where f runs over the joint from-states observed at t = 0 with empirical
// weights w_f, P_dt(. | f) is the port-d marginal of the circuit's joint
// outcome distribution, and rho^model is evaluated on the w-averaged bivariate
// table of ports (d, e).

#ifndef QFLOW_MODEL_H
#define QFLOW_MODEL_H

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qflow/encode.h"
#include "qflow/error.h"
#include "qflow/qsim.h"
#include "qflow/rng.h"

namespace qflow {

enum class GradientMethod {
    kParameterShift,
    kFiniteDifference,
};

struct TrainConfig {
    /// D x D row-major correlation weights; the diagonal is unused.
    std::vector<double> alpha;
    double learning_rate = 0.1;
    std::size_t iterations = 300;
    /// 0 selects exact probabilities, otherwise the shot count per circuit evaluation.
    std::size_t shots = 0;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double init_scale = 0.1;
    double max_alpha = 5.0;
    std::size_t num_ancilla = 2;
    std::vector<Entangler> layers{Entangler::kAdjacentRing};
    GradientMethod gradient = GradientMethod::kParameterShift;
    double fd_step = 1e-5;

    static TrainConfig with_uniform_alpha(std::size_t num_ports, double a) {
        TrainConfig c;
        c.alpha.assign(num_ports * num_ports, a);
        for (std::size_t d = 0; d < num_ports; d++) {
            c.alpha[d * num_ports + d] = 0;
        }
        return c;
    }

    double alpha_at(std::size_t d, std::size_t e, std::size_t num_ports) const {
        return alpha[d * num_ports + e];
    }

    void validate(std::size_t num_ports) const {
        if (alpha.size() != num_ports * num_ports) {
            throw ConfigError("alpha must be a " + std::to_string(num_ports) + "x" + std::to_string(num_ports) + " matrix");
        }
        for (std::size_t d = 0; d < num_ports; d++) {
            for (std::size_t e = 0; e < num_ports; e++) {
                double a = alpha[d * num_ports + e];
                if (!(a >= 0 && a <= max_alpha)) {
                    throw ConfigError("alpha entries must lie in [0, " + std::to_string(max_alpha) + "]");
                }
                if (a != alpha[e * num_ports + d]) {
                    throw ConfigError("alpha must be symmetric");
                }
            }
        }
        if (!(learning_rate > 0)) {
            throw ConfigError("learning rate must be positive");
        }
        if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_eps > 0)) {
            throw ConfigError("invalid Adam hyperparameters");
        }
        if (layers.empty()) {
            throw ConfigError("the ansatz needs at least one layer");
        }
        if (num_ancilla > kMaxAncilla) {
            throw ConfigError("at most " + std::to_string(kMaxAncilla) + " ancillas are supported");
        }
        if (!(fd_step > 0)) {
            throw ConfigError("finite-difference step must be positive");
        }
    }

    bool operator==(const TrainConfig &) const = default;
};

struct CostBreakdown {
    double term1 = 0;
    double term2 = 0;
    double total = 0;

    bool operator==(const CostBreakdown &) const = default;
};

/// Everything the cost needs from observed data.
struct TrainingData {
    std::vector<std::string> port_names;
    int first_hour = 6;
    SaxCodebook codebook;
    TransitionTensor transitions;
    CorrelationTable correlations;
    /// Joint state law at t = 0, indexed by `joint_index`.
    std::vector<double> initial_distribution;
    /// Mean observed count of each port at t = 0.
    std::vector<double> initial_counts;

    std::size_t num_ports() const {
        return transitions.num_ports;
    }
    std::size_t states_per_port() const {
        return transitions.states_per_port;
    }
    /// Number of increment steps per day.
    std::size_t num_steps() const {
        return transitions.num_times;
    }

    /// Evolution times entering the cost: 1 .. num_steps - 1.
    std::vector<double> times() const {
        std::vector<double> out;
        for (std::size_t t = 1; t < num_steps(); t++) {
            out.push_back(static_cast<double>(t));
        }
        return out;
    }

    /// Joint from-states with nonzero weight, in index order.
    std::vector<std::size_t> from_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < initial_distribution.size(); k++) {
            if (initial_distribution[k] > 0) {
                out.push_back(k);
            }
        }
        return out;
    }

    bool operator==(const TrainingData &) const = default;
};

/// Codebook, transitions, correlations and initial statistics of a count panel.
inline TrainingData prepare_training_data(
    const CountPanel &counts, std::size_t states_per_port, CodebookOptions options = {}) {
    if (counts.num_days() < 2) {
        throw DataError("training needs at least two days of data");
    }
    TrainingData data;
    data.port_names = counts.port_names;
    data.first_hour = counts.first_hour;
    IncrementPanel inc = compute_increments(counts);
    data.codebook = fit_codebook(inc, states_per_port, options);
    StatePanel states = discretize(inc, data.codebook);
    data.transitions = build_transitions(states, states_per_port);
    data.correlations = empirical_correlations(inc, data.codebook);
    data.initial_distribution = initial_state_distribution(states, states_per_port);
    data.initial_counts.assign(counts.num_ports(), 0.0);
    for (std::size_t k = 0; k < counts.num_days(); k++) {
        for (std::size_t d = 0; d < counts.num_ports(); d++) {
            data.initial_counts[d] += counts.at(k, d, 0);
        }
    }
    for (double &x : data.initial_counts) {
        x /= static_cast<double>(counts.num_days());
    }
    return data;
}

/// Circuit layout for `data` with `num_ancilla` extra qubits.
inline CircuitLayout layout_for(const TrainingData &data, std::size_t num_ancilla) {
    return CircuitLayout(data.num_ports(), data.states_per_port(), num_ancilla);
}

/// sum_j p_j log(p_j / q_j), with 0 log 0 = 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw ContractError("KL divergence of vectors with different lengths");
    }
    double sp = 0, sq = 0;
    for (std::size_t j = 0; j < p.size(); j++) {
        sp += p[j];
        sq += q[j];
    }
    if (std::abs(sp - 1) > 1e-6 || std::abs(sq - 1) > 1e-6) {
        throw ContractError("KL divergence arguments must be normalized");
    }
    double kl = 0;
    for (std::size_t j = 0; j < p.size(); j++) {
        if (p[j] <= 0) {
            continue;
        }
        if (q[j] <= 0) {
            throw NumericalError("infinite KL divergence: reference probability is zero where p > 0");
        }
        kl += p[j] * std::log(p[j] / q[j]);
    }
    return kl;
}

/// Centred correlation of a bivariate model table `pair` ([j * N + k]) with
/// centred state values a (first port) and b (second port).
struct ModelCorrelation {
    double value = 0;
    bool defined = false;
    double var_a = 0;
    double var_b = 0;
};

inline ModelCorrelation correlation_from_pair_table(
    std::span<const double> pair, std::span<const double> a, std::span<const double> b) {
    std::size_t n = a.size();
    ModelCorrelation out;
    double cov = 0, scale_a = 0, scale_b = 0;
    for (std::size_t j = 0; j < n; j++) {
        scale_a += a[j] * a[j];
        scale_b += b[j] * b[j];
        for (std::size_t k = 0; k < n; k++) {
            double p = pair[j * n + k];
            cov += p * a[j] * b[k];
            out.var_a += p * a[j] * a[j];
            out.var_b += p * b[k] * b[k];
        }
    }
    if (out.var_a <= 1e-13 * scale_a || out.var_b <= 1e-13 * scale_b || scale_a == 0 || scale_b == 0) {
        return out;
    }
    out.defined = true;
    out.value = cov / std::sqrt(out.var_a * out.var_b);
    return out;
}

/// Centred representative values A_dt(j) - M_dt.
inline std::vector<double> centred_representatives(const SaxCodebook &cb, std::size_t d, std::size_t t) {
    std::vector<double> out(cb.states_per_port);
    for (std::size_t j = 0; j < out.size(); j++) {
        out[j] = cb.representative(d, t, j) - cb.mean(d, t);
    }
    return out;
}

/// Circuit outcome tables for every weighted from-state and cost time:
/// tables[f][k] is the joint distribution from from-state f at times()[k].
using ModelTables = std::vector<std::vector<JointTable>>;

inline ModelTables model_tables(
    const AnsatzParams &params,
    const CircuitLayout &layout,
    const TrainingData &data,
    const AngleShift &shift = {},
    std::size_t shots = 0,
    Rng *rng = nullptr) {
    auto times = data.times();
    ModelTables out;
    for (std::size_t f : data.from_indices()) {
        JointState from = joint_state_from_index(f, data.states_per_port(), data.num_ports());
        auto tables = joint_outcome_distributions(params, layout, from, times, shift);
        if (shots > 0) {
            if (!rng) {
                throw ContractError("sampled mode needs a random stream");
            }
            for (auto &table : tables) {
                table = sampled_table(table, shots, *rng);
            }
        }
        out.push_back(std::move(tables));
    }
    return out;
}

namespace detail {

/// Cost of a set of model tables and, if `grad` is given, dC/dP for every entry.
inline CostBreakdown cost_from_tables(
    const ModelTables &tables, const TrainingData &data, const TrainConfig &config, ModelTables *grad) {
    std::size_t num_ports = data.num_ports();
    std::size_t n = data.states_per_port();
    auto froms = data.from_indices();
    auto times = data.times();
    CostBreakdown c;

    if (grad) {
        *grad = tables;
        for (auto &row : *grad) {
            for (auto &table : row) {
                std::fill(table.probs.begin(), table.probs.end(), 0.0);
            }
        }
    }

    // KL term.
    std::vector<double> slope(n);
    for (std::size_t fi = 0; fi < froms.size(); fi++) {
        double w = data.initial_distribution[froms[fi]];
        JointState from = joint_state_from_index(froms[fi], n, num_ports);
        for (std::size_t k = 0; k < times.size(); k++) {
            const JointTable &table = tables[fi][k];
            std::size_t t = static_cast<std::size_t>(times[k]);
            for (std::size_t d = 0; d < num_ports; d++) {
                auto p = port_marginal(table, d);
                auto q = data.transitions.row(d, t, from[d]);
                double kl = 0;
                for (std::size_t j = 0; j < n; j++) {
                    if (p[j] > 0) {
                        double lr = std::log(p[j] / q[j]);
                        kl += p[j] * lr;
                        slope[j] = w * (lr + 1.0);
                    } else {
                        slope[j] = 0;
                    }
                }
                c.term1 += w * kl;
                if (grad) {
                    auto &g = (*grad)[fi][k];
                    std::size_t stride = g.stride(d);
                    for (std::size_t o = 0; o < g.probs.size(); o++) {
                        g.probs[o] += slope[(o / stride) % n];
                    }
                }
            }
        }
    }

    // Correlation penalty over ordered pairs d != e; rho is symmetric, so each
    // unordered pair carries alpha_de + alpha_ed.
    for (std::size_t d = 0; d < num_ports; d++) {
        for (std::size_t e = d + 1; e < num_ports; e++) {
            double weight = config.alpha_at(d, e, num_ports) + config.alpha_at(e, d, num_ports);
            if (weight == 0) {
                continue;
            }
            for (std::size_t k = 0; k < times.size(); k++) {
                std::size_t t = static_cast<std::size_t>(times[k]);
                if (!data.correlations.is_defined(d, e, t)) {
                    continue;
                }
                std::vector<double> pair(n * n, 0.0);
                for (std::size_t fi = 0; fi < froms.size(); fi++) {
                    double w = data.initial_distribution[froms[fi]];
                    auto pm = pair_marginal(tables[fi][k], d, e);
                    for (std::size_t x = 0; x < pair.size(); x++) {
                        pair[x] += w * pm[x];
                    }
                }
                auto a = centred_representatives(data.codebook, d, t);
                auto b = centred_representatives(data.codebook, e, t);
                auto mc = correlation_from_pair_table(pair, a, b);
                if (!mc.defined) {
                    continue;
                }
                double diff = data.correlations.at(d, e, t) - mc.value;
                c.term2 += weight * diff * diff;
                if (grad) {
                    double s = std::sqrt(mc.var_a * mc.var_b);
                    double outer = -2.0 * weight * diff;
                    std::vector<double> dpair(n * n);
                    for (std::size_t j = 0; j < n; j++) {
                        for (std::size_t l = 0; l < n; l++) {
                            double drho = a[j] * b[l] / s - 0.5 * mc.value * (a[j] * a[j] / mc.var_a + b[l] * b[l] / mc.var_b);
                            dpair[j * n + l] = outer * drho;
                        }
                    }
                    for (std::size_t fi = 0; fi < froms.size(); fi++) {
                        double w = data.initial_distribution[froms[fi]];
                        auto &g = (*grad)[fi][k];
                        std::size_t sd = g.stride(d);
                        std::size_t se = g.stride(e);
                        for (std::size_t o = 0; o < g.probs.size(); o++) {
                            g.probs[o] += w * dpair[((o / sd) % n) * n + (o / se) % n];
                        }
                    }
                }
            }
        }
    }
    c.total = c.term1 + c.term2;
    return c;
}

/// sum over all entries of grad * (plus - minus), with an optional per-time factor.
inline double contract(
    const ModelTables &grad, const ModelTables &plus, const ModelTables &minus, std::span<const double> time_factor) {
    double acc = 0;
    for (std::size_t fi = 0; fi < grad.size(); fi++) {
        for (std::size_t k = 0; k < grad[fi].size(); k++) {
            double s = 0;
            const auto &g = grad[fi][k].probs;
            const auto &p = plus[fi][k].probs;
            const auto &m = minus[fi][k].probs;
            for (std::size_t o = 0; o < g.size(); o++) {
                s += g[o] * (p[o] - m[o]);
            }
            acc += time_factor.empty() ? s : s * time_factor[k];
        }
    }
    return acc;
}

}  // namespace detail

inline CostBreakdown cost(
    const AnsatzParams &params,
    const CircuitLayout &layout,
    const TrainingData &data,
    const TrainConfig &config,
    Rng *rng = nullptr) {
    config.validate(data.num_ports());
    auto tables = model_tables(params, layout, data, {}, config.shots, rng);
    return detail::cost_from_tables(tables, data, config, nullptr);
}

/// Port-d conditional distribution P_dt(. | from).
inline std::vector<double> model_conditional(
    const AnsatzParams &params,
    const CircuitLayout &layout,
    const JointState &from,
    double t,
    std::size_t d,
    std::size_t shots = 0,
    Rng *rng = nullptr) {
    JointTable table = joint_outcome_distribution(params, layout, from, t);
    if (shots > 0) {
        if (!rng) {
            throw ContractError("sampled mode needs a random stream");
        }
        table = sampled_table(table, shots, *rng);
    }
    return port_marginal(table, d);
}

/// Model correlation of ports (d, e) at time t, averaged over the weighted from-states.
inline ModelCorrelation model_correlation(
    const AnsatzParams &params,
    const CircuitLayout &layout,
    const TrainingData &data,
    double t,
    std::size_t d,
    std::size_t e) {
    if (d == e) {
        throw ContractError("model correlation needs two distinct ports");
    }
    std::size_t n = data.states_per_port();
    std::vector<double> pair(n * n, 0.0);
    for (std::size_t f : data.from_indices()) {
        JointState from = joint_state_from_index(f, n, data.num_ports());
        auto pm = pair_marginal(joint_outcome_distribution(params, layout, from, t), d, e);
        for (std::size_t x = 0; x < pair.size(); x++) {
            pair[x] += data.initial_distribution[f] * pm[x];
        }
    }
    std::size_t ti = static_cast<std::size_t>(t);
    auto a = centred_representatives(data.codebook, d, ti);
    auto b = centred_representatives(data.codebook, e, ti);
    return correlation_from_pair_table(pair, a, b);
}

struct CostAndGradient {
    CostBreakdown cost;
    std::vector<double> gradient;  // theta1 then theta2
};

/// Parameter-shift gradient of the cost.
///
/// Each theta1 angle occurs twice (in V and, negated, in V^dagger) and each
/// theta2 rate enters as theta2 * t, so
///
///     dC/dtheta = sum over occurrences of  c * sum_{f,t,o} dC/dP_{f,t}(o) * (P+ - P-) / 2
///
/// with c = 1 in V, -1 in V^dagger and t in D.
inline CostAndGradient parameter_shift_gradient(
    const AnsatzParams &params,
    const CircuitLayout &layout,
    const TrainingData &data,
    const TrainConfig &config,
    Rng *rng = nullptr) {
    constexpr double kShift = std::numbers::pi / 2;
    ModelTables dcost;
    auto base = model_tables(params, layout, data, {}, config.shots, rng);
    CostAndGradient out;
    out.cost = detail::cost_from_tables(base, data, config, &dcost);
    if (!std::isfinite(out.cost.total)) {
        throw NumericalError("non-finite cost while computing the gradient");
    }
    out.gradient.assign(params.size(), 0.0);
    auto shifted_tables = [&](GateBlock block, std::size_t index, double delta) {
        return model_tables(params, layout, data, AngleShift{block, index, delta}, config.shots, rng);
    };
    for (std::size_t p = 0; p < params.theta1.size(); p++) {
        double g = 0;
        {
            auto plus = shifted_tables(GateBlock::kBasis, p, kShift);
            auto minus = shifted_tables(GateBlock::kBasis, p, -kShift);
            g += 0.5 * detail::contract(dcost, plus, minus, {});
        }
        {
            auto plus = shifted_tables(GateBlock::kBasisAdjoint, p, kShift);
            auto minus = shifted_tables(GateBlock::kBasisAdjoint, p, -kShift);
            g -= 0.5 * detail::contract(dcost, plus, minus, {});
        }
        out.gradient[p] = g;
    }
    auto times = data.times();
    for (std::size_t q = 0; q < params.theta2.size(); q++) {
        auto plus = shifted_tables(GateBlock::kDiagonal, q, kShift);
        auto minus = shifted_tables(GateBlock::kDiagonal, q, -kShift);
        out.gradient[params.theta1.size() + q] = 0.5 * detail::contract(dcost, plus, minus, times);
    }
    return out;
}

/// Central finite differences of the exact cost.
inline std::vector<double> finite_difference_gradient(
    const AnsatzParams &params,
    const CircuitLayout &layout,
    const TrainingData &data,
    const TrainConfig &config,
    double step = 1e-5) {
    TrainConfig exact = config;
    exact.shots = 0;
    auto flat = params.flatten();
    std::vector<double> out(flat.size());
    AnsatzParams probe = params;
    for (std::size_t k = 0; k < flat.size(); k++) {
        auto shifted = flat;
        shifted[k] = flat[k] + step;
        probe.assign(shifted);
        double up = cost(probe, layout, data, exact).total;
        shifted[k] = flat[k] - step;
        probe.assign(shifted);
        double down = cost(probe, layout, data, exact).total;
        out[k] = (up - down) / (2 * step);
    }
    return out;
}

/// Gradient using the configured method.
inline std::vector<double> gradient(
    const AnsatzParams &params,
    const CircuitLayout &layout,
    const TrainingData &data,
    const TrainConfig &config,
    Rng *rng = nullptr) {
    config.validate(data.num_ports());
    if (config.gradient == GradientMethod::kFiniteDifference) {
        auto g = finite_difference_gradient(params, layout, data, config, config.fd_step);
        for (double v : g) {
            if (!std::isfinite(v)) {
                throw NumericalError("non-finite finite-difference gradient");
            }
        }
        return g;
    }
    return parameter_shift_gradient(params, layout, data, config, rng).gradient;
}

class AdamOptimizer {
   public:
    AdamOptimizer(std::size_t size, double learning_rate, double beta1, double beta2, double eps)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {
    }

    void step(std::span<double> params, std::span<const double> grad) {
        steps_++;
        double c1 = 1 - std::pow(beta1_, static_cast<double>(steps_));
        double c2 = 1 - std::pow(beta2_, static_cast<double>(steps_));
        for (std::size_t k = 0; k < params.size(); k++) {
            m_[k] = beta1_ * m_[k] + (1 - beta1_) * grad[k];
            v_[k] = beta2_ * v_[k] + (1 - beta2_) * grad[k] * grad[k];
            params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
        }
    }

    std::size_t steps() const {
        return steps_;
    }

   private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t steps_ = 0;
};

enum class TrainStatus {
    kOk,
    kNumericalFailure,
};

struct TrainedModel {
    AnsatzParams params;
    CircuitLayout layout;
    TrainingData data;
    TrainConfig config;
    /// Cost before the first step followed by the cost after every step.
    std::vector<CostBreakdown> cost_history;
    TrainStatus status = TrainStatus::kOk;
    std::string message;

    const SaxCodebook &codebook() const {
        return data.codebook;
    }
    const TransitionTensor &transitions() const {
        return data.transitions;
    }

    bool operator==(const TrainedModel &) const = default;
};

/// Uniform angles in [-scale, scale].
inline AnsatzParams random_params(const CircuitLayout &layout, const std::vector<Entangler> &layers, double scale, Rng &rng) {
    AnsatzParams p = AnsatzParams::zeros(layout, layers);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (double &v : p.theta1) {
        v = dist(rng);
    }
    for (double &v : p.theta2) {
        v = dist(rng);
    }
    return p;
}

/// Adam on the cost, starting from `initial`.
inline TrainedModel train_from(AnsatzParams initial, const TrainingData &data, const TrainConfig &config) {
    config.validate(data.num_ports());
    TrainedModel model;
    model.layout = layout_for(data, config.num_ancilla);
    model.data = data;
    model.config = config;
    model.params = std::move(initial);
    model.params.validate(model.layout.num_qubits());

    Rng shot_rng = substream(config.seed, 1);
    Rng *rng = config.shots > 0 ? &shot_rng : nullptr;
    AdamOptimizer adam(model.params.size(), config.learning_rate, config.beta1, config.beta2, config.adam_eps);
    auto flat = model.params.flatten();

    auto fail = [&](const std::string &why) {
        model.status = TrainStatus::kNumericalFailure;
        model.message = why;
    };

    for (std::size_t it = 0; it < config.iterations; it++) {
        std::vector<double> grad;
        CostBreakdown c;
        try {
            if (config.gradient == GradientMethod::kParameterShift) {
                auto cg = parameter_shift_gradient(model.params, model.layout, data, config, rng);
                c = cg.cost;
                grad = std::move(cg.gradient);
            } else {
                c = cost(model.params, model.layout, data, config, rng);
                grad = gradient(model.params, model.layout, data, config, rng);
            }
        } catch (const NumericalError &ex) {
            fail(ex.what());
            return model;
        }
        if (it == 0) {
            model.cost_history.push_back(c);
        }
        for (double g : grad) {
            if (!std::isfinite(g)) {
                fail("non-finite gradient at iteration " + std::to_string(it));
                return model;
            }
        }
        adam.step(flat, grad);
        model.params.assign(flat);
        CostBreakdown next = cost(model.params, model.layout, data, config, rng);
        if (!std::isfinite(next.total)) {
            fail("non-finite cost at iteration " + std::to_string(it + 1));
            return model;
        }
        model.cost_history.push_back(next);
    }
    if (config.iterations == 0) {
        model.cost_history.push_back(cost(model.params, model.layout, data, config, rng));
    }
    return model;
}

/// Adam from angles drawn uniformly in [-init_scale, init_scale] with the config seed.
inline TrainedModel train(const TrainingData &data, const TrainConfig &config) {
    config.validate(data.num_ports());
    CircuitLayout layout = layout_for(data, config.num_ancilla);
    Rng init = substream(config.seed, 0);
    return train_from(random_params(layout, config.layers, config.init_scale, init), data, config);
}

}  // namespace qflow

#endif
