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

// Exact statevector simulation of the time-series circuit:
//
//     |from> --U_f-- V(theta1) D(theta2 * t) V(theta1)^dagger -- measure targets
//
// Qubits are ordered port-major with the most significant bit of each port first,
// followed by the ancillas. Qubit 0 is the most significant bit of a basis index,
// so the target register of a basis index is simply `index >> num_ancilla`.

#ifndef QFLOW_QSIM_H
#define QFLOW_QSIM_H

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qflow/error.h"
#include "qflow/rng.h"

namespace qflow {

using Complex = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 20;
inline constexpr std::size_t kMaxAncilla = 4;

/// Assignment of ports and ancillas to qubits.
class CircuitLayout {
   public:
    CircuitLayout() = default;
    CircuitLayout(std::size_t num_ports, std::size_t states_per_port, std::size_t num_ancilla)
        : num_ports_(num_ports), states_per_port_(states_per_port), num_ancilla_(num_ancilla) {
        if (num_ports == 0) {
            throw LayoutError("layout needs at least one port");
        }
        if (states_per_port < 2 || !std::has_single_bit(states_per_port)) {
            throw LayoutError(
                "states per port must be a power of 2 >= 2, got " + std::to_string(states_per_port));
        }
        if (num_ancilla > kMaxAncilla) {
            throw LayoutError("at most " + std::to_string(kMaxAncilla) + " ancillas are supported");
        }
        qubits_per_port_ = static_cast<std::size_t>(std::countr_zero(states_per_port));
        if (num_qubits() > kMaxQubits) {
            throw LayoutError(
                "layout needs " + std::to_string(num_qubits()) + " qubits; the simulator supports " +
                std::to_string(kMaxQubits));
        }
    }

    std::size_t num_ports() const {
        return num_ports_;
    }
    std::size_t states_per_port() const {
        return states_per_port_;
    }
    std::size_t qubits_per_port() const {
        return qubits_per_port_;
    }
    std::size_t num_ancilla() const {
        return num_ancilla_;
    }
    std::size_t num_target_qubits() const {
        return num_ports_ * qubits_per_port_;
    }
    std::size_t num_qubits() const {
        return num_target_qubits() + num_ancilla_;
    }
    std::size_t dimension() const {
        return std::size_t{1} << num_qubits();
    }
    /// N^D, the number of joint target outcomes.
    std::size_t num_joint_outcomes() const {
        return std::size_t{1} << num_target_qubits();
    }

    bool operator==(const CircuitLayout &) const = default;

   private:
    std::size_t num_ports_ = 0;
    std::size_t states_per_port_ = 0;
    std::size_t num_ancilla_ = 0;
    std::size_t qubits_per_port_ = 0;
};

/// Per-port SAX states (i_1, ..., i_D).
struct JointState {
    std::vector<std::size_t> components;

    std::size_t size() const {
        return components.size();
    }
    std::size_t operator[](std::size_t d) const {
        return components[d];
    }
    bool operator==(const JointState &) const = default;
};

/// Base-N encoding of a joint state with port 0 most significant.
inline std::size_t joint_index(const JointState &state, std::size_t states_per_port) {
    std::size_t index = 0;
    for (std::size_t c : state.components) {
        if (c >= states_per_port) {
            throw InvalidStateError(
                "state component " + std::to_string(c) + " is out of range for N=" +
                std::to_string(states_per_port));
        }
        index = index * states_per_port + c;
    }
    return index;
}

inline JointState joint_state_from_index(
    std::size_t index, std::size_t states_per_port, std::size_t num_ports) {
    JointState out{std::vector<std::size_t>(num_ports)};
    for (std::size_t d = num_ports; d-- > 0;) {
        out.components[d] = index % states_per_port;
        index /= states_per_port;
    }
    return out;
}

/// Probability table over the N^D joint target outcomes, indexed by `joint_index`.
struct JointTable {
    std::size_t num_ports = 0;
    std::size_t states_per_port = 0;
    std::vector<double> probs;

    static JointTable zeros(std::size_t num_ports, std::size_t states_per_port) {
        std::size_t size = 1;
        for (std::size_t d = 0; d < num_ports; d++) {
            size *= states_per_port;
        }
        return JointTable{num_ports, states_per_port, std::vector<double>(size, 0.0)};
    }

    std::size_t stride(std::size_t d) const {
        std::size_t s = 1;
        for (std::size_t k = d + 1; k < num_ports; k++) {
            s *= states_per_port;
        }
        return s;
    }

    /// State of port d within joint outcome `index`.
    std::size_t component(std::size_t index, std::size_t d) const {
        return (index / stride(d)) % states_per_port;
    }
};

/// Sums the joint table over every port except d.
inline std::vector<double> port_marginal(const JointTable &table, std::size_t d) {
    if (d >= table.num_ports) {
        throw LayoutError("port index " + std::to_string(d) + " out of range");
    }
    std::vector<double> out(table.states_per_port, 0.0);
    std::size_t stride = table.stride(d);
    for (std::size_t k = 0; k < table.probs.size(); k++) {
        out[(k / stride) % table.states_per_port] += table.probs[k];
    }
    return out;
}

/// Bivariate marginal over ports (d, e), row-major [j_d * N + j_e].
inline std::vector<double> pair_marginal(const JointTable &table, std::size_t d, std::size_t e) {
    if (d >= table.num_ports || e >= table.num_ports || d == e) {
        throw LayoutError("invalid port pair");
    }
    std::size_t n = table.states_per_port;
    std::vector<double> out(n * n, 0.0);
    std::size_t sd = table.stride(d);
    std::size_t se = table.stride(e);
    for (std::size_t k = 0; k < table.probs.size(); k++) {
        out[((k / sd) % n) * n + (k / se) % n] += table.probs[k];
    }
    return out;
}

enum class Entangler {
    kAdjacentRing,
    kDistanceTwo,
};

/// CNOT (control, target) pairs of one entangling layer on n qubits.
inline std::vector<std::pair<std::size_t, std::size_t>> cnot_pairs(Entangler pattern, std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t hop = pattern == Entangler::kAdjacentRing ? 1 : 2;
    if (n < hop + 1) {
        return out;
    }
    if (n == 2) {
        out.emplace_back(0, 1);
        return out;
    }
    for (std::size_t q = 0; q < n; q++) {
        out.emplace_back(q, (q + hop) % n);
    }
    return out;
}

/// Layer patterns alternating ring and distance-two CNOTs.
inline std::vector<Entangler> default_entanglers(std::size_t num_layers) {
    std::vector<Entangler> out;
    for (std::size_t l = 0; l < num_layers; l++) {
        out.push_back(l % 2 == 0 ? Entangler::kAdjacentRing : Entangler::kDistanceTwo);
    }
    return out;
}

/// Trainable angles of the ansatz.
///
/// theta1 holds an RZ-RY-RZ Euler triple per qubit per layer of V, laid out as
/// [layer][qubit][3]. theta2 holds the RZ rate of each qubit in D, so qubit k is
/// rotated by theta2[k] * t.
struct AnsatzParams {
    std::vector<Entangler> layers;
    std::vector<double> theta1;
    std::vector<double> theta2;

    static AnsatzParams zeros(const CircuitLayout &layout, std::vector<Entangler> layers) {
        std::size_t n = layout.num_qubits();
        AnsatzParams p;
        p.theta1.assign(layers.size() * n * 3, 0.0);
        p.theta2.assign(n, 0.0);
        p.layers = std::move(layers);
        return p;
    }

    std::size_t num_layers() const {
        return layers.size();
    }
    std::size_t size() const {
        return theta1.size() + theta2.size();
    }
    std::size_t num_qubits() const {
        return theta2.size();
    }

    /// theta1 followed by theta2.
    std::vector<double> flatten() const {
        std::vector<double> out(theta1);
        out.insert(out.end(), theta2.begin(), theta2.end());
        return out;
    }

    void assign(std::span<const double> flat) {
        if (flat.size() != size()) {
            throw LayoutError("flat parameter vector has the wrong length");
        }
        std::copy_n(flat.begin(), theta1.size(), theta1.begin());
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(theta1.size()), flat.end(), theta2.begin());
    }

    void validate(std::size_t num_qubits) const {
        if (theta2.size() != num_qubits || theta1.size() != layers.size() * num_qubits * 3) {
            throw LayoutError(
                "ansatz parameters do not match a " + std::to_string(num_qubits) + "-qubit circuit");
        }
        for (double v : theta1) {
            if (!std::isfinite(v)) {
                throw NumericalError("non-finite theta1 angle");
            }
        }
        for (double v : theta2) {
            if (!std::isfinite(v)) {
                throw NumericalError("non-finite theta2 angle");
            }
        }
    }

    bool operator==(const AnsatzParams &) const = default;
};

class StateVector {
   public:
    StateVector() = default;

    /// |0...0> on `num_qubits` qubits.
    explicit StateVector(std::size_t num_qubits) : num_qubits_(num_qubits), amps_(std::size_t{1} << num_qubits) {
        if (num_qubits > kMaxQubits) {
            throw LayoutError("too many qubits for the simulator");
        }
        amps_[0] = 1.0;
    }

    static StateVector basis(std::size_t num_qubits, std::size_t index) {
        StateVector s(num_qubits);
        if (index >= s.size()) {
            throw InvalidStateError("basis index out of range");
        }
        s.amps_[0] = 0.0;
        s.amps_[index] = 1.0;
        return s;
    }

    static StateVector from_amplitudes(std::vector<Complex> amps) {
        if (amps.empty() || !std::has_single_bit(amps.size())) {
            throw LayoutError("amplitude count must be a power of 2");
        }
        StateVector s;
        s.num_qubits_ = static_cast<std::size_t>(std::countr_zero(amps.size()));
        s.amps_ = std::move(amps);
        return s;
    }

    std::size_t num_qubits() const {
        return num_qubits_;
    }
    std::size_t size() const {
        return amps_.size();
    }
    std::span<const Complex> amplitudes() const {
        return amps_;
    }
    const Complex &operator[](std::size_t k) const {
        return amps_[k];
    }

    double norm_squared() const {
        double s = 0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    void apply_x(std::size_t q) {
        std::size_t m = mask(q);
        for (std::size_t k = 0; k < amps_.size(); k++) {
            if (!(k & m)) {
                std::swap(amps_[k], amps_[k | m]);
            }
        }
    }

    /// RZ(angle) = diag(exp(-i angle/2), exp(+i angle/2)).
    void apply_rz(std::size_t q, double angle) {
        std::size_t m = mask(q);
        Complex lo = std::polar(1.0, -0.5 * angle);
        Complex hi = std::polar(1.0, 0.5 * angle);
        for (std::size_t k = 0; k < amps_.size(); k++) {
            amps_[k] *= (k & m) ? hi : lo;
        }
    }

    /// RY(angle) = [[cos, -sin], [sin, cos]] of angle/2.
    void apply_ry(std::size_t q, double angle) {
        std::size_t m = mask(q);
        double c = std::cos(0.5 * angle);
        double s = std::sin(0.5 * angle);
        for (std::size_t k = 0; k < amps_.size(); k++) {
            if (!(k & m)) {
                Complex a0 = amps_[k];
                Complex a1 = amps_[k | m];
                amps_[k] = c * a0 - s * a1;
                amps_[k | m] = s * a0 + c * a1;
            }
        }
    }

    void apply_cnot(std::size_t control, std::size_t target) {
        std::size_t mc = mask(control);
        std::size_t mt = mask(target);
        for (std::size_t k = 0; k < amps_.size(); k++) {
            if ((k & mc) && !(k & mt)) {
                std::swap(amps_[k], amps_[k | mt]);
            }
        }
    }

   private:
    std::size_t mask(std::size_t q) const {
        if (q >= num_qubits_) {
            throw LayoutError("qubit index out of range");
        }
        return std::size_t{1} << (num_qubits_ - 1 - q);
    }

    std::size_t num_qubits_ = 0;
    std::vector<Complex> amps_;
};

/// Which gate block a parameter-shift perturbation applies to.
enum class GateBlock {
    kNone,
    kBasis,         // V, indexes theta1
    kBasisAdjoint,  // V^dagger, indexes theta1
    kDiagonal,      // D, indexes theta2; the shift is added to the rotation angle theta2[k] * t
};

/// Perturbation of a single gate occurrence, used by the parameter-shift rule.
struct AngleShift {
    GateBlock block = GateBlock::kNone;
    std::size_t index = 0;
    double delta = 0.0;
};

namespace detail {

inline double shifted(const AngleShift &shift, GateBlock block, std::size_t index, double angle) {
    return shift.block == block && shift.index == index ? angle + shift.delta : angle;
}

}  // namespace detail

/// Applies V(theta1).
inline void apply_basis_change(StateVector &state, const AnsatzParams &params, const AngleShift &shift = {}) {
    std::size_t n = state.num_qubits();
    for (std::size_t l = 0; l < params.num_layers(); l++) {
        for (std::size_t q = 0; q < n; q++) {
            std::size_t base = (l * n + q) * 3;
            state.apply_rz(q, detail::shifted(shift, GateBlock::kBasis, base, params.theta1[base]));
            state.apply_ry(q, detail::shifted(shift, GateBlock::kBasis, base + 1, params.theta1[base + 1]));
            state.apply_rz(q, detail::shifted(shift, GateBlock::kBasis, base + 2, params.theta1[base + 2]));
        }
        for (auto [c, t] : cnot_pairs(params.layers[l], n)) {
            state.apply_cnot(c, t);
        }
    }
}

/// Applies V(theta1)^dagger. The shift acts on the negated angle of the adjoint gate.
inline void apply_basis_change_adjoint(
    StateVector &state, const AnsatzParams &params, const AngleShift &shift = {}) {
    std::size_t n = state.num_qubits();
    for (std::size_t l = params.num_layers(); l-- > 0;) {
        auto pairs = cnot_pairs(params.layers[l], n);
        for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
            state.apply_cnot(it->first, it->second);
        }
        for (std::size_t q = 0; q < n; q++) {
            std::size_t base = (l * n + q) * 3;
            state.apply_rz(q, detail::shifted(shift, GateBlock::kBasisAdjoint, base + 2, -params.theta1[base + 2]));
            state.apply_ry(q, detail::shifted(shift, GateBlock::kBasisAdjoint, base + 1, -params.theta1[base + 1]));
            state.apply_rz(q, detail::shifted(shift, GateBlock::kBasisAdjoint, base, -params.theta1[base]));
        }
    }
}

/// Applies D(theta2 * t) as one RZ(theta2[k] * t) per qubit.
inline void apply_diagonal(StateVector &state, const AnsatzParams &params, double t, const AngleShift &shift = {}) {
    for (std::size_t q = 0; q < state.num_qubits(); q++) {
        state.apply_rz(q, detail::shifted(shift, GateBlock::kDiagonal, q, params.theta2[q] * t));
    }
}

/// Basis state with the targets holding `from` and every ancilla in |0>.
inline StateVector prepare_from_state(const CircuitLayout &layout, const JointState &from) {
    if (from.size() != layout.num_ports()) {
        throw InvalidStateError("from state has the wrong number of ports");
    }
    std::size_t target = joint_index(from, layout.states_per_port());
    StateVector s(layout.num_qubits());
    // U_f: an X on every target qubit whose bit is set.
    for (std::size_t q = 0; q < layout.num_target_qubits(); q++) {
        if ((target >> (layout.num_target_qubits() - 1 - q)) & 1) {
            s.apply_x(q);
        }
    }
    return s;
}

/// V D(theta2 t) V^dagger |state>.
inline StateVector evolve(const StateVector &state, const AnsatzParams &params, double t) {
    params.validate(state.num_qubits());
    if (!(t >= 0) || !std::isfinite(t)) {
        throw ContractError("evolution time must be finite and non-negative");
    }
    StateVector out = state;
    apply_basis_change_adjoint(out, params);
    apply_diagonal(out, params, t);
    apply_basis_change(out, params);
    return out;
}

/// Inverse of `evolve`: V D(-theta2 t) V^dagger |state>.
inline StateVector evolve_adjoint(const StateVector &state, const AnsatzParams &params, double t) {
    params.validate(state.num_qubits());
    StateVector out = state;
    apply_basis_change_adjoint(out, params);
    apply_diagonal(out, params, -t);
    apply_basis_change(out, params);
    return out;
}

/// Measurement distribution of the target register; ancilla outcomes are summed out.
inline JointTable target_distribution(const StateVector &state, const CircuitLayout &layout) {
    if (state.num_qubits() != layout.num_qubits()) {
        throw LayoutError("state does not match layout");
    }
    JointTable table = JointTable::zeros(layout.num_ports(), layout.states_per_port());
    std::size_t anc = layout.num_ancilla();
    for (std::size_t k = 0; k < state.size(); k++) {
        table.probs[k >> anc] += std::norm(state[k]);
    }
    return table;
}

inline JointTable joint_outcome_distribution(
    const AnsatzParams &params, const CircuitLayout &layout, const JointState &from, double t) {
    return target_distribution(evolve(prepare_from_state(layout, from), params, t), layout);
}

/// Joint outcome tables for several times from one from-state. V^dagger|from> is
/// computed once and reused across times.
inline std::vector<JointTable> joint_outcome_distributions(
    const AnsatzParams &params,
    const CircuitLayout &layout,
    const JointState &from,
    std::span<const double> times,
    const AngleShift &shift = {}) {
    params.validate(layout.num_qubits());
    StateVector rotated = prepare_from_state(layout, from);
    apply_basis_change_adjoint(rotated, params, shift);
    std::vector<JointTable> out;
    out.reserve(times.size());
    for (double t : times) {
        if (!(t >= 0) || !std::isfinite(t)) {
            throw ContractError("evolution time must be finite and non-negative");
        }
        StateVector s = rotated;
        apply_diagonal(s, params, t, shift);
        apply_basis_change(s, params, shift);
        out.push_back(target_distribution(s, layout));
    }
    return out;
}

namespace detail {

inline std::vector<double> checked_cdf(std::span<const double> dist) {
    std::vector<double> cdf(dist.size());
    double acc = 0;
    for (std::size_t k = 0; k < dist.size(); k++) {
        if (!(dist[k] >= -1e-12)) {
            throw ContractError("distribution has a negative entry");
        }
        acc += std::max(dist[k], 0.0);
        cdf[k] = acc;
    }
    if (std::abs(acc - 1.0) > 1e-6) {
        throw ContractError("distribution sums to " + std::to_string(acc) + ", not 1");
    }
    return cdf;
}

inline std::size_t draw_from_cdf(std::span<const double> cdf, Rng &rng) {
    double u = uniform01(rng) * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    k = std::min(k, cdf.size() - 1);
    // Never land on a zero-probability outcome through rounding at the top.
    while (k > 0 && cdf[k] == cdf[k - 1]) {
        k--;
    }
    return k;
}

}  // namespace detail

/// One draw from `dist`.
inline std::size_t sample_one(std::span<const double> dist, Rng &rng) {
    auto cdf = detail::checked_cdf(dist);
    return detail::draw_from_cdf(cdf, rng);
}

/// Multinomial draw of `shots` outcomes; returns per-outcome counts.
inline std::vector<std::uint64_t> sample_outcomes(std::span<const double> dist, std::size_t shots, Rng &rng) {
    if (shots == 0) {
        throw ContractError("shots must be at least 1");
    }
    auto cdf = detail::checked_cdf(dist);
    std::vector<std::uint64_t> counts(dist.size(), 0);
    for (std::size_t s = 0; s < shots; s++) {
        counts[detail::draw_from_cdf(cdf, rng)]++;
    }
    return counts;
}

/// Shot-estimated table: outcome frequencies of `shots` draws from `table`.
inline JointTable sampled_table(const JointTable &table, std::size_t shots, Rng &rng) {
    auto counts = sample_outcomes(table.probs, shots, rng);
    JointTable out = table;
    for (std::size_t k = 0; k < counts.size(); k++) {
        out.probs[k] = static_cast<double>(counts[k]) / static_cast<double>(shots);
    }
    return out;
}

}  // namespace qflow

#endif
