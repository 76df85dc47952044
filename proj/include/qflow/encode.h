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

// SAX discretization of hourly increments and the empirical statistics the
// model is fitted against: transition tensors, correlations, initial states.

#ifndef QFLOW_ENCODE_H
#define QFLOW_ENCODE_H

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qflow/error.h"
#include "qflow/qsim.h"

namespace qflow {

/// Dense [day][port][time] array with labels for each axis.
template <typename T>
class Panel {
   public:
    Panel() = default;
    Panel(std::size_t num_days, std::size_t num_ports, std::size_t num_times, T fill = T{})
        : num_days_(num_days), num_ports_(num_ports), num_times_(num_times), data_(num_days * num_ports * num_times, fill) {
        port_names.resize(num_ports);
        day_labels.resize(num_days);
        for (std::size_t d = 0; d < num_ports; d++) {
            port_names[d] = "port" + std::to_string(d);
        }
        for (std::size_t k = 0; k < num_days; k++) {
            day_labels[k] = "day" + std::to_string(k);
        }
    }

    std::size_t num_days() const {
        return num_days_;
    }
    std::size_t num_ports() const {
        return num_ports_;
    }
    std::size_t num_times() const {
        return num_times_;
    }

    T &at(std::size_t day, std::size_t port, std::size_t t) {
        return data_[(day * num_ports_ + port) * num_times_ + t];
    }
    const T &at(std::size_t day, std::size_t port, std::size_t t) const {
        return data_[(day * num_ports_ + port) * num_times_ + t];
    }

    /// The time series of one (day, port) cell.
    std::span<T> series(std::size_t day, std::size_t port) {
        return std::span<T>(data_).subspan((day * num_ports_ + port) * num_times_, num_times_);
    }
    std::span<const T> series(std::size_t day, std::size_t port) const {
        return std::span<const T>(data_).subspan((day * num_ports_ + port) * num_times_, num_times_);
    }

    bool same_shape(const Panel &other) const {
        return num_days_ == other.num_days_ && num_ports_ == other.num_ports_ && num_times_ == other.num_times_;
    }

    bool operator==(const Panel &) const = default;

    std::vector<std::string> day_labels;
    std::vector<std::string> port_names;
    /// Clock hour of t = 0.
    int first_hour = 6;

   private:
    std::size_t num_days_ = 0;
    std::size_t num_ports_ = 0;
    std::size_t num_times_ = 0;
    std::vector<T> data_;
};

/// Counts X[day][port][t]; real-valued so virtual (negative) trajectories fit too.
using CountPanel = Panel<double>;
/// Increments dX[day][port][t] = X[t+1] - X[t].
using IncrementPanel = Panel<double>;
/// SAX states in [0, N).
using StatePanel = Panel<std::uint32_t>;

inline IncrementPanel compute_increments(const CountPanel &panel) {
    if (panel.num_times() < 2) {
        throw DataError("increments need at least two time points");
    }
    IncrementPanel out(panel.num_days(), panel.num_ports(), panel.num_times() - 1);
    out.day_labels = panel.day_labels;
    out.port_names = panel.port_names;
    out.first_hour = panel.first_hour;
    for (std::size_t k = 0; k < panel.num_days(); k++) {
        for (std::size_t d = 0; d < panel.num_ports(); d++) {
            for (std::size_t t = 0; t + 1 < panel.num_times(); t++) {
                out.at(k, d, t) = panel.at(k, d, t + 1) - panel.at(k, d, t);
            }
        }
    }
    return out;
}

enum class BinningRule {
    kEqualFrequency,
    kEqualWidth,
};

struct CodebookOptions {
    BinningRule rule = BinningRule::kEqualFrequency;
    /// Share breakpoints and representatives across all times of a port.
    bool pool_times = false;
};

/// Breakpoints for `bins` intervals. A run of tied values straddling a quantile
/// stays in one bin: the split moves to whichever end of the run is nearer,
/// or to the other end when the nearer one would leave a bin empty.
struct Binning {
    std::vector<double> breakpoints;
    /// Some bin is empty: the sample has fewer distinct values than bins.
    bool degenerate = false;
};

namespace detail {
// Increments rebuilt from summed representatives drift in the last bits; treat
// such near-equal values as one tie run.
inline bool same_value(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace detail

inline Binning equal_frequency_breakpoints(std::vector<double> values, std::size_t bins) {
    if (values.empty()) {
        throw DataError("cannot bin an empty sample");
    }
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    Binning out;
    std::size_t prev_pos = 0;
    double synthetic = values.back();
    for (std::size_t k = 1; k < bins; k++) {
        // Split position: number of sorted values that fall below the breakpoint.
        std::size_t target = (k * n + bins / 2) / bins;
        std::size_t want = std::max<std::size_t>({target, prev_pos + 1, 1});
        std::size_t up = want, down = want;
        while (up < n && detail::same_value(values[up - 1], values[up])) {
            up++;
        }
        while (down > prev_pos + 1 && down < n && detail::same_value(values[down - 1], values[down])) {
            down--;
        }
        bool down_ok = down < n && !detail::same_value(values[down - 1], values[down]);
        std::size_t pos = up;
        if (down_ok && (up >= n || want - down < up - want)) {
            pos = down;
        }
        if (pos < n) {
            out.breakpoints.push_back(0.5 * (values[pos - 1] + values[pos]));
        } else {
            // Nothing left to split: open an empty bin above the data.
            synthetic += 0.5;
            out.breakpoints.push_back(synthetic);
            out.degenerate = true;
        }
        prev_pos = pos;
    }
    return out;
}

inline Binning equal_width_breakpoints(std::span<const double> values, std::size_t bins) {
    if (values.empty()) {
        throw DataError("cannot bin an empty sample");
    }
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    Binning out;
    double width = (*hi - *lo) / static_cast<double>(bins);
    if (width <= 0) {
        out.degenerate = bins > 1;
        width = 0.5;
    }
    for (std::size_t k = 1; k < bins; k++) {
        out.breakpoints.push_back(*lo + width * static_cast<double>(k));
    }
    return out;
}

/// Bin of `value`: the number of breakpoints <= value.
inline std::uint32_t bin_of(std::span<const double> breakpoints, double value) {
    return static_cast<std::uint32_t>(std::upper_bound(breakpoints.begin(), breakpoints.end(), value) - breakpoints.begin());
}

/// Mean member of each bin. An empty bin takes the midpoint of its nearest
/// nonempty neighbours, or the single neighbour at the edges.
inline std::vector<double> bin_representatives(
    std::span<const double> values, std::span<const double> breakpoints, std::vector<std::uint32_t> *counts = nullptr) {
    std::size_t bins = breakpoints.size() + 1;
    std::vector<double> sums(bins, 0.0);
    std::vector<std::uint32_t> n(bins, 0);
    for (double v : values) {
        auto b = bin_of(breakpoints, v);
        sums[b] += v;
        n[b]++;
    }
    std::vector<double> rep(bins, 0.0);
    for (std::size_t j = 0; j < bins; j++) {
        if (n[j]) {
            rep[j] = sums[j] / n[j];
        }
    }
    for (std::size_t j = 0; j < bins; j++) {
        if (n[j]) {
            continue;
        }
        std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(j) - 1;
        while (lo >= 0 && !n[lo]) {
            lo--;
        }
        std::size_t hi = j + 1;
        while (hi < bins && !n[hi]) {
            hi++;
        }
        if (lo >= 0 && hi < bins) {
            rep[j] = 0.5 * (rep[lo] + rep[hi]);
        } else if (lo >= 0) {
            rep[j] = rep[lo];
        } else if (hi < bins) {
            rep[j] = rep[hi];
        }
    }
    if (counts) {
        *counts = std::move(n);
    }
    return rep;
}

/// Per-(port, time) SAX alphabet: breakpoints, representative increments A and means M.
struct SaxCodebook {
    std::size_t states_per_port = 0;
    std::size_t num_ports = 0;
    std::size_t num_times = 0;
    std::vector<double> breakpoints;       // [d][t][N-1]
    std::vector<double> representatives;   // [d][t][N]
    std::vector<double> means;             // [d][t]
    std::vector<std::uint32_t> bin_counts; // [d][t][N]
    std::vector<std::uint8_t> degenerate;  // [d][t]

    std::span<const double> breakpoints_at(std::size_t d, std::size_t t) const {
        std::size_t w = states_per_port - 1;
        return std::span<const double>(breakpoints).subspan((d * num_times + t) * w, w);
    }
    double representative(std::size_t d, std::size_t t, std::size_t j) const {
        return representatives[(d * num_times + t) * states_per_port + j];
    }
    double mean(std::size_t d, std::size_t t) const {
        return means[d * num_times + t];
    }
    std::uint32_t state_of(std::size_t d, std::size_t t, double value) const {
        return bin_of(breakpoints_at(d, t), value);
    }
    bool any_degenerate() const {
        return std::any_of(degenerate.begin(), degenerate.end(), [](auto f) { return f != 0; });
    }

    bool operator==(const SaxCodebook &) const = default;
};

inline SaxCodebook fit_codebook(const IncrementPanel &inc, std::size_t states_per_port, CodebookOptions options = {}) {
    if (states_per_port < 2 || !std::has_single_bit(states_per_port)) {
        throw ConfigError("number of SAX states must be a power of 2 >= 2");
    }
    if (inc.num_days() == 0 || inc.num_times() == 0) {
        throw DataError("cannot fit a codebook to an empty panel");
    }
    std::size_t n = states_per_port;
    SaxCodebook cb;
    cb.states_per_port = n;
    cb.num_ports = inc.num_ports();
    cb.num_times = inc.num_times();
    std::size_t cells = cb.num_ports * cb.num_times;
    cb.breakpoints.resize(cells * (n - 1));
    cb.representatives.resize(cells * n);
    cb.means.resize(cells);
    cb.bin_counts.resize(cells * n);
    cb.degenerate.resize(cells);

    auto fit = [&](std::span<const double> values) {
        return options.rule == BinningRule::kEqualFrequency
                   ? equal_frequency_breakpoints(std::vector<double>(values.begin(), values.end()), n)
                   : equal_width_breakpoints(values, n);
    };

    for (std::size_t d = 0; d < cb.num_ports; d++) {
        std::vector<double> pooled;
        Binning pooled_bins;
        std::vector<double> pooled_rep;
        std::vector<std::uint32_t> pooled_counts;
        if (options.pool_times) {
            for (std::size_t k = 0; k < inc.num_days(); k++) {
                auto s = inc.series(k, d);
                pooled.insert(pooled.end(), s.begin(), s.end());
            }
            pooled_bins = fit(pooled);
            pooled_rep = bin_representatives(pooled, pooled_bins.breakpoints, &pooled_counts);
        }
        for (std::size_t t = 0; t < cb.num_times; t++) {
            std::vector<double> values(inc.num_days());
            for (std::size_t k = 0; k < inc.num_days(); k++) {
                values[k] = inc.at(k, d, t);
            }
            std::size_t cell = d * cb.num_times + t;
            cb.means[cell] = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());

            Binning bins;
            std::vector<double> rep;
            std::vector<std::uint32_t> counts;
            if (options.pool_times) {
                bins = pooled_bins;
                rep = pooled_rep;
                // Occupancy is still reported per time step.
                bin_representatives(values, bins.breakpoints, &counts);
            } else {
                bins = fit(values);
                rep = bin_representatives(values, bins.breakpoints, &counts);
            }
            bool empty_bin = std::any_of(counts.begin(), counts.end(), [](auto c) { return c == 0; });
            cb.degenerate[cell] = bins.degenerate || empty_bin;
            std::copy(bins.breakpoints.begin(), bins.breakpoints.end(), cb.breakpoints.begin() + static_cast<std::ptrdiff_t>(cell * (n - 1)));
            std::copy(rep.begin(), rep.end(), cb.representatives.begin() + static_cast<std::ptrdiff_t>(cell * n));
            std::copy(counts.begin(), counts.end(), cb.bin_counts.begin() + static_cast<std::ptrdiff_t>(cell * n));
        }
    }
    return cb;
}

inline StatePanel discretize(const IncrementPanel &inc, const SaxCodebook &cb) {
    if (inc.num_ports() != cb.num_ports || inc.num_times() != cb.num_times) {
        throw DataError("increment panel does not match the codebook shape");
    }
    StatePanel out(inc.num_days(), inc.num_ports(), inc.num_times());
    out.day_labels = inc.day_labels;
    out.port_names = inc.port_names;
    out.first_hour = inc.first_hour;
    for (std::size_t k = 0; k < inc.num_days(); k++) {
        for (std::size_t d = 0; d < inc.num_ports(); d++) {
            for (std::size_t t = 0; t < inc.num_times(); t++) {
                out.at(k, d, t) = cb.state_of(d, t, inc.at(k, d, t));
            }
        }
    }
    return out;
}

inline constexpr double kTransitionSmoothing = 1e-6;

/// Empirical T[d][t](j | i): state i at t = 0 to state j at t, aggregated over days.
struct TransitionTensor {
    std::size_t states_per_port = 0;
    std::size_t num_ports = 0;
    std::size_t num_times = 0;
    std::vector<double> tallies;          // [d][t][i][j], raw
    std::vector<double> probs;            // [d][t][i][j], smoothed and normalized
    std::vector<std::uint8_t> empty_rows; // [d][t][i]

    std::size_t row_offset(std::size_t d, std::size_t t, std::size_t i) const {
        return ((d * num_times + t) * states_per_port + i) * states_per_port;
    }
    std::span<const double> row(std::size_t d, std::size_t t, std::size_t i) const {
        return std::span<const double>(probs).subspan(row_offset(d, t, i), states_per_port);
    }
    double prob(std::size_t d, std::size_t t, std::size_t i, std::size_t j) const {
        return probs[row_offset(d, t, i) + j];
    }
    double tally(std::size_t d, std::size_t t, std::size_t i, std::size_t j) const {
        return tallies[row_offset(d, t, i) + j];
    }
    bool empty_row(std::size_t d, std::size_t t, std::size_t i) const {
        return empty_rows[(d * num_times + t) * states_per_port + i] != 0;
    }

    bool operator==(const TransitionTensor &) const = default;
};

/// Rows with no observations become uniform and are flagged in `empty_rows`.
inline TransitionTensor build_transitions(
    const StatePanel &states, std::size_t states_per_port, double smoothing = kTransitionSmoothing) {
    if (states.num_days() == 0) {
        throw DataError("transitions need at least one day");
    }
    std::size_t n = states_per_port;
    TransitionTensor tt;
    tt.states_per_port = n;
    tt.num_ports = states.num_ports();
    tt.num_times = states.num_times();
    tt.tallies.assign(tt.num_ports * tt.num_times * n * n, 0.0);
    tt.empty_rows.assign(tt.num_ports * tt.num_times * n, 0);
    for (std::size_t k = 0; k < states.num_days(); k++) {
        for (std::size_t d = 0; d < tt.num_ports; d++) {
            std::size_t i = states.at(k, d, 0);
            if (i >= n) {
                throw InvalidStateError("state out of range in state panel");
            }
            for (std::size_t t = 0; t < tt.num_times; t++) {
                std::size_t j = states.at(k, d, t);
                if (j >= n) {
                    throw InvalidStateError("state out of range in state panel");
                }
                tt.tallies[tt.row_offset(d, t, i) + j] += 1.0;
            }
        }
    }
    tt.probs.resize(tt.tallies.size());
    for (std::size_t d = 0; d < tt.num_ports; d++) {
        for (std::size_t t = 0; t < tt.num_times; t++) {
            for (std::size_t i = 0; i < n; i++) {
                std::size_t off = tt.row_offset(d, t, i);
                double total = 0;
                for (std::size_t j = 0; j < n; j++) {
                    total += tt.tallies[off + j];
                }
                if (total == 0) {
                    tt.empty_rows[(d * tt.num_times + t) * n + i] = 1;
                    for (std::size_t j = 0; j < n; j++) {
                        tt.probs[off + j] = 1.0 / static_cast<double>(n);
                    }
                    continue;
                }
                double norm = total + smoothing * static_cast<double>(n);
                for (std::size_t j = 0; j < n; j++) {
                    tt.probs[off + j] = (tt.tallies[off + j] + smoothing) / norm;
                }
            }
        }
    }
    return tt;
}

/// rho[d][e][t] of increments across days, centred on the codebook means.
struct CorrelationTable {
    std::size_t num_ports = 0;
    std::size_t num_times = 0;
    std::vector<double> rho;            // [d][e][t]
    std::vector<std::uint8_t> defined;  // [d][e][t]

    std::size_t index(std::size_t d, std::size_t e, std::size_t t) const {
        return (d * num_ports + e) * num_times + t;
    }
    double at(std::size_t d, std::size_t e, std::size_t t) const {
        return rho[index(d, e, t)];
    }
    bool is_defined(std::size_t d, std::size_t e, std::size_t t) const {
        return defined[index(d, e, t)] != 0;
    }

    bool operator==(const CorrelationTable &) const = default;
};

/// Pearson correlation of two samples about the given centres. Returns false
/// (and leaves `out` at 0) when either side has zero spread.
inline bool centred_correlation(
    std::span<const double> x, std::span<const double> y, double mx, double my, double &out) {
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < x.size(); k++) {
        double a = x[k] - mx;
        double b = y[k] - my;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    out = 0;
    if (sxx <= 0 || syy <= 0) {
        return false;
    }
    out = std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
    return true;
}

inline CorrelationTable empirical_correlations(const IncrementPanel &inc, const SaxCodebook &cb) {
    if (inc.num_days() < 2) {
        throw DataError("correlations need at least two days");
    }
    if (inc.num_ports() != cb.num_ports || inc.num_times() != cb.num_times) {
        throw DataError("increment panel does not match the codebook shape");
    }
    CorrelationTable ct;
    ct.num_ports = inc.num_ports();
    ct.num_times = inc.num_times();
    ct.rho.assign(ct.num_ports * ct.num_ports * ct.num_times, 0.0);
    ct.defined.assign(ct.rho.size(), 0);
    std::vector<double> x(inc.num_days()), y(inc.num_days());
    for (std::size_t t = 0; t < ct.num_times; t++) {
        for (std::size_t d = 0; d < ct.num_ports; d++) {
            for (std::size_t e = d + 1; e < ct.num_ports; e++) {
                for (std::size_t k = 0; k < inc.num_days(); k++) {
                    x[k] = inc.at(k, d, t);
                    y[k] = inc.at(k, e, t);
                }
                double r;
                bool ok = centred_correlation(x, y, cb.mean(d, t), cb.mean(e, t), r);
                for (auto idx : {ct.index(d, e, t), ct.index(e, d, t)}) {
                    ct.rho[idx] = r;
                    ct.defined[idx] = ok;
                }
            }
        }
    }
    return ct;
}

/// Empirical law of the joint state at t = 0, indexed by `joint_index`.
inline std::vector<double> initial_state_distribution(const StatePanel &states, std::size_t states_per_port) {
    if (states.num_days() == 0 || states.num_times() == 0) {
        throw DataError("initial-state distribution needs at least one day");
    }
    JointTable table = JointTable::zeros(states.num_ports(), states_per_port);
    for (std::size_t k = 0; k < states.num_days(); k++) {
        JointState s{std::vector<std::size_t>(states.num_ports())};
        for (std::size_t d = 0; d < states.num_ports(); d++) {
            s.components[d] = states.at(k, d, 0);
        }
        table.probs[joint_index(s, states_per_port)] += 1.0;
    }
    for (double &p : table.probs) {
        p /= static_cast<double>(states.num_days());
    }
    return table.probs;
}

}  // namespace qflow

#endif
