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

// Opportunity-loss estimation and the bicycle pre-addition experiment.

#ifndef QFLOW_SCENARIO_H
#define QFLOW_SCENARIO_H

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qflow/encode.h"
#include "qflow/error.h"
#include "qflow/generate.h"
#include "qflow/model.h"

namespace qflow {

// ---------------------------------------------------------------------------
// Opportunity losses

/// One port-day: counts observed at increasing boundary hours and the arrival
/// times in between. Interval k is [hours[k], hours[k+1]).
struct DayProfile {
    std::vector<double> hours;
    std::vector<std::int64_t> counts;
    std::vector<double> arrivals;
};

struct OppLossInput {
    DayProfile day;
    /// Imputed rentals per hour while the port is empty, one value per interval.
    std::vector<double> demand_rate;
};

/// A point of the replayed trajectory just after an event.
struct TrajectoryPoint {
    double time = 0;
    std::int64_t stock = 0;
    double virtual_count = 0;
};

struct OppLossResult {
    /// Realized rental times, after deferring rentals that met an empty port.
    std::vector<double> rentals;
    /// Times of imputed rentals that found no bicycle.
    std::vector<double> loss_times;
    std::vector<std::int64_t> losses_per_interval;
    /// Observed count minus cumulative losses at each boundary hour.
    std::vector<double> adjusted_path;
    std::vector<TrajectoryPoint> trajectory;

    std::int64_t total_losses() const {
        return static_cast<std::int64_t>(loss_times.size());
    }
    double virtual_minimum() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : adjusted_path) {
            m = std::min(m, v);
        }
        for (const auto &p : trajectory) {
            m = std::min(m, p.virtual_count);
        }
        return m;
    }
};

namespace detail {

inline void validate_day(const DayProfile &day) {
    if (day.hours.size() < 2 || day.counts.size() != day.hours.size()) {
        throw DataError("a day profile needs matching boundary hours and counts (at least two)");
    }
    for (std::size_t k = 0; k + 1 < day.hours.size(); k++) {
        if (!(day.hours[k] < day.hours[k + 1])) {
            throw DataError("boundary hours must increase");
        }
    }
    for (auto c : day.counts) {
        if (c < 0) {
            throw DataError("observed counts must be non-negative");
        }
    }
    for (std::size_t k = 0; k < day.arrivals.size(); k++) {
        double a = day.arrivals[k];
        if (a < day.hours.front() || a > day.hours.back()) {
            throw DataError("arrival at hour " + std::to_string(a) + " lies outside the day");
        }
        if (k > 0 && a < day.arrivals[k - 1]) {
            throw DataError("arrival times must be sorted");
        }
    }
}

/// Interval holding time x; the final boundary belongs to the last interval.
inline std::size_t interval_of(std::span<const double> hours, double x) {
    auto it = std::upper_bound(hours.begin(), hours.end(), x);
    std::size_t k = static_cast<std::size_t>(it - hours.begin());
    return k == 0 ? 0 : std::min(k - 1, hours.size() - 2);
}

}  // namespace detail

/// Replays each interval with realized rentals spread evenly, then imputes
/// rentals at the demand rate whenever the port is empty. Imputed rentals
/// accumulate across the whole day; each whole unit is one loss.
inline OppLossResult estimate_opportunity_losses(const OppLossInput &in) {
    const DayProfile &day = in.day;
    detail::validate_day(day);
    std::size_t intervals = day.hours.size() - 1;
    if (in.demand_rate.size() != intervals) {
        throw DataError("demand rate needs one value per interval");
    }
    for (double r : in.demand_rate) {
        if (!(r >= 0) || !std::isfinite(r)) {
            throw DataError("demand rates must be finite and non-negative");
        }
    }

    constexpr double kTieTol = 1e-12;
    constexpr double kCrossTol = 1e-9;
    OppLossResult out;
    out.losses_per_interval.assign(intervals, 0);
    out.adjusted_path.assign(day.hours.size(), 0.0);
    out.adjusted_path[0] = static_cast<double>(day.counts[0]);

    double accrued = 0;  // imputed demand while empty, carried across intervals
    std::size_t arrival = 0;

    for (std::size_t k = 0; k < intervals; k++) {
        double t1 = day.hours[k], t2 = day.hours[k + 1];
        std::vector<double> arrivals;
        while (arrival < day.arrivals.size() && (day.arrivals[arrival] < t2 || (k + 1 == intervals))) {
            arrivals.push_back(day.arrivals[arrival++]);
        }
        std::int64_t r = day.counts[k] + static_cast<std::int64_t>(arrivals.size()) - day.counts[k + 1];
        if (r < 0) {
            throw DataError(
                "interval " + std::to_string(k) + " [" + std::to_string(t1) + ", " + std::to_string(t2) +
                "): the observed counts imply a negative number of rentals");
        }
        double len = t2 - t1;
        std::vector<double> planned(static_cast<std::size_t>(r));
        for (std::int64_t m = 0; m < r; m++) {
            planned[static_cast<std::size_t>(m)] = t1 + (static_cast<double>(m) + 0.5) * len / static_cast<double>(r);
        }

        std::int64_t stock = day.counts[k];
        std::int64_t pending = 0;  // rentals waiting for a bicycle
        double clock = t1;
        double rate = in.demand_rate[k];
        std::size_t ia = 0, ir = 0;

        auto advance = [&](double until) {
            if (stock == 0 && until > clock && rate > 0) {
                double start = clock;
                double before = accrued;
                accrued += rate * (until - clock);
                // Each whole unit crossed is one loss at its crossing time.
                double next = std::floor(before + kCrossTol) + 1;
                while (accrued >= next - kCrossTol) {
                    double at = start + (next - before) / rate;
                    at = std::min(std::max(at, start), until);
                    out.loss_times.push_back(at);
                    out.losses_per_interval[k]++;
                    out.trajectory.push_back({at, stock, static_cast<double>(stock) - static_cast<double>(out.loss_times.size())});
                    next += 1;
                }
            }
            clock = until;
        };
        auto record = [&](double at) {
            out.trajectory.push_back({at, stock, static_cast<double>(stock) - static_cast<double>(out.loss_times.size())});
        };

        while (ia < arrivals.size() || ir < planned.size()) {
            bool take_arrival = ir == planned.size() ||
                                (ia < arrivals.size() && arrivals[ia] <= planned[ir] + kTieTol);
            if (take_arrival) {
                double at = arrivals[ia++];
                advance(at);
                stock++;
                if (pending > 0) {
                    pending--;
                    stock--;
                    out.rentals.push_back(at);
                }
                record(at);
            } else {
                double at = planned[ir++];
                advance(at);
                if (stock > 0) {
                    stock--;
                    out.rentals.push_back(at);
                } else {
                    pending++;
                }
                record(at);
            }
        }
        advance(t2);
        if (stock != day.counts[k + 1] || pending != 0) {
            throw NumericalError("replay of interval " + std::to_string(k) + " did not reproduce the observed count");
        }
        out.adjusted_path[k + 1] =
            static_cast<double>(day.counts[k + 1]) - static_cast<double>(out.loss_times.size());
    }
    return out;
}

/// Replaces every day-series of `panel` by its adjusted path.
/// results[day][port] must cover the whole panel.
inline CountPanel adjust_panel(const CountPanel &panel, const std::vector<std::vector<OppLossResult>> &results) {
    if (results.size() != panel.num_days()) {
        throw DataError("opportunity-loss results do not cover every day");
    }
    CountPanel out = panel;
    for (std::size_t k = 0; k < panel.num_days(); k++) {
        if (results[k].size() != panel.num_ports()) {
            throw DataError("opportunity-loss results do not cover every port on day " + std::to_string(k));
        }
        for (std::size_t d = 0; d < panel.num_ports(); d++) {
            const auto &path = results[k][d].adjusted_path;
            if (path.size() != panel.num_times()) {
                throw DataError("adjusted path length does not match the panel grid");
            }
            for (std::size_t t = 0; t < panel.num_times(); t++) {
                out.at(k, d, t) = path[t];
            }
        }
    }
    return out;
}

/// Mean realized rentals per hour at each interval over days where the port
/// holds bicycles at both ends, for one port. Intervals with no such day fall
/// back to the mean over all qualifying intervals, then to 0; each fallback
/// adds a line to `warnings`.
inline std::vector<double> default_demand_rates(
    const std::vector<DayProfile> &days, std::vector<std::string> *warnings = nullptr) {
    if (days.empty()) {
        throw DataError("demand rates need at least one day");
    }
    std::size_t intervals = days.front().hours.size() - 1;
    std::vector<double> sum(intervals, 0.0);
    std::vector<std::size_t> n(intervals, 0);
    double all = 0;
    std::size_t all_n = 0;
    for (const auto &day : days) {
        detail::validate_day(day);
        if (day.hours.size() != intervals + 1) {
            throw DataError("all days must share the boundary grid");
        }
        std::vector<std::size_t> arrivals(intervals, 0);
        for (double a : day.arrivals) {
            arrivals[detail::interval_of(day.hours, a)]++;
        }
        for (std::size_t k = 0; k < intervals; k++) {
            if (day.counts[k] > 0 && day.counts[k + 1] > 0) {
                double r = static_cast<double>(day.counts[k] + static_cast<std::int64_t>(arrivals[k]) - day.counts[k + 1]);
                r = std::max(r, 0.0) / (day.hours[k + 1] - day.hours[k]);
                sum[k] += r;
                n[k]++;
                all += r;
                all_n++;
            }
        }
    }
    double fallback = all_n > 0 ? all / static_cast<double>(all_n) : 0.0;
    std::vector<double> out(intervals);
    for (std::size_t k = 0; k < intervals; k++) {
        if (n[k] > 0) {
            out[k] = sum[k] / static_cast<double>(n[k]);
        } else {
            out[k] = fallback;
            if (warnings) {
                warnings->push_back(
                    "warning: no day with stock at both ends of interval " + std::to_string(k) +
                    "; using demand rate " + std::to_string(fallback) + (all_n > 0 ? " (all-interval mean)" : " (no data)"));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pre-adding bicycles

/// Where bicycles rented because of the addition end up: weights[src][dst].
struct RoutingConfig {
    std::vector<std::string> groups;
    std::vector<double> weights;
    /// Grid steps between a rental and the returned bicycle's arrival.
    std::size_t lag_steps = 2;

    double weight(std::size_t src, std::size_t dst) const {
        return weights[src * groups.size() + dst];
    }

    /// Residential sends 0.9 to Office and 0.1 to Others, Office the mirror,
    /// Others splits evenly. Unknown names route uniformly to the other groups.
    static RoutingConfig defaults(const std::vector<std::string> &groups) {
        RoutingConfig r;
        r.groups = groups;
        std::size_t g = groups.size();
        r.weights.assign(g * g, 0.0);
        auto find = [&](const std::string &name) -> std::ptrdiff_t {
            for (std::size_t k = 0; k < g; k++) {
                if (groups[k] == name) {
                    return static_cast<std::ptrdiff_t>(k);
                }
            }
            return -1;
        };
        std::ptrdiff_t res = find("Residential"), off = find("Office"), oth = find("Others");
        bool named = g == 3 && res >= 0 && off >= 0 && oth >= 0;
        for (std::size_t s = 0; s < g; s++) {
            if (named) {
                auto set = [&](std::ptrdiff_t dst, double w) { r.weights[s * g + static_cast<std::size_t>(dst)] = w; };
                if (static_cast<std::ptrdiff_t>(s) == res) {
                    set(off, 0.9);
                    set(oth, 0.1);
                } else if (static_cast<std::ptrdiff_t>(s) == off) {
                    set(res, 0.9);
                    set(oth, 0.1);
                } else {
                    set(res, 0.5);
                    set(off, 0.5);
                }
            } else if (g > 1) {
                for (std::size_t e = 0; e < g; e++) {
                    if (e != s) {
                        r.weights[s * g + e] = 1.0 / static_cast<double>(g - 1);
                    }
                }
            }
        }
        return r;
    }

    void validate_source(std::size_t src) const {
        std::size_t g = groups.size();
        if (weights.size() != g * g) {
            throw ConfigError("routing weights must form a square matrix over the groups");
        }
        if (src >= g) {
            throw ConfigError("routing source group out of range");
        }
        double s = 0;
        for (std::size_t e = 0; e < g; e++) {
            double w = weight(src, e);
            if (!(w >= 0) || !std::isfinite(w)) {
                throw ConfigError("routing weights must be non-negative");
            }
            s += w;
        }
        if (std::abs(s - 1) > 1e-9) {
            throw ConfigError("routing weights from '" + groups[src] + "' sum to " + std::to_string(s) + ", not 1");
        }
    }
};

struct InterventionResult {
    double added = 0;
    std::size_t target = 0;
    std::vector<std::string> groups;
    std::vector<double> primary;                 // per path
    std::vector<std::vector<double>> secondary;  // [group][path]; zero row for the target
    double mean_primary = 0;
    std::vector<double> mean_secondary;  // per group
    double total = 0;
    std::vector<std::vector<double>> before_mean;  // [group][t]
    std::vector<std::vector<double>> after_mean;   // [group][t]
};

/// Extra rentals up to each grid point when `a` bicycles are added at t = 0
/// to a virtual path x: min(a, max(0, -min_{s <= t} x(s))).
inline std::vector<double> cumulative_extra_rentals(std::span<const double> x, double a) {
    std::vector<double> out(x.size());
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < x.size(); t++) {
        low = std::min(low, x[t]);
        out[t] = std::min(a, std::max(0.0, -low));
    }
    return out;
}

/// min(a, max(0, -min_t x(t))).
inline double primary_effect(std::span<const double> x, double a) {
    if (x.empty()) {
        return 0;
    }
    return cumulative_extra_rentals(x, a).back();
}

inline double shortage(std::span<const double> x) {
    double low = 0;
    for (double v : x) {
        low = std::min(low, v);
    }
    return -low;
}

/// Effects of adding `a` bicycles to group `target` at t = 0 of every path.
inline InterventionResult evaluate_addition(
    const Ensemble &ensemble, double a, std::size_t target, const RoutingConfig &routing) {
    if (!(a >= 0) || !std::isfinite(a)) {
        throw ConfigError("the number of added bicycles must be non-negative");
    }
    if (ensemble.paths.empty()) {
        throw ContractError("the intervention needs at least one path");
    }
    std::size_t g = ensemble.paths.front().num_ports;
    std::size_t points = ensemble.paths.front().num_points;
    if (routing.groups.size() != g) {
        throw ConfigError("routing must name one group per port");
    }
    routing.validate_source(target);

    InterventionResult res;
    res.added = a;
    res.target = target;
    res.groups = routing.groups;
    res.secondary.assign(g, {});
    res.mean_secondary.assign(g, 0.0);
    res.before_mean.assign(g, std::vector<double>(points, 0.0));
    res.after_mean.assign(g, std::vector<double>(points, 0.0));
    double n = static_cast<double>(ensemble.paths.size());

    std::vector<double> shifted(points);
    for (const auto &p : ensemble.paths) {
        auto x = p.series(target);
        auto extra = cumulative_extra_rentals(x, a);
        res.primary.push_back(extra.back());
        for (std::size_t h = 0; h < g; h++) {
            auto xh = p.series(h);
            double w = h == target ? 0.0 : routing.weight(target, h);
            for (std::size_t t = 0; t < points; t++) {
                if (h == target) {
                    shifted[t] = xh[t] + a;
                } else {
                    shifted[t] = xh[t] + (t >= routing.lag_steps ? w * extra[t - routing.lag_steps] : 0.0);
                }
                res.before_mean[h][t] += xh[t] / n;
                res.after_mean[h][t] += shifted[t] / n;
            }
            double sec = h == target ? 0.0 : std::max(0.0, shortage(xh) - shortage(shifted));
            res.secondary[h].push_back(sec);
        }
    }
    for (double v : res.primary) {
        res.mean_primary += v / n;
    }
    res.total = res.mean_primary;
    for (std::size_t h = 0; h < g; h++) {
        for (double v : res.secondary[h]) {
            res.mean_secondary[h] += v / n;
        }
        res.total += res.mean_secondary[h];
    }
    return res;
}

/// Generates an ensemble from `model` and evaluates the addition on it.
inline InterventionResult simulate_addition(
    const TrainedModel &model,
    std::span<const double> x0,
    double a,
    std::size_t target,
    const RoutingConfig &routing,
    std::size_t n_paths,
    std::uint64_t seed,
    SamplingMode mode = SamplingMode::kReinjection) {
    if (target >= model.data.num_ports()) {
        throw ConfigError("target group out of range");
    }
    routing.validate_source(target);
    return evaluate_addition(generate_ensemble(model, x0, n_paths, seed, mode), a, target, routing);
}

struct EffectRow {
    std::string kind;  // primary, secondary or total
    std::string group;
    double value = 0;
};

/// Rows: primary at the target, secondary for every group with nonzero
/// routing weight, then the total of the rounded rows.
inline std::vector<EffectRow> effect_report(const InterventionResult &r, const RoutingConfig &routing, int decimals = 0) {
    double scale = std::pow(10.0, decimals);
    auto round = [&](double v) { return std::round(v * scale) / scale + 0.0; };
    std::vector<EffectRow> rows;
    rows.push_back({"primary", r.groups.empty() ? "" : r.groups[r.target], round(r.mean_primary)});
    for (std::size_t h = 0; h < r.groups.size(); h++) {
        if (h == r.target || routing.weight(r.target, h) == 0) {
            continue;
        }
        rows.push_back({"secondary", r.groups[h], round(r.mean_secondary[h])});
    }
    double total = 0;
    for (const auto &row : rows) {
        total += row.value;
    }
    rows.push_back({"total", "", total});
    return rows;
}

}  // namespace qflow

#endif
