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

// Exact-arithmetic discrete-event replay of a port-day, and randomized and
// hand-built day profiles for the opportunity-loss tests.

#ifndef QFLOW_TESTS_OPPLOSS_ORACLE_H
#define QFLOW_TESTS_OPPLOSS_ORACLE_H

#include <boost/rational.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "qflow/scenario.h"

namespace qflow::oracle {

using Q = boost::rational<std::int64_t>;

inline double to_double(Q q) {
    return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
}

inline std::int64_t floor_q(Q q) {
    std::int64_t n = q.numerator(), d = q.denominator();
    return n >= 0 ? n / d : -((-n + d - 1) / d);
}

/// A day with integer boundary hours, rational arrival times and rational rates.
struct ExactDay {
    std::vector<std::int64_t> hours;
    std::vector<std::int64_t> counts;
    std::vector<Q> arrivals;
    std::vector<Q> rates;

    OppLossInput to_input() const {
        OppLossInput in;
        for (auto h : hours) in.day.hours.push_back(static_cast<double>(h));
        in.day.counts = counts;
        for (auto a : arrivals) in.day.arrivals.push_back(to_double(a));
        for (auto r : rates) in.demand_rate.push_back(to_double(r));
        return in;
    }
};

struct ExactOutcome {
    std::vector<std::int64_t> losses_per_interval;
    std::vector<std::int64_t> end_stock;  // replayed stock at each interval end
    std::int64_t rentals = 0;
};

/// Sorts every event of the day once (arrivals before rentals on ties), replays
/// stock with rentals deferred while empty, and integrates the demand rate over
/// empty time exactly. Losses are whole units of the running integral.
inline ExactOutcome exact_replay(const ExactDay &day) {
    std::size_t intervals = day.hours.size() - 1;
    // (time, kind 0 = arrival / 1 = rental, interval)
    std::vector<std::tuple<Q, int, std::size_t>> events;
    std::vector<std::int64_t> arrivals_in(intervals, 0);
    for (const Q &a : day.arrivals) {
        std::size_t k = 0;
        while (k + 1 < intervals && a >= Q(day.hours[k + 1])) k++;
        arrivals_in[k]++;
        events.emplace_back(a, 0, k);
    }
    for (std::size_t k = 0; k < intervals; k++) {
        std::int64_t r = day.counts[k] + arrivals_in[k] - day.counts[k + 1];
        Q len(day.hours[k + 1] - day.hours[k]);
        for (std::int64_t m = 0; m < r; m++) {
            events.emplace_back(Q(day.hours[k]) + (Q(m) + Q(1, 2)) * len / Q(r), 1, k);
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const auto &x, const auto &y) {
        if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) < std::get<0>(y);
        return std::get<1>(x) < std::get<1>(y);
    });

    ExactOutcome out;
    out.losses_per_interval.assign(intervals, 0);
    out.end_stock.assign(intervals, 0);
    std::int64_t stock = day.counts[0], pending = 0;
    Q clock(day.hours[0]);
    Q integral(0);
    std::int64_t counted = 0;
    std::size_t next_boundary = 1;
    std::size_t e = 0;

    // Advances the clock to `until` within interval k, integrating empty time.
    auto integrate = [&](Q until, std::size_t k) {
        if (stock == 0 && until > clock) integral += day.rates[k] * (until - clock);
        clock = until;
        std::int64_t whole = floor_q(integral);
        out.losses_per_interval[k] += whole - counted;
        counted = whole;
    };

    while (next_boundary < day.hours.size()) {
        Q boundary(day.hours[next_boundary]);
        std::size_t k = next_boundary - 1;
        bool last = next_boundary + 1 == day.hours.size();
        while (e < events.size() && (std::get<0>(events[e]) < boundary || (last && std::get<0>(events[e]) <= boundary))) {
            auto [time, kind, interval] = events[e++];
            integrate(time, k);
            if (kind == 0) {
                stock++;
                if (pending > 0) {
                    pending--;
                    stock--;
                    out.rentals++;
                }
            } else if (stock > 0) {
                stock--;
                out.rentals++;
            } else {
                pending++;
            }
        }
        integrate(boundary, k);
        out.end_stock[k] = stock;
        next_boundary++;
    }
    return out;
}

/// Small random day with frequent stock-outs. Later counts are drawn so that
/// every interval implies a non-negative number of rentals.
inline ExactDay random_exact_day(std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> intervals_d(3, 8), small(0, 4), frac(0, 11), rate_num(0, 6), rate_den(1, 4);
    ExactDay day;
    int intervals = intervals_d(rng);
    for (int k = 0; k <= intervals; k++) day.hours.push_back(6 + k);
    day.counts.push_back(small(rng));
    for (int k = 0; k < intervals; k++) {
        int n = small(rng);
        std::vector<Q> here;
        for (int i = 0; i < n; i++) here.push_back(Q(day.hours[k]) + Q(frac(rng), 12));
        std::sort(here.begin(), here.end());
        for (auto &a : here) day.arrivals.push_back(a);
        std::int64_t most = day.counts.back() + n;
        std::uniform_int_distribution<std::int64_t> next(0, most);
        std::int64_t b = (rng() % 2 == 0) ? 0 : next(rng);
        day.counts.push_back(b);
        day.rates.push_back(Q(rate_num(rng), rate_den(rng)));
    }
    return day;
}

/// A port emptied by the morning commute and refilled from 17:00, with a
/// demand rate chosen so the empty span accrues exactly 15 imputed rentals.
inline OppLossInput depletion_day() {
    OppLossInput in;
    for (int h = 6; h <= 22; h++) in.day.hours.push_back(h);
    in.day.counts = {12, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3, 5, 6, 6, 7};
    for (int h = 17; h < 22; h++) {
        int n = h == 17 ? 5 : 3;
        for (int i = 0; i < n; i++) in.day.arrivals.push_back(h + (i + 0.5) / n);
    }
    // Empty from 7:52:30 (the last 7-8 rental) to 17:00, then until the first arrival at 17:06.
    double empty = (8.0 - 7.875) + 9.0;
    in.demand_rate.assign(16, 0.0);
    for (int k = 1; k <= 10; k++) in.demand_rate[k] = 15.0 / empty;
    // The 17-18 interval starts empty until 17:06; give it no imputed demand.
    in.demand_rate[11] = 0.0;
    return in;
}

}  // namespace qflow::oracle

#endif
