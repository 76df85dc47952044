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

// Port-count CSV files, port classification and group aggregation, a
// synthetic commuter data generator, and the model file format.

#ifndef QFLOW_DATA_H
#define QFLOW_DATA_H

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qflow/encode.h"
#include "qflow/error.h"
#include "qflow/model.h"
#include "qflow/rng.h"

namespace qflow {

inline constexpr int kFirstHour = 6;
inline constexpr int kLastHour = 22;
inline constexpr std::size_t kHoursPerDay = kLastHour - kFirstHour + 1;

// ---------------------------------------------------------------------------
// Calendar

inline std::chrono::year_month_day parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    auto bad = [&] { return DataError("invalid date '" + std::string(s) + "' (expected YYYY-MM-DD)"); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw bad();
    }
    auto num = [&](std::string_view part, auto &out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        if (ec != std::errc{} || p != part.data() + part.size()) {
            throw bad();
        }
    };
    num(s.substr(0, 4), y);
    num(s.substr(5, 2), m);
    num(s.substr(8, 2), d);
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw bad();
    }
    return ymd;
}

inline std::string format_date(std::chrono::year_month_day ymd) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

inline bool is_weekday(std::string_view date) {
    std::chrono::weekday wd{std::chrono::sys_days{parse_date(date)}};
    return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

/// Weekdays that are not listed as holidays.
struct DayFilter {
    bool weekdays_only = true;
    std::set<std::string> holidays;

    bool keep(const std::string &date) const {
        if (holidays.count(date)) {
            return false;
        }
        return !weekdays_only || is_weekday(date);
    }
};

// ---------------------------------------------------------------------------
// Port records and the count CSV

struct PortRecord {
    std::string port_id;
    /// Number of racks, if known.
    std::optional<std::int64_t> rack_count;
    /// Counts at 6:00 .. 22:00 for each date (ISO order sorts chronologically).
    std::map<std::string, std::array<std::optional<std::int64_t>, kHoursPerDay>> days;

    bool operator==(const PortRecord &) const = default;
};

struct LoadOptions {
    /// Accept negative counts (demand-adjusted data).
    bool allow_negative = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) b++;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) e--;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

inline std::optional<std::int64_t> parse_int(const std::string &s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<double> parse_double(const std::string &s) {
    if (s.empty()) {
        return std::nullopt;
    }
    std::size_t used = 0;
    try {
        double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) {
            return std::nullopt;
        }
        return v;
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

/// Column positions for a header line; `optional` columns may be missing.
inline std::map<std::string, std::size_t> header_columns(
    const std::string &where, const std::string &line, const std::vector<std::string> &required,
    const std::vector<std::string> &optional) {
    auto cols = split_csv(line);
    std::map<std::string, std::size_t> pos;
    for (std::size_t k = 0; k < cols.size(); k++) {
        pos[cols[k]] = k;
    }
    for (const auto &name : required) {
        if (!pos.count(name)) {
            throw ParseError(where, 1, "missing column '" + name + "'");
        }
    }
    std::map<std::string, std::size_t> out;
    for (const auto &name : required) out[name] = pos[name];
    for (const auto &name : optional) {
        if (pos.count(name)) out[name] = pos[name];
    }
    return out;
}

inline bool skip_line(const std::string &line) {
    std::string t = trim(line);
    return t.empty() || t[0] == '#';
}

}  // namespace detail

/// Parses a count CSV (`port_id,date,hour,count[,rack_count]`, any column
/// order). Hours outside 6..22 are ignored. `warnings` collects non-fatal notes.
inline std::vector<PortRecord> parse_counts(
    std::istream &in, const std::string &where, LoadOptions options = {}, std::vector<std::string> *warnings = nullptr) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (!detail::skip_line(line)) break;
    }
    if (detail::skip_line(line)) {
        throw ParseError(where, lineno, "missing header");
    }
    auto cols = detail::header_columns(where, line, {"port_id", "date", "hour", "count"}, {"rack_count"});
    std::size_t width = 0;
    for (auto &[name, k] : cols) width = std::max(width, k + 1);

    std::vector<PortRecord> records;
    std::map<std::string, std::size_t> index;
    std::map<std::string, std::pair<std::size_t, std::size_t>> over_capacity;  // count, first line
    while (std::getline(in, line)) {
        lineno++;
        if (detail::skip_line(line)) continue;
        auto f = detail::split_csv(line);
        if (f.size() < width) {
            throw ParseError(where, lineno, "expected at least " + std::to_string(width) + " fields");
        }
        const std::string &port = f[cols["port_id"]];
        if (port.empty()) {
            throw ParseError(where, lineno, "empty port_id");
        }
        std::string date = f[cols["date"]];
        try {
            parse_date(date);
        } catch (const DataError &e) {
            throw ParseError(where, lineno, e.what());
        }
        auto hour = detail::parse_int(f[cols["hour"]]);
        if (!hour || *hour < 0 || *hour > 23) {
            throw ParseError(where, lineno, "hour must be an integer in 0..23, got '" + f[cols["hour"]] + "'");
        }
        auto count = detail::parse_int(f[cols["count"]]);
        if (!count) {
            throw ParseError(where, lineno, "count must be an integer, got '" + f[cols["count"]] + "'");
        }
        if (*count < 0 && !options.allow_negative) {
            throw ParseError(where, lineno, "negative count " + std::to_string(*count));
        }
        std::optional<std::int64_t> racks;
        if (cols.count("rack_count") && !f[cols["rack_count"]].empty()) {
            racks = detail::parse_int(f[cols["rack_count"]]);
            if (!racks || *racks < 0) {
                throw ParseError(where, lineno, "rack_count must be a non-negative integer");
            }
        }
        auto [it, fresh] = index.emplace(port, records.size());
        if (fresh) {
            records.push_back(PortRecord{port, racks, {}});
        }
        PortRecord &rec = records[it->second];
        if (racks) {
            if (rec.rack_count && *rec.rack_count != *racks) {
                throw ParseError(where, lineno, "conflicting rack_count for port " + port);
            }
            rec.rack_count = racks;
        }
        if (*hour < kFirstHour || *hour > kLastHour) {
            continue;
        }
        auto &slot = rec.days[date][static_cast<std::size_t>(*hour - kFirstHour)];
        if (slot) {
            throw ParseError(where, lineno, "duplicate entry for port " + port + " on " + date + " at hour " + std::to_string(*hour));
        }
        slot = *count;
        if (rec.rack_count && *count > *rec.rack_count) {
            auto &[n, first] = over_capacity[port];
            if (n++ == 0) first = lineno;
        }
    }
    if (warnings) {
        for (const auto &[port, tally] : over_capacity) {
            warnings->push_back("warning: " + where + ":" + std::to_string(tally.second) + ": port " + port + " has " +
                                std::to_string(tally.first) + " count(s) above its rack_count");
        }
    }
    return records;
}

inline std::vector<PortRecord> load_counts(
    const std::string &path, LoadOptions options = {}, std::vector<std::string> *warnings = nullptr) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open count file '" + path + "'");
    }
    return parse_counts(in, path, options, warnings);
}

inline void write_counts(std::ostream &out, const std::vector<PortRecord> &records) {
    out << "port_id,date,hour,count,rack_count\n";
    for (const auto &rec : records) {
        for (const auto &[date, hours] : rec.days) {
            for (std::size_t h = 0; h < kHoursPerDay; h++) {
                if (!hours[h]) continue;
                out << rec.port_id << ',' << date << ',' << (kFirstHour + static_cast<int>(h)) << ',' << *hours[h] << ',';
                if (rec.rack_count) out << *rec.rack_count;
                out << '\n';
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Arrivals CSV (`port_id,date,time` with time in fractional hours)

using ArrivalTable = std::map<std::string, std::map<std::string, std::vector<double>>>;  // port -> date -> times

inline ArrivalTable parse_arrivals(std::istream &in, const std::string &where) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (!detail::skip_line(line)) break;
    }
    if (detail::skip_line(line)) {
        throw ParseError(where, lineno, "missing header");
    }
    auto cols = detail::header_columns(where, line, {"port_id", "date", "time"}, {});
    std::size_t width = 0;
    for (auto &[name, k] : cols) width = std::max(width, k + 1);
    ArrivalTable out;
    while (std::getline(in, line)) {
        lineno++;
        if (detail::skip_line(line)) continue;
        auto f = detail::split_csv(line);
        if (f.size() < width) {
            throw ParseError(where, lineno, "expected at least " + std::to_string(width) + " fields");
        }
        try {
            parse_date(f[cols["date"]]);
        } catch (const DataError &e) {
            throw ParseError(where, lineno, e.what());
        }
        auto time = detail::parse_double(f[cols["time"]]);
        if (!time || *time < 0 || *time > 24) {
            throw ParseError(where, lineno, "time must be a number of hours in [0, 24]");
        }
        out[f[cols["port_id"]]][f[cols["date"]]].push_back(*time);
    }
    for (auto &[port, days] : out) {
        for (auto &[date, times] : days) {
            std::sort(times.begin(), times.end());
        }
    }
    return out;
}

inline void write_arrivals(std::ostream &out, const ArrivalTable &arrivals) {
    out << "port_id,date,time\n";
    out << std::setprecision(10);
    for (const auto &[port, days] : arrivals) {
        for (const auto &[date, times] : days) {
            for (double t : times) {
                out << port << ',' << date << ',' << t << '\n';
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Classification and aggregation

enum class Group { kResidential = 0, kOffice = 1, kOthers = 2 };
inline constexpr std::size_t kNumGroups = 3;

inline std::string group_name(Group g) {
    switch (g) {
        case Group::kResidential:
            return "Residential";
        case Group::kOffice:
            return "Office";
        case Group::kOthers:
            return "Others";
    }
    return "Others";
}

inline std::vector<std::string> group_names() {
    return {"Residential", "Office", "Others"};
}

/// Case-insensitive group name.
inline Group parse_group(std::string_view s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "residential") return Group::kResidential;
    if (lower == "office") return Group::kOffice;
    if (lower == "others" || lower == "other") return Group::kOthers;
    throw ConfigError("unknown group '" + std::string(s) + "' (expected residential, office or others)");
}

struct GroupAssignment {
    std::map<std::string, Group> group_of;
    /// Mean 9:00 minus 7:00 count over the days used.
    std::map<std::string, double> morning_change;

    std::vector<std::string> ports_in(Group g) const {
        std::vector<std::string> out;
        for (const auto &[port, grp] : group_of) {
            if (grp == g) out.push_back(port);
        }
        return out;
    }
};

/// Residential if the mean weekday 9:00 - 7:00 change is <= -2, Office if >= +2,
/// Others otherwise. The mean is taken over days that have both hours.
inline GroupAssignment classify_ports(const std::vector<PortRecord> &records, const DayFilter &filter = {}) {
    GroupAssignment out;
    const std::size_t h7 = 7 - kFirstHour, h9 = 9 - kFirstHour;
    for (const auto &rec : records) {
        double sum = 0;
        std::size_t n = 0;
        for (const auto &[date, hours] : rec.days) {
            if (!filter.keep(date) || !hours[h7] || !hours[h9]) continue;
            sum += static_cast<double>(*hours[h9] - *hours[h7]);
            n++;
        }
        if (n == 0) {
            throw DataError("cannot classify port " + rec.port_id + ": no day with both 7:00 and 9:00 counts");
        }
        double change = sum / static_cast<double>(n);
        out.morning_change[rec.port_id] = change;
        out.group_of[rec.port_id] = change <= -2 ? Group::kResidential : change >= 2 ? Group::kOffice : Group::kOthers;
    }
    return out;
}

struct GroupSummaryRow {
    std::string group;
    std::size_t ports = 0;
    std::int64_t racks = 0;
    double port_share = 0;  // percent
    double rack_share = 0;  // percent
};

/// Ports and racks per group with percentages, plus a Total row.
inline std::vector<GroupSummaryRow> summarize_groups(const std::vector<PortRecord> &records, const GroupAssignment &assignment) {
    std::vector<GroupSummaryRow> rows(kNumGroups + 1);
    for (std::size_t g = 0; g < kNumGroups; g++) rows[g].group = group_name(static_cast<Group>(g));
    rows[kNumGroups].group = "Total";
    for (const auto &rec : records) {
        auto it = assignment.group_of.find(rec.port_id);
        if (it == assignment.group_of.end()) {
            throw DataError("port " + rec.port_id + " has no group");
        }
        auto &row = rows[static_cast<std::size_t>(it->second)];
        row.ports++;
        row.racks += rec.rack_count.value_or(0);
        rows[kNumGroups].ports++;
        rows[kNumGroups].racks += rec.rack_count.value_or(0);
    }
    for (auto &row : rows) {
        const auto &total = rows[kNumGroups];
        row.port_share = total.ports ? 100.0 * static_cast<double>(row.ports) / static_cast<double>(total.ports) : 0.0;
        row.rack_share = total.racks ? 100.0 * static_cast<double>(row.racks) / static_cast<double>(total.racks) : 0.0;
    }
    return rows;
}

/// Per-group sums on the 6:00..22:00 grid for every kept date on which every
/// port has all 17 hours. Dates missing any value are dropped with a warning.
inline CountPanel aggregate_groups(
    const std::vector<PortRecord> &records,
    const GroupAssignment &assignment,
    const DayFilter &filter = {},
    std::vector<std::string> *warnings = nullptr) {
    std::set<std::string> dates;
    for (const auto &rec : records) {
        if (!assignment.group_of.count(rec.port_id)) {
            throw DataError("port " + rec.port_id + " has no group");
        }
        for (const auto &[date, hours] : rec.days) {
            if (filter.keep(date)) dates.insert(date);
        }
    }
    std::vector<std::string> kept;
    for (const auto &date : dates) {
        bool complete = true;
        for (const auto &rec : records) {
            auto it = rec.days.find(date);
            if (it == rec.days.end() ||
                std::any_of(it->second.begin(), it->second.end(), [](const auto &v) { return !v.has_value(); })) {
                complete = false;
                if (warnings) warnings->push_back("warning: dropping " + date + ": port " + rec.port_id + " has missing hours");
                break;
            }
        }
        if (complete) kept.push_back(date);
    }
    CountPanel panel(kept.size(), kNumGroups, kHoursPerDay);
    panel.port_names = group_names();
    panel.day_labels = kept;
    panel.first_hour = kFirstHour;
    for (std::size_t k = 0; k < kept.size(); k++) {
        for (const auto &rec : records) {
            std::size_t g = static_cast<std::size_t>(assignment.group_of.at(rec.port_id));
            const auto &hours = rec.days.at(kept[k]);
            for (std::size_t t = 0; t < kHoursPerDay; t++) {
                panel.at(k, g, t) += static_cast<double>(*hours[t]);
            }
        }
    }
    return panel;
}

/// Panel CSV: `date,t,hour,<group>...`, one row per (date, t).
inline void write_panel(std::ostream &out, const CountPanel &panel) {
    out << "date,t,hour";
    for (const auto &name : panel.port_names) out << ',' << name;
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t k = 0; k < panel.num_days(); k++) {
        for (std::size_t t = 0; t < panel.num_times(); t++) {
            out << panel.day_labels[k] << ',' << t << ',' << panel.first_hour + static_cast<int>(t);
            for (std::size_t d = 0; d < panel.num_ports(); d++) out << ',' << panel.at(k, d, t);
            out << '\n';
        }
    }
}

inline CountPanel parse_panel(std::istream &in, const std::string &where) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (!detail::skip_line(line)) break;
    }
    auto header = detail::split_csv(line);
    if (header.size() < 4 || header[0] != "date" || header[1] != "t" || header[2] != "hour") {
        throw ParseError(where, lineno, "panel header must be date,t,hour,<group>...");
    }
    std::vector<std::string> names(header.begin() + 3, header.end());
    std::vector<std::string> dates;
    std::vector<std::vector<std::vector<double>>> values;  // [day][t][d]
    int first_hour = kFirstHour;
    while (std::getline(in, line)) {
        lineno++;
        if (detail::skip_line(line)) continue;
        auto f = detail::split_csv(line);
        if (f.size() != header.size()) {
            throw ParseError(where, lineno, "expected " + std::to_string(header.size()) + " fields");
        }
        auto t = detail::parse_int(f[1]);
        auto hour = detail::parse_int(f[2]);
        if (!t || !hour || *t < 0) {
            throw ParseError(where, lineno, "bad t or hour");
        }
        if (dates.empty() || dates.back() != f[0]) {
            if (*t != 0) throw ParseError(where, lineno, "each date must start at t = 0");
            dates.push_back(f[0]);
            values.emplace_back();
            if (dates.size() == 1) first_hour = static_cast<int>(*hour);
        }
        if (static_cast<std::size_t>(*t) != values.back().size()) {
            throw ParseError(where, lineno, "time steps must be consecutive");
        }
        std::vector<double> row;
        for (std::size_t d = 3; d < f.size(); d++) {
            auto v = detail::parse_double(f[d]);
            if (!v) throw ParseError(where, lineno, "non-numeric count '" + f[d] + "'");
            row.push_back(*v);
        }
        values.back().push_back(std::move(row));
    }
    std::size_t times = values.empty() ? 0 : values.front().size();
    for (const auto &day : values) {
        if (day.size() != times) throw ParseError(where, lineno, "every date must cover the same time grid");
    }
    CountPanel panel(dates.size(), names.size(), times);
    panel.port_names = names;
    panel.day_labels = dates;
    panel.first_hour = first_hour;
    for (std::size_t k = 0; k < dates.size(); k++)
        for (std::size_t t = 0; t < times; t++)
            for (std::size_t d = 0; d < names.size(); d++) panel.at(k, d, t) = values[k][t][d];
    return panel;
}

inline CountPanel load_panel(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open panel file '" + path + "'");
    }
    return parse_panel(in, path);
}

// ---------------------------------------------------------------------------
// Synthetic commuter data

struct SynthSpec {
    std::array<std::size_t, kNumGroups> ports{50, 36, 48};
    std::array<std::int64_t, kNumGroups> racks{453, 391, 431};
    /// Share of racks holding a bicycle at 6:00.
    std::array<double, kNumGroups> base_fill{0.7, 0.3, 0.5};
    std::string start_date = "2024-04-01";
    std::size_t days = 30;
    /// Mean Residential -> Office flow for each hourly step 6->7 .. 21->22 on
    /// weekdays; negative values flow back.
    std::array<double, kHoursPerDay - 1> flow_mean{40, 90, 70, 0, 0, 0, 0, 0, 0, 0, 0, -70, -90, -40, 0, 0};
    /// Standard deviation of the shared hourly flow.
    double flow_sd = 6.0;
    /// Standard deviation of each group's independent hourly change.
    double noise_sd = 6.0 * 0.816496580927726;
    /// Spread of the 6:00 count around the base fill, in bicycles per port.
    std::int64_t start_jitter = 1;
};

struct SynthOutput {
    std::vector<PortRecord> records;
    /// Port of origin group for each record, in record order.
    std::vector<Group> truth;
    ArrivalTable arrivals;
};

/// Simulates port counts hour by hour. A shared flow f moves bicycles between
/// the Residential and Office groups; each group also gains or loses bicycles
/// independently. Removals pick a random nonempty port of the group and are
/// dropped when the group is empty. Weekends have no commuter flow.
inline SynthOutput synth_generate(const SynthSpec &synth_spec, std::uint64_t seed) {
    SynthOutput out;
    Rng rng = substream(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> within(0.0, 1.0);

    std::vector<std::vector<std::size_t>> members(kNumGroups);
    std::vector<std::int64_t> racks;
    for (std::size_t g = 0; g < kNumGroups; g++) {
        std::int64_t n = static_cast<std::int64_t>(synth_spec.ports[g]);
        for (std::int64_t p = 0; p < n; p++) {
            std::int64_t r = synth_spec.racks[g] / n + (p < synth_spec.racks[g] % n ? 1 : 0);
            char id[32];
            std::snprintf(id, sizeof id, "%c%03lld", "ROX"[g], static_cast<long long>(p + 1));
            members[g].push_back(out.records.size());
            out.records.push_back(PortRecord{id, r, {}});
            out.truth.push_back(static_cast<Group>(g));
            racks.push_back(r);
        }
    }

    auto start = std::chrono::sys_days{parse_date(synth_spec.start_date)};
    std::vector<std::int64_t> stock(out.records.size());
    for (std::size_t day = 0; day < synth_spec.days; day++) {
        std::string date = format_date(std::chrono::year_month_day{start + std::chrono::days{static_cast<int>(day)}});
        bool weekday = is_weekday(date);
        std::uniform_int_distribution<std::int64_t> jitter(-synth_spec.start_jitter, synth_spec.start_jitter);
        for (std::size_t g = 0; g < kNumGroups; g++) {
            for (std::size_t p : members[g]) {
                std::int64_t base = std::llround(synth_spec.base_fill[g] * static_cast<double>(racks[p]));
                stock[p] = std::max<std::int64_t>(0, base + jitter(rng));
            }
        }
        auto record = [&](std::size_t t) {
            for (std::size_t p = 0; p < stock.size(); p++) out.records[p].days[date][t] = stock[p];
        };
        auto add = [&](std::size_t g, std::size_t t) {
            std::vector<std::size_t> open;
            for (std::size_t p : members[g]) {
                if (stock[p] < racks[p]) open.push_back(p);
            }
            const auto &pool = open.empty() ? members[g] : open;
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            std::size_t p = pool[pick(rng)];
            stock[p]++;
            out.arrivals[out.records[p].port_id][date].push_back(kFirstHour + static_cast<double>(t) + within(rng));
        };
        auto remove = [&](std::size_t g) {
            std::vector<std::size_t> nonempty;
            for (std::size_t p : members[g]) {
                if (stock[p] > 0) nonempty.push_back(p);
            }
            if (nonempty.empty()) return false;
            std::uniform_int_distribution<std::size_t> pick(0, nonempty.size() - 1);
            stock[nonempty[pick(rng)]]--;
            return true;
        };
        record(0);
        for (std::size_t t = 0; t + 1 < kHoursPerDay; t++) {
            double mean = weekday ? synth_spec.flow_mean[t] : 0.0;
            double sd = weekday ? synth_spec.flow_sd : 0.0;
            auto flow = static_cast<std::int64_t>(std::llround(mean + sd * normal(rng)));
            std::size_t from = flow >= 0 ? 0 : 1, to = flow >= 0 ? 1 : 0;
            for (std::int64_t k = 0; k < std::llabs(flow); k++) {
                if (remove(from)) add(to, t);
            }
            for (std::size_t g = 0; g < kNumGroups; g++) {
                auto e = static_cast<std::int64_t>(std::llround(synth_spec.noise_sd * normal(rng)));
                for (std::int64_t k = 0; k < std::llabs(e); k++) {
                    if (e > 0) {
                        add(g, t);
                    } else {
                        remove(g);
                    }
                }
            }
            record(t + 1);
        }
    }
    for (auto &[port, days] : out.arrivals) {
        for (auto &[date, times] : days) std::sort(times.begin(), times.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr int kModelFormatMajor = 1;
inline constexpr int kModelFormatMinor = 0;

/// 64-bit FNV-1a hash.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace detail {

using nlohmann::json;

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string entangler_name(Entangler e) {
    return e == Entangler::kAdjacentRing ? "ring" : "distance-two";
}

inline Entangler parse_entangler(const std::string &s) {
    if (s == "ring") return Entangler::kAdjacentRing;
    if (s == "distance-two") return Entangler::kDistanceTwo;
    throw ConfigError("unknown entangler '" + s + "' (expected ring or distance-two)");
}

template <typename T>
json array(const std::vector<T> &v, std::vector<std::size_t> shape) {
    return json{{"shape", shape}, {"data", v}};
}

template <typename T>
std::vector<T> read_array(const json &j, const char *name, std::vector<std::size_t> shape) {
    const json &a = j.at(name);
    auto got = a.at("shape").get<std::vector<std::size_t>>();
    if (got != shape) {
        throw ModelFileError(std::string("array '") + name + "' has an unexpected shape");
    }
    auto data = a.at("data").get<std::vector<T>>();
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    if (data.size() != n) {
        throw ModelFileError(std::string("array '") + name + "' does not match its shape");
    }
    return data;
}

inline json model_body(const TrainedModel &m) {
    const TrainingData &d = m.data;
    std::size_t D = d.num_ports(), N = d.states_per_port(), T = d.num_steps();
    std::size_t nq = m.layout.num_qubits(), L = m.params.layers.size();
    std::vector<std::string> layers;
    for (auto e : m.params.layers) layers.push_back(entangler_name(e));
    std::vector<std::string> config_layers;
    for (auto e : m.config.layers) config_layers.push_back(entangler_name(e));
    std::vector<double> history;
    for (const auto &c : m.cost_history) {
        history.insert(history.end(), {c.term1, c.term2, c.total});
    }
    std::vector<unsigned> degenerate(d.codebook.degenerate.begin(), d.codebook.degenerate.end());
    std::vector<unsigned> empty_rows(d.transitions.empty_rows.begin(), d.transitions.empty_rows.end());
    std::vector<unsigned> defined(d.correlations.defined.begin(), d.correlations.defined.end());
    std::size_t joint = d.initial_distribution.size();
    return json{
        {"layout", {{"num_ports", D}, {"states_per_port", N}, {"num_ancilla", m.layout.num_ancilla()}, {"num_qubits", nq}}},
        {"params",
         {{"layers", layers},
          {"theta1", array(m.params.theta1, {L, nq, 3})},
          {"theta2", array(m.params.theta2, {nq})}}},
        {"data",
         {{"port_names", d.port_names},
          {"first_hour", d.first_hour},
          {"num_steps", T},
          {"codebook",
           {{"breakpoints", array(d.codebook.breakpoints, {D, T, N - 1})},
            {"representatives", array(d.codebook.representatives, {D, T, N})},
            {"means", array(d.codebook.means, {D, T})},
            {"bin_counts", array(d.codebook.bin_counts, {D, T, N})},
            {"degenerate", array(degenerate, {D, T})}}},
          {"transitions",
           {{"tallies", array(d.transitions.tallies, {D, T, N, N})},
            {"probs", array(d.transitions.probs, {D, T, N, N})},
            {"empty_rows", array(empty_rows, {D, T, N})}}},
          {"correlations", {{"rho", array(d.correlations.rho, {D, D, T})}, {"defined", array(defined, {D, D, T})}}},
          {"initial_distribution", array(d.initial_distribution, {joint})},
          {"initial_counts", array(d.initial_counts, {D})}}},
        {"config",
         {{"alpha", array(m.config.alpha, {D, D})},
          {"learning_rate", m.config.learning_rate},
          {"iterations", m.config.iterations},
          {"shots", m.config.shots},
          {"seed", m.config.seed},
          {"beta1", m.config.beta1},
          {"beta2", m.config.beta2},
          {"adam_eps", m.config.adam_eps},
          {"init_scale", m.config.init_scale},
          {"max_alpha", m.config.max_alpha},
          {"num_ancilla", m.config.num_ancilla},
          {"layers", config_layers},
          {"gradient", m.config.gradient == GradientMethod::kParameterShift ? "parameter-shift" : "finite-difference"},
          {"fd_step", m.config.fd_step}}},
        {"cost_history", array(history, {m.cost_history.size(), 3})},
        {"status", m.status == TrainStatus::kOk ? "ok" : "numerical-failure"},
        {"message", m.message},
    };
}

template <typename T>
std::vector<std::uint8_t> to_bytes(const std::vector<T> &v) {
    return std::vector<std::uint8_t>(v.begin(), v.end());
}

inline TrainedModel model_from_body(const json &b) {
    TrainedModel m;
    const json &lay = b.at("layout");
    std::size_t D = lay.at("num_ports"), N = lay.at("states_per_port"), A = lay.at("num_ancilla");
    m.layout = CircuitLayout(D, N, A);
    std::size_t nq = m.layout.num_qubits();
    if (lay.at("num_qubits").get<std::size_t>() != nq) {
        throw ModelFileError("layout qubit count is inconsistent");
    }
    const json &p = b.at("params");
    for (const auto &name : p.at("layers").get<std::vector<std::string>>()) m.params.layers.push_back(parse_entangler(name));
    std::size_t L = m.params.layers.size();
    m.params.theta1 = read_array<double>(p, "theta1", {L, nq, 3});
    m.params.theta2 = read_array<double>(p, "theta2", {nq});

    const json &d = b.at("data");
    TrainingData &td = m.data;
    td.port_names = d.at("port_names").get<std::vector<std::string>>();
    td.first_hour = d.at("first_hour");
    std::size_t T = d.at("num_steps");
    const json &cb = d.at("codebook");
    td.codebook.states_per_port = N;
    td.codebook.num_ports = D;
    td.codebook.num_times = T;
    td.codebook.breakpoints = read_array<double>(cb, "breakpoints", {D, T, N - 1});
    td.codebook.representatives = read_array<double>(cb, "representatives", {D, T, N});
    td.codebook.means = read_array<double>(cb, "means", {D, T});
    td.codebook.bin_counts = read_array<std::uint32_t>(cb, "bin_counts", {D, T, N});
    td.codebook.degenerate = to_bytes(read_array<unsigned>(cb, "degenerate", {D, T}));
    const json &tr = d.at("transitions");
    td.transitions.states_per_port = N;
    td.transitions.num_ports = D;
    td.transitions.num_times = T;
    td.transitions.tallies = read_array<double>(tr, "tallies", {D, T, N, N});
    td.transitions.probs = read_array<double>(tr, "probs", {D, T, N, N});
    td.transitions.empty_rows = to_bytes(read_array<unsigned>(tr, "empty_rows", {D, T, N}));
    const json &co = d.at("correlations");
    td.correlations.num_ports = D;
    td.correlations.num_times = T;
    td.correlations.rho = read_array<double>(co, "rho", {D, D, T});
    td.correlations.defined = to_bytes(read_array<unsigned>(co, "defined", {D, D, T}));
    std::size_t joint = m.layout.num_joint_outcomes();
    td.initial_distribution = read_array<double>(d, "initial_distribution", {joint});
    td.initial_counts = read_array<double>(d, "initial_counts", {D});

    const json &c = b.at("config");
    m.config.alpha = read_array<double>(c, "alpha", {D, D});
    m.config.learning_rate = c.at("learning_rate");
    m.config.iterations = c.at("iterations");
    m.config.shots = c.at("shots");
    m.config.seed = c.at("seed");
    m.config.beta1 = c.at("beta1");
    m.config.beta2 = c.at("beta2");
    m.config.adam_eps = c.at("adam_eps");
    m.config.init_scale = c.at("init_scale");
    m.config.max_alpha = c.at("max_alpha");
    m.config.num_ancilla = c.at("num_ancilla");
    m.config.layers.clear();
    for (const auto &name : c.at("layers").get<std::vector<std::string>>()) m.config.layers.push_back(parse_entangler(name));
    std::string grad = c.at("gradient");
    if (grad != "parameter-shift" && grad != "finite-difference") {
        throw ModelFileError("unknown gradient method '" + grad + "'");
    }
    m.config.gradient = grad == "parameter-shift" ? GradientMethod::kParameterShift : GradientMethod::kFiniteDifference;
    m.config.fd_step = c.at("fd_step");

    const json &h = b.at("cost_history");
    std::size_t rows = h.at("shape").at(0);
    auto flat = read_array<double>(b, "cost_history", {rows, 3});
    for (std::size_t k = 0; k < rows; k++) m.cost_history.push_back({flat[3 * k], flat[3 * k + 1], flat[3 * k + 2]});
    std::string status = b.at("status");
    m.status = status == "ok" ? TrainStatus::kOk : TrainStatus::kNumericalFailure;
    m.message = b.at("message");
    m.params.validate(nq);
    return m;
}

}  // namespace detail

/// Serializes a model as a `qflow-model` JSON document.
inline std::string model_to_string(const TrainedModel &m) {
    auto body = detail::model_body(m);
    std::string canonical = body.dump();
    nlohmann::json doc{
        {"format", "qflow-model"},
        {"version", {kModelFormatMajor, kModelFormatMinor}},
        {"checksum", "fnv1a64:" + detail::hex64(fnv1a64(canonical))},
        {"body", body},
    };
    return doc.dump(1) + "\n";
}

inline TrainedModel model_from_string(const std::string &text, const std::string &where = "model") {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw ModelFileError(where + ": not a valid model file (" + e.what() + ")");
    }
    try {
        if (!doc.is_object() || doc.value("format", "") != "qflow-model") {
            throw ModelFileError(where + ": not a qflow-model document");
        }
        auto version = doc.at("version").get<std::vector<int>>();
        if (version.size() != 2) {
            throw ModelFileError(where + ": malformed version field");
        }
        if (version[0] > kModelFormatMajor) {
            throw VersionError(
                where + ": model format version " + std::to_string(version[0]) + "." + std::to_string(version[1]) +
                " is newer than the supported " + std::to_string(kModelFormatMajor) + "." + std::to_string(kModelFormatMinor));
        }
        const auto &body = doc.at("body");
        std::string expected = "fnv1a64:" + detail::hex64(fnv1a64(body.dump()));
        if (doc.at("checksum").get<std::string>() != expected) {
            throw ModelFileError(where + ": checksum mismatch; the file is corrupt");
        }
        return detail::model_from_body(body);
    } catch (const nlohmann::json::exception &e) {
        throw ModelFileError(where + ": malformed model file (" + e.what() + ")");
    } catch (const LayoutError &e) {
        throw ModelFileError(where + ": " + e.what());
    } catch (const ConfigError &e) {
        throw ModelFileError(where + ": " + e.what());
    }
}

inline void save_model(const TrainedModel &m, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write model file '" + path + "'");
    }
    out << model_to_string(m);
    if (!out) {
        throw DataError("failed writing model file '" + path + "'");
    }
}

inline TrainedModel load_model(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open model file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_string(ss.str(), path);
}

}  // namespace qflow

#endif
