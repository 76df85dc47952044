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

// qflow: command-line driver for ingestion, training, sampling, scenario
// simulation and opportunity-loss adjustment.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data error,
// 4 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qflow/qflow.h"

namespace {

namespace fs = std::filesystem;
using namespace qflow;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

/// Numbers in every output table use this many significant digits.
constexpr int kPrecision = 12;

std::ofstream open_output(const fs::path &path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << std::setprecision(kPrecision);
    return out;
}

void warn_all(const std::vector<std::string> &warnings) {
    for (const auto &w : warnings) {
        std::cerr << (w.rfind("warning", 0) == 0 ? w : "warning: " + w) << "\n";
    }
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        out.push_back(detail::trim(item));
    }
    return out;
}

std::vector<double> parse_numbers(const std::string &s, const std::string &what) {
    std::vector<double> out;
    for (const auto &item : split(s, ',')) {
        auto v = detail::parse_double(item);
        if (!v) {
            throw ConfigError(what + ": '" + item + "' is not a number");
        }
        out.push_back(*v);
    }
    return out;
}

std::size_t group_index(const std::vector<std::string> &names, const std::string &name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (std::size_t k = 0; k < names.size(); k++) {
        std::string n;
        for (char c : names[k]) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (n == lower) return k;
    }
    std::string known;
    for (const auto &n : names) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown group '" + name + "' (model groups: " + known + ")");
}

std::vector<double> initial_counts(const TrainedModel &model, const std::string &x0) {
    if (x0.empty()) {
        return default_initial_counts(model);
    }
    auto v = parse_numbers(x0, "--x0");
    if (v.size() != model.data.num_ports()) {
        throw ConfigError("--x0 needs one count per group (" + std::to_string(model.data.num_ports()) + ")");
    }
    return v;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::string out = "counts.csv";
    std::string arrivals;
    std::uint64_t seed = 0;
    std::size_t days = 30;
    std::string start = "2024-04-01";
    std::string ports = "50,36,48";
    std::string racks = "453,391,431";
    std::string fill = "0.7,0.3,0.5";
    std::string flow = "40,90,70,0,0,0,0,0,0,0,0,-70,-90,-40,0,0";
    double flow_sd = 6.0;
    double noise_sd = 6.0 * 0.816496580927726;
};

template <typename T, std::size_t K>
std::array<T, K> fixed(const std::string &s, const std::string &what) {
    auto v = parse_numbers(s, what);
    if (v.size() != K) {
        throw ConfigError(what + " needs " + std::to_string(K) + " values");
    }
    std::array<T, K> out{};
    for (std::size_t k = 0; k < K; k++) {
        if constexpr (std::is_integral_v<T>) {
            if (v[k] < 0 || v[k] != std::floor(v[k])) throw ConfigError(what + " must hold non-negative integers");
        }
        out[k] = static_cast<T>(v[k]);
    }
    return out;
}

int run_synth(const SynthArgs &a) {
    SynthSpec synth_spec;
    synth_spec.ports = fixed<std::size_t, kNumGroups>(a.ports, "--ports");
    synth_spec.racks = fixed<std::int64_t, kNumGroups>(a.racks, "--racks");
    synth_spec.base_fill = fixed<double, kNumGroups>(a.fill, "--fill");
    synth_spec.flow_mean = fixed<double, kHoursPerDay - 1>(a.flow, "--flow");
    synth_spec.flow_sd = a.flow_sd;
    synth_spec.noise_sd = a.noise_sd;
    synth_spec.days = a.days;
    synth_spec.start_date = a.start;
    parse_date(a.start);
    for (auto n : synth_spec.ports) {
        if (n == 0) throw ConfigError("--ports: every group needs at least one port");
    }
    if (a.flow_sd < 0 || a.noise_sd < 0) throw ConfigError("noise levels must be non-negative");
    auto out = synth_generate(synth_spec, a.seed);
    auto f = open_output(a.out);
    write_counts(f, out.records);
    if (!a.arrivals.empty()) {
        auto g = open_output(a.arrivals);
        write_arrivals(g, out.arrivals);
    }
    std::cerr << "wrote " << out.records.size() << " ports x " << a.days << " days to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
    std::string input;
    std::string out = ".";
    bool weekdays_only = false;
    std::vector<std::string> holidays;
    bool allow_negative = false;
};

DayFilter holiday_filter(bool weekdays_only, const std::vector<std::string> &holidays) {
    DayFilter f;
    f.weekdays_only = weekdays_only;
    for (const auto &h : holidays) {
        for (const auto &d : split(h, ',')) {
            parse_date(d);
            f.holidays.insert(d);
        }
    }
    return f;
}

int run_ingest(const IngestArgs &a) {
    std::vector<std::string> warnings;
    auto records = load_counts(a.input, LoadOptions{a.allow_negative}, &warnings);
    // Classification always looks at weekdays; the panel honours --weekdays-only.
    auto assignment = classify_ports(records, holiday_filter(true, a.holidays));
    auto panel = aggregate_groups(records, assignment, holiday_filter(a.weekdays_only, a.holidays), &warnings);
    warn_all(warnings);
    fs::path dir(a.out);

    auto groups = open_output(dir / "groups.csv");
    groups << "port_id,group,morning_change\n";
    for (const auto &rec : records) {
        groups << rec.port_id << ',' << group_name(assignment.group_of.at(rec.port_id)) << ','
               << assignment.morning_change.at(rec.port_id) << '\n';
    }
    auto summary = open_output(dir / "summary.csv");
    summary << "group,ports,port_share_pct,racks,rack_share_pct\n" << std::fixed << std::setprecision(1);
    for (const auto &row : summarize_groups(records, assignment)) {
        summary << row.group << ',' << row.ports << ',' << row.port_share << ',' << row.racks << ',' << row.rack_share << '\n';
    }
    auto p = open_output(dir / "panel.csv");
    write_panel(p, panel);
    std::cerr << "classified " << records.size() << " ports; panel has " << panel.num_days() << " days\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string panel;
    std::string model = "model.json";
    std::string history = "history.csv";
    std::size_t states = 2;
    std::size_t ancilla = 2;
    std::string layers = "ring";
    double alpha = 1.0;
    std::string alpha_matrix;
    double learning_rate = 0.1;
    std::size_t iterations = 300;
    std::size_t shots = 0;
    std::uint64_t seed = 0;
    std::string gradient = "parameter-shift";
    std::string binning = "equal-frequency";
    bool pool_times = false;
};

int run_train(const TrainArgs &a) {
    auto panel = load_panel(a.panel);
    CodebookOptions options;
    options.pool_times = a.pool_times;
    if (a.binning == "equal-width") {
        options.rule = BinningRule::kEqualWidth;
    } else if (a.binning != "equal-frequency") {
        throw ConfigError("--binning must be equal-frequency or equal-width");
    }
    auto data = prepare_training_data(panel, a.states, options);
    if (data.codebook.any_degenerate()) {
        std::size_t cells = std::count(data.codebook.degenerate.begin(), data.codebook.degenerate.end(), 1);
        std::cerr << "warning: " << cells << " (group, hour) cell(s) have fewer distinct increments than states; "
                  << "empty states take their neighbours' representative\n";
    }
    std::size_t D = data.num_ports();
    TrainConfig config = TrainConfig::with_uniform_alpha(D, a.alpha);
    if (!a.alpha_matrix.empty()) {
        config.alpha = parse_numbers(a.alpha_matrix, "--alpha-matrix");
        if (config.alpha.size() != D * D) {
            throw ConfigError("--alpha-matrix needs " + std::to_string(D * D) + " row-major values");
        }
    }
    config.learning_rate = a.learning_rate;
    config.iterations = a.iterations;
    config.shots = a.shots;
    config.seed = a.seed;
    config.num_ancilla = a.ancilla;
    config.layers.clear();
    for (const auto &name : split(a.layers, ',')) config.layers.push_back(detail::parse_entangler(name));
    if (a.gradient == "finite-difference") {
        config.gradient = GradientMethod::kFiniteDifference;
    } else if (a.gradient != "parameter-shift") {
        throw ConfigError("--gradient must be parameter-shift or finite-difference");
    }

    auto model = train(data, config);
    auto h = open_output(a.history);
    h << "iter,term1,term2,total\n";
    for (std::size_t k = 0; k < model.cost_history.size(); k++) {
        const auto &c = model.cost_history[k];
        h << k << ',' << c.term1 << ',' << c.term2 << ',' << c.total << '\n';
    }
    if (model.status != TrainStatus::kOk) {
        std::cerr << "error: training failed: " << model.message << "\n";
        return kExitNumerical;
    }
    save_model(model, a.model);
    const auto &first = model.cost_history.front(), &last = model.cost_history.back();
    std::cerr << "cost " << first.total << " -> " << last.total << " after " << config.iterations << " iterations\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
    std::string model;
    std::string out = ".";
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    std::string mode = "reinjection";
    std::string x0;
};

void write_cell(std::ostream &out, const CorrelationTable &c, std::size_t d, std::size_t e, std::size_t t) {
    out << ',';
    if (t < c.num_times && c.is_defined(d, e, t)) out << c.at(d, e, t);
}

int run_sample(const SampleArgs &a) {
    auto model = load_model(a.model);
    auto mode = parse_sampling_mode(a.mode);
    auto x0 = initial_counts(model, a.x0);
    auto ensemble = generate_ensemble(model, x0, a.n_paths, a.seed, mode);
    auto stats = ensemble_statistics(ensemble);
    const auto &names = model.data.port_names;
    int hour0 = model.data.first_hour;
    bool degenerate = a.n_paths < 2;
    fs::path dir(a.out);
    std::string header = "# mode=" + std::string(to_string(mode)) + " n_paths=" + std::to_string(a.n_paths) +
                         " seed=" + std::to_string(a.seed) + "\n";

    auto m = open_output(dir / "mean_paths.csv");
    m << header << "group,t,hour,mean,stddev,degenerate\n";
    for (std::size_t d = 0; d < stats.num_ports; d++) {
        for (std::size_t t = 0; t < stats.num_points; t++) {
            m << names[d] << ',' << t << ',' << hour0 + static_cast<int>(t) << ',' << stats.mean_at(d, t) << ',';
            if (!degenerate) m << stats.stddev_at(d, t);
            m << ',' << (degenerate ? 1 : 0) << '\n';
        }
    }

    auto model_rho = model_correlation_table(model);
    auto c = open_output(dir / "correlations.csv");
    c << header << "group_a,group_b,t,data,model,sample\n";
    for (std::size_t d = 0; d < stats.num_ports; d++) {
        for (std::size_t e = d + 1; e < stats.num_ports; e++) {
            for (std::size_t t = 0; t + 1 < stats.num_points; t++) {
                c << names[d] << ',' << names[e] << ',' << t;
                write_cell(c, model.data.correlations, d, e, t);
                write_cell(c, model_rho, d, e, t);
                write_cell(c, stats.increment_correlation, d, e, t);
                c << '\n';
            }
        }
    }

    auto s = open_output(dir / "scatter.csv");
    s << header << "path,t";
    for (const auto &n : names) s << ',' << n;
    s << '\n';
    for (std::size_t k = 0; k < ensemble.paths.size(); k++) {
        const auto &p = ensemble.paths[k];
        for (std::size_t t = 0; t + 1 < p.num_points; t++) {
            s << k << ',' << t;
            for (std::size_t d = 0; d < p.num_ports; d++) s << ',' << p.count(d, t + 1) - p.count(d, t);
            s << '\n';
        }
    }
    if (degenerate) {
        std::cerr << "warning: one path gives no spread or correlation; those columns are left empty\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string model;
    std::string out = ".";
    double add = 100;
    std::string target = "residential";
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    std::string mode = "reinjection";
    std::string x0;
    std::size_t lag = 2;
    std::vector<std::string> routes;
    int decimals = 0;
};

int run_simulate(const SimulateArgs &a) {
    auto model = load_model(a.model);
    const auto &names = model.data.port_names;
    std::size_t target = group_index(names, a.target);
    auto mode = parse_sampling_mode(a.mode);
    auto x0 = initial_counts(model, a.x0);
    RoutingConfig routing = RoutingConfig::defaults(names);
    routing.lag_steps = a.lag;
    for (const auto &r : a.routes) {
        auto eq = r.find('=');
        if (eq == std::string::npos) throw ConfigError("--route expects GROUP=w1,w2,...");
        std::size_t src = group_index(names, detail::trim(r.substr(0, eq)));
        auto w = parse_numbers(r.substr(eq + 1), "--route");
        if (w.size() != names.size()) throw ConfigError("--route needs one weight per group");
        std::copy(w.begin(), w.end(), routing.weights.begin() + static_cast<std::ptrdiff_t>(src * names.size()));
    }
    if (a.decimals < 0) throw ConfigError("--decimals must be non-negative");
    auto result = simulate_addition(model, x0, a.add, target, routing, a.n_paths, a.seed, mode);
    fs::path dir(a.out);
    std::string header = "# mode=" + std::string(to_string(mode)) + " n_paths=" + std::to_string(a.n_paths) +
                         " seed=" + std::to_string(a.seed) + " add=" + detail::trim(std::to_string(a.add)) +
                         " target=" + names[target] + "\n";
    auto e = open_output(dir / "effects.csv");
    e << header << "effect,group,value\n";
    for (const auto &row : effect_report(result, routing, a.decimals)) {
        e << row.kind << ',' << row.group << ',' << row.value << '\n';
    }
    auto c = open_output(dir / "curves.csv");
    c << header << "group,t,hour,before,after\n";
    for (std::size_t g = 0; g < names.size(); g++) {
        for (std::size_t t = 0; t < result.before_mean[g].size(); t++) {
            c << names[g] << ',' << t << ',' << model.data.first_hour + static_cast<int>(t) << ','
              << result.before_mean[g][t] << ',' << result.after_mean[g][t] << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// opploss

struct OpplossArgs {
    std::string counts;
    std::string arrivals;
    std::string demand_rates;
    std::string groups;
    std::string out = ".";
    bool weekdays_only = false;
    std::vector<std::string> holidays;
};

/// `port_id,interval,rate`; a port_id of `*` applies to every port.
std::map<std::string, std::map<std::size_t, double>> load_rates(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open demand-rate file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::map<std::size_t, double>> out;
    bool header = true;
    while (std::getline(in, line)) {
        lineno++;
        if (detail::skip_line(line)) continue;
        auto f = detail::split_csv(line);
        if (header) {
            if (f.size() < 3 || f[0] != "port_id" || f[1] != "interval" || f[2] != "rate") {
                throw ParseError(path, lineno, "header must be port_id,interval,rate");
            }
            header = false;
            continue;
        }
        if (f.size() < 3) throw ParseError(path, lineno, "expected 3 fields");
        auto k = detail::parse_int(f[1]);
        auto r = detail::parse_double(f[2]);
        if (!k || *k < 0 || *k >= static_cast<std::int64_t>(kHoursPerDay - 1)) {
            throw ParseError(path, lineno, "interval must be in 0.." + std::to_string(kHoursPerDay - 2));
        }
        if (!r || *r < 0) throw ParseError(path, lineno, "rate must be a non-negative number");
        out[f[0]][static_cast<std::size_t>(*k)] = *r;
    }
    return out;
}

GroupAssignment load_groups(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open group file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    GroupAssignment a;
    bool header = true;
    while (std::getline(in, line)) {
        lineno++;
        if (detail::skip_line(line)) continue;
        auto f = detail::split_csv(line);
        if (header) {
            if (f.size() < 2 || f[0] != "port_id" || f[1] != "group") throw ParseError(path, lineno, "header must start port_id,group");
            header = false;
            continue;
        }
        if (f.size() < 2) throw ParseError(path, lineno, "expected port_id,group");
        try {
            a.group_of[f[0]] = parse_group(f[1]);
        } catch (const ConfigError &e) {
            throw ParseError(path, lineno, e.what());
        }
    }
    return a;
}

int run_opploss(const OpplossArgs &a) {
    std::vector<std::string> warnings;
    auto records = load_counts(a.counts, {}, &warnings);
    ArrivalTable arrivals;
    if (!a.arrivals.empty()) {
        std::ifstream in(a.arrivals);
        if (!in) throw DataError("cannot open arrival file '" + a.arrivals + "'");
        arrivals = parse_arrivals(in, a.arrivals);
    } else {
        warnings.push_back("no --arrivals given; every port is assumed to receive no returns");
    }
    std::map<std::string, std::map<std::size_t, double>> given;
    if (!a.demand_rates.empty()) {
        given = load_rates(a.demand_rates);
    } else {
        warnings.push_back("no --demand-rates given; using each port's mean realized rental rate while stocked");
    }
    DayFilter filter = holiday_filter(a.weekdays_only, a.holidays);
    std::vector<double> hours;
    for (int h = kFirstHour; h <= kLastHour; h++) hours.push_back(h);

    fs::path dir(a.out);
    auto losses = open_output(dir / "losses.csv");
    losses << "port_id,date,interval,hour,losses\n";
    auto days_out = open_output(dir / "port_days.csv");
    days_out << "port_id,date,total_losses,virtual_min\n";
    std::vector<PortRecord> adjusted;
    std::int64_t grand_total = 0;

    for (const auto &rec : records) {
        std::vector<std::string> dates;
        std::vector<DayProfile> profiles;
        for (const auto &[date, counts] : rec.days) {
            if (!filter.keep(date)) continue;
            if (std::any_of(counts.begin(), counts.end(), [](const auto &c) { return !c.has_value(); })) {
                warnings.push_back("skipping port " + rec.port_id + " on " + date + ": missing hours");
                continue;
            }
            DayProfile day;
            day.hours = hours;
            for (const auto &c : counts) day.counts.push_back(*c);
            auto pit = arrivals.find(rec.port_id);
            if (pit != arrivals.end()) {
                auto dit = pit->second.find(date);
                if (dit != pit->second.end()) day.arrivals = dit->second;
            }
            dates.push_back(date);
            profiles.push_back(std::move(day));
        }
        if (profiles.empty()) continue;

        std::vector<double> rates(kHoursPerDay - 1, 0.0);
        std::vector<std::string> rate_warnings;
        std::vector<double> fallback;
        for (std::size_t k = 0; k < rates.size(); k++) {
            const std::map<std::size_t, double> *src = nullptr;
            if (given.count(rec.port_id) && given[rec.port_id].count(k)) {
                src = &given[rec.port_id];
            } else if (given.count("*") && given["*"].count(k)) {
                src = &given["*"];
            }
            if (src) {
                rates[k] = src->at(k);
                continue;
            }
            if (fallback.empty()) fallback = default_demand_rates(profiles, &rate_warnings);
            rates[k] = fallback[k];
            if (!given.empty()) {
                warnings.push_back("port " + rec.port_id + ": no demand rate for interval " + std::to_string(k) +
                                   "; using the port's mean realized rate " + std::to_string(fallback[k]));
            }
        }
        for (auto &w : rate_warnings) warnings.push_back("port " + rec.port_id + ": " + w);

        PortRecord adj{rec.port_id, rec.rack_count, {}};
        for (std::size_t i = 0; i < profiles.size(); i++) {
            OppLossResult r;
            try {
                r = estimate_opportunity_losses(OppLossInput{profiles[i], rates});
            } catch (const DataError &e) {
                throw DataError("port " + rec.port_id + " on " + dates[i] + ": " + e.what());
            }
            for (std::size_t k = 0; k < r.losses_per_interval.size(); k++) {
                if (r.losses_per_interval[k] == 0) continue;
                losses << rec.port_id << ',' << dates[i] << ',' << k << ',' << kFirstHour + static_cast<int>(k) << ','
                       << r.losses_per_interval[k] << '\n';
            }
            days_out << rec.port_id << ',' << dates[i] << ',' << r.total_losses() << ',' << r.virtual_minimum() << '\n';
            grand_total += r.total_losses();
            auto &slot = adj.days[dates[i]];
            for (std::size_t t = 0; t < kHoursPerDay; t++) slot[t] = std::llround(r.adjusted_path[t]);
        }
        adjusted.push_back(std::move(adj));
    }
    auto ac = open_output(dir / "adjusted_counts.csv");
    write_counts(ac, adjusted);
    if (!a.groups.empty()) {
        auto assignment = load_groups(a.groups);
        auto panel = aggregate_groups(adjusted, assignment, DayFilter{false, {}}, &warnings);
        auto p = open_output(dir / "adjusted_panel.csv");
        write_panel(p, panel);
    }
    warn_all(warnings);
    std::cerr << "estimated " << grand_total << " opportunity losses\n";
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"qflow: quantum generative model for bike-sharing port counts"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML or INI file; command-line flags take precedence");
    app.get_config_formatter_base()->quoteCharacter('"', '"');
    bool quiet = false;
    app.add_flag("--quiet", quiet, "Do not echo the resolved configuration");

    SynthArgs synth;
    auto *cs = app.add_subcommand("synth", "Generate synthetic commuter port counts");
    cs->add_option("--out", synth.out, "Count CSV to write")->capture_default_str();
    cs->add_option("--arrivals", synth.arrivals, "Also write return times (port_id,date,time) here");
    cs->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    cs->add_option("--days", synth.days, "Number of consecutive days")->capture_default_str()->check(CLI::PositiveNumber);
    cs->add_option("--start", synth.start, "First date (YYYY-MM-DD)")->capture_default_str();
    cs->add_option("--ports", synth.ports, "Ports per group: Residential,Office,Others")->capture_default_str();
    cs->add_option("--racks", synth.racks, "Racks per group")->capture_default_str();
    cs->add_option("--fill", synth.fill, "Share of racks filled at 6:00 per group")->capture_default_str();
    cs->add_option("--flow", synth.flow, "Mean weekday Residential-to-Office flow for each hour step 6-7 .. 21-22")
        ->capture_default_str();
    cs->add_option("--flow-sd", synth.flow_sd, "Spread of the shared hourly flow")->capture_default_str();
    cs->add_option("--noise-sd", synth.noise_sd, "Spread of each group's own hourly change")->capture_default_str();

    IngestArgs ingest;
    auto *ci = app.add_subcommand("ingest", "Classify ports and aggregate them into group panels");
    ci->add_option("--input", ingest.input, "Count CSV (port_id,date,hour,count[,rack_count])")->required();
    ci->add_option("--out", ingest.out, "Output directory for groups.csv, summary.csv, panel.csv")->capture_default_str();
    ci->add_flag("--weekdays-only", ingest.weekdays_only, "Keep only weekdays in the panel");
    ci->add_option("--holidays", ingest.holidays, "Dates to exclude (comma separated)");
    ci->add_flag("--allow-negative", ingest.allow_negative, "Accept negative counts (demand-adjusted data)");

    TrainArgs tr;
    auto *ct = app.add_subcommand("train", "Fit the circuit parameters to a group panel");
    ct->add_option("--panel", tr.panel, "Panel CSV from ingest")->required();
    ct->add_option("--model", tr.model, "Model file to write")->capture_default_str();
    ct->add_option("--history", tr.history, "Cost history CSV to write")->capture_default_str();
    ct->add_option("--states", tr.states, "Discrete states per group (a power of two)")->capture_default_str();
    ct->add_option("--ancilla", tr.ancilla, "Ancilla qubits")->capture_default_str();
    ct->add_option("--layers", tr.layers, "Entangling layers, comma separated: ring or distance-two")->capture_default_str();
    ct->add_option("--alpha", tr.alpha, "Correlation weight for every group pair")->capture_default_str();
    ct->add_option("--alpha-matrix", tr.alpha_matrix, "Row-major D x D correlation weights; overrides --alpha");
    ct->add_option("--lr", tr.learning_rate, "Adam learning rate")->capture_default_str();
    ct->add_option("--iterations", tr.iterations, "Adam iterations")->capture_default_str();
    ct->add_option("--shots", tr.shots, "Shots per circuit evaluation; 0 uses exact probabilities")->capture_default_str();
    ct->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
    ct->add_option("--gradient", tr.gradient, "parameter-shift or finite-difference")->capture_default_str();
    ct->add_option("--binning", tr.binning, "equal-frequency or equal-width")->capture_default_str();
    ct->add_flag("--pool-times", tr.pool_times, "Share one alphabet across all hours of a group");

    SampleArgs sa;
    auto *cp = app.add_subcommand("sample", "Generate sample paths and their statistics");
    cp->add_option("--model", sa.model, "Model file")->required();
    cp->add_option("--out", sa.out, "Output directory for mean_paths.csv, correlations.csv, scatter.csv")
        ->capture_default_str();
    cp->add_option("--n-paths", sa.n_paths, "Number of paths")->capture_default_str()->check(CLI::PositiveNumber);
    cp->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    cp->add_option("--mode", sa.mode, "reinjection or from-origin")->capture_default_str();
    cp->add_option("--x0", sa.x0, "Counts at 6:00, one per group (default: training mean)");

    SimulateArgs si;
    auto *cm = app.add_subcommand("simulate", "Effect of adding bicycles to one group at 6:00");
    cm->add_option("--model", si.model, "Model file")->required();
    cm->add_option("--out", si.out, "Output directory for effects.csv and curves.csv")->capture_default_str();
    cm->add_option("--add", si.add, "Bicycles added at 6:00")->capture_default_str();
    cm->add_option("--target", si.target, "Group receiving the bicycles")->capture_default_str();
    cm->add_option("--n-paths", si.n_paths, "Number of paths")->capture_default_str()->check(CLI::PositiveNumber);
    cm->add_option("--seed", si.seed, "Random seed")->capture_default_str();
    cm->add_option("--mode", si.mode, "reinjection or from-origin")->capture_default_str();
    cm->add_option("--x0", si.x0, "Counts at 6:00, one per group (default: training mean)");
    cm->add_option("--lag", si.lag, "Hours between an extra rental and its return")->capture_default_str();
    cm->add_option("--route", si.routes,
                   "Destination weights for extra rentals from one group, GROUP=w1,w2,... in model group order "
                   "(default: Residential 0,0.9,0.1; Office 0.9,0,0.1; Others 0.5,0.5,0)");
    cm->add_option("--decimals", si.decimals, "Rounding of the effect table")->capture_default_str();

    OpplossArgs op;
    auto *co = app.add_subcommand("opploss", "Estimate rentals lost to empty ports and adjust the counts");
    co->add_option("--counts", op.counts, "Count CSV")->required();
    co->add_option("--arrivals", op.arrivals, "Return times CSV (port_id,date,time in hours)");
    co->add_option("--demand-rates", op.demand_rates,
                   "Rentals per hour while empty (port_id,interval,rate; port_id * for all). "
                   "Default: each port's mean realized rate over stocked intervals");
    co->add_option("--groups", op.groups, "groups.csv from ingest; also writes adjusted_panel.csv");
    co->add_option("--out", op.out, "Output directory")->capture_default_str();
    co->add_flag("--weekdays-only", op.weekdays_only, "Keep only weekdays");
    co->add_option("--holidays", op.holidays, "Dates to exclude (comma separated)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    CLI::App *cmd = app.get_subcommands().front();
    if (!quiet) {
        std::cout << "# resolved configuration\n[" << cmd->get_name() << "]\n" << cmd->config_to_str(true, false);
        std::cout.flush();
    }
    try {
        if (cmd == cs) return run_synth(synth);
        if (cmd == ci) return run_ingest(ingest);
        if (cmd == ct) return run_train(tr);
        if (cmd == cp) return run_sample(sa);
        if (cmd == cm) return run_simulate(si);
        if (cmd == co) return run_opploss(op);
    } catch (const ConfigError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
