// SPDX-License-Identifier: Apache-2.0
//
// ricmimo - multi-cell Massive MIMO uplink under spatially correlated Rician fading
// Copyright (C) 2026 The ricmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RICMIMO_EXPERIMENTS_HPP
#define RICMIMO_EXPERIMENTS_HPP

#include "ricmimo/monte_carlo.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ricmimo {

inline constexpr int kConfigSchemaVersion = 1;

enum class Preset { paper_fig1, paper_fig2, validate, custom };

inline const char* to_string(Preset p) {
    switch (p) {
        case Preset::paper_fig1: return "paper-fig1";
        case Preset::paper_fig2: return "paper-fig2";
        case Preset::validate: return "validate";
        case Preset::custom: return "custom";
    }
    return "custom";
}

struct ExperimentConfig {
    Preset preset = Preset::paper_fig1;
    SystemConfig system{};
    std::vector<int> sweep;  // antenna counts
    int drops = 50;
    std::vector<Estimator> estimators{Estimator::mmse, Estimator::ls};
    std::vector<FadingMode> fading{FadingMode::rician, FadingMode::rayleigh};
    AssignmentBasis assignment = AssignmentBasis::nlos;
    std::uint64_t seed = 1;
    McConfig mc{};
    std::string output;

    int max_antennas() const { return *std::max_element(sweep.begin(), sweep.end()); }

    void validate() const {
        if (sweep.empty()) throw InvalidConfiguration("experiment.sweep_m must list at least one antenna count");
        for (const int m : sweep) {
            if (m < 1) throw InvalidConfiguration("experiment.sweep_m entries must be >= 1");
        }
        if (drops < 1) throw InvalidConfiguration("experiment.drops must be >= 1");
        if (estimators.empty()) throw InvalidConfiguration("experiment.estimators must not be empty");
        if (fading.empty()) throw InvalidConfiguration("experiment.fading must not be empty");
        if (mc.n_realizations < 1) throw InvalidConfiguration("monte_carlo.trials must be >= 1");
        if (mc.chunk_size < 1) throw InvalidConfiguration("monte_carlo.chunk_size must be >= 1");
        SystemConfig s = system;
        s.M = max_antennas();
        s.validate();
        grid_side(system.L);
    }
};

/// Defaults of each preset. Reference scenario: 16 cells of 250 m, K = 10,
/// tau_p = 10, tau_c = 200, 10 dBm UL power, -94 dBm noise, ASD 10 degrees.
inline ExperimentConfig preset_config(Preset preset) {
    ExperimentConfig c;
    c.preset = preset;
    c.system.L = 16;
    c.system.K = 10;
    c.system.tau_p = 10;
    c.system.tau_c = 200;
    c.system.p = dbm_to_mw(10.0);
    c.system.sigma2_ul = dbm_to_mw(-94.0);
    c.system.asd_deg = 10.0;
    c.system.bandwidth_hz = 20e6;
    c.drops = 50;
    switch (preset) {
        case Preset::paper_fig1:
        case Preset::custom:
            c.sweep = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
            c.output = "fig1.csv";
            break;
        case Preset::paper_fig2:
            c.sweep = {100};
            c.output = "fig2.csv";
            break;
        case Preset::validate:
            c.system.L = 4;
            c.system.K = 2;
            c.system.tau_p = 2;
            c.sweep = {8, 32};
            c.drops = 1;
            c.mc.n_realizations = 100000;
            c.output = "validate.csv";
            break;
    }
    c.system.M = c.max_antennas();
    return c;
}

inline Preset parse_preset(const std::string& s) {
    if (s == "paper-fig1") return Preset::paper_fig1;
    if (s == "paper-fig2") return Preset::paper_fig2;
    if (s == "validate") return Preset::validate;
    if (s == "custom") return Preset::custom;
    throw InvalidConfiguration("unknown preset '" + s + "' (expected paper-fig1, paper-fig2, validate or custom)");
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

template <typename T>
T parse_value(const std::string& section, const std::string& key, const std::string& text) {
    std::istringstream is(text);
    T value{};
    is >> value;
    if (is.fail() || !(is >> std::ws).eof()) {
        throw InvalidConfiguration("[" + section + "] " + key + ": cannot parse '" + text + "'");
    }
    return value;
}

}  // namespace detail

/// Parses the INI experiment format:
///
///   [meta]         schema_version = 1            (required)
///   [experiment]   preset, drops, sweep_m, estimators, fading, seed, output, assignment
///   [system]       K, L, tau_c, tau_p, p_dbm, noise_dbm, asd_deg, bandwidth_hz
///   [monte_carlo]  trials, chunk_size
///
/// The preset supplies defaults; every other key overrides it. Unknown
/// sections and keys are rejected.
inline ExperimentConfig parse_config(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidConfiguration(std::string("config syntax error: ") + e.what());
    }

    static const std::map<std::string, std::set<std::string>> schema{
        {"meta", {"schema_version"}},
        {"experiment", {"preset", "drops", "sweep_m", "estimators", "fading", "seed", "output", "assignment"}},
        {"system", {"K", "L", "tau_c", "tau_p", "p_dbm", "noise_dbm", "asd_deg", "bandwidth_hz"}},
        {"monte_carlo", {"trials", "chunk_size"}},
    };
    for (const auto& [section, body] : tree) {
        const auto it = schema.find(section);
        if (it == schema.end()) {
            throw InvalidConfiguration(!body.data().empty() ? "key '" + section + "' must live inside a [section]"
                                                    : "unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) {
                throw InvalidConfiguration("unknown key '" + key + "' in section [" + section + "]");
            }
        }
    }
    auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
        const auto sec = tree.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return *v;
    };

    const auto version = get("meta", "schema_version");
    if (!version) {
        throw InvalidConfiguration("missing [meta] schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    if (detail::parse_value<int>("meta", "schema_version", *version) != kConfigSchemaVersion) {
        throw InvalidConfiguration("unsupported schema_version " + *version + " (expected " +
                                   std::to_string(kConfigSchemaVersion) + ")");
    }

    ExperimentConfig c = preset_config(get("experiment", "preset") ? parse_preset(*get("experiment", "preset")) : Preset::custom);

    if (auto v = get("experiment", "drops")) c.drops = detail::parse_value<int>("experiment", "drops", *v);
    if (auto v = get("experiment", "seed")) c.seed = detail::parse_value<std::uint64_t>("experiment", "seed", *v);
    if (auto v = get("experiment", "output")) c.output = *v;
    if (auto v = get("experiment", "sweep_m")) {
        c.sweep.clear();
        for (const auto& item : detail::split_list(*v)) c.sweep.push_back(detail::parse_value<int>("experiment", "sweep_m", item));
    }
    if (auto v = get("experiment", "estimators")) {
        c.estimators.clear();
        for (const auto& item : detail::split_list(*v)) {
            if (item == "mmse") c.estimators.push_back(Estimator::mmse);
            else if (item == "ls") c.estimators.push_back(Estimator::ls);
            else throw InvalidConfiguration("[experiment] estimators: unknown estimator '" + item + "' (mmse, ls)");
        }
    }
    if (auto v = get("experiment", "fading")) {
        c.fading.clear();
        for (const auto& item : detail::split_list(*v)) {
            if (item == "rician") c.fading.push_back(FadingMode::rician);
            else if (item == "rayleigh") c.fading.push_back(FadingMode::rayleigh);
            else throw InvalidConfiguration("[experiment] fading: unknown mode '" + item + "' (rician, rayleigh)");
        }
    }
    if (auto v = get("experiment", "assignment")) {
        if (*v == "nlos") c.assignment = AssignmentBasis::nlos;
        else if (*v == "los") c.assignment = AssignmentBasis::los;
        else throw InvalidConfiguration("[experiment] assignment must be nlos or los");
    }
    if (auto v = get("system", "K")) c.system.K = detail::parse_value<int>("system", "K", *v);
    if (auto v = get("system", "L")) c.system.L = detail::parse_value<int>("system", "L", *v);
    if (auto v = get("system", "tau_c")) c.system.tau_c = detail::parse_value<int>("system", "tau_c", *v);
    if (auto v = get("system", "tau_p")) c.system.tau_p = detail::parse_value<int>("system", "tau_p", *v);
    if (auto v = get("system", "p_dbm")) c.system.p = dbm_to_mw(detail::parse_value<double>("system", "p_dbm", *v));
    if (auto v = get("system", "noise_dbm")) c.system.sigma2_ul = dbm_to_mw(detail::parse_value<double>("system", "noise_dbm", *v));
    if (auto v = get("system", "asd_deg")) c.system.asd_deg = detail::parse_value<double>("system", "asd_deg", *v);
    if (auto v = get("system", "bandwidth_hz")) c.system.bandwidth_hz = detail::parse_value<double>("system", "bandwidth_hz", *v);
    if (auto v = get("monte_carlo", "trials")) c.mc.n_realizations = detail::parse_value<std::int64_t>("monte_carlo", "trials", *v);
    if (auto v = get("monte_carlo", "chunk_size")) c.mc.chunk_size = detail::parse_value<int>("monte_carlo", "chunk_size", *v);

    if (!c.sweep.empty()) c.system.M = c.max_antennas();
    c.validate();
    return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

/// Per-UE closed-form SE of one drop for every (M, fading, estimator) of the config.
struct DropResult {
    // se[m][f][e] is indexed by flat UE id.
    std::vector<std::vector<std::vector<std::vector<double>>>> se;
};

inline DropResult evaluate_drop(const ExperimentConfig& cfg, std::uint64_t drop) {
    SystemConfig sys = cfg.system;
    sys.M = cfg.max_antennas();
    NetworkOptions opts;
    opts.assignment = cfg.assignment;
    const NetworkRealization base = realize_network(sys, cfg.seed, drop, opts);
    DropResult out;
    out.se.assign(cfg.sweep.size(), {});
    for (std::size_t mi = 0; mi < cfg.sweep.size(); ++mi) {
        out.se[mi].resize(cfg.fading.size());
        const NetworkRealization truncated = truncate_antennas(base, cfg.sweep[mi]);
        for (std::size_t fi = 0; fi < cfg.fading.size(); ++fi) {
            const FadingMode mode = cfg.fading[fi];
            if (mode == truncated.fading) {
                out.se[mi][fi] = closed_form_se(truncated, cfg.estimators);
            } else {
                out.se[mi][fi] = closed_form_se(with_fading(truncated, mode), cfg.estimators);
            }
        }
    }
    return out;
}

inline std::vector<DropResult> evaluate_drops(const ExperimentConfig& cfg, int threads) {
    std::vector<DropResult> drops(cfg.drops);
    parallel_for(drops.size(), threads, [&](std::size_t d) { drops[d] = evaluate_drop(cfg, d); });
    return drops;
}

struct Fig1Point {
    int M = 0;
    Estimator estimator = Estimator::mmse;
    FadingMode fading = FadingMode::rician;
    double mean_sum_se = 0.0;
    double std_error = 0.0;
};

struct Fig1Result {
    std::vector<Fig1Point> points;  // ordered by M, then estimator, then fading

    const Fig1Point& at(int M, Estimator e, FadingMode f) const {
        for (const auto& p : points) {
            if (p.M == M && p.estimator == e && p.fading == f) return p;
        }
        throw InvalidArgument("Fig1Result: no such curve point");
    }
};

/// Average per-cell sum SE over drops and cells. The std error is that of the
/// per-drop averages across drops (0 for a single drop).
inline Fig1Result run_fig1(const ExperimentConfig& cfg, int threads = 1) {
    cfg.validate();
    const auto drops = evaluate_drops(cfg, threads);
    const int L = cfg.system.L;
    const int K = cfg.system.K;
    Fig1Result out;
    for (std::size_t mi = 0; mi < cfg.sweep.size(); ++mi) {
        for (std::size_t ei = 0; ei < cfg.estimators.size(); ++ei) {
            for (std::size_t fi = 0; fi < cfg.fading.size(); ++fi) {
                std::vector<double> per_drop;
                for (const auto& d : drops) {
                    const auto& se = d.se[mi][fi][ei];
                    double total = 0.0;
                    for (int l = 0; l < L; ++l) {
                        double cell = 0.0;
                        for (int k = 0; k < K; ++k) cell += se[l * K + k];
                        total += cell;
                    }
                    per_drop.push_back(total / L);
                }
                const double n = static_cast<double>(per_drop.size());
                const double mean = std::accumulate(per_drop.begin(), per_drop.end(), 0.0) / n;
                double ss = 0.0;
                for (const double x : per_drop) ss += (x - mean) * (x - mean);
                const double se = per_drop.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
                out.points.push_back({cfg.sweep[mi], cfg.estimators[ei], cfg.fading[fi], mean, se});
            }
        }
    }
    return out;
}

inline void write_fig1_csv(const Fig1Result& r, std::ostream& os) {
    char buf[256];
    os << "M,estimator,fading,mean_sum_se,std_error\n";
    for (const auto& p : r.points) {
        std::snprintf(buf, sizeof buf, "%d,%s,%s,%.10g,%.10g\n", p.M, to_string(p.estimator), to_string(p.fading),
                      p.mean_sum_se, p.std_error);
        os << buf;
    }
}

struct CdfCurve {
    Estimator estimator = Estimator::mmse;
    FadingMode fading = FadingMode::rician;
    std::vector<double> se_sorted;

    /// Empirical quantile (lower order statistic at ceil(q n)).
    double quantile(double q) const {
        const auto n = se_sorted.size();
        auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        idx = std::clamp<std::size_t>(idx, 1, n);
        return se_sorted[idx - 1];
    }
};

struct Fig2Result {
    int M = 0;
    std::vector<CdfCurve> curves;  // ordered by estimator, then fading

    const CdfCurve& curve(Estimator e, FadingMode f) const {
        for (const auto& c : curves) {
            if (c.estimator == e && c.fading == f) return c;
        }
        throw InvalidArgument("Fig2Result: no such curve");
    }
};

/// Per-UE SE pooled over all drops and cells at the (single) swept M.
inline Fig2Result run_fig2(const ExperimentConfig& cfg_in, int threads = 1) {
    ExperimentConfig cfg = cfg_in;
    cfg.sweep = {cfg_in.max_antennas()};
    cfg.validate();
    const auto drops = evaluate_drops(cfg, threads);
    Fig2Result out;
    out.M = cfg.sweep.front();
    for (std::size_t ei = 0; ei < cfg.estimators.size(); ++ei) {
        for (std::size_t fi = 0; fi < cfg.fading.size(); ++fi) {
            CdfCurve c;
            c.estimator = cfg.estimators[ei];
            c.fading = cfg.fading[fi];
            for (const auto& d : drops) {
                const auto& se = d.se[0][fi][ei];
                c.se_sorted.insert(c.se_sorted.end(), se.begin(), se.end());
            }
            std::sort(c.se_sorted.begin(), c.se_sorted.end());
            out.curves.push_back(std::move(c));
        }
    }
    return out;
}

inline void write_fig2_csv(const Fig2Result& r, std::ostream& os) {
    char buf[256];
    os << "estimator,fading,se,cdf\n";
    for (const auto& c : r.curves) {
        const auto n = c.se_sorted.size();
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%.10g\n", to_string(c.estimator), to_string(c.fading),
                          c.se_sorted[i], static_cast<double>(i + 1) / static_cast<double>(n));
            os << buf;
        }
    }
}

struct ValidateRow {
    int drop = 0;
    int M = 0;
    FadingMode fading = FadingMode::rician;
    ValidationRow result;
};

struct ValidateResult {
    std::vector<ValidateRow> rows;
    std::vector<std::string> warnings;

    bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const ValidateRow& r) { return r.result.pass; });
    }
    double max_rel_error() const {
        double m = 0.0;
        for (const auto& r : rows) m = std::max(m, r.result.rel_error);
        return m;
    }
};

/// Closed form vs Monte Carlo for every drop, antenna count, fading mode and UE.
inline ValidateResult run_validate(const ExperimentConfig& cfg, int threads = 1) {
    cfg.validate();
    ValidateResult out;
    if (cfg.mc.n_realizations < 1000) {
        out.warnings.push_back("only " + std::to_string(cfg.mc.n_realizations) +
                               " Monte Carlo trials; standard errors are unreliable");
    }
    SystemConfig sys = cfg.system;
    sys.M = cfg.max_antennas();
    NetworkOptions opts;
    opts.assignment = cfg.assignment;
    for (int d = 0; d < cfg.drops; ++d) {
        const NetworkRealization base = realize_network(sys, cfg.seed, static_cast<std::uint64_t>(d), opts);
        for (const int M : cfg.sweep) {
            for (const FadingMode f : cfg.fading) {
                const auto net = truncate_antennas(with_fading(base, f), M);
                McConfig mc = cfg.mc;
                mc.seed = cfg.seed;
                mc.drop = static_cast<std::uint64_t>(d);
                mc.threads = threads;
                const auto report = validate(net, cfg.estimators, mc);
                for (const auto& row : report.rows) {
                    out.rows.push_back({d, M, f, row});
                }
            }
        }
    }
    return out;
}

inline void write_validate_csv(const ValidateResult& r, std::ostream& os) {
    char buf[512];
    os << "drop,M,fading,estimator,cell,ue,closed_sinr,mc_sinr,mc_std_error,rel_error,pass\n";
    for (const auto& row : r.rows) {
        const auto& v = row.result;
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%s,%d,%d,%.10g,%.10g,%.10g,%.10g,%d\n", row.drop, row.M,
                      to_string(row.fading), to_string(v.estimator), v.bs, v.ue, v.closed_sinr, v.mc_sinr,
                      v.mc_std_error, v.rel_error, v.pass ? 1 : 0);
        os << buf;
    }
}

enum class PlotKind { fig1, fig2 };

/// gnuplot script rendering a fig1/fig2 CSV to `<csv>.png`.
inline std::string plot_script(const std::string& csv_path, PlotKind kind) {
    std::ostringstream os;
    os << "# generated by ricmimo\n";
    os << "set datafile separator ','\n";
    os << "set terminal pngcairo size 900,650\n";
    os << "set output '" << csv_path << ".png'\n";
    os << "set grid\n";
    const char* est[] = {"mmse", "ls"};
    const char* fad[] = {"rician", "rayleigh"};
    if (kind == PlotKind::fig1) {
        os << "set key left top\n";
        os << "set xlabel 'Number of BS antennas (M)'\n";
        os << "set ylabel 'Average UL sum SE [bit/s/Hz/cell]'\n";
        os << "plot \\\n";
        for (int e = 0; e < 2; ++e) {
            for (int f = 0; f < 2; ++f) {
                os << "  '" << csv_path << "' every ::1 using 1:((strcol(2) eq '" << est[e] << "' && strcol(3) eq '"
                   << fad[f] << "') ? $4 : 1/0) with linespoints title '" << est[e] << ", " << fad[f] << "'"
                   << (e == 1 && f == 1 ? "\n" : ", \\\n");
            }
        }
    } else {
        os << "set key right bottom\n";
        os << "set xlabel 'UL SE per UE [bit/s/Hz]'\n";
        os << "set ylabel 'CDF'\n";
        os << "set yrange [0:1]\n";
        os << "plot \\\n";
        for (int e = 0; e < 2; ++e) {
            for (int f = 0; f < 2; ++f) {
                os << "  '" << csv_path << "' every ::1 using ((strcol(1) eq '" << est[e] << "' && strcol(2) eq '"
                   << fad[f] << "') ? $3 : 1/0):4 with lines title '" << est[e] << ", " << fad[f] << "'"
                   << (e == 1 && f == 1 ? "\n" : ", \\\n");
            }
        }
    }
    return os.str();
}

/// Writes the plot script next to the CSV (`<csv>.gp`) and returns its path.
inline std::string emit_plot_script(const std::string& csv_path, PlotKind kind) {
    const std::string path = csv_path + ".gp";
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::ios_base::failure("cannot write plot script '" + path + "'");
    }
    os << plot_script(csv_path, kind);
    if (!os) {
        throw std::ios_base::failure("error writing plot script '" + path + "'");
    }
    return path;
}

}  // namespace ricmimo

#endif  // RICMIMO_EXPERIMENTS_HPP
