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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. `acceptance AC3 AC5` runs a subset.

#include <ricmimo/ricmimo.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "oracles.hpp"

using namespace ricmimo;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

int worker_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

LinkStats make_link(const CVector& mean, const CMatrix& cov) {
    LinkStats l;
    l.mean = mean;
    l.cov = cov;
    return l;
}

// Scalar analytic case: M = K = L = tau_p = 1, beta = p = sigma2 = 1, no LoS.
Outcome ac1() {
    const LinkStats l = make_link(CVector::Zero(1), CMatrix::Identity(1, 1));
    const PilotGroupStats g({{0, &l, 1.0}}, 1, 1.0);
    const std::vector<LinkStats> links{l};
    const std::vector<double> p{1.0};
    const MmseTarget t(g, 0);
    const auto bm = sinr_mmse(t, links, p, 0.95);
    const auto lm = ls_moments(g, 0);
    const auto lc = ls_cross_moment(g, 0, l, 1.0, true);
    const auto bl = sinr_ls(g, 0, links, p, 0.95);
    const double tol = 1e-12;
    const bool ok = std::abs(bm.sinr - 0.25) <= tol && std::abs(bl.sinr - 0.25) <= tol && std::abs(t.q() - 0.5) <= tol &&
                    std::abs(lm.eta - Complex(1.0)) <= tol && std::abs(lm.mu - 2.0) <= tol &&
                    std::abs(lc.chi() - 3.0) <= tol;
    return {ok, fmt("gamma_mmse=%.17g gamma_ls=%.17g q=%.17g eta=%.17g mu=%.17g chi=%.17g", bm.sinr, bl.sinr, t.q(),
                    lm.eta.real(), lm.mu, lc.chi())};
}

// Pure LoS, single UE: gamma = p ||hbar||^2 / sigma2, linear in M.
Outcome ac2() {
    bool ok = true;
    std::string d;
    const double p = 10.0, s2 = 3.981071705534973e-10;
    const double beta_los = db_to_linear(pathloss_los(120.0, 0.0));
    double per_antenna = 0.0;
    for (const int M : {1, 4, 64}) {
        const LinkStats l = make_link(std::sqrt(beta_los) * ula_steering(0.37, M), CMatrix::Zero(M, M));
        const PilotGroupStats g({{0, &l, p}}, 10, s2);
        const std::vector<LinkStats> links{l};
        const std::vector<double> pw{p};
        const double got = sinr_mmse(MmseTarget(g, 0), links, pw, 0.95).sinr;
        const double want = p * l.mean.squaredNorm() / s2;
        const double e = rel(got, want);
        ok = ok && e <= 1e-12;
        if (M == 1) per_antenna = got;
        const double lin = rel(got / M, per_antenna);
        ok = ok && lin <= 1e-12;
        d += fmt("M=%d rel_err=%.2e linearity_err=%.2e; ", M, e, lin);
    }
    return {ok, d};
}

// Normalized vs raw assembly over 1000 random small configurations.
Outcome ac3() {
    std::mt19937_64 gen(20260101);
    double worst = 0.0, worst_oracle = 0.0;
    long checks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        oracle::SyntheticOptions o;
        o.M = std::uniform_int_distribution<int>(1, 8)(gen);
        o.L = std::uniform_int_distribution<int>(1, 4)(gen);
        o.K = std::uniform_int_distribution<int>(1, 2)(gen);
        o.tau_p = std::uniform_int_distribution<int>(o.K, 3)(gen);
        o.p = std::uniform_real_distribution<double>(0.2, 5.0)(gen);
        o.sigma2 = std::uniform_real_distribution<double>(0.05, 2.0)(gen);
        o.means = std::bernoulli_distribution(0.75)(gen);
        const auto net = oracle::synthetic_network(o, gen);
        const auto powers = net.powers();
        for (int u = 0; u < net.num_ues(); ++u) {
            const int j = net.serving[u];
            const auto links = net.links_at(j);
            const auto g = make_pilot_group(net, j, u);
            const auto bm = sinr_mmse(MmseTarget(g, u), links, powers, 1.0);
            const auto bl = sinr_ls(g, u, links, powers, 1.0);
            worst = std::max({worst, rel(bm.sinr_raw, bm.sinr), rel(bl.sinr_raw, bl.sinr)});
            const auto og = oracle::make_group(links, powers, net.copilots[u], o.tau_p, o.sigma2);
            worst_oracle = std::max({worst_oracle, rel(bm.sinr, oracle::sinr_mmse(links, powers, og, o.tau_p, o.sigma2, u)),
                                     rel(bl.sinr, oracle::sinr_ls(links, powers, og, o.tau_p, o.sigma2, u))});
            checks += 2;
        }
    }
    return {worst <= 1e-10, fmt("%ld SINRs, max normalized-vs-raw rel diff %.2e (independent moment oracle: %.2e)", checks,
                                worst, worst_oracle)};
}

// Monte Carlo agreement on the 4-cell toy, both estimators and fading modes.
Outcome ac4() {
    const auto cfg = preset_config(Preset::validate);
    const auto r = run_validate(cfg, worker_threads());
    int fails = 0;
    double worst_z = 0.0;
    for (const auto& row : r.rows) {
        const auto& v = row.result;
        const double z = std::abs(v.mc_sinr - v.closed_sinr) / v.mc_std_error;
        worst_z = std::max(worst_z, z);
        if (!(z <= 5.0 && v.rel_error <= 0.03)) ++fails;
    }
    std::set<std::string> combos;
    for (const auto& row : r.rows) combos.insert(std::string(to_string(row.result.estimator)) + to_string(row.fading));
    const bool ok = fails == 0 && combos.size() == 4 && r.rows.size() == 64;
    return {ok, fmt("%zu comparisons (N=%lld), %d outside bounds, max |z|=%.2f, max rel err=%.3f%%", r.rows.size(),
                    static_cast<long long>(cfg.mc.n_realizations), fails, worst_z, 100 * r.max_rel_error())};
}

// Estimator statistics by sampling, on two cells sharing a pilot.
Outcome ac5() {
    SystemConfig sys;
    sys.M = 4;
    sys.tau_p = 1;
    sys.K = 1;
    // BS 0 sees its own UE at 90 m and the neighbour's copilot UE at 310 m.
    const LinkStats own = build_link_stats(sys, {90.0, 0.6, 0.3});
    const LinkStats other = build_link_stats(sys, {310.0, -1.9, 0.8});
    const PilotGroupStats g({{0, &own, sys.p}, {1, &other, sys.p}}, sys.tau_p, sys.sigma2_ul);
    const std::int64_t n = 100000;
    double worst = 0.0;
    std::string d;
    for (const int ue : {0, 1}) {
        const auto draws = oracle::draw_pilot_phase(g, ue, n, 7 + ue);
        const auto ms = mmse_estimate_stats(g, ue);
        const auto ls = ls_estimate_stats(g, ue);
        const double zm = oracle::max_z(oracle::sample_moments(draws.mmse), ms.mean, ms.cov);
        const double zl = oracle::max_z(oracle::sample_moments(draws.ls), ls.mean, ls.cov);
        worst = std::max({worst, zm, zl});
        d += fmt("ue%d: max|z| mmse=%.2f ls=%.2f; ", ue, zm, zl);
    }
    return {worst <= 5.0, d + fmt("N=%lld", static_cast<long long>(n))};
}

// Figure-1 properties on the full setup.
Outcome ac6() {
    const auto cfg = preset_config(Preset::paper_fig1);
    const auto r = run_fig1(cfg, worker_threads());
    bool a = true, b = true;
    for (const int M : cfg.sweep) {
        for (const FadingMode f : {FadingMode::rician, FadingMode::rayleigh}) {
            a = a && r.at(M, Estimator::mmse, f).mean_sum_se >= r.at(M, Estimator::ls, f).mean_sum_se;
        }
        for (const Estimator e : {Estimator::mmse, Estimator::ls}) {
            b = b && r.at(M, e, FadingMode::rician).mean_sum_se >= r.at(M, e, FadingMode::rayleigh).mean_sum_se;
        }
    }
    auto gap = [&](int M) {
        return r.at(M, Estimator::mmse, FadingMode::rician).mean_sum_se - r.at(M, Estimator::ls, FadingMode::rician).mean_sum_se;
    };
    const bool c = gap(100) > gap(10);
    const auto& top = r.at(100, Estimator::mmse, FadingMode::rician);
    return {a && b && c,
            fmt("%d drops; (a) mmse>=ls %s (b) rician>=rayleigh %s (c) rician gap M=10 %.3f -> M=100 %.3f %s; "
                "M=100 mmse/rician %.2f+-%.2f, ls/rician %.2f, mmse/rayleigh %.2f, ls/rayleigh %.2f",
                cfg.drops, a ? "ok" : "VIOLATED", b ? "ok" : "VIOLATED", gap(10), gap(100), c ? "ok" : "VIOLATED",
                top.mean_sum_se, top.std_error, r.at(100, Estimator::ls, FadingMode::rician).mean_sum_se,
                r.at(100, Estimator::mmse, FadingMode::rayleigh).mean_sum_se,
                r.at(100, Estimator::ls, FadingMode::rayleigh).mean_sum_se)};
}

// Figure-2 properties at M = 100.
Outcome ac7() {
    const auto cfg = preset_config(Preset::paper_fig2);
    const auto r = run_fig2(cfg, worker_threads());
    bool right = true;
    for (const Estimator e : {Estimator::mmse, Estimator::ls}) {
        for (int q = 1; q <= 9; ++q) {
            right = right && r.curve(e, FadingMode::rician).quantile(q / 10.0) > r.curve(e, FadingMode::rayleigh).quantile(q / 10.0);
        }
    }
    bool weak = true;
    std::string d;
    for (const FadingMode f : {FadingMode::rician, FadingMode::rayleigh}) {
        const auto mmse = [&](double q) { return r.curve(Estimator::mmse, f).quantile(q); };
        const auto ls = [&](double q) { return r.curve(Estimator::ls, f).quantile(q); };
        // relative gain of MMSE over LS; the absolute difference is reported only
        weak = weak && mmse(0.1) / ls(0.1) > mmse(0.9) / ls(0.9);
        d += fmt("%s mmse/ls q0.1=%.3f q0.9=%.3f (abs gap %.3f, %.3f); ", to_string(f), mmse(0.1) / ls(0.1),
                 mmse(0.9) / ls(0.9), mmse(0.1) - ls(0.1), mmse(0.9) - ls(0.9));
    }
    return {right && weak, fmt("%d drops, %zu UEs per curve; rician right of rayleigh at deciles: %s; ", cfg.drops,
                               r.curves.front().se_sorted.size(), right ? "ok" : "VIOLATED") + d};
}

// Byte-identical CSV across reruns and thread counts.
Outcome ac8() {
    auto f1 = preset_config(Preset::paper_fig1);
    f1.sweep = {10, 40};
    f1.drops = 4;
    auto f2 = preset_config(Preset::paper_fig2);
    f2.sweep = {20};
    f2.drops = 4;
    auto va = preset_config(Preset::validate);
    va.sweep = {8};
    va.mc.n_realizations = 4000;
    const auto csv = [&](int which, int threads) {
        std::ostringstream os;
        if (which == 0) write_fig1_csv(run_fig1(f1, threads), os);
        if (which == 1) write_fig2_csv(run_fig2(f2, threads), os);
        if (which == 2) write_validate_csv(run_validate(va, threads), os);
        return os.str();
    };
    bool ok = true;
    std::string d;
    const char* names[] = {"fig1", "fig2", "validate"};
    for (int w = 0; w < 3; ++w) {
        const auto ref = csv(w, 1);
        const bool same = !ref.empty() && ref == csv(w, 1) && ref == csv(w, 2) && ref == csv(w, 5);
        ok = ok && same;
        d += fmt("%s %s (%zu bytes); ", names[w], same ? "identical" : "DIFFERS", ref.size());
    }
    return {ok, d + "threads 1,1,2,5"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5}, {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}};
    std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && !only.count(name)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %s [%.1fs] %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
