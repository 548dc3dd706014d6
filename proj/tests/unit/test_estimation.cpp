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

#include <ricmimo/estimation.hpp>
#include <ricmimo/monte_carlo.hpp>

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace ricmimo;

namespace {

LinkStats make_link(const CVector& mean, const CMatrix& cov) {
    LinkStats l;
    l.mean = mean;
    l.cov = cov;
    return l;
}

// Two copilot UEs seen from one BS plus a third, non-contaminating link.
struct Contaminated {
    LinkStats a, b;
    Contaminated(int M, std::uint64_t seed) {
        std::mt19937_64 gen(seed);
        a = make_link(oracle::random_vector(M, 0.6, gen), oracle::random_psd(M, M, 1.0, gen));
        b = make_link(oracle::random_vector(M, 0.4, gen), oracle::random_psd(M, M - 1, 0.5, gen));
    }
    PilotGroupStats group(int tau_p = 2, double sigma2 = 0.3) const {
        return PilotGroupStats({{0, &a, 1.3}, {5, &b, 0.7}}, tau_p, sigma2);
    }
};

}  // namespace

TEST(PilotGroup, SingleUePsiIsHalf) {
    const LinkStats l = make_link(CVector::Zero(3), CMatrix::Identity(3, 3));
    const PilotGroupStats g({{0, &l, 1.0}}, 1, 1.0);
    EXPECT_LT((g.psi() - 0.5 * CMatrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(PilotGroup, TwoCopilotsPsiIsThird) {
    const LinkStats l = make_link(CVector::Zero(2), 0.5 * CMatrix::Identity(2, 2));
    const PilotGroupStats g({{0, &l, 1.0}, {1, &l, 1.0}}, 2, 1.0);  // p tau_p R = I each
    EXPECT_LT((g.psi() - CMatrix::Identity(2, 2) / 3.0).norm(), 1e-15);
}

TEST(PilotGroup, SolveMatchesMultiply) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Contaminated c(6, s);
        const auto g = c.group();
        const CMatrix I = CMatrix::Identity(6, 6);
        EXPECT_LT((g.psi() * g.psi_inv() - I).norm(), 1e-10);
        std::mt19937_64 gen(s);
        const CVector x = oracle::random_vector(6, 1.0, gen);
        EXPECT_LT((g.psi_inv() * g.apply_psi(x) - x).norm(), 1e-10 * x.norm());
    }
}

TEST(PilotGroup, RejectsBadInput) {
    const LinkStats l = make_link(CVector::Zero(2), CMatrix::Identity(2, 2));
    EXPECT_THROW(PilotGroupStats({}, 1, 1.0), InvalidArgument);
    EXPECT_THROW(PilotGroupStats({{0, &l, 1.0}}, 0, 1.0), InvalidArgument);
    EXPECT_THROW(PilotGroupStats({{0, &l, 1.0}}, 1, 0.0), InvalidArgument);
    const PilotGroupStats g({{0, &l, 1.0}}, 1, 1.0);
    EXPECT_THROW(g.member(3), InvalidArgument);
    EXPECT_THROW(mmse_estimate(g, 0, CVector::Zero(3)), InvalidArgument);
}

TEST(ProcessedPilot, NoiselessSingleUe) {
    std::mt19937_64 gen(1);
    const LinkStats l = make_link(CVector::Zero(3), CMatrix::Identity(3, 3));
    const PilotGroupStats g({{0, &l, 2.0}}, 4, 1.0);
    const CVector h = oracle::random_vector(3, 1.0, gen);
    const std::vector<CVector> hs{h};
    EXPECT_LT((processed_pilot(g, hs, CVector::Zero(3)) - std::sqrt(2.0) * 4.0 * h).norm(), 1e-14);
    EXPECT_THROW(processed_pilot(g, std::vector<CVector>{}, CVector::Zero(3)), InvalidArgument);
    EXPECT_THROW(processed_pilot(g, hs, CVector::Zero(2)), InvalidArgument);
}

TEST(ProcessedPilot, SampleMomentsMatchPilotStatistics) {
    const Contaminated c(3, 11);
    const auto g = c.group();
    const auto d = oracle::draw_pilot_phase(g, 0, 100000, 3);
    const auto s = oracle::sample_moments(d.y);
    EXPECT_LT(oracle::max_z(s, g.y_bar(), g.tau_p() * g.psi_inv()), 5.0);
}

TEST(Mmse, ZeroCovarianceReturnsMean) {
    std::mt19937_64 gen(2);
    const LinkStats l = make_link(oracle::random_vector(4, 1.0, gen), CMatrix::Zero(4, 4));
    const PilotGroupStats g({{0, &l, 1.0}}, 1, 1.0);
    const CVector y = oracle::random_vector(4, 5.0, gen);
    EXPECT_LT((mmse_estimate(g, 0, y) - l.mean).norm(), 1e-15);
}

TEST(Mmse, PerfectRecoveryWithoutNoise) {
    std::mt19937_64 gen(3);
    const LinkStats l = make_link(oracle::random_vector(4, 1.0, gen), oracle::random_psd(4, 4, 1.0, gen));
    const double sigma2 = 1e-12;
    const PilotGroupStats g({{0, &l, 1.0}}, 2, sigma2);
    const CVector h = oracle::random_vector(4, 1.0, gen);
    const std::vector<CVector> hs{h};
    const CVector y = processed_pilot(g, hs, CVector::Zero(4));
    EXPECT_LT((mmse_estimate(g, 0, y) - h).norm(), 1e-6 * h.norm());
    EXPECT_LT(mmse_error_cov(g, 0).mse, 1e-6 * l.cov.trace().real());
    EXPECT_LT((ls_estimate(y, 1.0, 2) - h).norm(), 1e-14 * h.norm());
}

TEST(Mmse, CopilotsShareTheInnovation) {
    const Contaminated c(4, 5);
    const auto g = c.group();
    std::mt19937_64 gen(4);
    const CVector y = oracle::random_vector(4, 2.0, gen);
    const CVector innov = g.apply_psi(y - g.y_bar());
    EXPECT_LT((mmse_estimate(g, 0, y) - c.a.mean - std::sqrt(1.3) * c.a.cov * innov).norm(), 1e-12);
    EXPECT_LT((mmse_estimate(g, 5, y) - c.b.mean - std::sqrt(0.7) * c.b.cov * innov).norm(), 1e-12);
}

TEST(Mmse, ScalarErrorIsHalf) {
    const LinkStats l = make_link(CVector::Zero(1), CMatrix::Identity(1, 1));
    const PilotGroupStats g({{0, &l, 1.0}}, 1, 1.0);
    EXPECT_NEAR(mmse_error_cov(g, 0).C(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(mmse_estimate_cov(g, 0)(0, 0).real(), 0.5, 1e-15);
}

TEST(Mmse, ErrorCovarianceProperties) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Contaminated c(5, s + 100);
        const auto g = c.group();
        const auto e = mmse_error_cov(g, 0);
        const auto st = mmse_estimate_stats(g, 0);
        EXPECT_LT(hermitian_residue(e.C), 1e-12);
        EXPECT_LE(e.mse, c.a.cov.trace().real() + 1e-12);
        EXPECT_LT((st.cov + st.error_cov - c.a.cov).norm(), 1e-13 * c.a.cov.norm());
        // LS never has smaller MSE
        EXPECT_GE(ls_estimate_stats(g, 0).error_cov.trace().real() + 1e-12, e.mse);
        EXPECT_GE(ls_estimate_stats(g, 5).error_cov.trace().real() + 1e-12, mmse_error_cov(g, 5).mse);
    }
}

TEST(Mmse, SampleMomentsAndOrthogonality) {
    const Contaminated c(3, 21);
    const auto g = c.group();
    const auto d = oracle::draw_pilot_phase(g, 0, 100000, 9);
    const auto st = mmse_estimate_stats(g, 0);
    EXPECT_LT(oracle::max_z(oracle::sample_moments(d.mmse), st.mean, st.cov), 5.0);
    const CMatrix err = d.h - d.mmse;
    EXPECT_LT(oracle::max_z(oracle::sample_moments(err), st.error_mean, st.error_cov), 5.0);
    // estimate and error are uncorrelated
    EXPECT_LT(oracle::max_z_cov(oracle::sample_cross_moments(d.mmse, err), CMatrix::Zero(3, 3)), 5.0);
}

TEST(Mmse, CopilotEstimatesCorrelate) {
    const Contaminated c(3, 22);
    const auto g = c.group();
    const auto d0 = oracle::draw_pilot_phase(g, 0, 100000, 10);
    const auto d5 = oracle::draw_pilot_phase(g, 5, 100000, 10);  // same seed, same draws
    ASSERT_TRUE(d0.y == d5.y);
    const CMatrix want = std::sqrt(1.3 * 0.7) * g.tau_p() * c.a.cov * g.psi() * c.b.cov;
    EXPECT_LT(oracle::max_z_cov(oracle::sample_cross_moments(d0.mmse, d5.mmse), want), 5.0);
}

TEST(Ls, UncontaminatedMeanIsChannelMean) {
    std::mt19937_64 gen(5);
    const LinkStats l = make_link(oracle::random_vector(3, 1.0, gen), oracle::random_psd(3, 3, 1.0, gen));
    const PilotGroupStats g({{0, &l, 2.0}}, 3, 0.5);
    const auto st = ls_estimate_stats(g, 0);
    EXPECT_LT((st.mean - l.mean).norm(), 1e-14);
    EXPECT_LT(st.error_mean.norm(), 1e-14);
}

TEST(Ls, LinearInObservation) {
    std::mt19937_64 gen(6);
    const CVector y1 = oracle::random_vector(5, 1.0, gen), y2 = oracle::random_vector(5, 1.0, gen);
    const Complex a(0.3, -1.2);
    EXPECT_LT((ls_estimate(a * y1 + y2, 2.0, 3) - a * ls_estimate(y1, 2.0, 3) - ls_estimate(y2, 2.0, 3)).norm(), 1e-14);
}

TEST(Ls, SampleMoments) {
    const Contaminated c(3, 23);
    const auto g = c.group();
    const auto d = oracle::draw_pilot_phase(g, 0, 100000, 12);
    const auto st = ls_estimate_stats(g, 0);
    EXPECT_LT(oracle::max_z(oracle::sample_moments(d.ls), st.mean, st.cov), 5.0);
    EXPECT_LT(oracle::max_z(oracle::sample_moments(d.h - d.ls), st.error_mean, st.error_cov), 5.0);
}

TEST(Group, FromRealization) {
    SystemConfig cfg;
    cfg.L = 4;
    cfg.K = 2;
    cfg.tau_p = 2;
    cfg.M = 4;
    const auto net = realize_network(cfg, 1, 0);
    const auto g = make_pilot_group(net, 1, 3);
    EXPECT_EQ(g.members().size(), net.copilots[3].size());
    for (const auto& m : g.members()) {
        EXPECT_EQ(net.pilots[m.ue], net.pilots[3]);
        EXPECT_EQ(m.link, &net.link(1, m.ue));
    }
}
