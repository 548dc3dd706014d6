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

#ifndef RICMIMO_MONTE_CARLO_HPP
#define RICMIMO_MONTE_CARLO_HPP

#include "ricmimo/parallel.hpp"
#include "ricmimo/se_closed_form.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace ricmimo {

/// Draws from CN(mean, cov) as mean + F z with F F^H = cov. F comes from an
/// eigendecomposition with negative eigenvalues clipped to zero, so rank
/// deficient covariances are fine. Only columns with positive eigenvalues are kept.
class GaussianSampler {
  public:
    GaussianSampler(CVector mean, const CMatrix& cov) : mean_(std::move(mean)) {
        const auto M = mean_.size();
        if (cov.rows() != M || cov.cols() != M) {
            throw InvalidArgument("GaussianSampler: covariance dimension mismatch");
        }
        if (hermitian_residue(cov) > 1e-12) {
            throw InvalidArgument("GaussianSampler: covariance is not Hermitian");
        }
        if (M == 0 || cov.cwiseAbs().maxCoeff() == 0.0) {
            factor_.resize(M, 0);
            return;
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(cov);
        if (eig.info() != Eigen::Success) {
            throw InvalidArgument("GaussianSampler: eigendecomposition failed");
        }
        const double trace = cov.trace().real();
        const auto& lambda = eig.eigenvalues();
        if (lambda.minCoeff() < -1e-9 * std::abs(trace) / static_cast<double>(M)) {
            throw InvalidArgument("GaussianSampler: covariance has a significantly negative eigenvalue");
        }
        // eigenvalues at roundoff level carry no power and only add noise to the factor
        const double floor = 16.0 * static_cast<double>(M) * std::numeric_limits<double>::epsilon() * lambda.maxCoeff();
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
            if (lambda[i] > floor) keep.push_back(i);
        }
        factor_.resize(M, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c) {
            factor_.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(keep[c]) * std::sqrt(lambda[keep[c]]);
        }
    }

    explicit GaussianSampler(const LinkStats& link) : GaussianSampler(link.mean, link.cov) {}

    int dimension() const { return static_cast<int>(mean_.size()); }
    const CMatrix& factor() const { return factor_; }

    /// Writes one draw into `out`; `z` is scratch of size rank().
    void sample_into(RandomStream& rng, CVector& z, Eigen::Ref<CVector> out) const {
        z.resize(factor_.cols());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            z[i] = rng.complex_normal(1.0);
        }
        out = mean_;
        if (z.size() > 0) {
            out.noalias() += factor_ * z;
        }
    }

    CVector sample(RandomStream& rng) const {
        CVector out(mean_.size());
        CVector z;
        sample_into(rng, z, out);
        return out;
    }

  private:
    CVector mean_;
    CMatrix factor_;
};

inline CVector sample_cn(const CVector& mean, const CMatrix& cov, RandomStream& rng) {
    return GaussianSampler(mean, cov).sample(rng);
}

struct McConfig {
    std::int64_t n_realizations = 100000;
    std::uint64_t seed = 1;
    std::uint64_t drop = 0;
    int threads = 1;        // speed only
    int chunk_size = 1024;  // fixes the summation order; part of the reproducibility contract
};

/// Sample moments of the combiner for one target UE, with standard errors.
struct McMoments {
    int ue = 0;
    Estimator combiner = Estimator::mmse;
    std::int64_t n = 0;
    Complex mean_vh;                         // E{v^H h_jk}
    double mean_vh_se = 0.0;
    std::vector<double> second_moments;      // E{|v^H h_u|^2} for every UE u
    std::vector<double> second_moments_se;
    double norm2 = 0.0;                      // E{||v||^2}
    double norm2_se = 0.0;
    double target_power = 0.0;
    double sigma2 = 0.0;
    // Per-trial observation (Re v^H h_jk, Im v^H h_jk, sum_u p_u |v^H h_u|^2, ||v||^2):
    Eigen::Vector4d obs_mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d obs_cov = Eigen::Matrix4d::Zero();  // sample covariance of one trial
};

struct McSinr {
    double sinr = 0.0;
    double std_error = 0.0;  // delta method
};

/// Plugs sample moments into the UatF SINR and propagates their joint sampling
/// covariance through the gradient.
inline McSinr mc_sinr(const McMoments& m) {
    const double a = m.obs_mean[0];
    const double b = m.obs_mean[1];
    const double p = m.target_power;
    const double S = p * (a * a + b * b);
    const double D = m.obs_mean[2] - S + m.sigma2 * m.obs_mean[3];
    McSinr out;
    if (S == 0.0) {
        return out;
    }
    if (!(D > 0.0)) {
        throw InternalError("mc_sinr: non-positive denominator");
    }
    out.sinr = S / D;
    if (m.n < 2) {
        out.std_error = std::numeric_limits<double>::infinity();
        return out;
    }
    Eigen::Vector4d g;
    g[0] = 2.0 * p * a * (D + S) / (D * D);
    g[1] = 2.0 * p * b * (D + S) / (D * D);
    g[2] = -S / (D * D);
    g[3] = -m.sigma2 * S / (D * D);
    const double var = g.dot(m.obs_cov * g) / static_cast<double>(m.n);
    out.std_error = std::sqrt(std::max(var, 0.0));
    return out;
}

namespace detail {

struct McAccumulator {
    Complex sum_vh;
    double sum_vh_abs2 = 0.0;
    Eigen::VectorXd sum_abs2;
    Eigen::VectorXd sum_abs4;
    double sum_norm2 = 0.0;
    double sum_norm2_sq = 0.0;
    Eigen::Vector4d s1 = Eigen::Vector4d::Zero();
    Eigen::Matrix4d s2 = Eigen::Matrix4d::Zero();

    explicit McAccumulator(int num_ues) : sum_abs2(Eigen::VectorXd::Zero(num_ues)), sum_abs4(Eigen::VectorXd::Zero(num_ues)) {}

    void merge(const McAccumulator& o) {
        sum_vh += o.sum_vh;
        sum_vh_abs2 += o.sum_vh_abs2;
        sum_abs2 += o.sum_abs2;
        sum_abs4 += o.sum_abs4;
        sum_norm2 += o.sum_norm2;
        sum_norm2_sq += o.sum_norm2_sq;
        s1 += o.s1;
        s2 += o.s2;
    }
};

inline double mean_se(double sum, double sum_sq, std::int64_t n) {
    if (n < 2) return std::numeric_limits<double>::infinity();
    const double mean = sum / n;
    const double var = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
    return std::sqrt(var / n);
}

}  // namespace detail

/// Monte Carlo moment estimator for the UEs served by one BS. Every trial
/// draws all channels into the BS and one pilot noise vector per pilot group,
/// then evaluates both MR-MMSE and MR-LS on the same draws. Each trial's
/// randomness comes from substreams keyed by (seed, drop, bs, trial, link), and
/// trials are accumulated in fixed-size chunks merged in order, so the result
/// does not depend on the number of threads.
class BsMonteCarlo {
  public:
    BsMonteCarlo(const NetworkRealization& net, int bs) : net_(&net), bs_(bs), groups_(net, bs) {
        const auto links = net.links_at(bs);
        samplers_.reserve(links.size());
        for (const auto& link : links) {
            samplers_.emplace_back(link);
        }
        for (int pilot = 0; pilot < net.config.tau_p; ++pilot) {
            for (const int u : net.served_by(bs)) {
                if (net.pilots[u] == pilot) {
                    used_pilots_.push_back(pilot);
                    break;
                }
            }
        }
    }

    /// Moments for each target (which must be served by this BS) and each
    /// requested combiner; output order is target-major.
    std::vector<McMoments> run(std::span<const int> targets, std::span<const Estimator> combiners, const McConfig& cfg) const {
        const auto& net = *net_;
        const int U = net.num_ues();
        const int M = net.config.M;
        const int tau_p = net.config.tau_p;
        const double sigma2 = net.config.sigma2_ul;
        const auto powers = net.powers();
        if (cfg.n_realizations < 1) {
            throw InvalidArgument("McConfig: n_realizations must be >= 1");
        }
        for (const int t : targets) {
            if (net.serving.at(t) != bs_) {
                throw InvalidArgument("BsMonteCarlo: target UE is not served by this BS");
            }
        }

        // A = sqrt(p) R Psi = sqrt(p) (Psi R)^H for every target.
        std::vector<CMatrix> mmse_gain(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const auto& group = groups_.for_pilot(net.pilots[targets[i]]);
            const auto& link = net.link(bs_, targets[i]);
            mmse_gain[i] = std::sqrt(powers[targets[i]]) * group.apply_psi(link.cov).adjoint();
        }

        const std::size_t slots = targets.size() * combiners.size();
        const std::int64_t chunk = std::max(cfg.chunk_size, 1);
        const auto n_chunks = static_cast<std::size_t>((cfg.n_realizations + chunk - 1) / chunk);
        std::vector<std::vector<detail::McAccumulator>> partial(n_chunks);

        parallel_for(n_chunks, cfg.threads, [&](std::size_t c) {
            std::vector<detail::McAccumulator> acc(slots, detail::McAccumulator(U));
            CMatrix H(M, U);
            CMatrix Y(M, tau_p);
            CVector z;
            CVector v(M);
            Eigen::VectorXcd d(U);
            const std::int64_t begin = static_cast<std::int64_t>(c) * chunk;
            const std::int64_t end = std::min(begin + chunk, cfg.n_realizations);
            for (std::int64_t trial = begin; trial < end; ++trial) {
                for (int u = 0; u < U; ++u) {
                    auto rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(Purpose::mc_channel), cfg.drop,
                                                      static_cast<std::uint64_t>(bs_), static_cast<std::uint64_t>(trial),
                                                      static_cast<std::uint64_t>(u)});
                    samplers_[u].sample_into(rng, z, H.col(u));
                }
                for (const int pilot : used_pilots_) {
                    auto rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(Purpose::mc_noise), cfg.drop,
                                                      static_cast<std::uint64_t>(bs_), static_cast<std::uint64_t>(trial),
                                                      static_cast<std::uint64_t>(pilot)});
                    auto y = Y.col(pilot);
                    y = draw_pilot_noise(M, tau_p, sigma2, rng);
                    for (const auto& m : groups_.for_pilot(pilot).members()) {
                        y += (std::sqrt(m.power) * tau_p) * H.col(m.ue);
                    }
                }
                for (std::size_t i = 0; i < targets.size(); ++i) {
                    const int k = targets[i];
                    const int pilot = net.pilots[k];
                    const auto& group = groups_.for_pilot(pilot);
                    for (std::size_t ci = 0; ci < combiners.size(); ++ci) {
                        if (combiners[ci] == Estimator::mmse) {
                            v = net.link(bs_, k).mean;
                            v.noalias() += mmse_gain[i] * (Y.col(pilot) - group.y_bar());
                        } else {
                            v = Y.col(pilot) / (std::sqrt(powers[k]) * tau_p);
                        }
                        d.noalias() = H.adjoint() * v;  // conj(v^H h_u)
                        auto& a = acc[i * combiners.size() + ci];
                        const Complex vh = std::conj(d[k]);
                        const double n2 = v.squaredNorm();
                        double weighted = 0.0;
                        for (int u = 0; u < U; ++u) {
                            const double e = std::norm(d[u]);
                            a.sum_abs2[u] += e;
                            a.sum_abs4[u] += e * e;
                            weighted += powers[u] * e;
                        }
                        a.sum_vh += vh;
                        a.sum_vh_abs2 += std::norm(vh);
                        a.sum_norm2 += n2;
                        a.sum_norm2_sq += n2 * n2;
                        const Eigen::Vector4d obs(vh.real(), vh.imag(), weighted, n2);
                        a.s1 += obs;
                        a.s2.noalias() += obs * obs.transpose();
                    }
                }
            }
            partial[c] = std::move(acc);
        });

        std::vector<detail::McAccumulator> total(slots, detail::McAccumulator(U));
        for (const auto& part : partial) {
            for (std::size_t s = 0; s < slots; ++s) {
                total[s].merge(part[s]);
            }
        }

        const std::int64_t n = cfg.n_realizations;
        const double dn = static_cast<double>(n);
        std::vector<McMoments> out;
        out.reserve(slots);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            for (std::size_t ci = 0; ci < combiners.size(); ++ci) {
                const auto& a = total[i * combiners.size() + ci];
                McMoments m;
                m.ue = targets[i];
                m.combiner = combiners[ci];
                m.n = n;
                m.target_power = powers[targets[i]];
                m.sigma2 = sigma2;
                m.mean_vh = a.sum_vh / dn;
                m.mean_vh_se = detail::mean_se(std::abs(a.sum_vh), a.sum_vh_abs2, n);
                m.second_moments.resize(U);
                m.second_moments_se.resize(U);
                for (int u = 0; u < U; ++u) {
                    m.second_moments[u] = a.sum_abs2[u] / dn;
                    m.second_moments_se[u] = detail::mean_se(a.sum_abs2[u], a.sum_abs4[u], n);
                }
                m.norm2 = a.sum_norm2 / dn;
                m.norm2_se = detail::mean_se(a.sum_norm2, a.sum_norm2_sq, n);
                m.obs_mean = a.s1 / dn;
                if (n > 1) {
                    m.obs_cov = (a.s2 - dn * m.obs_mean * m.obs_mean.transpose()) / (dn - 1.0);
                }
                out.push_back(std::move(m));
            }
        }
        return out;
    }

  private:
    const NetworkRealization* net_;
    int bs_;
    BsPilotGroups groups_;
    std::vector<GaussianSampler> samplers_;
    std::vector<int> used_pilots_;
};

/// Monte Carlo moments of one UE at its serving BS.
inline McMoments mc_moments(const NetworkRealization& net, int ue, Estimator combiner, const McConfig& cfg) {
    const BsMonteCarlo engine(net, net.serving.at(ue));
    const int targets[] = {ue};
    const Estimator combiners[] = {combiner};
    return engine.run(targets, combiners, cfg).front();
}

struct ValidationRow {
    int bs = 0;
    int ue = 0;
    Estimator estimator = Estimator::mmse;
    double closed_sinr = 0.0;
    double mc_sinr = 0.0;
    double mc_std_error = 0.0;
    double rel_error = 0.0;
    bool pass = false;  // |mc - closed| <= 5 standard errors
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const ValidationRow& r) { return r.pass; });
    }
};

/// Closed form vs Monte Carlo for every UE and every requested estimator.
/// Both estimators are evaluated on shared channel draws.
inline ValidationReport validate(const NetworkRealization& net, std::span<const Estimator> estimators, const McConfig& cfg) {
    ValidationReport report;
    const auto powers = net.powers();
    const double prelog = net.config.prelog();
    for (int j = 0; j < net.config.L; ++j) {
        const auto served = net.served_by(j);
        if (served.empty()) continue;
        const BsMonteCarlo engine(net, j);
        const auto moments = engine.run(served, estimators, cfg);
        const BsPilotGroups groups(net, j);
        std::size_t idx = 0;
        for (const int u : served) {
            const auto& group = groups.for_pilot(net.pilots[u]);
            for (const Estimator e : estimators) {
                const auto& m = moments[idx++];
                ValidationRow row;
                row.bs = j;
                row.ue = u;
                row.estimator = e;
                row.closed_sinr = e == Estimator::mmse ? sinr_mmse(MmseTarget(group, u), net.links_at(j), powers, prelog).sinr
                                                       : sinr_ls(group, u, net.links_at(j), powers, prelog).sinr;
                const auto mc = mc_sinr(m);
                row.mc_sinr = mc.sinr;
                row.mc_std_error = mc.std_error;
                row.rel_error = std::abs(mc.sinr - row.closed_sinr) / row.closed_sinr;
                row.pass = std::abs(mc.sinr - row.closed_sinr) <= 5.0 * mc.std_error;
                report.rows.push_back(row);
            }
        }
    }
    return report;
}

inline ValidationReport validate(const NetworkRealization& net, Estimator estimator, const McConfig& cfg) {
    const Estimator e[] = {estimator};
    return validate(net, e, cfg);
}

}  // namespace ricmimo

#endif  // RICMIMO_MONTE_CARLO_HPP
