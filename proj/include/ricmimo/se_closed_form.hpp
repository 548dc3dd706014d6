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

#ifndef RICMIMO_SE_CLOSED_FORM_HPP
#define RICMIMO_SE_CLOSED_FORM_HPP

#include "ricmimo/estimation.hpp"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace ricmimo {

enum class Estimator { mmse, ls };

inline const char* to_string(Estimator e) { return e == Estimator::mmse ? "mmse" : "ls"; }

/// (tau_u / tau_c) log2(1 + sinr).
inline double se_from_sinr(double sinr, double prelog) { return prelog * std::log2(1.0 + sinr); }

inline double se_from_sinr(double sinr, const SystemConfig& config) { return se_from_sinr(sinr, config.prelog()); }

/// Use-and-then-forget SINR from raw combiner moments:
///   p |E{v^H h}|^2 / (sum_li p_li E{|v^H h_li|^2} - p |E{v^H h}|^2 + sigma2 E{||v||^2}).
/// `weighted_second_moments` is the full sum over all UEs, target included.
inline double sinr_uatf(double p, Complex mean_vh, double weighted_second_moments, double norm2, double sigma2) {
    const double signal = p * std::norm(mean_vh);
    const double denom = weighted_second_moments - signal + sigma2 * norm2;
    if (!(denom > 0.0)) {
        throw InternalError("sinr_uatf: non-positive denominator " + std::to_string(denom));
    }
    return signal / denom;
}

namespace detail {

// Relative agreement check for the two SINR assembly routes. `conditioning`
// bounds how much cancellation the raw route can suffer.
inline void check_routes(double normalized, double raw, double conditioning, const char* what) {
    const double tol = 1e-10 + 64.0 * std::numeric_limits<double>::epsilon() * conditioning;
    const double ref = std::max(std::abs(normalized), std::numeric_limits<double>::min());
    if (std::abs(normalized - raw) > tol * ref) {
        throw InternalError(std::string(what) + ": normalized and raw SINR routes disagree (" +
                            std::to_string(normalized) + " vs " + std::to_string(raw) + ")");
    }
}

inline double fro(const CMatrix& a) { return a.norm(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// MMSE estimation + MR combining
// ---------------------------------------------------------------------------

/// Everything about the desired UE that the interference terms reuse:
/// psi_r = Psi R, rpr = R Psi R, trace_rpr = tr(R Psi R) and
/// q = p tau_p tr(R Psi R) + ||hbar||^2.
class MmseTarget {
  public:
    MmseTarget(const PilotGroupStats& group, int ue) : group_(&group), ue_(ue) {
        const auto& m = group.member(ue);
        link_ = m.link;
        power_ = m.power;
        const CMatrix& R = link_->cov;
        psi_r_ = group.apply_psi(R);
        rpr_ = R * psi_r_;
        rpr_ = 0.5 * (rpr_ + rpr_.adjoint()).eval();
        trace_rpr_ = checked_real(rpr_.trace(), detail::fro(rpr_) * std::sqrt(static_cast<double>(R.rows())),
                                  "tr(R Psi R)");
        mean_norm2_ = link_->mean.squaredNorm();
        q_ = power_ * group.tau_p() * trace_rpr_ + mean_norm2_;
    }

    const PilotGroupStats& group() const { return *group_; }
    int ue() const { return ue_; }
    const LinkStats& link() const { return *link_; }
    double power() const { return power_; }
    int tau_p() const { return group_->tau_p(); }
    const CMatrix& psi_r() const { return psi_r_; }
    const CMatrix& rpr() const { return rpr_; }
    double trace_rpr() const { return trace_rpr_; }
    double mean_norm2() const { return mean_norm2_; }
    double q() const { return q_; }

  private:
    const PilotGroupStats* group_;
    int ue_;
    const LinkStats* link_;
    double power_;
    CMatrix psi_r_;
    CMatrix rpr_;
    double trace_rpr_;
    double mean_norm2_;
    double q_;
};

struct SignalMoments {
    double mean_vh = 0.0;  // E{v^H h_jk}
    double norm2 = 0.0;    // E{||v||^2}
};

/// Both moments equal p tau_p tr(R Psi R) + ||hbar||^2; they are evaluated
/// along different products and required to agree.
inline SignalMoments mmse_signal_moments(const MmseTarget& t) {
    const CMatrix& R = t.link().cov;
    const double ptp = t.power() * t.tau_p();
    const double scale = detail::fro(R) * detail::fro(t.psi_r()) + t.mean_norm2();
    SignalMoments s;
    s.mean_vh = ptp * checked_real(trace_product_hermitian(R, t.psi_r()), scale, "E{v^H h}") + t.mean_norm2();
    s.norm2 = ptp * t.trace_rpr() + t.mean_norm2();
    if (std::abs(s.mean_vh - s.norm2) > 1e-10 * std::max(std::abs(s.norm2), 1e-300) + 1e-300) {
        throw InternalError("mmse_signal_moments: E{v^H h} and E{||v||^2} disagree");
    }
    return s;
}

inline SignalMoments mmse_signal_moments(const PilotGroupStats& group, int ue) {
    return mmse_signal_moments(MmseTarget(group, ue));
}

/// Term-by-term E{|v^H h_li|^2} for MMSE-based MR at the target's BS.
struct MmseCrossTerms {
    double nlos_trace = 0.0;        // p_jk tau_p tr(R_li R Psi R)
    double interferer_mean = 0.0;   // p_jk tau_p hbar_li^H R Psi R hbar_li
    double target_mean = 0.0;       // hbar_jk^H R_li hbar_jk
    double mean_inner = 0.0;        // |hbar_jk^H hbar_li|^2
    double coherent_trace = 0.0;    // p_jk p_li tau_p^2 |tr(R_li Psi R)|^2, copilots only
    double coherent_mean = 0.0;     // 2 sqrt(p_jk p_li) tau_p Re{tr(R_li Psi R) hbar_li^H hbar_jk}, copilots only
    bool copilot = false;

    double non_coherent() const { return nlos_trace + interferer_mean + target_mean + mean_inner; }
    double coherent() const { return coherent_trace + coherent_mean; }
    double total() const { return non_coherent() + coherent(); }
};

inline MmseCrossTerms mmse_cross_moment(const MmseTarget& t, const LinkStats& interferer, double interferer_power,
                                        bool copilot) {
    const CMatrix& Rli = interferer.cov;
    const CVector& mli = interferer.mean;
    const CVector& mjk = t.link().mean;
    if (Rli.rows() != t.link().cov.rows()) {
        throw InvalidArgument("mmse_cross_moment: antenna count mismatch");
    }
    const double ptp = t.power() * t.tau_p();
    const double fro_rli = detail::fro(Rli);

    MmseCrossTerms c;
    c.copilot = copilot;
    c.nlos_trace = ptp * checked_real(trace_product_hermitian(Rli, t.rpr()), fro_rli * detail::fro(t.rpr()),
                                      "tr(R_li R Psi R)");
    // Rayleigh links carry exactly-zero means; their quadratic forms are skipped.
    const double mli_norm2 = mli.squaredNorm();
    const double mjk_norm2 = t.mean_norm2();
    if (mli_norm2 > 0.0) {
        c.interferer_mean = ptp * checked_real(mli.dot(t.rpr() * mli), mli_norm2 * detail::fro(t.rpr()),
                                               "hbar_li^H R Psi R hbar_li");
    }
    if (mjk_norm2 > 0.0) {
        c.target_mean = checked_real(mjk.dot(Rli * mjk), mjk_norm2 * fro_rli, "hbar_jk^H R_li hbar_jk");
    }
    const Complex inner = mjk.dot(mli);  // hbar_jk^H hbar_li
    c.mean_inner = std::norm(inner);
    if (copilot) {
        const Complex tr = trace_product_hermitian(Rli, t.psi_r());  // tr(R_li Psi R_jk)
        const double s = std::sqrt(t.power() * interferer_power) * t.tau_p();
        c.coherent_trace = s * s * std::norm(tr);
        c.coherent_mean = 2.0 * s * (tr * std::conj(inner)).real();
    }
    return c;
}

/// Closed-form SINR of one UE with MMSE-based MR and its interference terms.
struct SinrBreakdownMmse {
    int ue = 0;
    double signal = 0.0;              // p^2 tau_p tr(R Psi R) + p ||hbar||^2
    std::vector<double> xi;           // non-coherent terms, indexed like the link span
    std::vector<double> gamma_coh;    // coherent terms; zero outside P_jk \ (j,k)
    double nu = 0.0;                  // ||hbar||^4 / q
    double noise = 0.0;
    double denominator = 0.0;
    double sinr = 0.0;
    double sinr_raw = 0.0;            // same quantity assembled from raw moments
    double se = 0.0;
};

/// Assembles the SINR from per-UE cross terms (`terms` and `powers` are indexed
/// by flat UE id and cover every UE's link to the target's serving BS), both
/// in normalized xi/Gamma/nu form and from the raw moments, and requires the
/// two routes to agree.
inline SinrBreakdownMmse assemble_sinr_mmse(const MmseTarget& t, std::span<const MmseCrossTerms> terms,
                                            std::span<const double> powers, double prelog) {
    if (terms.size() != powers.size()) {
        throw InvalidArgument("sinr_mmse: terms and powers differ in length");
    }
    const double p = t.power();
    const double sigma2 = t.group().sigma2();
    const double q = t.q();
    const SignalMoments sm = mmse_signal_moments(t);

    SinrBreakdownMmse out;
    out.ue = t.ue();
    out.xi.assign(terms.size(), 0.0);
    out.gamma_coh.assign(terms.size(), 0.0);
    out.noise = sigma2;
    out.signal = p * p * t.tau_p() * t.trace_rpr() + p * t.mean_norm2();
    out.nu = t.mean_norm2() * t.mean_norm2() / q;

    double sum_xi = 0.0;
    double sum_gamma = 0.0;
    double raw_second = 0.0;
    double raw_abs = 0.0;
    for (std::size_t u = 0; u < terms.size(); ++u) {
        const auto& c = terms[u];
        out.xi[u] = c.non_coherent() / q;
        if (static_cast<int>(u) == t.ue()) {
            // |hbar|^4 / q inside the own term is exactly nu; drop both rather than cancel them numerically
            sum_xi += powers[u] * (c.non_coherent() - c.mean_inner) / q;
        } else {
            sum_xi += powers[u] * out.xi[u];
        }
        if (c.copilot && static_cast<int>(u) != t.ue()) {
            out.gamma_coh[u] = c.coherent() / q;
            sum_gamma += powers[u] * out.gamma_coh[u];
        }
        raw_second += powers[u] * c.total();
        raw_abs += powers[u] * (c.non_coherent() + c.coherent_trace + std::abs(c.coherent_mean));
    }
    out.denominator = sum_xi + sum_gamma + sigma2;
    if (!(out.denominator > 0.0)) {
        throw InternalError("sinr_mmse: non-positive denominator");
    }
    out.sinr = out.signal / out.denominator;
    out.sinr_raw = sinr_uatf(p, sm.mean_vh, raw_second, sm.norm2, sigma2);
    const double raw_denom = raw_second - p * sm.mean_vh * sm.mean_vh + sigma2 * sm.norm2;
    const double conditioning = (raw_abs + p * sm.mean_vh * sm.mean_vh + sigma2 * sm.norm2) / raw_denom;
    detail::check_routes(out.sinr, out.sinr_raw, conditioning, "sinr_mmse");
    out.se = se_from_sinr(out.sinr, prelog);
    return out;
}

/// `links` and `powers` are indexed by flat UE id and hold every UE's link to
/// the target's serving BS; copilot status comes from the target's pilot group.
inline SinrBreakdownMmse sinr_mmse(const MmseTarget& t, std::span<const LinkStats> links, std::span<const double> powers,
                                   double prelog) {
    if (links.size() != powers.size()) {
        throw InvalidArgument("sinr_mmse: links and powers differ in length");
    }
    std::vector<MmseCrossTerms> terms(links.size());
    for (std::size_t u = 0; u < links.size(); ++u) {
        terms[u] = mmse_cross_moment(t, links[u], powers[u], t.group().contains(static_cast<int>(u)));
    }
    return assemble_sinr_mmse(t, terms, powers, prelog);
}

// ---------------------------------------------------------------------------
// LS estimation + MR combining
// ---------------------------------------------------------------------------

struct LsMoments {
    Complex eta;     // E{v^H h_jk}
    double mu = 0;   // E{||v||^2}
};

/// eta = tr(R_jk) + sum_{P_jk} sqrt(p_li / p_jk) hbar_li^H hbar_jk,
/// mu = tr(psi_inv) / (p tau_p) + ||y_bar||^2 / (p tau_p^2).
inline LsMoments ls_moments(const PilotGroupStats& group, int ue) {
    const auto& target = group.member(ue);
    const double p = target.power;
    const double tp = group.tau_p();
    LsMoments out;
    out.eta = target.link->cov.trace();
    for (const auto& m : group.members()) {
        out.eta += std::sqrt(m.power / p) * m.link->mean.dot(target.link->mean);
    }
    const double tr_psi_inv =
        checked_real(group.psi_inv().trace(), detail::fro(group.psi_inv()) * std::sqrt(double(group.antennas())),
                     "tr(psi_inv)");
    out.mu = tr_psi_inv / (p * tp) + group.y_bar().squaredNorm() / (p * tp * tp);
    return out;
}

/// Term-by-term p_jk tau_p^2 E{|v^H h_li|^2} for LS-based MR. The first four
/// terms are present for every interferer (with x_bar in place of y_bar for
/// copilots); the rest only arise when h_li is part of the target's pilot.
struct LsCrossTerms {
    double nlos_trace = 0.0;           // tau_p tr(R_li psi_inv)
    double pilot_mean = 0.0;           // ybar^H R_li ybar        | xbar^H R_li xbar
    double interferer_mean = 0.0;      // tau_p hbar^H psi_inv hbar | tau_p hbar^H Omega^{-1} hbar
    double mean_inner = 0.0;           // |ybar^H hbar|^2         | |xbar^H hbar|^2
    double cross_mean = 0.0;           // 2 sqrt(p_li) tau_p Re{ybar^H hbar tr(R_li) + ybar^H R_li hbar}
    double coherent_trace = 0.0;       // p_li tau_p^2 tr(R_li)^2
    double coherent_mean_power = 0.0;  // p_li tau_p^2 ||hbar||^4
    double coherent_mean_cross = 0.0;  // 2 sqrt(p_li) tau_p Re{xbar^H hbar ||hbar||^2}
    double scale = 1.0;                // p_jk tau_p^2
    bool copilot = false;

    double total_unnormalized() const {
        return nlos_trace + pilot_mean + interferer_mean + mean_inner + cross_mean + coherent_trace +
               coherent_mean_power + coherent_mean_cross;
    }
    double chi() const { return total_unnormalized() / scale; }
};

inline LsCrossTerms ls_cross_moment(const PilotGroupStats& group, int target_ue, const LinkStats& interferer,
                                    double interferer_power, bool copilot) {
    const auto& target = group.member(target_ue);
    const CMatrix& Rli = interferer.cov;
    const CVector& mli = interferer.mean;
    const CVector& ybar = group.y_bar();
    const CMatrix& psi_inv = group.psi_inv();
    if (Rli.rows() != group.antennas()) {
        throw InvalidArgument("ls_cross_moment: antenna count mismatch");
    }
    const double tp = group.tau_p();
    const double fro_rli = detail::fro(Rli);
    const double fro_pi = detail::fro(psi_inv);

    LsCrossTerms c;
    c.copilot = copilot;
    c.scale = target.power * tp * tp;
    c.nlos_trace = tp * checked_real(trace_product_hermitian(Rli, psi_inv), fro_rli * fro_pi, "tr(R_li psi_inv)");

    const double ybar_norm2 = ybar.squaredNorm();
    const double mli_norm2 = mli.squaredNorm();
    if (!copilot) {
        if (ybar_norm2 > 0.0) {
            c.pilot_mean = checked_real(ybar.dot(Rli * ybar), ybar_norm2 * fro_rli, "ybar^H R_li ybar");
        }
        if (mli_norm2 > 0.0) {
            c.interferer_mean = tp * checked_real(mli.dot(psi_inv * mli), mli_norm2 * fro_pi, "hbar^H psi_inv hbar");
        }
        c.mean_inner = std::norm(ybar.dot(mli));
        return c;
    }

    const CVector r_m = Rli * mli;

    const double s = std::sqrt(interferer_power) * tp;
    const CVector xbar = ybar - s * mli;
    // Omega^{-1} = psi_inv - p_li tau_p R_li; only its quadratic form in hbar_li is needed.
    const CVector omega_inv_m = psi_inv * mli - (interferer_power * tp) * r_m;
    const double tr_r = checked_real(Rli.trace(), fro_rli * std::sqrt(double(Rli.rows())), "tr(R_li)");
    const Complex xbar_m = xbar.dot(mli);

    c.pilot_mean = checked_real(xbar.dot(Rli * xbar), xbar.squaredNorm() * fro_rli, "xbar^H R_li xbar");
    c.interferer_mean = tp * checked_real(mli.dot(omega_inv_m), mli_norm2 * fro_pi, "hbar^H Omega^{-1} hbar");
    c.mean_inner = std::norm(xbar_m);
    c.cross_mean = 2.0 * s * (ybar.dot(mli) * tr_r + ybar.dot(r_m)).real();
    c.coherent_trace = s * s * tr_r * tr_r;
    c.coherent_mean_power = s * s * mli_norm2 * mli_norm2;
    c.coherent_mean_cross = 2.0 * s * (xbar_m * mli_norm2).real();
    return c;
}

struct SinrBreakdownLs {
    int ue = 0;
    Complex eta;
    double mu = 0.0;
    std::vector<double> chi;  // indexed like the link span
    double noise = 0.0;
    double denominator = 0.0;
    double sinr = 0.0;
    double sinr_raw = 0.0;
    double se = 0.0;
};

inline SinrBreakdownLs assemble_sinr_ls(const PilotGroupStats& group, int ue, std::span<const LsCrossTerms> terms,
                                        std::span<const double> powers, double prelog) {
    if (terms.size() != powers.size()) {
        throw InvalidArgument("sinr_ls: terms and powers differ in length");
    }
    const auto& target = group.member(ue);
    const double p = target.power;
    const double tp = group.tau_p();
    const double sigma2 = group.sigma2();
    const LsMoments lm = ls_moments(group, ue);

    SinrBreakdownLs out;
    out.ue = ue;
    out.eta = lm.eta;
    out.mu = lm.mu;
    out.noise = sigma2;
    out.chi.assign(terms.size(), 0.0);

    double sum_chi = 0.0;
    double raw_second = 0.0;  // sum p_li E{|y^H h_li|^2}
    double raw_abs = 0.0;
    for (std::size_t u = 0; u < terms.size(); ++u) {
        const auto& c = terms[u];
        out.chi[u] = c.chi();
        if (!(out.chi[u] >= 0.0)) {
            throw InternalError("sinr_ls: negative second moment");
        }
        sum_chi += powers[u] * out.chi[u];
        raw_second += powers[u] * c.total_unnormalized();
        raw_abs += powers[u] * (std::abs(c.total_unnormalized()) + std::abs(c.cross_mean) + std::abs(c.coherent_mean_cross));
    }
    const double signal = p * std::norm(lm.eta);
    out.denominator = sum_chi - signal + lm.mu * sigma2;
    if (!(out.denominator > 0.0)) {
        throw InternalError("sinr_ls: non-positive denominator");
    }
    out.sinr = signal / out.denominator;

    // Raw route with the unscaled combiner y^p: E{y^H h_jk}, E{|y^H h_li|^2}, E{||y||^2}.
    const double s = std::sqrt(p) * tp;
    const Complex mean_yh = s * target.link->cov.trace() + group.y_bar().dot(target.link->mean);
    const double norm2_y = tp * group.psi_inv().trace().real() + group.y_bar().squaredNorm();
    out.sinr_raw = sinr_uatf(p, mean_yh, raw_second, norm2_y, sigma2);
    const double raw_denom = raw_second - p * std::norm(mean_yh) + sigma2 * norm2_y;
    const double conditioning = (raw_abs + p * std::norm(mean_yh) + sigma2 * norm2_y) / raw_denom;
    detail::check_routes(out.sinr, out.sinr_raw, conditioning, "sinr_ls");
    out.se = se_from_sinr(out.sinr, prelog);
    return out;
}

inline SinrBreakdownLs sinr_ls(const PilotGroupStats& group, int ue, std::span<const LinkStats> links,
                               std::span<const double> powers, double prelog) {
    if (links.size() != powers.size()) {
        throw InvalidArgument("sinr_ls: links and powers differ in length");
    }
    std::vector<LsCrossTerms> terms(links.size());
    for (std::size_t u = 0; u < links.size(); ++u) {
        terms[u] = ls_cross_moment(group, ue, links[u], powers[u], group.contains(static_cast<int>(u)));
    }
    return assemble_sinr_ls(group, ue, terms, powers, prelog);
}

// ---------------------------------------------------------------------------
// Network-level evaluation
// ---------------------------------------------------------------------------

/// Pilot groups of every pilot in use at one BS, built once and shared.
class BsPilotGroups {
  public:
    BsPilotGroups(const NetworkRealization& net, int bs) : groups_(net.config.tau_p) {
        for (const int u : net.served_by(bs)) {
            const int pilot = net.pilots[u];
            if (!groups_[pilot]) {
                groups_[pilot].emplace(make_pilot_group(net, bs, u));
            }
        }
    }
    const PilotGroupStats& for_pilot(int pilot) const {
        if (!groups_.at(pilot)) {
            throw InvalidArgument("BsPilotGroups: pilot not used by any served UE");
        }
        return *groups_[pilot];
    }

  private:
    std::vector<std::optional<PilotGroupStats>> groups_;
};

namespace detail {

// A Hermitian M x M matrix viewed as 2 M^2 reals. For Hermitian R and X,
//   as_real(R) . as_real(X) = Re sum conj(R_ab) X_ab = tr(R X),
// which is real, so a single real dot product gives the trace.
inline Eigen::Map<const Eigen::VectorXd> as_real(const CMatrix& x) {
    return {reinterpret_cast<const double*>(x.data()), 2 * x.size()};
}

}  // namespace detail

/// Everything at one BS that the batched closed-form evaluation shares across
/// targets: the covariance stack (column u = real view of R_u), the LoS means
/// side by side and the pilot groups.
class BsLinkStack {
  public:
    BsLinkStack(const NetworkRealization& net, int bs) : net_(&net), bs_(bs), groups_(net, bs) {
        const auto links = net.links_at(bs);
        const Eigen::Index M = net.config.M;
        const auto U = static_cast<Eigen::Index>(links.size());
        cov_stack_.resize(2 * M * M, U);
        means_.resize(M, U);
        for (Eigen::Index u = 0; u < U; ++u) {
            const auto& link = links[u];
            if (hermitian_residue(link.cov) > 1e-12) {
                throw InvalidArgument("BsLinkStack: link covariance is not Hermitian");
            }
            cov_stack_.col(u) = detail::as_real(link.cov);
            means_.col(u) = link.mean;
        }
        has_means_ = means_.cwiseAbs2().sum() > 0.0;
    }

    const NetworkRealization& net() const { return *net_; }
    int bs() const { return bs_; }
    const BsPilotGroups& groups() const { return groups_; }
    const Eigen::MatrixXd& cov_stack() const { return cov_stack_; }
    const CMatrix& means() const { return means_; }
    bool has_means() const { return has_means_; }

  private:
    const NetworkRealization* net_;
    int bs_;
    BsPilotGroups groups_;
    Eigen::MatrixXd cov_stack_;
    CMatrix means_;
    bool has_means_ = false;
};

/// MMSE-MR breakdown of every UE served by the stack's BS, in ascending UE order.
/// Copilot pairs use mmse_cross_moment directly; every other pair takes its
/// traces from one real matrix product and its mean quadratic forms from
/// matrix-matrix products.
inline std::vector<SinrBreakdownMmse> sinr_mmse_at_bs(const BsLinkStack& stack) {
    const auto& net = stack.net();
    const int bs = stack.bs();
    const auto links = net.links_at(bs);
    const auto powers = net.powers();
    const double prelog = net.config.prelog();
    const auto served = net.served_by(bs);
    const auto U = links.size();
    const Eigen::Index M = net.config.M;

    std::vector<MmseTarget> targets;
    targets.reserve(served.size());
    for (const int k : served) {
        targets.emplace_back(stack.groups().for_pilot(net.pilots[k]), k);
    }
    // Probe columns: per target rpr and, with LoS, hbar hbar^H.
    const int per_target = stack.has_means() ? 2 : 1;
    Eigen::MatrixXd probes(2 * M * M, static_cast<Eigen::Index>(targets.size()) * per_target);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        probes.col(static_cast<Eigen::Index>(i) * per_target) = detail::as_real(targets[i].rpr());
        if (stack.has_means()) {
            const CVector& m = targets[i].link().mean;
            const CMatrix mm = m * m.adjoint();
            probes.col(static_cast<Eigen::Index>(i) * per_target + 1) = detail::as_real(mm);
        }
    }
    const Eigen::MatrixXd traces = stack.cov_stack().transpose() * probes;  // (U x probes)

    std::vector<SinrBreakdownMmse> out;
    out.reserve(targets.size());
    std::vector<MmseCrossTerms> terms(U);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& t = targets[i];
        const double ptp = t.power() * t.tau_p();
        const auto col = static_cast<Eigen::Index>(i) * per_target;
        Eigen::VectorXd interferer_qf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(U));
        Eigen::VectorXcd inner = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(U));
        if (stack.has_means()) {
            const CMatrix bh = t.rpr() * stack.means();
            interferer_qf = stack.means().conjugate().cwiseProduct(bh).colwise().sum().real().transpose();
            inner = stack.means().adjoint() * t.link().mean;  // conj(hbar_jk^H hbar_li)
        }
        for (std::size_t u = 0; u < U; ++u) {
            const int ue = static_cast<int>(u);
            if (t.group().contains(ue)) {
                terms[u] = mmse_cross_moment(t, links[u], powers[u], true);
                continue;
            }
            MmseCrossTerms c;
            c.nlos_trace = ptp * traces(ue, col);
            if (stack.has_means()) {
                c.interferer_mean = ptp * interferer_qf[ue];
                c.target_mean = traces(ue, col + 1);
                c.mean_inner = std::norm(inner[ue]);
            }
            terms[u] = c;
        }
        out.push_back(assemble_sinr_mmse(t, terms, powers, prelog));
    }
    return out;
}

/// LS-MR counterpart of sinr_mmse_at_bs; probes are per pilot group.
inline std::vector<SinrBreakdownLs> sinr_ls_at_bs(const BsLinkStack& stack) {
    const auto& net = stack.net();
    const int bs = stack.bs();
    const auto links = net.links_at(bs);
    const auto powers = net.powers();
    const double prelog = net.config.prelog();
    const auto served = net.served_by(bs);
    const auto U = links.size();
    const Eigen::Index M = net.config.M;
    const int tau_p = net.config.tau_p;

    std::vector<int> pilots;
    for (const int k : served) {
        if (std::find(pilots.begin(), pilots.end(), net.pilots[k]) == pilots.end()) pilots.push_back(net.pilots[k]);
    }
    const int per_group = stack.has_means() ? 2 : 1;
    Eigen::MatrixXd probes(2 * M * M, static_cast<Eigen::Index>(pilots.size()) * per_group);
    for (std::size_t g = 0; g < pilots.size(); ++g) {
        const auto& group = stack.groups().for_pilot(pilots[g]);
        probes.col(static_cast<Eigen::Index>(g) * per_group) = detail::as_real(group.psi_inv());
        if (stack.has_means()) {
            const CMatrix yy = group.y_bar() * group.y_bar().adjoint();
            probes.col(static_cast<Eigen::Index>(g) * per_group + 1) = detail::as_real(yy);
        }
    }
    const Eigen::MatrixXd traces = stack.cov_stack().transpose() * probes;

    // Per-group quadratic forms hbar_li^H psi_inv hbar_li and inner products ybar^H hbar_li.
    std::vector<Eigen::VectorXd> interferer_qf(pilots.size(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(U)));
    std::vector<Eigen::VectorXcd> inner(pilots.size(), Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(U)));
    if (stack.has_means()) {
        for (std::size_t g = 0; g < pilots.size(); ++g) {
            const auto& group = stack.groups().for_pilot(pilots[g]);
            const CMatrix ph = group.psi_inv() * stack.means();
            interferer_qf[g] = stack.means().conjugate().cwiseProduct(ph).colwise().sum().real().transpose();
            inner[g] = (stack.means().adjoint() * group.y_bar()).conjugate();  // ybar^H hbar_li
        }
    }

    std::vector<SinrBreakdownLs> out;
    out.reserve(served.size());
    std::vector<LsCrossTerms> terms(U);
    for (const int k : served) {
        const auto& group = stack.groups().for_pilot(net.pilots[k]);
        const auto g = static_cast<std::size_t>(std::find(pilots.begin(), pilots.end(), net.pilots[k]) - pilots.begin());
        const auto col = static_cast<Eigen::Index>(g) * per_group;
        const double scale = powers[k] * tau_p * tau_p;
        for (std::size_t u = 0; u < U; ++u) {
            const int ue = static_cast<int>(u);
            if (group.contains(ue)) {
                terms[u] = ls_cross_moment(group, k, links[u], powers[u], true);
                continue;
            }
            LsCrossTerms c;
            c.scale = scale;
            c.nlos_trace = tau_p * traces(ue, col);
            if (stack.has_means()) {
                c.pilot_mean = traces(ue, col + 1);
                c.interferer_mean = tau_p * interferer_qf[g][ue];
                c.mean_inner = std::norm(inner[g][ue]);
            }
            terms[u] = c;
        }
        out.push_back(assemble_sinr_ls(group, k, terms, powers, prelog));
    }
    return out;
}

/// Closed-form SINR of every UE for each estimator in `estimators`; the outer
/// index follows `estimators`, the inner one is the flat UE id.
inline std::vector<std::vector<double>> closed_form_sinr(const NetworkRealization& net,
                                                         std::span<const Estimator> estimators) {
    std::vector<std::vector<double>> sinr(estimators.size(), std::vector<double>(net.num_ues(), 0.0));
    for (int j = 0; j < net.config.L; ++j) {
        if (net.served_by(j).empty()) continue;
        const BsLinkStack stack(net, j);
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            if (estimators[e] == Estimator::mmse) {
                for (const auto& b : sinr_mmse_at_bs(stack)) sinr[e][b.ue] = b.sinr;
            } else {
                for (const auto& b : sinr_ls_at_bs(stack)) sinr[e][b.ue] = b.sinr;
            }
        }
    }
    return sinr;
}

inline std::vector<double> closed_form_sinr(const NetworkRealization& net, Estimator estimator) {
    return std::move(closed_form_sinr(net, std::span<const Estimator>(&estimator, 1)).front());
}

inline std::vector<std::vector<double>> closed_form_se(const NetworkRealization& net,
                                                       std::span<const Estimator> estimators) {
    auto out = closed_form_sinr(net, estimators);
    for (auto& row : out) {
        for (auto& v : row) v = se_from_sinr(v, net.config);
    }
    return out;
}

inline std::vector<double> closed_form_se(const NetworkRealization& net, Estimator estimator) {
    return std::move(closed_form_se(net, std::span<const Estimator>(&estimator, 1)).front());
}

}  // namespace ricmimo

#endif  // RICMIMO_SE_CLOSED_FORM_HPP
