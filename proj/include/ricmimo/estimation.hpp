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

#ifndef RICMIMO_ESTIMATION_HPP
#define RICMIMO_ESTIMATION_HPP

#include "ricmimo/channel_model.hpp"
#include "ricmimo/network.hpp"
#include "ricmimo/rng.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace ricmimo {

/// One UE of a pilot group as seen from a particular BS.
struct GroupMember {
    int ue = 0;
    const LinkStats* link = nullptr;
    double power = 0.0;
};

/// Pilot-group statistics at one BS: the inverse of Psi,
///   psi_inv = sum_{members} p tau_p R + sigma2 I,
/// kept as a Cholesky factor, and the deterministic pilot mean
///   y_bar = sum_{members} sqrt(p) tau_p hbar.
/// Every member of the group shares these, so they are computed once per
/// (BS, pilot) and reused.
class PilotGroupStats {
  public:
    PilotGroupStats(std::vector<GroupMember> members, int tau_p, double sigma2)
        : members_(std::move(members)), tau_p_(tau_p), sigma2_(sigma2) {
        if (members_.empty()) {
            throw InvalidArgument("PilotGroupStats: empty pilot group");
        }
        if (tau_p < 1 || !(sigma2 > 0.0)) {
            throw InvalidArgument("PilotGroupStats: need tau_p >= 1 and sigma2 > 0");
        }
        const int M = members_.front().link->antennas();
        psi_inv_ = sigma2 * CMatrix::Identity(M, M);
        y_bar_ = CVector::Zero(M);
        for (const auto& m : members_) {
            if (m.link == nullptr || m.link->antennas() != M || m.link->mean.size() != M) {
                throw InvalidArgument("PilotGroupStats: member link dimensions differ");
            }
            psi_inv_ += (m.power * tau_p) * m.link->cov;
            y_bar_ += (std::sqrt(m.power) * tau_p) * m.link->mean;
        }
        psi_inv_ = 0.5 * (psi_inv_ + psi_inv_.adjoint()).eval();
        llt_.compute(psi_inv_);
        if (llt_.info() != Eigen::Success) {
            throw InternalError("PilotGroupStats: psi_inv is not positive definite");
        }
    }

    int antennas() const { return static_cast<int>(psi_inv_.rows()); }
    int tau_p() const { return tau_p_; }
    double sigma2() const { return sigma2_; }
    const CMatrix& psi_inv() const { return psi_inv_; }
    const CVector& y_bar() const { return y_bar_; }
    std::span<const GroupMember> members() const { return members_; }

    /// Psi x via a Hermitian solve.
    template <typename Rhs>
    auto apply_psi(const Eigen::MatrixBase<Rhs>& x) const {
        return llt_.solve(x).eval();
    }

    /// Explicit Psi; for diagnostics and small problems only.
    CMatrix psi() const { return llt_.solve(CMatrix::Identity(antennas(), antennas())); }

    bool contains(int ue) const {
        return std::any_of(members_.begin(), members_.end(), [ue](const GroupMember& m) { return m.ue == ue; });
    }

    const GroupMember& member(int ue) const {
        for (const auto& m : members_) {
            if (m.ue == ue) return m;
        }
        throw InvalidArgument("UE " + std::to_string(ue) + " is not a member of this pilot group");
    }

  private:
    std::vector<GroupMember> members_;
    int tau_p_;
    double sigma2_;
    CMatrix psi_inv_;
    CVector y_bar_;
    Eigen::LLT<CMatrix> llt_;
};

/// Pilot group of `ue` at BS `bs` in a realization.
inline PilotGroupStats make_pilot_group(const NetworkRealization& net, int bs, int ue) {
    std::vector<GroupMember> members;
    for (const int u : net.copilots[ue]) {
        members.push_back({u, &net.link(bs, u), net.config.p});
    }
    return PilotGroupStats(std::move(members), net.config.tau_p, net.config.sigma2_ul);
}

/// Effective pilot noise N phi^*: CN(0, tau_p sigma2 I).
inline CVector draw_pilot_noise(int M, int tau_p, double sigma2, RandomStream& rng) {
    CVector n(M);
    const double var = tau_p * sigma2;
    for (int m = 0; m < M; ++m) {
        n[m] = rng.complex_normal(var);
    }
    return n;
}

/// y^p = sum_{members} sqrt(p) tau_p h + noise; `channels` is aligned with group.members().
inline CVector processed_pilot(const PilotGroupStats& group, std::span<const CVector> channels, const CVector& noise) {
    const auto members = group.members();
    if (channels.size() != members.size()) {
        throw InvalidArgument("processed_pilot: need one channel realization per group member");
    }
    const int M = group.antennas();
    if (noise.size() != M) {
        throw InvalidArgument("processed_pilot: noise dimension mismatch");
    }
    CVector y = noise;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (channels[i].size() != M) {
            throw InvalidArgument("processed_pilot: channel dimension mismatch");
        }
        y += (std::sqrt(members[i].power) * group.tau_p()) * channels[i];
    }
    return y;
}

/// hhat = hbar + sqrt(p) R Psi (y - y_bar).
inline CVector mmse_estimate(const PilotGroupStats& group, int ue, const CVector& y) {
    const auto& m = group.member(ue);
    if (y.size() != group.antennas()) {
        throw InvalidArgument("mmse_estimate: observation dimension mismatch");
    }
    const CVector innovation = group.apply_psi(y - group.y_bar());
    return m.link->mean + std::sqrt(m.power) * (m.link->cov * innovation);
}

/// p tau_p R Psi R, the covariance of the MMSE estimate.
inline CMatrix mmse_estimate_cov(const PilotGroupStats& group, int ue) {
    const auto& m = group.member(ue);
    const CMatrix& R = m.link->cov;
    CMatrix out = (m.power * group.tau_p()) * (R * group.apply_psi(R));
    return 0.5 * (out + out.adjoint());
}

struct ErrorCov {
    CMatrix C;
    double mse = 0.0;  // tr(C)
};

/// C = R - p tau_p R Psi R, with MSE = tr(C).
inline ErrorCov mmse_error_cov(const PilotGroupStats& group, int ue) {
    const auto& m = group.member(ue);
    ErrorCov out;
    out.C = m.link->cov - mmse_estimate_cov(group, ue);
    out.mse = out.C.trace().real();
    return out;
}

struct EstimateStats {
    CVector mean;
    CMatrix cov;
    CVector error_mean;
    CMatrix error_cov;
};

inline EstimateStats mmse_estimate_stats(const PilotGroupStats& group, int ue) {
    const auto& m = group.member(ue);
    EstimateStats s;
    s.mean = m.link->mean;
    s.cov = mmse_estimate_cov(group, ue);
    s.error_mean = CVector::Zero(group.antennas());
    s.error_cov = m.link->cov - s.cov;
    return s;
}

inline CVector ls_estimate(const CVector& y, double p, int tau_p) { return y / (std::sqrt(p) * tau_p); }

/// LS estimate ~ CN(y_bar / (sqrt(p) tau_p), psi_inv / (p tau_p)); the error
/// has mean hbar - y_bar/(sqrt(p) tau_p) and covariance psi_inv/(p tau_p) - R.
inline EstimateStats ls_estimate_stats(const PilotGroupStats& group, int ue) {
    const auto& m = group.member(ue);
    const double scale = std::sqrt(m.power) * group.tau_p();
    EstimateStats s;
    s.mean = group.y_bar() / scale;
    s.cov = group.psi_inv() / (m.power * group.tau_p());
    s.error_mean = m.link->mean - s.mean;
    s.error_cov = s.cov - m.link->cov;
    return s;
}

}  // namespace ricmimo

#endif  // RICMIMO_ESTIMATION_HPP
