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

#ifndef RICMIMO_CHANNEL_MODEL_HPP
#define RICMIMO_CHANNEL_MODEL_HPP

#include "ricmimo/common.hpp"

#include <string>

namespace ricmimo {

/// Global system parameters. Powers are linear (mW); angles enter in degrees
/// and are converted once by asd_rad().
struct SystemConfig {
    int M = 100;           // antennas per BS
    int K = 10;            // UEs per cell
    int L = 16;            // cells
    int tau_c = 200;       // coherence block length [samples]
    int tau_p = 10;        // pilot length [samples]
    double p = 10.0;       // UL transmit power per UE [mW]
    double sigma2_ul = 3.981071705534973e-10;  // receiver noise power [mW] (-94 dBm)
    double asd_deg = 10.0;                     // angular standard deviation
    double bandwidth_hz = 20e6;                // informational only

    int tau_u() const { return tau_c - tau_p; }
    double prelog() const { return static_cast<double>(tau_u()) / tau_c; }
    double asd_rad() const { return deg_to_rad(asd_deg); }
    int num_ues() const { return L * K; }

    /// Throws InvalidConfiguration with an actionable message.
    void validate() const {
        auto fail = [](const std::string& msg) { throw InvalidConfiguration(msg); };
        if (M < 1) fail("M (antennas per BS) must be >= 1, got " + std::to_string(M));
        if (K < 1) fail("K (UEs per cell) must be >= 1, got " + std::to_string(K));
        if (L < 1) fail("L (cells) must be >= 1, got " + std::to_string(L));
        if (tau_p < K) {
            fail("tau_p = " + std::to_string(tau_p) + " is smaller than K = " + std::to_string(K) +
                 "; intra-cell pilots must be orthogonal, so raise tau_p or lower K");
        }
        if (tau_c <= tau_p) {
            fail("tau_c = " + std::to_string(tau_c) + " must exceed tau_p = " + std::to_string(tau_p));
        }
        if (!(p > 0.0)) fail("transmit power p must be > 0");
        if (!(sigma2_ul > 0.0)) fail("noise power sigma2_ul must be > 0");
        if (!(asd_deg >= 0.0)) fail("asd_deg must be >= 0");
    }
};

/// Statistics of one BS-UE link: h ~ CN(mean, cov).
struct LinkStats {
    CVector mean;  // LoS component
    CMatrix cov;   // NLoS spatial correlation
    double beta_los_db = 0.0;
    double beta_nlos_db = 0.0;
    double angle_rad = 0.0;

    int antennas() const { return static_cast<int>(cov.rows()); }
};

enum class FadingMode { rician, rayleigh };

inline const char* to_string(FadingMode mode) {
    return mode == FadingMode::rician ? "rician" : "rayleigh";
}

// 3GPP-style large-scale fading constants [dB].
inline constexpr double kLosIntercept = -30.18;
inline constexpr double kLosSlope = 26.0;
inline constexpr double kNlosIntercept = -34.53;
inline constexpr double kNlosSlope = 38.0;
inline constexpr double kShadowStdLosDb = 4.0;
inline constexpr double kShadowStdNlosDb = 10.0;

/// Half-wavelength ULA response: entry m is exp(i pi m sin(angle)).
inline CVector ula_steering(double angle_rad, int M) {
    if (M < 1) {
        throw InvalidArgument("ula_steering: M must be >= 1");
    }
    if (!std::isfinite(angle_rad)) {
        throw InvalidArgument("ula_steering: angle must be finite");
    }
    CVector a(M);
    const double s = std::sin(angle_rad);
    for (int m = 0; m < M; ++m) {
        a[m] = std::polar(1.0, kPi * m * s);
    }
    return a;
}

inline double pathloss_los(double distance_m, double shadow_db) {
    if (!(distance_m > 0.0)) {
        throw InvalidArgument("pathloss_los: distance must be > 0");
    }
    return kLosIntercept - kLosSlope * std::log10(distance_m) + shadow_db;
}

inline double pathloss_nlos(double distance_m, double shadow_db) {
    if (!(distance_m > 0.0)) {
        throw InvalidArgument("pathloss_nlos: distance must be > 0");
    }
    return kNlosIntercept - kNlosSlope * std::log10(distance_m) + shadow_db;
}

/// Gaussian local scattering model:
///   R(s,m) = beta exp(i pi (s-m) sin phi) exp(-(asd^2/2) (pi (s-m) cos phi)^2).
/// The result is Hermitian Toeplitz, so only the first column is evaluated.
inline CMatrix local_scattering_cov(double beta_nlos_linear, double angle_rad, double asd_rad, int M) {
    if (M < 1) {
        throw InvalidArgument("local_scattering_cov: M must be >= 1");
    }
    if (!(beta_nlos_linear >= 0.0) || !(asd_rad >= 0.0)) {
        throw InvalidArgument("local_scattering_cov: beta and asd must be >= 0");
    }
    CVector col(M);
    const double s = std::sin(angle_rad);
    const double c = std::cos(angle_rad);
    for (int d = 0; d < M; ++d) {
        const double spread = kPi * d * c;
        col[d] = beta_nlos_linear * std::polar(std::exp(-0.5 * asd_rad * asd_rad * spread * spread), kPi * d * s);
    }
    CMatrix R(M, M);
    for (int m = 0; m < M; ++m) {
        for (int r = 0; r < M; ++r) {
            R(r, m) = r >= m ? col[r - m] : std::conj(col[m - r]);
        }
    }
    return R;
}

/// Geometry of one link as seen from the BS.
struct LinkGeometry {
    double distance_m = 1.0;
    double angle_rad = 0.0;
    double shadow = 0.0;  // standard-normal draw shared by the LoS and NLoS terms
};

/// Assembles mean and covariance of one link. In Rayleigh mode the mean is
/// zeroed and everything else (including the covariance) is unchanged.
inline LinkStats build_link_stats(const SystemConfig& config, const LinkGeometry& geo,
                                  FadingMode mode = FadingMode::rician) {
    LinkStats link;
    link.angle_rad = geo.angle_rad;
    link.beta_los_db = pathloss_los(geo.distance_m, kShadowStdLosDb * geo.shadow);
    link.beta_nlos_db = pathloss_nlos(geo.distance_m, kShadowStdNlosDb * geo.shadow);
    const double beta_los = db_to_linear(link.beta_los_db);
    const double beta_nlos = db_to_linear(link.beta_nlos_db);
    link.cov = local_scattering_cov(beta_nlos, geo.angle_rad, config.asd_rad(), config.M);
    if (mode == FadingMode::rician) {
        link.mean = std::sqrt(beta_los) * ula_steering(geo.angle_rad, config.M);
    } else {
        link.mean = CVector::Zero(config.M);
    }
    return link;
}

/// Restriction to the first M antennas of the array. Both the steering vector
/// and the local scattering matrix of a smaller ULA are exactly these leading blocks.
inline LinkStats truncate_antennas(const LinkStats& link, int M) {
    if (M < 1 || M > link.antennas()) {
        throw InvalidArgument("truncate_antennas: M out of range");
    }
    LinkStats out;
    out.mean = link.mean.head(M);
    out.cov = link.cov.topLeftCorner(M, M);
    out.beta_los_db = link.beta_los_db;
    out.beta_nlos_db = link.beta_nlos_db;
    out.angle_rad = link.angle_rad;
    return out;
}

}  // namespace ricmimo

#endif  // RICMIMO_CHANNEL_MODEL_HPP
