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

#ifndef RICMIMO_NETWORK_HPP
#define RICMIMO_NETWORK_HPP

#include "ricmimo/channel_model.hpp"
#include "ricmimo/rng.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

namespace ricmimo {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Displacement {
    double distance = 0.0;
    double direction = 0.0;  // radians, angle of the displacement a -> b
};

/// Shortest displacement from a to b on a torus of side world_size. Candidates
/// are the 9 copies of b shifted by {-w, 0, +w}^2; the first minimum in
/// row-major offset order (x offset outer, y offset inner) wins.
inline Displacement wrap_displacement(Point a, Point b, double world_size) {
    Displacement best{std::numeric_limits<double>::infinity(), 0.0};
    for (int ox = -1; ox <= 1; ++ox) {
        for (int oy = -1; oy <= 1; ++oy) {
            const double dx = b.x + ox * world_size - a.x;
            const double dy = b.y + oy * world_size - a.y;
            const double d = std::hypot(dx, dy);
            if (d < best.distance) {
                best.distance = d;
                best.direction = d > 0.0 ? std::atan2(dy, dx) : 0.0;
            }
        }
    }
    return best;
}

/// Square cell grid parameters.
struct Layout {
    double cell_side_m = 250.0;
    double min_distance_m = 35.0;
};

inline int grid_side(int L) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(L))));
    if (L < 1 || side * side != L) {
        throw InvalidConfiguration("L = " + std::to_string(L) +
                                   " is not a perfect square; the wrap-around grid needs L = n*n cells");
    }
    return side;
}

/// BS j sits at the center of grid cell (j % side, j / side).
inline std::vector<Point> bs_positions(int L, const Layout& layout = {}) {
    const int side = grid_side(L);
    std::vector<Point> out(L);
    for (int j = 0; j < L; ++j) {
        out[j] = {layout.cell_side_m * (j % side + 0.5), layout.cell_side_m * (j / side + 0.5)};
    }
    return out;
}

/// K UEs per cell, uniform in the cell square and at least min_distance_m
/// (wrap-around) from the cell's BS. UE (l, k) is at index l*K + k.
inline std::vector<Point> drop_ues(const SystemConfig& config, RandomStream& rng, const Layout& layout = {}) {
    const auto bs = bs_positions(config.L, layout);
    const double world = layout.cell_side_m * grid_side(config.L);
    const double half = layout.cell_side_m / 2.0;
    std::vector<Point> ues;
    ues.reserve(config.num_ues());
    for (int l = 0; l < config.L; ++l) {
        for (int k = 0; k < config.K; ++k) {
            Point u;
            do {
                u = {bs[l].x - half + layout.cell_side_m * rng.uniform(),
                     bs[l].y - half + layout.cell_side_m * rng.uniform()};
            } while (wrap_displacement(bs[l], u, world).distance < layout.min_distance_m);
            ues.push_back(u);
        }
    }
    return ues;
}

namespace detail {

inline int argmax_lowest(const Eigen::MatrixXd& table, Eigen::Index col) {
    int best = 0;
    for (Eigen::Index j = 1; j < table.rows(); ++j) {
        if (table(j, col) > table(best, col)) {
            best = static_cast<int>(j);
        }
    }
    return best;
}

}  // namespace detail

/// Column-wise argmax of a (BS x UE) gain table in dB; ties go to the lowest BS index.
inline std::vector<int> assign_serving_bs(const Eigen::MatrixXd& gain_db) {
    std::vector<int> serving(gain_db.cols(), 0);
    for (Eigen::Index u = 0; u < gain_db.cols(); ++u) {
        serving[u] = detail::argmax_lowest(gain_db, u);
    }
    return serving;
}

/// Random injection of each cell's K UEs into the tau_p pilots (partial Fisher-Yates).
inline std::vector<int> allocate_pilots(const SystemConfig& config, RandomStream& rng) {
    if (config.K > config.tau_p) {
        throw InvalidConfiguration("cannot allocate " + std::to_string(config.K) + " distinct pilots per cell from tau_p = " +
                                   std::to_string(config.tau_p));
    }
    std::vector<int> pilots(config.num_ues());
    std::vector<int> pool(config.tau_p);
    for (int l = 0; l < config.L; ++l) {
        for (int t = 0; t < config.tau_p; ++t) {
            pool[t] = t;
        }
        for (int k = 0; k < config.K; ++k) {
            const auto r = k + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.tau_p - k)));
            std::swap(pool[k], pool[r]);
            pilots[l * config.K + k] = pool[k];
        }
    }
    return pilots;
}

/// All UEs (flat indices, ascending) sharing the pilot of `ue`, including `ue` itself.
inline std::vector<int> copilot_set(std::span<const int> pilots, int ue) {
    std::vector<int> out;
    for (std::size_t u = 0; u < pilots.size(); ++u) {
        if (pilots[u] == pilots[ue]) {
            out.push_back(static_cast<int>(u));
        }
    }
    return out;
}

enum class AssignmentBasis { nlos, los };

struct NetworkOptions {
    Layout layout{};
    AssignmentBasis assignment = AssignmentBasis::nlos;
    FadingMode fading = FadingMode::rician;
};

/// One UE drop with everything derived from it. Immutable once built.
struct NetworkRealization {
    SystemConfig config;
    Layout layout;
    FadingMode fading = FadingMode::rician;
    double world_size = 0.0;
    std::vector<Point> bs;
    std::vector<Point> ue;
    Eigen::MatrixXd shadow;    // (L x L*K) standard-normal draws
    Eigen::MatrixXd distance;  // (L x L*K) wrap-around distances [m]
    std::vector<int> serving;
    std::vector<int> pilots;
    std::vector<std::vector<int>> copilots;
    std::vector<LinkStats> links;  // row-major (bs, ue)

    int num_ues() const { return config.num_ues(); }
    const LinkStats& link(int bs_index, int ue_index) const {
        return links[static_cast<std::size_t>(bs_index) * num_ues() + ue_index];
    }
    std::span<const LinkStats> links_at(int bs_index) const {
        return {links.data() + static_cast<std::size_t>(bs_index) * num_ues(), static_cast<std::size_t>(num_ues())};
    }
    /// UE indices served by BS j, in ascending order.
    std::vector<int> served_by(int j) const {
        std::vector<int> out;
        for (int u = 0; u < num_ues(); ++u) {
            if (serving[u] == j) out.push_back(u);
        }
        return out;
    }
    std::vector<double> powers() const { return std::vector<double>(num_ues(), config.p); }
};

namespace detail {

inline double assignment_gain_db(double distance, double shadow, AssignmentBasis basis) {
    return basis == AssignmentBasis::nlos ? pathloss_nlos(distance, kShadowStdNlosDb * shadow)
                                          : pathloss_los(distance, kShadowStdLosDb * shadow);
}

}  // namespace detail

/// Builds a full realization for drop `drop` of global seed `seed`.
///
/// Each UE is dropped in its own cell; if another BS would offer a larger
/// shadow-inclusive gain, that UE's shadow column is redrawn until its own BS
/// is the strongest. Hence every BS serves exactly K UEs and the serving map
/// is the drop cell.
inline NetworkRealization realize_network(const SystemConfig& config, std::uint64_t seed, std::uint64_t drop,
                                          const NetworkOptions& options = {}) {
    config.validate();
    NetworkRealization net;
    net.config = config;
    net.layout = options.layout;
    net.fading = options.fading;
    const int side = grid_side(config.L);
    net.world_size = options.layout.cell_side_m * side;
    net.bs = bs_positions(config.L, options.layout);

    auto drop_rng = make_stream(seed, {static_cast<std::uint64_t>(Purpose::ue_drop), drop});
    net.ue = drop_ues(config, drop_rng, options.layout);

    const int L = config.L;
    const int U = config.num_ues();
    net.distance.resize(L, U);
    Eigen::MatrixXd direction(L, U);
    for (int j = 0; j < L; ++j) {
        for (int u = 0; u < U; ++u) {
            // BS -> UE displacement, so the angle is the one seen from the array.
            const auto d = wrap_displacement(net.bs[j], net.ue[u], net.world_size);
            net.distance(j, u) = d.distance;
            direction(j, u) = d.direction;
        }
    }

    net.shadow.resize(L, U);
    Eigen::MatrixXd gain_db(L, U);
    for (int u = 0; u < U; ++u) {
        const int own = u / config.K;
        auto rng = make_stream(seed, {static_cast<std::uint64_t>(Purpose::shadow), drop, static_cast<std::uint64_t>(u)});
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100000) {
                throw InternalError("realize_network: shadow redraw did not converge");
            }
            for (int j = 0; j < L; ++j) {
                net.shadow(j, u) = rng.normal();
                gain_db(j, u) = detail::assignment_gain_db(net.distance(j, u), net.shadow(j, u), options.assignment);
            }
            if (detail::argmax_lowest(gain_db, u) == own) {
                break;
            }
        }
    }
    net.serving = assign_serving_bs(gain_db);

    auto pilot_rng = make_stream(seed, {static_cast<std::uint64_t>(Purpose::pilots), drop});
    net.pilots = allocate_pilots(config, pilot_rng);
    net.copilots.resize(U);
    for (int u = 0; u < U; ++u) {
        net.copilots[u] = copilot_set(net.pilots, u);
    }

    net.links.reserve(static_cast<std::size_t>(L) * U);
    for (int j = 0; j < L; ++j) {
        for (int u = 0; u < U; ++u) {
            net.links.push_back(build_link_stats(config, {net.distance(j, u), direction(j, u), net.shadow(j, u)}, options.fading));
        }
    }
    return net;
}

/// Same drop with every LoS mean removed. Geometry, shadowing, pilots and
/// covariances are shared bit for bit.
inline NetworkRealization with_fading(NetworkRealization net, FadingMode mode) {
    NetworkRealization out = std::move(net);
    const FadingMode previous = out.fading;
    out.fading = mode;
    if (mode == FadingMode::rayleigh) {
        for (auto& link : out.links) {
            link.mean.setZero();
        }
    } else if (previous == FadingMode::rayleigh) {
        for (auto& link : out.links) {
            link.mean = std::sqrt(db_to_linear(link.beta_los_db)) * ula_steering(link.angle_rad, link.antennas());
        }
    }
    return out;
}

/// Restricts every BS array to its first M antennas.
inline NetworkRealization truncate_antennas(const NetworkRealization& net, int M) {
    NetworkRealization out;
    out.config = net.config;
    out.config.M = M;
    out.layout = net.layout;
    out.fading = net.fading;
    out.world_size = net.world_size;
    out.bs = net.bs;
    out.ue = net.ue;
    out.shadow = net.shadow;
    out.distance = net.distance;
    out.serving = net.serving;
    out.pilots = net.pilots;
    out.copilots = net.copilots;
    out.links.reserve(net.links.size());
    for (const auto& link : net.links) {
        out.links.push_back(truncate_antennas(link, M));
    }
    return out;
}

/// FNV-1a digest of everything except the LoS means: positions, shadowing,
/// serving map, pilots and covariance matrices.
inline std::uint64_t realization_digest(const NetworkRealization& net) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h = (h ^ p[i]) * 0x100000001b3ull;
        }
    };
    for (const auto& p : net.bs) feed(&p, sizeof p);
    for (const auto& p : net.ue) feed(&p, sizeof p);
    feed(net.shadow.data(), sizeof(double) * net.shadow.size());
    feed(net.serving.data(), sizeof(int) * net.serving.size());
    feed(net.pilots.data(), sizeof(int) * net.pilots.size());
    for (const auto& link : net.links) {
        feed(link.cov.data(), sizeof(Complex) * link.cov.size());
    }
    return h;
}

/// Text dump, one record per line, comma separated. Record layouts:
///   config,L,K,M,tau_p,world_size_m
///   bs,j,x_m,y_m
///   ue,cell,index,x_m,y_m,serving_bs,pilot
///   link,bs,cell,index,distance_m,angle_rad,shadow_z,beta_los_db,beta_nlos_db
/// Lines starting with '#' are comments.
inline void write_network_dump(const NetworkRealization& net, std::ostream& os) {
    char buf[512];
    const int K = net.config.K;
    os << "# ricmimo network dump v1\n";
    os << "# config,L,K,M,tau_p,world_size_m\n";
    os << "# bs,j,x_m,y_m\n";
    os << "# ue,cell,index,x_m,y_m,serving_bs,pilot\n";
    os << "# link,bs,cell,index,distance_m,angle_rad,shadow_z,beta_los_db,beta_nlos_db\n";
    std::snprintf(buf, sizeof buf, "config,%d,%d,%d,%d,%.17g\n", net.config.L, K, net.config.M, net.config.tau_p,
                  net.world_size);
    os << buf;
    for (std::size_t j = 0; j < net.bs.size(); ++j) {
        std::snprintf(buf, sizeof buf, "bs,%zu,%.17g,%.17g\n", j, net.bs[j].x, net.bs[j].y);
        os << buf;
    }
    for (int u = 0; u < net.num_ues(); ++u) {
        std::snprintf(buf, sizeof buf, "ue,%d,%d,%.17g,%.17g,%d,%d\n", u / K, u % K, net.ue[u].x, net.ue[u].y,
                      net.serving[u], net.pilots[u]);
        os << buf;
    }
    for (int j = 0; j < net.config.L; ++j) {
        for (int u = 0; u < net.num_ues(); ++u) {
            const auto& link = net.link(j, u);
            std::snprintf(buf, sizeof buf, "link,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", j, u / K, u % K,
                          net.distance(j, u), link.angle_rad, net.shadow(j, u), link.beta_los_db, link.beta_nlos_db);
            os << buf;
        }
    }
}

}  // namespace ricmimo

#endif  // RICMIMO_NETWORK_HPP
