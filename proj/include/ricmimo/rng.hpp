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

#ifndef RICMIMO_RNG_HPP
#define RICMIMO_RNG_HPP

#include "ricmimo/common.hpp"

#include <array>
#include <cstdint>
#include <initializer_list>

namespace ricmimo {

/// Philox4x32-10 counter-based block generator (Salmon et al., SC'11).
/// Stateless: a (counter, key) pair maps to four 32-bit words.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    static constexpr int kRounds = 10;

    static constexpr Counter generate(Counter ctr, Key key) {
        for (int r = 0; r < kRounds; ++r) {
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

// splitmix64 finalizer; used to fold hierarchical stream coordinates into one id.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Folds a coordinate path such as (purpose, drop, bs, trial, link) into a 64-bit stream id.
constexpr std::uint64_t stream_id(std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = 0x6A09E667F3BCC908ull;
    for (const std::uint64_t c : path) {
        h = mix64(h ^ mix64(c));
    }
    return h;
}

/// Independent substream purposes. Values are part of the reproducibility contract.
enum class Purpose : std::uint64_t {
    ue_drop = 1,
    shadow = 2,
    pilots = 3,
    mc_channel = 4,
    mc_noise = 5,
};

/// A sequential view of one Philox substream. The key is the global seed,
/// the upper counter half is the stream id and the lower half counts blocks,
/// so any substream can be regenerated in isolation.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            refill();
        }
        return block_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection, n >= 1.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n <= 1) {
            return 0;
        }
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return x % n;
    }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const auto [a, b] = normal_pair();
        spare_ = b;
        has_spare_ = true;
        return a;
    }

    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    Complex complex_normal(double variance = 1.0) {
        const auto [a, b] = normal_pair();
        const double s = std::sqrt(variance / 2.0);
        return {s * a, s * b};
    }

  private:
    std::array<double, 2> normal_pair() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * kPi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    void refill() {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_index_),
                                      static_cast<std::uint32_t>(block_index_ >> 32),
                                      static_cast<std::uint32_t>(stream_),
                                      static_cast<std::uint32_t>(stream_ >> 32)};
        block_ = Philox4x32::generate(ctr, key_);
        ++block_index_;
        pos_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    Philox4x32::Counter block_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline RandomStream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return RandomStream(seed, stream_id(path));
}

}  // namespace ricmimo

#endif  // RICMIMO_RNG_HPP
