// SPDX-License-Identifier: Apache-2.0
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

#ifndef MIMO_RNG_HPP
#define MIMO_RNG_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace mimo {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Pure function
// of (counter, key); no state is shared between trials or threads.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// Random stream for one Monte Carlo trial. The key is the master seed and the
// counter's upper half is the trial index, so stream (seed, i) is identical no
// matter which worker draws it or in what order.
class TrialStream {
public:
    TrialStream(std::uint64_t master_seed, std::uint64_t trial_index) noexcept
        : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
          trial_lo_(static_cast<std::uint32_t>(trial_index)),
          trial_hi_(static_cast<std::uint32_t>(trial_index >> 32)) {}

    std::uint64_t next_u64() noexcept {
        if (used_ == 2) refill();
        return buffer_[used_++];
    }

    // Uniform on the open interval (0, 1), 53-bit resolution.
    double next_uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Circularly-symmetric complex Gaussian, E|z|^2 = 1 (1/2 per component).
    std::complex<double> next_complex_gaussian() noexcept {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

private:
    void refill() noexcept {
        const Philox4x32::Counter out =
            Philox4x32::apply({trial_lo_, trial_hi_, block_lo_, block_hi_}, key_);
        if (++block_lo_ == 0) ++block_hi_;
        buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
        buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
        used_ = 0;
    }

    Philox4x32::Key key_;
    std::uint32_t trial_lo_;
    std::uint32_t trial_hi_;
    std::uint32_t block_lo_ = 0;
    std::uint32_t block_hi_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int used_ = 2;
};

} // namespace mimo

#endif // MIMO_RNG_HPP
