#pragma once

#include <cmath>
#include <cstdint>

namespace sdsim {

// Counter-based pseudo-random stream.
//
// A stream is identified by a 64-bit key. Output word i is a strong mix of
// (key, i), so streams support random access and never carry hidden state
// beyond the counter. Child streams derive a fresh key from (key, id);
// any path of derive() calls therefore yields the same sequence no matter
// which thread evaluates it or in which order tasks are scheduled.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : key_(mix(mix(seed) ^ kRootTweak)) {}

    // Child stream for path component `id`. derive(a).derive(b) and
    // derive(b).derive(a) are distinct.
    [[nodiscard]] RngStream derive(std::uint64_t id) const {
        return RngStream(FromKey{}, mix(mix(key_ + kDeriveTweak) ^ mix(id + kIdTweak)));
    }

    std::uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via the Marsaglia polar method; the spare deviate is
    // cached, so draws come in pairs per rejection round.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_unit() - 1.0;
            v = 2.0 * next_unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    // Unbiased uniform integer in [0, bound), bound >= 1 (Lemire rejection).
    std::uint32_t next_below(std::uint32_t bound) {
        std::uint64_t x = next_u64() & 0xFFFFFFFFu;
        std::uint64_t m = x * bound;
        auto low = static_cast<std::uint32_t>(m);
        if (low < bound) {
            const std::uint32_t threshold = -bound % bound;
            while (low < threshold) {
                x = next_u64() & 0xFFFFFFFFu;
                m = x * bound;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    [[nodiscard]] std::uint64_t key() const { return key_; }

  private:
    struct FromKey {};
    RngStream(FromKey, std::uint64_t key) : key_(key) {}

    // SplitMix64 finalizer (Stafford mix 13).
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
    static constexpr std::uint64_t kRootTweak = 0x5DEECE66DBADC0DEull;
    static constexpr std::uint64_t kDeriveTweak = 0xD1B54A32D192ED03ull;
    static constexpr std::uint64_t kIdTweak = 0x632BE59BD9B4E019ull;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sdsim
