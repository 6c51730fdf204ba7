#ifndef MULTIBOOT_RNG_HPP
#define MULTIBOOT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace multiboot {

/**
 * Reproducible random stream keyed by (master_seed, stream_id).
 *
 * Only standard-specified machinery feeds the bits (`std::seed_seq` and
 * `std::mt19937_64`), and the integer/normal transforms are done here rather
 * than via the implementation-defined `<random>` distributions, so a given
 * key produces the same sequence with any conforming standard library.
 */
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id), engine_(make_engine(master_seed, stream_id)) {}

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). Requires n >= 1.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Reject the low `2^64 mod n` values so every residue is equally likely.
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = engine_();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal deviate (Marsaglia polar method, spare cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    static std::mt19937_64 make_engine(std::uint64_t master_seed, std::uint64_t stream_id) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
            static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
        return std::mt19937_64(seq);
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

/// Derive a child seed for a nested computation (e.g. one calibration
/// replication) so its streams do not collide with the parent's.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t domain, std::uint64_t index) {
    RngStream rng(master_seed ^ (domain * 0x9E3779B97F4A7C15ULL), index);
    return rng.next_u64();
}

} // namespace multiboot

#endif
