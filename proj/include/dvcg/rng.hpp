#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace dvcg {

// Counter-based generator built on the splitmix64 finalizer. Streams are
// derived by hashing (seed, tag words), so independently derived streams can
// be consumed in any order without changing their output. All arithmetic is
// integer until the final conversion, keeping draws identical across
// platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(mix(seed ^ kPhi)) {}

    /// Derive an independent stream from (seed, tags...).
    static Rng derive(uint64_t seed, std::initializer_list<uint64_t> tags) {
        uint64_t k = mix(seed ^ kPhi);
        for (uint64_t t : tags) k = mix(k ^ mix(t + kPhi));
        return Rng(raw{}, k);
    }

    uint64_t next_u64() {
        state_ += kPhi;
        return mix(state_);
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform draw in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
        return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
    }

    /// Sample an index from an (approximately normalized) probability row.
    /// Walks the CDF in index order; the final bucket absorbs rounding slack.
    int categorical(std::span<const double> probs) {
        double u = uniform();
        double cum = 0.0;
        int last = static_cast<int>(probs.size()) - 1;
        for (int i = 0; i < last; ++i) {
            cum += probs[i];
            if (u < cum) return i;
        }
        return last;
    }

private:
    struct raw {};
    Rng(raw, uint64_t s) : state_(s) {}

    static constexpr uint64_t kPhi = 0x9E3779B97F4A7C15ULL;

    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    uint64_t state_;
};

}  // namespace dvcg
