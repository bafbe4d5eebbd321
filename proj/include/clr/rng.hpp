#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace clr {

/// Deterministic random stream. Wraps std::mt19937_64 (a fully specified
/// engine) with hand-rolled draw helpers so that sequences are identical on
/// every platform; the std distribution classes are not portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    float uniform_float() { return static_cast<float>(uniform()); }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Unbiased via rejection sampling.
    int uniform_int(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return static_cast<int>(x % un);
    }

    /// Standard normal via Box-Muller. Two uniform draws per sample.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct values from [0, n), in draw order.
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            const int j = i + uniform_int(n - i);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            out.push_back(pool[static_cast<std::size_t>(i)]);
        }
        return out;
    }

    /// Derives an independent child seed from up to three labels (splitmix64
    /// finalizer chain). Used for per-episode and per-purpose streams.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0) {
        std::uint64_t x = seed;
        x = mix(x + 0x9e3779b97f4a7c15ULL * (a + 1));
        x = mix(x + 0x9e3779b97f4a7c15ULL * (b + 1));
        x = mix(x + 0x9e3779b97f4a7c15ULL * (c + 1));
        return x;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 eng_;
};

/// Stream labels for Rng::derive. Streams are separated by purpose so that
/// pipeline variants which skip a purpose entirely still replay the others
/// bit-exactly (the degenerate-equivalence contract).
enum StreamLabel : std::uint64_t {
    kStreamEpisode = 1,
    kStreamHeadInit = 2,
    kStreamBatchOrder = 3,
    kStreamReplace = 4,
    kStreamFinetune = 5,
    kStreamTrain = 6,
};

}  // namespace clr
