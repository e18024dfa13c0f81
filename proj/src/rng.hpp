#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace khop {

// FNV-1a 64-bit, used for stream labels and content checksums.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic 64-bit generator (xoshiro256++) with named stream splitting.
//
// All randomness in a run derives from one top-level seed. A consumer never
// shares a raw generator; it derives a child stream keyed by a purpose label
// and up to two integer indices:
//
//     child_state = splitmix64 chain over (seed ^ fnv1a(purpose), a, b)
//
// Adding a new purpose (or a new index under an existing purpose) therefore
// leaves every other stream's output unchanged.
class Rng {
public:
    Rng() : Rng(0) {}

    explicit Rng(std::uint64_t seed) {
        seed_key_ = seed;
        std::uint64_t x = seed;
        for (auto& w : s_) {
            w = splitmix64(x);
        }
    }

    Rng stream(std::string_view purpose, std::uint64_t a = 0, std::uint64_t b = 0) const {
        std::uint64_t x = seed_key_ ^ fnv1a64(purpose);
        x = x * 0x9e3779b97f4a7c15ull + 1;
        x ^= splitmix64(a) + 0x2545f4914f6cdd1dull * (a + 1);
        x ^= splitmix64(b) + 0x27220a95fe4296e5ull * (b + 1);
        return Rng(x, Tag{});
    }

    std::uint64_t u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        assert(n > 0);
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    // Double in [0, 1) with 53 random bits.
    double real01() {
        return static_cast<double>(u64() >> 11) * 0x1.0p-53;
    }

    // Box-Muller with a cached spare.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + spare_ * stddev;
        }
        double u1 = 1.0 - real01();
        double u2 = real01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + r * std::cos(theta) * stddev;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices drawn uniformly from [0, n), in draw order.
    std::vector<std::uint64_t> sample_indices(std::uint64_t n, std::uint64_t k);

private:
    struct Tag {};

    Rng(std::uint64_t key, Tag) {
        seed_key_ = key;
        std::uint64_t x = key;
        for (auto& w : s_) {
            w = splitmix64(x);
        }
    }

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4] = {};
    std::uint64_t seed_key_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;

    friend class RngAccess;

public:
    // Expose the derivation key so a child can split further.
    std::uint64_t key() const { return seed_key_; }
};

inline std::vector<std::uint64_t> Rng::sample_indices(std::uint64_t n, std::uint64_t k) {
    assert(k <= n);
    // Partial Fisher-Yates over an index array; O(n) memory, O(k) draws.
    std::vector<std::uint32_t> pool;
    if (n <= 0xffffffffull) {
        pool.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            pool[i] = static_cast<std::uint32_t>(i);
        }
        std::vector<std::uint64_t> out(k);
        for (std::uint64_t i = 0; i < k; ++i) {
            std::uint64_t j = i + below(n - i);
            std::swap(pool[i], pool[j]);
            out[i] = pool[i];
        }
        return out;
    }
    std::vector<std::uint64_t> big(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        big[i] = i;
    }
    std::vector<std::uint64_t> out(k);
    for (std::uint64_t i = 0; i < k; ++i) {
        std::uint64_t j = i + below(n - i);
        std::swap(big[i], big[j]);
        out[i] = big[i];
    }
    return out;
}

} // namespace khop
