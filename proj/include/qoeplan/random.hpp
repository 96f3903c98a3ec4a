#ifndef QOEPLAN_RANDOM_HPP
#define QOEPLAN_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace qoeplan {

// Seeded random stream with hand-rolled value mappers. std::mt19937_64 has a
// standard-mandated output sequence, and mapping the raw 64-bit words ourselves
// keeps every draw identical across compilers and standard libraries, which the
// reproducibility contracts depend on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform index in [0, n). n must be > 0. Modulo bias is below 2^-53 for
    // any n this project draws.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller, one cached spare per pair.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qoeplan

#endif
