#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace splab {

inline constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output function.
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream. Value i of stream s under master seed m is
/// mix64(key(m, s) + kGolden * i), so distinct replications get statistically
/// independent streams and a stream can be replayed from (seed, stream) alone.
/// Normal deviates come from Box-Muller on explicit uniforms; no libstdc++
/// distribution objects are involved, so output is reproducible bit-for-bit.
class RngStream {
public:
    RngStream(uint64_t master_seed, uint64_t stream_id)
        : key_(mix64(master_seed ^ mix64(stream_id + 0x632BE59BD9B4E019ULL))) {}

    uint64_t next_u64() { return mix64(key_ + kGolden * ++counter_); }

    /// Uniform on the open interval (0,1); never returns an endpoint.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal deviate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::VectorXd normals(int n) {
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = normal();
        return z;
    }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace splab
