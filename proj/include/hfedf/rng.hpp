#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hfedf {

/// Deterministic random stream, identified by a (seed, stream_id) pair.
/// The same pair and call sequence produce the same values on every run.
/// Generation is xoshiro256++ seeded via splitmix64 from the seed mixed with
/// a hash of the stream label; distributions are implemented by hand so the
/// output does not depend on the standard library.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view stream_id);

    std::uint64_t seed() const { return seed_; }
    const std::string& stream_id() const { return stream_id_; }

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double();

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi);

    /// Standard normal via the polar method (pairs are cached).
    double next_normal();

    /// Unbiased integer in [0, bound); bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // State capture for bit-exact checkpoint/resume.
    struct State {
        std::array<std::uint64_t, 4> s;
        bool has_spare;
        double spare;
    };
    State state() const { return {state_, has_spare_, spare_}; }
    void restore(const State& st) {
        state_ = st.s;
        has_spare_ = st.has_spare;
        spare_ = st.spare;
    }

private:
    std::uint64_t seed_ = 0;
    std::string stream_id_;
    std::array<std::uint64_t, 4> state_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hfedf
