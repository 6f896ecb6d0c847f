#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace htrm {

// Philox4x32-10 (Salmon et al., SC'11). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for a named purpose and index, e.g. derive_seed(master, "trial", t).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index);

// Uniform in the open interval (0,1) on a 2^-52 grid offset by half a step.
inline double u64_to_open01(std::uint64_t x) {
    return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

inline double u32_to_open01(std::uint32_t x) {
    return (static_cast<double>(x) + 0.5) * 0x1.0p-32;
}

// Sequential stream over Philox blocks: key = seed, counter = (block index, 0).
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    std::uint32_t next_u32();
    double uniform() { return u64_to_open01(next_u64()); }
    double exponential();
    // Failures before the first success of Bernoulli(p) trials.
    std::uint64_t geometric(double p);

    result_type operator()() { return next_u64(); }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
};

// Counter-based draw for a lattice site; independent of any sequential stream.
std::array<std::uint32_t, 4> lattice_words(std::uint64_t seed, std::int64_t i, std::int64_t j);

}  // namespace htrm
