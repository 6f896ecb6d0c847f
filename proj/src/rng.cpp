#include "htrm/rng.hpp"

#include <cmath>

namespace htrm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr std::uint32_t kLatticeDomain = 0x4C415454u;  // "LATT"

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 2> split_key(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index) {
    std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a over the tag
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return splitmix64(splitmix64(parent ^ h) + splitmix64(index + 0x632BE59BD9B4E019ull));
}

void RngStream::refill() {
    buf_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), 0u, 0u},
                      split_key(seed_));
    ++block_;
    pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
    if (pos_ >= 4) refill();
    return buf_[pos_++];
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
}

double RngStream::exponential() { return -std::log(uniform()); }

std::uint64_t RngStream::geometric(double p) {
    if (p >= 1.0) return 0;
    if (p <= 0.0) return std::numeric_limits<std::uint64_t>::max();
    const double g = std::floor(std::log(uniform()) / std::log1p(-p));
    if (g >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(g);
}

std::array<std::uint32_t, 4> lattice_words(std::uint64_t seed, std::int64_t i, std::int64_t j) {
    const auto ui = static_cast<std::uint64_t>(i);
    const auto uj = static_cast<std::uint64_t>(j);
    return philox4x32({static_cast<std::uint32_t>(ui), static_cast<std::uint32_t>(uj),
                       static_cast<std::uint32_t>((ui >> 32) ^ ((uj >> 32) << 16)), kLatticeDomain},
                      split_key(seed));
}

}  // namespace htrm
