#include "iselab/random.hpp"

namespace iselab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_index(std::span<const std::int64_t> index) {
    std::uint64_t h = mix64(index.size());
    for (std::int64_t v : index) h = mix64(h ^ static_cast<std::uint64_t>(v));
    return h;
}

std::array<std::uint32_t, 4> CounterStream::block(std::uint64_t draw) const {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32),
                                  static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    return Philox4x32::generate(ctr, key);
}

std::uint64_t CounterStream::bits64(std::uint64_t draw) const {
    const auto b = block(draw);
    return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
}

double CounterStream::uniform(std::uint64_t draw) const {
    return static_cast<double>(bits64(draw) >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
    return CounterStream(parent, mix64(a) ^ (mix64(b ^ 0x5851F42D4C957F2DULL) << 1)).bits64(0);
}

double uniform_at(std::uint64_t seed, std::span<const std::int64_t> index, std::uint64_t draw) {
    return CounterStream(seed, hash_index(index)).uniform(draw);
}

} // namespace iselab
