#include "roial/rng.hpp"

#include <array>

namespace roial {

namespace {

std::array<std::uint32_t, 7> seed_words(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    return {lo(seed), hi(seed), lo(tag), lo(a), hi(a), lo(b), hi(b)};
}

}  // namespace

Rng make_stream(std::uint64_t master_seed, Stream stream, std::uint64_t counter) {
    const auto words = seed_words(master_seed, 0x5354u, static_cast<std::uint64_t>(stream), counter);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b) {
    const auto words = seed_words(master_seed, 0x4452u, a, b);
    std::seed_seq seq(words.begin(), words.end());
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace roial
