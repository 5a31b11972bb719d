#ifndef ROIAL_RNG_HPP
#define ROIAL_RNG_HPP

#include <cstdint>
#include <random>

namespace roial {

using Rng = std::mt19937_64;

/// Named substreams derived from one master seed. Every random draw in the
/// engine comes from make_stream(seed, stream, counter) so that changing the
/// number of draws in one component never shifts another.
enum class Stream : std::uint64_t {
    kFirstAction = 1,
    kSubset = 2,
    kPosteriorSamples = 3,
    kTieBreak = 4,
    kValidation = 5,
    kSimulatedUser = 6,
    kTruth = 7,
    kEvaluation = 8,
    kImportance = 9,
};

Rng make_stream(std::uint64_t master_seed, Stream stream, std::uint64_t counter = 0);

/// Seed for a derived child process (e.g. one run of a study).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace roial

#endif  // ROIAL_RNG_HPP
