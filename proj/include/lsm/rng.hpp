#pragma once

// Seeded random streams keyed by (master seed, purpose tag, index).
//
// Every draw in the toolkit comes from a stream identified by the master
// seed, a purpose string ("sources", "noise", "realizations", ...) and up to
// two indices. Streams are independent of evaluation order, so adding a
// consumer or a worker thread never perturbs existing streams.
//
// Key derivation: key = mix(mix(mix(seed ^ fnv1a64(tag)) ^ a) ^ b), with
// mix the SplitMix64 finaliser. A stream is the SplitMix64 counter sequence
// started at its key, so constructing one costs nothing; uniform and normal
// variates are derived here rather than through std:: distributions, whose
// algorithms are implementation-defined.

#include <cstdint>
#include <string_view>

namespace lsm {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t stream_key(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
                         std::uint64_t b = 0);

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
                 std::uint64_t b = 0);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal variate (Box-Muller, both outputs used).
    double normal();

private:
    std::uint64_t next();

    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lsm
