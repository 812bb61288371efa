#pragma once

#include <cstdint>

// The distributions in <random> are implementation-defined, so draws differ
// between standard libraries. Boost's are portable, which is what makes a
// chain bit-reproducible from its seed.
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace rgm {

using Rng = boost::random::mt19937_64;

// Independent stream `stream` derived from a master seed (splitmix64 mixing).
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return Rng(z);
}

inline double runif(Rng& rng) { return boost::random::uniform_01<double>{}(rng); }

inline double rnorm(Rng& rng) { return boost::random::normal_distribution<double>{}(rng); }

inline double rexp(Rng& rng, double rate) {
    return boost::random::exponential_distribution<double>{rate}(rng);
}

inline double rgamma(Rng& rng, double shape, double scale) {
    return boost::random::gamma_distribution<double>{shape, scale}(rng);
}

inline double rchisq(Rng& rng, double df) { return rgamma(rng, 0.5 * df, 2.0); }

inline int runif_int(Rng& rng, int lo, int hi) {
    return boost::random::uniform_int_distribution<int>{lo, hi}(rng);
}

}  // namespace rgm
