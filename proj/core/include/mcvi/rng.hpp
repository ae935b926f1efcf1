#pragma once

#include "mcvi/numerics.hpp"

#include <cstdint>
#include <limits>
#include <random>

namespace mcvi {

/// What a stream of random numbers is used for. Streams with different
/// purposes never overlap even when the other coordinates agree.
enum class Purpose : std::uint32_t {
  kNoise = 0,        // gradient-estimation base noise
  kElbo = 1,         // ELBO evaluation
  kData = 2,         // synthetic dataset generation
  kReplication = 3,  // variance-report replications
  kTest = 4,
  kShuffle = 5,
};

struct StreamId {
  std::uint64_t iteration = 0;
  std::uint64_t index = 0;
  Purpose purpose = Purpose::kNoise;
};

/// A deterministic random stream keyed by (seed, stream-id).
///
/// The key is hashed into the engine seed, so a stream's output depends only
/// on its key and never on the order in which streams are created or consumed.
/// Satisfies UniformRandomBitGenerator so it can drive <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, StreamId id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal via the Marsaglia polar method.
  double normal();

  std::uint64_t seed() const { return seed_; }
  const StreamId& id() const { return id_; }

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t stream_key(std::uint64_t seed, const StreamId& id);

/// n standard-normal draws from a fresh copy of `stream`.
Vec normal_draws(RngStream stream, std::size_t n);

}  // namespace mcvi
