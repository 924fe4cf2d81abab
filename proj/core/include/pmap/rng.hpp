#pragma once

#include <cstdint>

namespace pmap {

// Counter-based pseudo-random stream. Every draw hashes (key, counter) with
// the splitmix64 finalizer, so a given (seed, stream) pair produces the same
// sequence on every platform and run, and any index can be regenerated
// without replaying the sequence. Distinct stream indices give statistically
// independent streams; use them to decouple data generation, initialization,
// and shuffling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (two draws per call; no cached spare, so
  // the consumed-draw count per call is fixed).
  double normal();
  double normal(double mean, double stddev);
  // Uniform integer in [0, n). Rejection-sampled, bias-free.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Fresh stream derived from this rng's seed and an index. Independent of
  // how much of the parent stream has been consumed.
  Rng substream(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stable 64-bit hash of a string, for deriving per-parameter init streams
// from dotted parameter names.
std::uint64_t fnv1a64(const char* s);

}  // namespace pmap
