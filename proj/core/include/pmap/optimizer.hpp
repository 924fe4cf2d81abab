#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pmap/param.hpp"
#include "pmap/tensor.hpp"

namespace pmap {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

// Per-parameter first/second moments plus the shared step counter, keyed by
// parameter name. Moments are created lazily with zeros.
class AdamState {
 public:
  std::uint64_t step_count() const { return t_; }

  struct Moments {
    Tensor m;
    Tensor v;
  };
  const std::map<std::string, Moments>& moments() const { return moments_; }

 private:
  friend void adam_step(ParamRefs& params, AdamState& state,
                        const AdamConfig& cfg);
  std::map<std::string, Moments> moments_;
  std::uint64_t t_ = 0;
};

// Standard bias-corrected Adam update over all non-frozen params. Gradients
// must already be accumulated; they are zeroed after the step. Throws
// TrainingError naming the parameter if its gradient is non-finite.
void adam_step(ParamRefs& params, AdamState& state, const AdamConfig& cfg);

}  // namespace pmap
