#include "pmap/optimizer.hpp"

#include <cmath>

#include "pmap/errors.hpp"

namespace pmap {

Rng param_stream(std::uint64_t seed, const std::string& name) {
  return Rng(seed, fnv1a64(name.c_str()));
}

Param make_uniform_param(std::string name, std::vector<std::size_t> shape,
                         double limit, std::uint64_t seed) {
  Tensor value(shape);
  Rng rng = param_stream(seed, name);
  for (std::size_t i = 0; i < value.size(); ++i) {
    value[i] = rng.uniform(-limit, limit);
  }
  return Param(std::move(name), std::move(value));
}

Param make_xavier_param(std::string name, std::size_t fan_in,
                        std::size_t fan_out, std::uint64_t seed) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return make_uniform_param(std::move(name), {fan_in, fan_out}, limit, seed);
}

Param make_zeros_param(std::string name, std::vector<std::size_t> shape) {
  return Param(std::move(name), Tensor(std::move(shape)));
}

Param make_ones_param(std::string name, std::vector<std::size_t> shape) {
  Tensor value(std::move(shape));
  for (std::size_t i = 0; i < value.size(); ++i) value[i] = 1.0;
  return Param(std::move(name), std::move(value));
}

void adam_step(ParamRefs& params, AdamState& state, const AdamConfig& cfg) {
  if (cfg.lr <= 0) throw ConfigError("adam: learning rate must be positive");
  if (cfg.beta1 <= 0 || cfg.beta1 >= 1 || cfg.beta2 <= 0 || cfg.beta2 >= 1) {
    throw ConfigError("adam: betas must lie in (0, 1)");
  }
  state.t_ += 1;
  double t = static_cast<double>(state.t_);
  double bc1 = 1.0 - std::pow(cfg.beta1, t);
  double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (Param* p : params) {
    if (p->frozen) {
      p->zero_grad();
      continue;
    }
    if (!p->grad.all_finite()) {
      throw TrainingError("adam: non-finite gradient for parameter " + p->name);
    }
    auto [it, inserted] = state.moments_.try_emplace(p->name);
    AdamState::Moments& mom = it->second;
    if (inserted) {
      mom.m = Tensor(p->value.shape());
      mom.v = Tensor(p->value.shape());
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double g = p->grad[i];
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
      double mhat = mom.m[i] / bc1;
      double vhat = mom.v[i] / bc2;
      p->value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p->zero_grad();
  }
}

}  // namespace pmap
