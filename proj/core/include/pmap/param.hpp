#pragma once

#include <string>
#include <vector>

#include "pmap/rng.hpp"
#include "pmap/tensor.hpp"

namespace pmap {

// One trainable tensor. `name` is a dotted path unique within a model
// (e.g. "mtf.s4.block0.mix_w"); it keys checkpoint entries, optimizer
// moments, and per-parameter init streams. `grad` always has the shape of
// `value` and accumulates across backward calls until the optimizer zeroes
// it.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;

  Param() = default;
  Param(std::string name, Tensor value)
      : name(std::move(name)), value(std::move(value)),
        grad(this->value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }
  void freeze_zeroed() {
    value = Tensor(value.shape());
    zero_grad();
    frozen = true;
  }
};

using ParamRefs = std::vector<Param*>;

// Seeded initializers. Each parameter draws from a stream derived from the
// model seed and its own name, so adding or removing parameters elsewhere
// never shifts another parameter's init.
Rng param_stream(std::uint64_t seed, const std::string& name);
Param make_uniform_param(std::string name, std::vector<std::size_t> shape,
                         double limit, std::uint64_t seed);
// Xavier/Glorot uniform for a [fan_in x fan_out] weight.
Param make_xavier_param(std::string name, std::size_t fan_in,
                        std::size_t fan_out, std::uint64_t seed);
Param make_zeros_param(std::string name, std::vector<std::size_t> shape);
Param make_ones_param(std::string name, std::vector<std::size_t> shape);

}  // namespace pmap
