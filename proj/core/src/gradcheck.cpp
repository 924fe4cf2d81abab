#include "pmap/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "pmap/errors.hpp"

namespace pmap {

namespace {

double sum_squares(const std::vector<Tensor>& outputs) {
  double loss = 0.0;
  for (const Tensor& t : outputs) {
    for (std::size_t i = 0; i < t.size(); ++i) loss += t[i] * t[i];
  }
  return loss;
}

double rel_err(double analytic, double numeric) {
  double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " max_rel_err=" << max_rel_err
     << " tol=" << tol << " worst=" << worst_entry;
  return os.str();
}

GradCheckReport grad_check(const GradCheckTarget& target, double eps,
                           double tol) {
  if (eps < 1e-6 || eps > 1e-3) {
    throw ConfigError("grad_check: eps must lie in [1e-6, 1e-3]");
  }
  GradCheckReport report;
  report.tol = tol;

  for (Param* p : target.params) p->zero_grad();
  std::vector<Tensor> input_grads = target.backward();
  if (input_grads.size() != target.inputs.size()) {
    throw DimensionError("grad_check: backward returned " +
                         std::to_string(input_grads.size()) +
                         " input grads, expected " +
                         std::to_string(target.inputs.size()));
  }

  auto check_tensor = [&](const std::string& name, Tensor* location,
                          const Tensor& analytic) {
    if (!analytic.all_finite()) {
      throw NumericError("grad_check: non-finite analytic gradient for " + name);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < location->size(); ++i) {
      double saved = (*location)[i];
      (*location)[i] = saved + eps;
      double lp = sum_squares(target.forward());
      (*location)[i] = saved - eps;
      double lm = sum_squares(target.forward());
      (*location)[i] = saved;
      double numeric = (lp - lm) / (2.0 * eps);
      if (!std::isfinite(numeric)) {
        throw NumericError("grad_check: non-finite numeric gradient for " + name);
      }
      double err = rel_err(analytic[i], numeric);
      if (err > worst) worst = err;
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_entry = name + "[" + std::to_string(i) + "]";
      }
    }
    report.per_tensor.emplace_back(name, worst);
  };

  for (Param* p : target.params) {
    Tensor analytic = p->grad;  // copy before perturbation loops
    check_tensor(p->name, &p->value, analytic);
  }
  for (std::size_t k = 0; k < target.inputs.size(); ++k) {
    check_tensor(target.inputs[k].first, target.inputs[k].second,
                 input_grads[k]);
  }

  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace pmap
