#include "pmap/ssm.hpp"

#include <cmath>

#include "pmap/errors.hpp"
#include "pmap/fft.hpp"

namespace pmap {

namespace {

// ZOH input factor g = (exp(delta·A) - 1)/A so that b_bar = g·b, with the
// Taylor fallback used when delta·A underflows the subtraction.
constexpr double kZohFallback = 1e-8;

double zoh_gain(double a, double delta, double a_bar) {
  double z = delta * a;
  if (std::fabs(z) < kZohFallback) return delta * (1.0 + 0.5 * z);
  return (a_bar - 1.0) / a;
}

}  // namespace

ContinuousSSM ContinuousSSM::init(std::size_t h, Rng& rng) {
  ContinuousSSM ssm;
  ssm.a_log = Tensor({h});
  ssm.b = Tensor({h});
  ssm.c = Tensor({h});
  double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t i = 0; i < h; ++i) {
    ssm.a_log[i] = std::log(0.5 + static_cast<double>(i));
  }
  for (std::size_t i = 0; i < h; ++i) ssm.b[i] = rng.normal() * inv_sqrt_h;
  for (std::size_t i = 0; i < h; ++i) ssm.c[i] = rng.normal() * inv_sqrt_h;
  ssm.d = 1.0;
  ssm.delta_log = rng.uniform(std::log(1e-3), std::log(1e-1));
  return ssm;
}

DiscreteSSM discretize_zoh(const ContinuousSSM& ssm) {
  std::size_t h = ssm.state_dim();
  DiscreteSSM disc;
  disc.a_bar = Tensor({h});
  disc.b_bar = Tensor({h});
  disc.c = ssm.c;
  disc.d = ssm.d;
  double delta = std::exp(ssm.delta_log);
  for (std::size_t i = 0; i < h; ++i) {
    double a = -std::exp(ssm.a_log[i]);
    double a_bar = std::exp(delta * a);
    disc.a_bar[i] = a_bar;
    disc.b_bar[i] = zoh_gain(a, delta, a_bar) * ssm.b[i];
  }
  return disc;
}

Tensor ssm_scan(const DiscreteSSM& disc, const Tensor& x) {
  std::size_t s = x.size();
  std::size_t h = disc.state_dim();
  Tensor y({s});
  std::vector<double> hid(h, 0.0);
  for (std::size_t k = 0; k < s; ++k) {
    double xk = x[k];
    double out = disc.d * xk;
    for (std::size_t i = 0; i < h; ++i) {
      hid[i] = disc.a_bar[i] * hid[i] + disc.b_bar[i] * xk;
      out += disc.c[i] * hid[i];
    }
    y[k] = out;
  }
  return y;
}

Kernel kernel_taps(const DiscreteSSM& disc, std::size_t s) {
  if (s < 1) throw DimensionError("kernel_taps: length must be >= 1");
  std::size_t h = disc.state_dim();
  Kernel kern;
  kern.taps = Tensor({s});
  std::vector<double> r(h);  // Ā^k · B̄, updated in place
  double t0 = disc.d;
  for (std::size_t i = 0; i < h; ++i) {
    r[i] = disc.b_bar[i];
    t0 += disc.c[i] * r[i];
  }
  kern.taps[0] = t0;
  for (std::size_t k = 1; k < s; ++k) {
    double tk = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
      r[i] *= disc.a_bar[i];
      tk += disc.c[i] * r[i];
    }
    kern.taps[k] = tk;
  }
  return kern;
}

Tensor causal_conv(const Tensor& x, const Kernel& k) {
  std::size_t s = x.size();
  if (k.taps.size() != s) {
    throw DimensionError("causal_conv: kernel length " +
                         std::to_string(k.taps.size()) +
                         " does not match signal length " + std::to_string(s));
  }
  Tensor y({s});
  for (std::size_t t = 0; t < s; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i <= t; ++i) acc += k.taps[i] * x[t - i];
    y[t] = acc;
  }
  return y;
}

Tensor causal_conv_fft(const Tensor& x, const Kernel& k) {
  std::size_t s = x.size();
  if (k.taps.size() != s) {
    throw DimensionError("causal_conv_fft: kernel length " +
                         std::to_string(k.taps.size()) +
                         " does not match signal length " + std::to_string(s));
  }
  std::size_t n = next_pow2(2 * s);
  std::vector<std::complex<double>> fx(n), fk(n);
  for (std::size_t i = 0; i < s; ++i) {
    fx[i] = x[i];
    fk[i] = k.taps[i];
  }
  fft_pow2(fx, false);
  fft_pow2(fk, false);
  for (std::size_t i = 0; i < n; ++i) fx[i] *= fk[i];
  fft_pow2(fx, true);
  Tensor y({s});
  for (std::size_t i = 0; i < s; ++i) y[i] = fx[i].real();
  return y;
}

ChannelBank ChannelBank::init(std::size_t channels, std::size_t h, Rng& rng) {
  ChannelBank bank;
  bank.channels.reserve(channels);
  for (std::size_t j = 0; j < channels; ++j) {
    bank.channels.push_back(ContinuousSSM::init(h, rng));
  }
  double limit = std::sqrt(6.0 / static_cast<double>(2 * channels));
  bank.mix_w = Tensor({channels, channels});
  for (std::size_t i = 0; i < bank.mix_w.size(); ++i) {
    bank.mix_w[i] = rng.uniform(-limit, limit);
  }
  bank.mix_b = Tensor({channels});
  return bank;
}

Tensor multichannel_forward(const ChannelBank& bank, const Tensor& x,
                            SsmMode mode) {
  std::size_t s = x.rows();
  std::size_t nc = x.cols();
  if (nc != bank.channel_count()) {
    throw DimensionError("multichannel_forward: input has " +
                         std::to_string(nc) + " channels, bank has " +
                         std::to_string(bank.channel_count()));
  }
  Tensor u({s, nc});
  Tensor col({s});
  for (std::size_t j = 0; j < nc; ++j) {
    for (std::size_t t = 0; t < s; ++t) col[t] = x[t * nc + j];
    DiscreteSSM disc = discretize_zoh(bank.channels[j]);
    Tensor yj;
    switch (mode) {
      case SsmMode::kScan:
        yj = ssm_scan(disc, col);
        break;
      case SsmMode::kConv:
        yj = causal_conv(col, kernel_taps(disc, s));
        break;
      case SsmMode::kConvFft:
        yj = causal_conv_fft(col, kernel_taps(disc, s));
        break;
    }
    for (std::size_t t = 0; t < s; ++t) u[t * nc + j] = yj[t];
  }
  Tensor out = matmul_nt(u, bank.mix_w);
  for (std::size_t t = 0; t < s; ++t) {
    for (std::size_t i = 0; i < nc; ++i) out[t * nc + i] += bank.mix_b[i];
  }
  require_finite(out, "multichannel_forward");
  return out;
}

Tensor ssm_scan_cached(const DiscreteSSM& disc, const Tensor& x,
                       ScanCache& cache) {
  std::size_t s = x.size();
  std::size_t h = disc.state_dim();
  cache.h = Tensor({s, h});
  Tensor y({s});
  std::vector<double> hid(h, 0.0);
  for (std::size_t k = 0; k < s; ++k) {
    double xk = x[k];
    double out = disc.d * xk;
    double* hrow = cache.h.data() + k * h;
    for (std::size_t i = 0; i < h; ++i) {
      hid[i] = disc.a_bar[i] * hid[i] + disc.b_bar[i] * xk;
      hrow[i] = hid[i];
      out += disc.c[i] * hid[i];
    }
    y[k] = out;
  }
  return y;
}

ScanGrads ssm_scan_backward(const DiscreteSSM& disc, const Tensor& x,
                            const ScanCache& cache, const Tensor& dy) {
  std::size_t s = x.size();
  std::size_t h = disc.state_dim();
  ScanGrads g;
  g.da_bar = Tensor({h});
  g.db_bar = Tensor({h});
  g.dc = Tensor({h});
  g.dx = Tensor({s});
  std::vector<double> dh(h, 0.0);
  for (std::size_t k = s; k-- > 0;) {
    double dyk = dy[k];
    double xk = x[k];
    const double* hk = cache.h.data() + k * h;
    const double* hprev = (k > 0) ? cache.h.data() + (k - 1) * h : nullptr;
    g.dd += dyk * xk;
    double dxk = disc.d * dyk;
    for (std::size_t i = 0; i < h; ++i) {
      g.dc[i] += dyk * hk[i];
      double dhi = dh[i] + disc.c[i] * dyk;  // total dL/dh_k
      g.da_bar[i] += dhi * (hprev ? hprev[i] : 0.0);
      g.db_bar[i] += dhi * xk;
      dxk += disc.b_bar[i] * dhi;
      dh[i] = disc.a_bar[i] * dhi;
    }
    g.dx[k] = dxk;
  }
  return g;
}

ZohGrads discretize_zoh_backward(const ContinuousSSM& ssm,
                                 const DiscreteSSM& disc, const Tensor& da_bar,
                                 const Tensor& db_bar) {
  std::size_t h = ssm.state_dim();
  ZohGrads g;
  g.da_log = Tensor({h});
  g.db = Tensor({h});
  double delta = std::exp(ssm.delta_log);
  double ddelta = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    double a = -std::exp(ssm.a_log[i]);
    double a_bar = disc.a_bar[i];
    double z = delta * a;
    double gain, dgain_da, dgain_ddelta;
    if (std::fabs(z) < kZohFallback) {
      gain = delta * (1.0 + 0.5 * z);
      dgain_da = 0.5 * delta * delta;
      dgain_ddelta = 1.0 + z;
    } else {
      gain = (a_bar - 1.0) / a;
      dgain_da = (delta * a_bar) / a - (a_bar - 1.0) / (a * a);
      dgain_ddelta = a_bar;
    }
    double da = da_bar[i] * delta * a_bar + db_bar[i] * ssm.b[i] * dgain_da;
    ddelta += da_bar[i] * a * a_bar + db_bar[i] * ssm.b[i] * dgain_ddelta;
    g.db[i] = db_bar[i] * gain;
    // A_i = -exp(a_log_i), so dA/da_log = A.
    g.da_log[i] = da * a;
  }
  g.ddelta_log = ddelta * delta;
  return g;
}

}  // namespace pmap
