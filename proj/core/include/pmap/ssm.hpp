#pragma once

#include <cstddef>
#include <vector>

#include "pmap/rng.hpp"
#include "pmap/tensor.hpp"

namespace pmap {

// Single-input single-output continuous-time state-space system
//   h'(t) = A h(t) + B x(t),  y(t) = C h(t) + D x(t)
// with A real diagonal and Hurwitz-stable by construction: A_ii =
// -exp(a_log_i). The step size is likewise positive by construction:
// delta = exp(delta_log), measured in timesteps.
struct ContinuousSSM {
  Tensor a_log;  // [H]
  Tensor b;      // [H], column vector B
  Tensor c;      // [H], row vector C
  double d = 0.0;
  double delta_log = 0.0;

  std::size_t state_dim() const { return a_log.size(); }

  // a_log_i = log(0.5 + i) gives log-spaced decay rates; delta log-uniform
  // in [1e-3, 1e-1]; b, c standard normal scaled by 1/sqrt(H); d = 1.
  static ContinuousSSM init(std::size_t h, Rng& rng);
};

// Zero-order-hold discretization of the above. The stability invariant
// 0 < a_bar_i < 1 follows from A_ii < 0 and delta > 0.
struct DiscreteSSM {
  Tensor a_bar;  // [H], diagonal of Ā = exp(delta·A)
  Tensor b_bar;  // [H]
  Tensor c;      // [H]
  double d = 0.0;

  std::size_t state_dim() const { return a_bar.size(); }
};

// Impulse-response taps used as a causal convolution filter:
//   taps[0] = C·B̄ + D,  taps[k] = C·Ā^k·B̄ for k >= 1.
// D contributes to tap 0 only, which is what makes the convolution agree
// with the recurrence (D multiplies the current input).
struct Kernel {
  Tensor taps;  // [S]
};

//   a_bar_i = exp(delta·A_ii)
//   b_bar_i = ((exp(delta·A_ii) - 1) / A_ii) · b_i
// with the second-order Taylor fallback b_bar_i = delta·(1 + delta·A_ii/2)·b_i
// when |delta·A_ii| < 1e-8. C and D pass through unchanged.
DiscreteSSM discretize_zoh(const ContinuousSSM& ssm);

// Sequential recurrence from h_0 = 0:
//   h_k = Ā h_{k-1} + B̄ x_k,  y_k = C h_k + D x_k.
Tensor ssm_scan(const DiscreteSSM& disc, const Tensor& x);

// Impulse-response taps, computed iteratively through the diagonal in
// O(s·H).
Kernel kernel_taps(const DiscreteSSM& disc, std::size_t s);

// Causal convolution y_t = Σ_{i=0..t} taps[i]·x_{t-i} (zero-padded left).
// Direct O(S²) evaluation; this is the reference the FFT path is checked
// against. Kernel length must equal the signal length.
Tensor causal_conv(const Tensor& x, const Kernel& k);
// Same contract via a zero-padded radix-2 FFT; must match causal_conv
// within 1e-9.
Tensor causal_conv_fft(const Tensor& x, const Kernel& k);

// ---- Multi-channel bank -----------------------------------------------------

// N_c independent channels plus a per-timestep linear mix of the channel
// outputs. Equivalent to one lifted block-diagonal system of state dimension
// H·N_c; the lifted matrices are never materialized (tests rebuild them
// explicitly to prove equivalence).
struct ChannelBank {
  std::vector<ContinuousSSM> channels;
  Tensor mix_w;  // [N_c × N_c]
  Tensor mix_b;  // [N_c]

  std::size_t channel_count() const { return channels.size(); }

  static ChannelBank init(std::size_t channels, std::size_t h, Rng& rng);
};

enum class SsmMode { kScan, kConv, kConvFft };

// Processes column j of x by channels[j], then mixes per timestep:
// out = y · mix_wᵀ + mix_b. x is [S × N_c].
Tensor multichannel_forward(const ChannelBank& bank, const Tensor& x,
                            SsmMode mode);

// ---- Training support for the scan path -------------------------------------

struct ScanCache {
  Tensor h;  // [S × H] hidden states
};

Tensor ssm_scan_cached(const DiscreteSSM& disc, const Tensor& x,
                       ScanCache& cache);

struct ScanGrads {
  Tensor da_bar, db_bar, dc;
  double dd = 0.0;
  Tensor dx;
};

// Backpropagation through the recurrence, given upstream dL/dy.
ScanGrads ssm_scan_backward(const DiscreteSSM& disc, const Tensor& x,
                            const ScanCache& cache, const Tensor& dy);

struct ZohGrads {
  Tensor da_log, db;
  double ddelta_log = 0.0;
};

// Chain rule through the discretization, mapping (dĀ, dB̄, and dB̄'s
// dependence on b) back to the continuous parameterization. dc and dd pass
// through unchanged and are not included.
ZohGrads discretize_zoh_backward(const ContinuousSSM& ssm,
                                 const DiscreteSSM& disc, const Tensor& da_bar,
                                 const Tensor& db_bar);

}  // namespace pmap
