#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pmap/param.hpp"
#include "pmap/tensor.hpp"

namespace pmap {

// Layers follow one convention: forward(x, cache) is const and writes the
// activations backward needs into the caller-owned cache, so parameter
// snapshots can run inference concurrently; backward(dy, cache) accumulates
// into Param::grad and returns the input gradient. Rows are tokens,
// columns are features.

// ---- Linear ------------------------------------------------------------------

struct LinearCache {
  Tensor x;
};

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, bool bias,
         std::uint64_t seed);

  Tensor forward(const Tensor& x) const;
  Tensor forward(const Tensor& x, LinearCache& cache) const;
  Tensor backward(const Tensor& dy, const LinearCache& cache);
  void collect(ParamRefs& out);

  Param w;  // [in × out]
  Param b;  // [out]; empty when bias disabled
  bool has_bias = false;
};

// ---- Layer norm --------------------------------------------------------------

struct LayerNormCache {
  Tensor xhat;
  std::vector<double> inv_std;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t width, double eps = 1e-5);

  Tensor forward(const Tensor& x) const;
  Tensor forward(const Tensor& x, LayerNormCache& cache) const;
  Tensor backward(const Tensor& dy, const LayerNormCache& cache);
  void collect(ParamRefs& out);

  Param gain;
  Param bias;
  double eps = 1e-5;
};

// ---- Multi-head cross-attention -----------------------------------------------
//
//   CrossAttn(Xa, Xb) = softmax(Xa·Wq·(Xb·Wk)ᵀ / sqrt(d_k)) · Xb·Wv
//
// evaluated per head over column blocks of width d_k = d_out / heads, heads
// concatenated. No masking anywhere; sequences are fully visible. Self
// attention is the xa == xb case (callers sum the two input gradients).

struct CrossAttentionCache {
  Tensor xa, xb;
  Tensor q, k, v;
  std::vector<Tensor> attn;  // per-head softmax weights [p × q]
};

class CrossAttention {
 public:
  CrossAttention() = default;
  CrossAttention(const std::string& name, std::size_t d_in, std::size_t d_out,
                 std::size_t heads, std::uint64_t seed);

  Tensor forward(const Tensor& xa, const Tensor& xb) const;
  Tensor forward(const Tensor& xa, const Tensor& xb,
                 CrossAttentionCache& cache) const;
  // Returns (dxa, dxb).
  std::pair<Tensor, Tensor> backward(const Tensor& dout,
                                     const CrossAttentionCache& cache);
  void collect(ParamRefs& out);

  Param wq, wk, wv;  // [d_in × d_out]
  std::size_t heads = 1;
};

// ---- Position-wise feed-forward (expansion 4, gelu) ---------------------------

struct FeedForwardCache {
  LinearCache l1;
  Tensor z1;  // pre-gelu
  LinearCache l2;
};

class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(const std::string& name, std::size_t width, std::uint64_t seed);

  Tensor forward(const Tensor& x) const;
  Tensor forward(const Tensor& x, FeedForwardCache& cache) const;
  Tensor backward(const Tensor& dy, const FeedForwardCache& cache);
  void collect(ParamRefs& out);

  Linear lin1, lin2;
};

// ---- Transformer encoder layer -------------------------------------------------
//
// Pre-norm residual: y = r + FFN(LN2(r)) with r = x + Proj(SelfAttn(LN1(x))).

struct EncoderLayerCache {
  LayerNormCache ln1, ln2;
  CrossAttentionCache attn;
  LinearCache proj;
  FeedForwardCache ffn;
};

class EncoderLayer {
 public:
  EncoderLayer() = default;
  EncoderLayer(const std::string& name, std::size_t width, std::size_t heads,
               std::uint64_t seed);

  Tensor forward(const Tensor& x) const;
  Tensor forward(const Tensor& x, EncoderLayerCache& cache) const;
  Tensor backward(const Tensor& dy, const EncoderLayerCache& cache);
  void collect(ParamRefs& out);

  LayerNorm ln1, ln2;
  CrossAttention attn;
  Linear proj;
  FeedForward ffn;
};

// ---- Transformer decoder layer -------------------------------------------------
//
// Pre-norm residual self-attention on the queries, then residual
// cross-attention to the memory (memory enters un-normalized), then residual
// FFN. Output shape equals the query shape.

struct DecoderLayerCache {
  LayerNormCache ln1, ln2, ln3;
  CrossAttentionCache self_attn, cross_attn;
  LinearCache self_proj, cross_proj;
  FeedForwardCache ffn;
};

class DecoderLayer {
 public:
  DecoderLayer() = default;
  DecoderLayer(const std::string& name, std::size_t width, std::size_t heads,
               std::uint64_t seed);

  Tensor forward(const Tensor& queries, const Tensor& memory) const;
  Tensor forward(const Tensor& queries, const Tensor& memory,
                 DecoderLayerCache& cache) const;
  // Returns (dqueries, dmemory).
  std::pair<Tensor, Tensor> backward(const Tensor& dy,
                                     const DecoderLayerCache& cache);
  void collect(ParamRefs& out);

  LayerNorm ln1, ln2, ln3;
  CrossAttention self_attn, cross_attn;
  Linear self_proj, cross_proj;
  FeedForward ffn;
};

}  // namespace pmap
