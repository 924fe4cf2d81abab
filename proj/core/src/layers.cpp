#include "pmap/layers.hpp"

#include <cmath>

#include "pmap/errors.hpp"

namespace pmap {

namespace {

Tensor col_block(const Tensor& x, std::size_t begin, std::size_t width) {
  std::size_t m = x.rows(), n = x.cols();
  Tensor out({m, width});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data() + i * n + begin;
    double* orow = out.data() + i * width;
    for (std::size_t j = 0; j < width; ++j) orow[j] = row[j];
  }
  return out;
}

void add_col_block(Tensor& dst, const Tensor& src, std::size_t begin) {
  std::size_t m = dst.rows(), n = dst.cols(), w = src.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = dst.data() + i * n + begin;
    const double* srow = src.data() + i * w;
    for (std::size_t j = 0; j < w; ++j) row[j] += srow[j];
  }
}

}  // namespace

// ---- Linear ------------------------------------------------------------------

Linear::Linear(const std::string& name, std::size_t in, std::size_t out,
               bool bias, std::uint64_t seed)
    : w(make_xavier_param(name + ".w", in, out, seed)), has_bias(bias) {
  if (bias) b = make_zeros_param(name + ".b", {out});
}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = matmul(x, w.value);
  if (has_bias) {
    std::size_t m = y.rows(), n = y.cols();
    for (std::size_t i = 0; i < m; ++i) {
      double* row = y.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += b.value[j];
    }
  }
  return y;
}

Tensor Linear::forward(const Tensor& x, LinearCache& cache) const {
  cache.x = x;
  return forward(x);
}

Tensor Linear::backward(const Tensor& dy, const LinearCache& cache) {
  matmul_tn_acc(w.grad, cache.x, dy);
  if (has_bias) {
    std::size_t m = dy.rows(), n = dy.cols();
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = dy.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) b.grad[j] += row[j];
    }
  }
  return matmul_nt(dy, w.value);
}

void Linear::collect(ParamRefs& out) {
  out.push_back(&w);
  if (has_bias) out.push_back(&b);
}

// ---- Layer norm --------------------------------------------------------------

LayerNorm::LayerNorm(const std::string& name, std::size_t width, double eps)
    : gain(make_ones_param(name + ".gain", {width})),
      bias(make_zeros_param(name + ".bias", {width})),
      eps(eps) {}

Tensor LayerNorm::forward(const Tensor& x) const {
  LayerNormCache scratch;
  return forward(x, scratch);
}

Tensor LayerNorm::forward(const Tensor& x, LayerNormCache& cache) const {
  std::size_t m = x.rows(), n = x.cols();
  cache.xhat = Tensor({m, n});
  cache.inv_std.assign(m, 0.0);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double d = row[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    double inv = 1.0 / std::sqrt(var + eps);
    cache.inv_std[i] = inv;
    double* xh = cache.xhat.data() + i * n;
    double* orow = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      xh[j] = (row[j] - mean) * inv;
      orow[j] = xh[j] * gain.value[j] + bias.value[j];
    }
  }
  return out;
}

Tensor LayerNorm::backward(const Tensor& dy, const LayerNormCache& cache) {
  std::size_t m = dy.rows(), n = dy.cols();
  Tensor dx({m, n});
  double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* dyr = dy.data() + i * n;
    const double* xh = cache.xhat.data() + i * n;
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double dxh = dyr[j] * gain.value[j];
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * xh[j];
      gain.grad[j] += dyr[j] * xh[j];
      bias.grad[j] += dyr[j];
    }
    mean_dxhat *= inv_n;
    mean_dxhat_xhat *= inv_n;
    double inv = cache.inv_std[i];
    double* dxr = dx.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double dxh = dyr[j] * gain.value[j];
      dxr[j] = inv * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
    }
  }
  return dx;
}

void LayerNorm::collect(ParamRefs& out) {
  out.push_back(&gain);
  out.push_back(&bias);
}

// ---- Multi-head cross-attention -----------------------------------------------

CrossAttention::CrossAttention(const std::string& name, std::size_t d_in,
                               std::size_t d_out, std::size_t heads,
                               std::uint64_t seed)
    : wq(make_xavier_param(name + ".wq", d_in, d_out, seed)),
      wk(make_xavier_param(name + ".wk", d_in, d_out, seed)),
      wv(make_xavier_param(name + ".wv", d_in, d_out, seed)),
      heads(heads) {
  if (heads == 0 || d_out % heads != 0) {
    throw ConfigError("cross_attention: head count " + std::to_string(heads) +
                      " must divide d_out " + std::to_string(d_out));
  }
}

Tensor CrossAttention::forward(const Tensor& xa, const Tensor& xb) const {
  CrossAttentionCache scratch;
  return forward(xa, xb, scratch);
}

Tensor CrossAttention::forward(const Tensor& xa, const Tensor& xb,
                               CrossAttentionCache& cache) const {
  if (xa.cols() != wq.value.rows() || xb.cols() != wq.value.rows()) {
    throw DimensionError("cross_attention: input width " + xa.shape_str() +
                         "/" + xb.shape_str() + " vs weights " +
                         wq.value.shape_str());
  }
  cache.xa = xa;
  cache.xb = xb;
  cache.q = matmul(xa, wq.value);
  cache.k = matmul(xb, wk.value);
  cache.v = matmul(xb, wv.value);
  std::size_t d_out = cache.q.cols();
  std::size_t dk = d_out / heads;
  double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  std::size_t p = xa.rows();
  Tensor out({p, d_out});
  cache.attn.clear();
  cache.attn.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = col_block(cache.q, h * dk, dk);
    Tensor kh = col_block(cache.k, h * dk, dk);
    Tensor vh = col_block(cache.v, h * dk, dk);
    Tensor logits = scale(matmul_nt(qh, kh), inv_sqrt_dk);
    Tensor a = softmax_rows(logits);
    add_col_block(out, matmul(a, vh), h * dk);
    cache.attn.push_back(std::move(a));
  }
  return out;
}

std::pair<Tensor, Tensor> CrossAttention::backward(
    const Tensor& dout, const CrossAttentionCache& cache) {
  std::size_t d_out = cache.q.cols();
  std::size_t dk = d_out / heads;
  double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor dq({cache.q.rows(), d_out});
  Tensor dkk({cache.k.rows(), d_out});
  Tensor dv({cache.v.rows(), d_out});
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = col_block(cache.q, h * dk, dk);
    Tensor kh = col_block(cache.k, h * dk, dk);
    Tensor vh = col_block(cache.v, h * dk, dk);
    Tensor doh = col_block(dout, h * dk, dk);
    const Tensor& a = cache.attn[h];
    Tensor da = matmul_nt(doh, vh);
    Tensor dvh = matmul_tn(a, doh);
    Tensor dlogits = scale(softmax_rows_backward(a, da), inv_sqrt_dk);
    Tensor dqh = matmul(dlogits, kh);
    Tensor dkh = matmul_tn(dlogits, qh);
    add_col_block(dq, dqh, h * dk);
    add_col_block(dkk, dkh, h * dk);
    add_col_block(dv, dvh, h * dk);
  }
  matmul_tn_acc(wq.grad, cache.xa, dq);
  matmul_tn_acc(wk.grad, cache.xb, dkk);
  matmul_tn_acc(wv.grad, cache.xb, dv);
  Tensor dxa = matmul_nt(dq, wq.value);
  Tensor dxb = matmul_nt(dkk, wk.value);
  add_inplace(dxb, matmul_nt(dv, wv.value));
  return {std::move(dxa), std::move(dxb)};
}

void CrossAttention::collect(ParamRefs& out) {
  out.push_back(&wq);
  out.push_back(&wk);
  out.push_back(&wv);
}

// ---- Feed-forward --------------------------------------------------------------

FeedForward::FeedForward(const std::string& name, std::size_t width,
                         std::uint64_t seed)
    : lin1(name + ".lin1", width, 4 * width, true, seed),
      lin2(name + ".lin2", 4 * width, width, true, seed) {}

Tensor FeedForward::forward(const Tensor& x) const {
  return lin2.forward(gelu(lin1.forward(x)));
}

Tensor FeedForward::forward(const Tensor& x, FeedForwardCache& cache) const {
  cache.z1 = lin1.forward(x, cache.l1);
  return lin2.forward(gelu(cache.z1), cache.l2);
}

Tensor FeedForward::backward(const Tensor& dy, const FeedForwardCache& cache) {
  Tensor dg = lin2.backward(dy, cache.l2);
  Tensor dz1 = hadamard(dg, gelu_grad(cache.z1));
  return lin1.backward(dz1, cache.l1);
}

void FeedForward::collect(ParamRefs& out) {
  lin1.collect(out);
  lin2.collect(out);
}

// ---- Encoder layer --------------------------------------------------------------

EncoderLayer::EncoderLayer(const std::string& name, std::size_t width,
                           std::size_t heads, std::uint64_t seed)
    : ln1(name + ".ln1", width),
      ln2(name + ".ln2", width),
      attn(name + ".attn", width, width, heads, seed),
      proj(name + ".proj", width, width, true, seed),
      ffn(name + ".ffn", width, seed) {}

Tensor EncoderLayer::forward(const Tensor& x) const {
  EncoderLayerCache scratch;
  return forward(x, scratch);
}

Tensor EncoderLayer::forward(const Tensor& x, EncoderLayerCache& cache) const {
  Tensor n1 = ln1.forward(x, cache.ln1);
  Tensor a = proj.forward(attn.forward(n1, n1, cache.attn), cache.proj);
  Tensor r1 = add(x, a);
  Tensor n2 = ln2.forward(r1, cache.ln2);
  Tensor f = ffn.forward(n2, cache.ffn);
  return add(r1, f);
}

Tensor EncoderLayer::backward(const Tensor& dy, const EncoderLayerCache& cache) {
  Tensor dn2 = ffn.backward(dy, cache.ffn);
  Tensor dr1 = ln2.backward(dn2, cache.ln2);
  add_inplace(dr1, dy);
  Tensor dattn = proj.backward(dr1, cache.proj);
  auto [dn1a, dn1b] = attn.backward(dattn, cache.attn);
  add_inplace(dn1a, dn1b);
  Tensor dx = ln1.backward(dn1a, cache.ln1);
  add_inplace(dx, dr1);
  return dx;
}

void EncoderLayer::collect(ParamRefs& out) {
  ln1.collect(out);
  attn.collect(out);
  proj.collect(out);
  ln2.collect(out);
  ffn.collect(out);
}

// ---- Decoder layer --------------------------------------------------------------

DecoderLayer::DecoderLayer(const std::string& name, std::size_t width,
                           std::size_t heads, std::uint64_t seed)
    : ln1(name + ".ln1", width),
      ln2(name + ".ln2", width),
      ln3(name + ".ln3", width),
      self_attn(name + ".self_attn", width, width, heads, seed),
      cross_attn(name + ".cross_attn", width, width, heads, seed),
      self_proj(name + ".self_proj", width, width, true, seed),
      cross_proj(name + ".cross_proj", width, width, true, seed),
      ffn(name + ".ffn", width, seed) {}

Tensor DecoderLayer::forward(const Tensor& queries, const Tensor& memory) const {
  DecoderLayerCache scratch;
  return forward(queries, memory, scratch);
}

Tensor DecoderLayer::forward(const Tensor& queries, const Tensor& memory,
                             DecoderLayerCache& cache) const {
  if (queries.cols() != memory.cols()) {
    throw DimensionError("decoder_layer: query width " + queries.shape_str() +
                         " vs memory width " + memory.shape_str());
  }
  Tensor n1 = ln1.forward(queries, cache.ln1);
  Tensor sa = self_proj.forward(self_attn.forward(n1, n1, cache.self_attn),
                                cache.self_proj);
  Tensor y1 = add(queries, sa);
  Tensor n2 = ln2.forward(y1, cache.ln2);
  Tensor ca = cross_proj.forward(
      cross_attn.forward(n2, memory, cache.cross_attn), cache.cross_proj);
  Tensor y2 = add(y1, ca);
  Tensor n3 = ln3.forward(y2, cache.ln3);
  Tensor f = ffn.forward(n3, cache.ffn);
  return add(y2, f);
}

std::pair<Tensor, Tensor> DecoderLayer::backward(const Tensor& dy,
                                                 const DecoderLayerCache& cache) {
  Tensor dn3 = ffn.backward(dy, cache.ffn);
  Tensor dy2 = ln3.backward(dn3, cache.ln3);
  add_inplace(dy2, dy);

  Tensor dca = cross_proj.backward(dy2, cache.cross_proj);
  auto [dn2, dmem] = cross_attn.backward(dca, cache.cross_attn);
  Tensor dy1 = ln2.backward(dn2, cache.ln2);
  add_inplace(dy1, dy2);

  Tensor dsa = self_proj.backward(dy1, cache.self_proj);
  auto [dn1a, dn1b] = self_attn.backward(dsa, cache.self_attn);
  add_inplace(dn1a, dn1b);
  Tensor dq = ln1.backward(dn1a, cache.ln1);
  add_inplace(dq, dy1);
  return {std::move(dq), std::move(dmem)};
}

void DecoderLayer::collect(ParamRefs& out) {
  ln1.collect(out);
  self_attn.collect(out);
  self_proj.collect(out);
  ln2.collect(out);
  cross_attn.collect(out);
  cross_proj.collect(out);
  ln3.collect(out);
  ffn.collect(out);
}

}  // namespace pmap
