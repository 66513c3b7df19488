#include "gopforge/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gopforge/error.hpp"

namespace gopforge {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_input(const Matrix& input, std::size_t fan_in, std::string_view op) {
  if (input.cols() != fan_in) {
    throw ShapeError(std::string(op) + ": input has " + std::to_string(input.cols()) +
                     " columns, layer expects " + std::to_string(fan_in));
  }
}

Matrix transpose_weights(const Matrix& w) { return transpose(w); }

template <NodalOp Op>
void nodal_row_of(const double* w, const double* y, std::size_t n, double* z, double* dw, double* dy) {
  for (std::size_t k = 0; k < n; ++k) z[k] = detail::nodal_eval(Op, w[k], y[k], dw[k], dy[k]);
}

// One neuron's synapses, with the operator dispatched once per row.
void nodal_row(NodalOp op, const double* w, const double* y, std::size_t n, double* z, double* dw,
               double* dy) {
  switch (op) {
    case NodalOp::kMultiplication: return nodal_row_of<NodalOp::kMultiplication>(w, y, n, z, dw, dy);
    case NodalOp::kExponential: return nodal_row_of<NodalOp::kExponential>(w, y, n, z, dw, dy);
    case NodalOp::kHarmonic: return nodal_row_of<NodalOp::kHarmonic>(w, y, n, z, dw, dy);
    case NodalOp::kQuadratic: return nodal_row_of<NodalOp::kQuadratic>(w, y, n, z, dw, dy);
    case NodalOp::kGaussian: return nodal_row_of<NodalOp::kGaussian>(w, y, n, z, dw, dy);
    case NodalOp::kDoG: return nodal_row_of<NodalOp::kDoG>(w, y, n, z, dw, dy);
  }
}

// Shared forward kernel; fills cache arrays only when `cache` is non-null.
Matrix gop_run(const GopLayerParams& params, const Matrix& input, GopCache* cache) {
  require_input(input, params.fan_in(), "gop_forward");
  check_finite(input, "gop_forward input");
  const std::size_t batch = input.rows();
  const std::size_t fan_in = params.fan_in();
  const std::size_t fan_out = params.fan_out();
  const OperatorSet& op = params.opset;
  const bool keep_z = op.pool != PoolOp::kSummation;

  const Matrix wt = transpose_weights(params.weights);
  Matrix out(batch, fan_out);
  std::vector<double> z_local(fan_in);
  std::vector<double> dw_local(fan_in);
  std::vector<double> dy_local(fan_in);

  if (cache != nullptr) {
    cache->batch = batch;
    cache->fan_in = fan_in;
    cache->fan_out = fan_out;
    cache->opset_index = op.index;
    const std::size_t n = batch * fan_out * fan_in;
    cache->z.assign(keep_z ? n : 0, 0.0);
    cache->dz_dw.assign(n, 0.0);
    cache->dz_dy.assign(n, 0.0);
    cache->pre_activation = Matrix(batch, fan_out);
    cache->act_grad.assign(batch * fan_out, 0.0);
  }

  for (std::size_t s = 0; s < batch; ++s) {
    const double* y = input.row(s).data();
    for (std::size_t i = 0; i < fan_out; ++i) {
      const double* w = wt.row(i).data();
      const std::size_t base = (s * fan_out + i) * fan_in;
      double* z = cache && keep_z ? cache->z.data() + base : z_local.data();
      double* dw = cache ? cache->dz_dw.data() + base : dw_local.data();
      double* dy = cache ? cache->dz_dy.data() + base : dy_local.data();
      nodal_row(op.nodal, w, y, fan_in, z, dw, dy);
      const double x = detail::pool_eval(op.pool, {z, fan_in}) + params.bias[i];
      out(s, i) = detail::act_eval(op.act, x);
      if (cache != nullptr) {
        cache->pre_activation(s, i) = x;
        cache->act_grad[s * fan_out + i] = detail::act_derivative(op.act, x);
      }
    }
  }
  return out;
}

void affine(const Matrix& input, const Matrix& w, const std::vector<double>& b, Matrix& out) {
  out = Matrix(input.rows(), w.cols());
  for (std::size_t s = 0; s < input.rows(); ++s) {
    double* o = out.row(s).data();
    std::copy(b.begin(), b.end(), o);
    const double* x = input.row(s).data();
    for (std::size_t k = 0; k < input.cols(); ++k) {
      const double xk = x[k];
      if (xk == 0.0) continue;
      const double* wr = w.row(k).data();
      for (std::size_t j = 0; j < w.cols(); ++j) o[j] += xk * wr[j];
    }
  }
}

}  // namespace

GopLayerParams make_gop_layer(std::size_t fan_in, std::size_t fan_out, const OperatorSet& opset,
                              RngStream& init) {
  if (fan_in == 0 || fan_out == 0) {
    throw ValidationError("make_gop_layer: layer dimensions must be positive, got " +
                          shape_str(fan_in, fan_out));
  }
  if (fan_in < pool_arity_floor(opset.pool)) {
    throw ValidationError("make_gop_layer: pooling operator '" +
                          std::string(to_string(opset.pool)) + "' needs fan_in >= " +
                          std::to_string(pool_arity_floor(opset.pool)) + ", got " +
                          std::to_string(fan_in));
  }
  GopLayerParams p{Matrix(fan_in, fan_out, rng_uniform(init, -kInitRange, kInitRange,
                                                       fan_in * fan_out)),
                   std::vector<double>(fan_out, 0.0), opset};
  return p;
}

void validate_gop_layer(const GopLayerParams& params) {
  if (params.fan_in() == 0 || params.fan_out() == 0)
    throw ValidationError("GOP layer has an empty weight matrix");
  if (params.bias.size() != params.fan_out())
    throw ValidationError("GOP layer bias length " + std::to_string(params.bias.size()) +
                          " does not match fan_out " + std::to_string(params.fan_out()));
  if (params.fan_in() < pool_arity_floor(params.opset.pool))
    throw ValidationError("GOP layer fan_in " + std::to_string(params.fan_in()) +
                          " below arity floor of '" + std::string(to_string(params.opset.pool)) +
                          "'");
  if (!all_finite(params.weights.data()) || !all_finite(params.bias))
    throw ValidationError("GOP layer has non-finite parameters");
}

GopForward gop_forward(const GopLayerParams& params, const Matrix& input) {
  GopForward f;
  f.output = gop_run(params, input, &f.cache);
  return f;
}

Matrix gop_infer(const GopLayerParams& params, const Matrix& input) {
  return gop_run(params, input, nullptr);
}

GopGrads gop_backward(const GopLayerParams& params, const GopCache& cache, const Matrix& upstream,
                      bool want_input_grad) {
  const std::size_t fan_in = params.fan_in();
  const std::size_t fan_out = params.fan_out();
  if (cache.fan_in != fan_in || cache.fan_out != fan_out ||
      cache.opset_index != params.opset.index || cache.dz_dw.size() != cache.batch * fan_in * fan_out) {
    throw ContractError("gop_backward: cache does not belong to this layer");
  }
  if (upstream.rows() != cache.batch || upstream.cols() != fan_out) {
    throw ContractError("gop_backward: upstream gradient is " +
                        shape_str(upstream.rows(), upstream.cols()) + ", cache expects " +
                        shape_str(cache.batch, fan_out));
  }
  const PoolOp pool = params.opset.pool;
  const bool summation = pool == PoolOp::kSummation;

  GopGrads g;
  Matrix wgrad_t(fan_out, fan_in);
  g.bias_grad.assign(fan_out, 0.0);
  if (want_input_grad) g.input_grad = Matrix(cache.batch, fan_in);
  std::vector<double> pool_grad(fan_in, 1.0);

  for (std::size_t s = 0; s < cache.batch; ++s) {
    for (std::size_t i = 0; i < fan_out; ++i) {
      const double gx = upstream(s, i) * cache.act_grad[s * fan_out + i];
      if (gx == 0.0) continue;
      g.bias_grad[i] += gx;
      const std::size_t base = (s * fan_out + i) * fan_in;
      if (!summation) detail::pool_gradient(pool, {cache.z.data() + base, fan_in}, pool_grad);
      const double* dw = cache.dz_dw.data() + base;
      const double* dy = cache.dz_dy.data() + base;
      double* wg = wgrad_t.row(i).data();
      for (std::size_t k = 0; k < fan_in; ++k) wg[k] += gx * pool_grad[k] * dw[k];
      if (want_input_grad) {
        double* ig = g.input_grad.row(s).data();
        for (std::size_t k = 0; k < fan_in; ++k) ig[k] += gx * pool_grad[k] * dy[k];
      }
    }
  }
  g.weight_grad = transpose(wgrad_t);
  return g;
}

LinearLayerParams make_linear_layer(std::size_t fan_in, std::size_t fan_out,
                                    OutputActivation activation, RngStream& init) {
  if (fan_in == 0 || fan_out == 0) {
    throw ValidationError("make_linear_layer: layer dimensions must be positive, got " +
                          shape_str(fan_in, fan_out));
  }
  return LinearLayerParams{
      Matrix(fan_in, fan_out, rng_uniform(init, -kInitRange, kInitRange, fan_in * fan_out)),
      std::vector<double>(fan_out, 0.0), activation};
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t s = 0; s < logits.rows(); ++s) {
    auto in = logits.row(s);
    auto o = out.row(s);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

LinearForward linear_forward(const LinearLayerParams& params, const Matrix& input) {
  require_input(input, params.fan_in(), "linear_forward");
  LinearForward f;
  affine(input, params.weights, params.bias, f.logits);
  f.output = params.activation == OutputActivation::kSoftmax ? softmax_rows(f.logits) : f.logits;
  return f;
}

LinearGrads linear_backward_logits(const LinearLayerParams& params, const Matrix& input,
                                   const Matrix& grad_logits, bool want_input_grad) {
  require_input(input, params.fan_in(), "linear_backward");
  if (grad_logits.rows() != input.rows() || grad_logits.cols() != params.fan_out()) {
    throw ShapeError("linear_backward: gradient is " +
                     shape_str(grad_logits.rows(), grad_logits.cols()) + ", expected " +
                     shape_str(input.rows(), params.fan_out()));
  }
  const std::size_t fan_in = params.fan_in();
  const std::size_t fan_out = params.fan_out();
  LinearGrads g;
  g.weight_grad = Matrix(fan_in, fan_out);
  g.bias_grad.assign(fan_out, 0.0);
  if (want_input_grad) g.input_grad = Matrix(input.rows(), fan_in);
  for (std::size_t s = 0; s < input.rows(); ++s) {
    const double* gl = grad_logits.row(s).data();
    const double* x = input.row(s).data();
    for (std::size_t j = 0; j < fan_out; ++j) g.bias_grad[j] += gl[j];
    for (std::size_t k = 0; k < fan_in; ++k) {
      double* wg = g.weight_grad.row(k).data();
      const double* w = params.weights.row(k).data();
      double acc = 0.0;
      for (std::size_t j = 0; j < fan_out; ++j) {
        wg[j] += x[k] * gl[j];
        acc += w[j] * gl[j];
      }
      if (want_input_grad) g.input_grad(s, k) = acc;
    }
  }
  return g;
}

LinearGrads linear_backward(const LinearLayerParams& params, const Matrix& input,
                            const LinearForward& forward, const Matrix& upstream,
                            bool want_input_grad) {
  if (params.activation == OutputActivation::kIdentity)
    return linear_backward_logits(params, input, upstream, want_input_grad);
  if (upstream.rows() != forward.output.rows() || upstream.cols() != forward.output.cols())
    throw ShapeError("linear_backward: upstream gradient does not match layer output");
  // Softmax Jacobian: dL/dl_j = p_j (g_j - sum_m g_m p_m).
  Matrix grad_logits(upstream.rows(), upstream.cols());
  for (std::size_t s = 0; s < upstream.rows(); ++s) {
    auto p = forward.output.row(s);
    auto g = upstream.row(s);
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += g[j] * p[j];
    for (std::size_t j = 0; j < p.size(); ++j) grad_logits(s, j) = p[j] * (g[j] - dot);
  }
  return linear_backward_logits(params, input, grad_logits, want_input_grad);
}

Matrix memory_apply(const MemoryProjection& proj, const Matrix& input) {
  if (input.cols() != proj.in_dim()) {
    throw ShapeError("memory_apply: input has " + std::to_string(input.cols()) +
                     " columns, projection expects " + std::to_string(proj.in_dim()));
  }
  const std::size_t out_dim = proj.out_dim();
  Matrix out(input.rows(), out_dim);
  if (out_dim == 0) return out;
  std::vector<double> centered(input.cols());
  for (std::size_t s = 0; s < input.rows(); ++s) {
    auto x = input.row(s);
    for (std::size_t k = 0; k < x.size(); ++k) centered[k] = x[k] - proj.mean[k];
    double* o = out.row(s).data();
    for (std::size_t k = 0; k < centered.size(); ++k) {
      const double* b = proj.basis.row(k).data();
      for (std::size_t j = 0; j < out_dim; ++j) o[j] += centered[k] * b[j];
    }
  }
  return out;
}

Matrix memory_input_grad(const MemoryProjection& proj, const Matrix& upstream) {
  if (upstream.cols() != proj.out_dim())
    throw ShapeError("memory_input_grad: upstream width does not match projection output");
  Matrix out(upstream.rows(), proj.in_dim());
  for (std::size_t s = 0; s < upstream.rows(); ++s) {
    auto g = upstream.row(s);
    for (std::size_t k = 0; k < proj.in_dim(); ++k) {
      const double* b = proj.basis.row(k).data();
      double acc = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) acc += b[j] * g[j];
      out(s, k) = acc;
    }
  }
  return out;
}

Matrix concat_features(const Matrix& a, const Matrix& b) {
  if (b.cols() == 0) return a;
  if (a.cols() == 0) return b;
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_features: row counts differ (" + std::to_string(a.rows()) + " vs " +
                     std::to_string(b.rows()) + ")");
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t s = 0; s < a.rows(); ++s) {
    auto o = out.row(s);
    std::copy(a.row(s).begin(), a.row(s).end(), o.begin());
    std::copy(b.row(s).begin(), b.row(s).end(), o.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

std::pair<Matrix, Matrix> split_features(const Matrix& m, std::size_t at) {
  if (at > m.cols()) throw ShapeError("split_features: split point beyond column count");
  Matrix left(m.rows(), at);
  Matrix right(m.rows(), m.cols() - at);
  for (std::size_t s = 0; s < m.rows(); ++s) {
    auto r = m.row(s);
    std::copy(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(at), left.row(s).begin());
    std::copy(r.begin() + static_cast<std::ptrdiff_t>(at), r.end(), right.row(s).begin());
  }
  return {std::move(left), std::move(right)};
}

std::string_view to_string(OutputActivation a) noexcept {
  return a == OutputActivation::kSoftmax ? "softmax" : "identity";
}

std::string_view to_string(MemoryKind k) noexcept { return k == MemoryKind::kPca ? "pca" : "lda"; }

OutputActivation parse_output_activation(std::string_view name) {
  if (name == "softmax") return OutputActivation::kSoftmax;
  if (name == "identity") return OutputActivation::kIdentity;
  throw ParseError("unknown output activation '" + std::string(name) + "'");
}

MemoryKind parse_memory_kind(std::string_view name) {
  if (name == "pca") return MemoryKind::kPca;
  if (name == "lda") return MemoryKind::kLda;
  throw ParseError("unknown memory kind '" + std::string(name) + "'");
}

}  // namespace gopforge
