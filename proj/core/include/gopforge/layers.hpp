#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gopforge/matrix.hpp"
#include "gopforge/operators.hpp"
#include "gopforge/rng.hpp"

namespace gopforge {

// Initial weights are drawn uniformly from [-kInitRange, kInitRange]; biases
// start at zero.
inline constexpr double kInitRange = 0.1;

// A layer of GOP neurons sharing one operator set. weights(k, i) connects
// input k to neuron i.
struct GopLayerParams {
  Matrix weights;             // fan_in x fan_out
  std::vector<double> bias;   // fan_out
  OperatorSet opset;

  std::size_t fan_in() const noexcept { return weights.rows(); }
  std::size_t fan_out() const noexcept { return weights.cols(); }
  bool operator==(const GopLayerParams&) const = default;
};

GopLayerParams make_gop_layer(std::size_t fan_in, std::size_t fan_out, const OperatorSet& opset,
                              RngStream& init);
// Shape, finiteness and pooling-arity checks; throws ValidationError.
void validate_gop_layer(const GopLayerParams& params);

// Per-sample intermediates kept for the backward pass. Synaptic arrays are
// laid out [sample][neuron][input].
struct GopCache {
  std::size_t batch = 0;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t opset_index = 0;
  std::vector<double> z;        // empty for summation pooling
  std::vector<double> dz_dw;
  std::vector<double> dz_dy;
  Matrix pre_activation;        // batch x fan_out, the x of f(x)
  std::vector<double> act_grad; // f'(x), batch x fan_out
};

struct GopForward {
  Matrix output;
  GopCache cache;
};

struct GopGrads {
  Matrix input_grad;           // batch x fan_in (empty when not requested)
  Matrix weight_grad;          // fan_in x fan_out, summed over the batch
  std::vector<double> bias_grad;
};

GopForward gop_forward(const GopLayerParams& params, const Matrix& input);
// Forward pass without a cache.
Matrix gop_infer(const GopLayerParams& params, const Matrix& input);
GopGrads gop_backward(const GopLayerParams& params, const GopCache& cache, const Matrix& upstream,
                      bool want_input_grad = true);

enum class OutputActivation { kSoftmax, kIdentity };

struct LinearLayerParams {
  Matrix weights;             // fan_in x fan_out
  std::vector<double> bias;   // fan_out
  OutputActivation activation = OutputActivation::kSoftmax;

  std::size_t fan_in() const noexcept { return weights.rows(); }
  std::size_t fan_out() const noexcept { return weights.cols(); }
  bool operator==(const LinearLayerParams&) const = default;
};

LinearLayerParams make_linear_layer(std::size_t fan_in, std::size_t fan_out,
                                    OutputActivation activation, RngStream& init);

struct LinearForward {
  Matrix logits;
  Matrix output;
};

struct LinearGrads {
  Matrix input_grad;
  Matrix weight_grad;
  std::vector<double> bias_grad;
};

Matrix softmax_rows(const Matrix& logits);
LinearForward linear_forward(const LinearLayerParams& params, const Matrix& input);
// `upstream` is dL/d(output); the activation Jacobian is applied here.
LinearGrads linear_backward(const LinearLayerParams& params, const Matrix& input,
                            const LinearForward& forward, const Matrix& upstream,
                            bool want_input_grad = true);
// `grad_logits` is dL/d(logits), e.g. from fused softmax cross-entropy.
LinearGrads linear_backward_logits(const LinearLayerParams& params, const Matrix& input,
                                   const Matrix& grad_logits, bool want_input_grad = true);

enum class MemoryKind { kPca, kLda };

// Frozen linear projection (input - mean) * basis. Fitted once, never
// touched by gradient descent.
struct MemoryProjection {
  MemoryKind kind = MemoryKind::kPca;
  std::vector<double> mean;   // in_dim
  Matrix basis;               // in_dim x out_dim
  bool frozen = true;

  // Fit metadata, persisted with the model.
  double energy_threshold = 0.0;  // PCA only
  double ridge = 0.0;
  bool ridge_applied = false;
  std::vector<double> eigenvalues;  // retained spectrum, descending

  std::size_t in_dim() const noexcept { return basis.rows(); }
  std::size_t out_dim() const noexcept { return basis.cols(); }
  bool operator==(const MemoryProjection&) const = default;
};

Matrix memory_apply(const MemoryProjection& proj, const Matrix& input);
// Gradient with respect to the projection input: upstream * basis^T.
Matrix memory_input_grad(const MemoryProjection& proj, const Matrix& upstream);

// Column-wise [a, b]. A side with zero columns is treated as empty.
Matrix concat_features(const Matrix& a, const Matrix& b);
// Inverse of concat_features: columns [0, at) and [at, cols).
std::pair<Matrix, Matrix> split_features(const Matrix& m, std::size_t at);

std::string_view to_string(OutputActivation a) noexcept;
std::string_view to_string(MemoryKind k) noexcept;
OutputActivation parse_output_activation(std::string_view name);
MemoryKind parse_memory_kind(std::string_view name);

}  // namespace gopforge
