#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gopforge {

// Nodal operators psi(y, w), applied per synapse.
enum class NodalOp { kMultiplication, kExponential, kHarmonic, kQuadratic, kGaussian, kDoG };
// Pooling operators rho(z_1..z_N), reducing one neuron's synaptic signals.
enum class PoolOp { kSummation, kCorrelation1, kCorrelation2, kMaximum };
// Activation operators f(x).
enum class ActOp { kSigmoid, kTanh, kReLU };

inline constexpr std::array kNodalOps{NodalOp::kMultiplication, NodalOp::kExponential,
                                      NodalOp::kHarmonic,       NodalOp::kQuadratic,
                                      NodalOp::kGaussian,       NodalOp::kDoG};
inline constexpr std::array kPoolOps{PoolOp::kSummation, PoolOp::kCorrelation1,
                                     PoolOp::kCorrelation2, PoolOp::kMaximum};
inline constexpr std::array kActOps{ActOp::kSigmoid, ActOp::kTanh, ActOp::kReLU};

inline constexpr std::size_t kLibrarySize = kNodalOps.size() * kPoolOps.size() * kActOps.size();

// Arguments of exp() are clamped to this magnitude in every operator.
inline constexpr double kExpClamp = 50.0;

struct NodalGrad {
  double dz_dw;
  double dz_dy;
};

// One (nodal, pool, activation) triple. `index` is the position in the
// canonical enumeration (nodal outermost, then pool, then activation).
struct OperatorSet {
  NodalOp nodal = NodalOp::kMultiplication;
  PoolOp pool = PoolOp::kSummation;
  ActOp act = ActOp::kSigmoid;
  std::size_t index = 0;

  bool operator==(const OperatorSet&) const = default;
};

double nodal_forward(NodalOp op, double w, double y);
NodalGrad nodal_backward(NodalOp op, double w, double y);

// Minimum input length for which the pooling formula is defined.
std::size_t pool_arity_floor(PoolOp op) noexcept;
double pool_forward(PoolOp op, std::span<const double> z);
std::vector<double> pool_backward(PoolOp op, std::span<const double> z);

double act_forward(ActOp op, double x);
double act_backward(ActOp op, double x);

const std::array<OperatorSet, kLibrarySize>& enumerate_library();
OperatorSet opset_at(std::size_t index);
OperatorSet make_opset(NodalOp nodal, PoolOp pool, ActOp act);

std::string_view to_string(NodalOp op) noexcept;
std::string_view to_string(PoolOp op) noexcept;
std::string_view to_string(ActOp op) noexcept;
// "nodal/pool/act", e.g. "multiplication/summation/sigmoid".
std::string to_string(const OperatorSet& opset);

NodalOp parse_nodal(std::string_view name);
PoolOp parse_pool(std::string_view name);
ActOp parse_act(std::string_view name);

namespace detail {

// Unchecked kernels shared by the checked public entry points and the
// vectorized layer code, which validates its inputs once per call.

inline double clamp_exp_arg(double a) noexcept {
  return a > kExpClamp ? kExpClamp : (a < -kExpClamp ? -kExpClamp : a);
}

inline double nodal_eval(NodalOp op, double w, double y, double& dz_dw, double& dz_dy) noexcept {
  switch (op) {
    case NodalOp::kMultiplication:
      dz_dw = y;
      dz_dy = w;
      return w * y;
    case NodalOp::kExponential: {
      // The derivative reuses the clamped exponential so the gradient keeps
      // its sign outside the clamp window.
      const double e = std::exp(clamp_exp_arg(w * y));
      dz_dw = y * e;
      dz_dy = w * e;
      return e - 1.0;
    }
    case NodalOp::kHarmonic: {
      const double c = std::cos(w * y);
      dz_dw = y * c;
      dz_dy = w * c;
      return std::sin(w * y);
    }
    case NodalOp::kQuadratic:
      dz_dw = y * y;
      dz_dy = 2.0 * w * y;
      return w * y * y;
    case NodalOp::kGaussian: {
      const double wy2 = w * y * y;
      const double e = std::exp(clamp_exp_arg(-wy2));
      dz_dw = e * (1.0 - wy2);
      dz_dy = -2.0 * w * w * y * e;
      return w * e;
    }
    case NodalOp::kDoG: {
      const double wy2 = w * y * y;
      const double e = std::exp(clamp_exp_arg(-wy2));
      dz_dw = y * e * (1.0 - wy2);
      dz_dy = w * e * (1.0 - 2.0 * wy2);
      return w * y * e;
    }
  }
  dz_dw = dz_dy = 0.0;
  return 0.0;
}
double act_eval(ActOp op, double x) noexcept;
double act_derivative(ActOp op, double x) noexcept;
double pool_eval(PoolOp op, std::span<const double> z) noexcept;
// Writes dρ/dz_k into grad (same length as z).
void pool_gradient(PoolOp op, std::span<const double> z, std::span<double> grad) noexcept;

}  // namespace detail

}  // namespace gopforge
