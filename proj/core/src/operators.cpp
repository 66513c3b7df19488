#include "gopforge/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gopforge/error.hpp"

namespace gopforge {

namespace detail {

double act_eval(ActOp op, double x) noexcept {
  switch (op) {
    case ActOp::kSigmoid:
      return 1.0 / (1.0 + std::exp(-clamp_exp_arg(x)));
    case ActOp::kTanh:
      return std::tanh(clamp_exp_arg(x));
    case ActOp::kReLU:
      return x > 0.0 ? x : 0.0;
  }
  return 0.0;
}

double act_derivative(ActOp op, double x) noexcept {
  switch (op) {
    case ActOp::kSigmoid: {
      const double s = act_eval(ActOp::kSigmoid, x);
      return s * (1.0 - s);
    }
    case ActOp::kTanh: {
      const double t = std::tanh(clamp_exp_arg(x));
      return 1.0 - t * t;
    }
    case ActOp::kReLU:
      return x > 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

double pool_eval(PoolOp op, std::span<const double> z) noexcept {
  const std::size_t n = z.size();
  double acc = 0.0;
  switch (op) {
    case PoolOp::kSummation:
      for (double v : z) acc += v;
      return acc;
    case PoolOp::kCorrelation1:
      for (std::size_t k = 0; k + 1 < n; ++k) acc += z[k] * z[k + 1];
      return acc;
    case PoolOp::kCorrelation2:
      for (std::size_t k = 0; k + 2 < n; ++k) acc += z[k] * z[k + 1] * z[k + 2];
      return acc;
    case PoolOp::kMaximum:
      return *std::max_element(z.begin(), z.end());
  }
  return acc;
}

void pool_gradient(PoolOp op, std::span<const double> z, std::span<double> grad) noexcept {
  const std::size_t n = z.size();
  switch (op) {
    case PoolOp::kSummation:
      std::fill(grad.begin(), grad.end(), 1.0);
      return;
    case PoolOp::kCorrelation1:
      for (std::size_t k = 0; k < n; ++k) {
        double g = 0.0;
        if (k > 0) g += z[k - 1];
        if (k + 1 < n) g += z[k + 1];
        grad[k] = g;
      }
      return;
    case PoolOp::kCorrelation2:
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = 0; k + 2 < n; ++k) {
        grad[k] += z[k + 1] * z[k + 2];
        grad[k + 1] += z[k] * z[k + 2];
        grad[k + 2] += z[k] * z[k + 1];
      }
      return;
    case PoolOp::kMaximum: {
      std::fill(grad.begin(), grad.end(), 0.0);
      // max_element returns the first maximum: lowest index wins ties.
      grad[static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin())] = 1.0;
      return;
    }
  }
}

}  // namespace detail

namespace {

void require_finite(double v, std::string_view what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite input");
}

void require_arity(PoolOp op, std::size_t n) {
  if (n < pool_arity_floor(op)) {
    throw ValidationError("pooling operator '" + std::string(to_string(op)) + "' needs at least " +
                          std::to_string(pool_arity_floor(op)) + " inputs, got " +
                          std::to_string(n));
  }
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view name, const std::array<Enum, N>& all, std::string_view family) {
  for (Enum e : all)
    if (to_string(e) == name) return e;
  throw ParseError("unknown " + std::string(family) + " operator '" + std::string(name) + "'");
}

std::array<OperatorSet, kLibrarySize> build_library() {
  std::array<OperatorSet, kLibrarySize> lib{};
  std::size_t i = 0;
  for (NodalOp n : kNodalOps)
    for (PoolOp p : kPoolOps)
      for (ActOp a : kActOps) {
        lib[i] = OperatorSet{n, p, a, i};
        ++i;
      }
  return lib;
}

}  // namespace

double nodal_forward(NodalOp op, double w, double y) {
  require_finite(w, "nodal_forward");
  require_finite(y, "nodal_forward");
  double dw = 0.0;
  double dy = 0.0;
  return detail::nodal_eval(op, w, y, dw, dy);
}

NodalGrad nodal_backward(NodalOp op, double w, double y) {
  require_finite(w, "nodal_backward");
  require_finite(y, "nodal_backward");
  NodalGrad g{};
  detail::nodal_eval(op, w, y, g.dz_dw, g.dz_dy);
  return g;
}

std::size_t pool_arity_floor(PoolOp op) noexcept {
  switch (op) {
    case PoolOp::kCorrelation1:
      return 2;
    case PoolOp::kCorrelation2:
      return 3;
    default:
      return 1;
  }
}

double pool_forward(PoolOp op, std::span<const double> z) {
  require_arity(op, z.size());
  return detail::pool_eval(op, z);
}

std::vector<double> pool_backward(PoolOp op, std::span<const double> z) {
  require_arity(op, z.size());
  std::vector<double> g(z.size());
  detail::pool_gradient(op, z, g);
  return g;
}

double act_forward(ActOp op, double x) {
  require_finite(x, "act_forward");
  return detail::act_eval(op, x);
}

double act_backward(ActOp op, double x) {
  require_finite(x, "act_backward");
  return detail::act_derivative(op, x);
}

const std::array<OperatorSet, kLibrarySize>& enumerate_library() {
  static const auto library = build_library();
  return library;
}

OperatorSet opset_at(std::size_t index) {
  if (index >= kLibrarySize) {
    throw ValidationError("operator set index " + std::to_string(index) + " out of range");
  }
  return enumerate_library()[index];
}

OperatorSet make_opset(NodalOp nodal, PoolOp pool, ActOp act) {
  for (const auto& s : enumerate_library())
    if (s.nodal == nodal && s.pool == pool && s.act == act) return s;
  throw ValidationError("make_opset: unknown operator combination");
}

std::string_view to_string(NodalOp op) noexcept {
  switch (op) {
    case NodalOp::kMultiplication: return "multiplication";
    case NodalOp::kExponential: return "exponential";
    case NodalOp::kHarmonic: return "harmonic";
    case NodalOp::kQuadratic: return "quadratic";
    case NodalOp::kGaussian: return "gaussian";
    case NodalOp::kDoG: return "dog";
  }
  return "?";
}

std::string_view to_string(PoolOp op) noexcept {
  switch (op) {
    case PoolOp::kSummation: return "summation";
    case PoolOp::kCorrelation1: return "1-correlation";
    case PoolOp::kCorrelation2: return "2-correlation";
    case PoolOp::kMaximum: return "maximum";
  }
  return "?";
}

std::string_view to_string(ActOp op) noexcept {
  switch (op) {
    case ActOp::kSigmoid: return "sigmoid";
    case ActOp::kTanh: return "tanh";
    case ActOp::kReLU: return "relu";
  }
  return "?";
}

std::string to_string(const OperatorSet& opset) {
  std::string s(to_string(opset.nodal));
  s += '/';
  s += to_string(opset.pool);
  s += '/';
  s += to_string(opset.act);
  return s;
}

NodalOp parse_nodal(std::string_view name) { return parse_enum(name, kNodalOps, "nodal"); }
PoolOp parse_pool(std::string_view name) { return parse_enum(name, kPoolOps, "pooling"); }
ActOp parse_act(std::string_view name) { return parse_enum(name, kActOps, "activation"); }

}  // namespace gopforge
