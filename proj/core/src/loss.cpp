#include "gopforge/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gopforge/error.hpp"

namespace gopforge {

namespace {

void require_match(const Matrix& p, const Matrix& t, std::string_view op) {
  if (p.rows() != t.rows() || p.cols() != t.cols()) {
    throw ShapeError(std::string(op) + ": predictions " + std::to_string(p.rows()) + "x" +
                     std::to_string(p.cols()) + " vs targets " + std::to_string(t.rows()) + "x" +
                     std::to_string(t.cols()));
  }
}

// Keeps log() finite when a softmax output underflows to zero.
constexpr double kProbFloor = 1e-300;

}  // namespace

double loss_forward(LossKind kind, const Matrix& predictions, const Matrix& targets) {
  require_match(predictions, targets, "loss_forward");
  if (predictions.rows() == 0) return 0.0;
  const auto p = predictions.data();
  const auto t = targets.data();
  double acc = 0.0;
  if (kind == LossKind::kMse) {
    for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - t[i]) * (p[i] - t[i]);
    return acc / static_cast<double>(p.size());
  }
  for (std::size_t i = 0; i < p.size(); ++i)
    if (t[i] != 0.0) acc -= t[i] * std::log(std::max(p[i], kProbFloor));
  return acc / static_cast<double>(predictions.rows());
}

Matrix loss_backward(LossKind kind, const Matrix& predictions, const Matrix& targets) {
  require_match(predictions, targets, "loss_backward");
  Matrix g(predictions.rows(), predictions.cols());
  if (predictions.rows() == 0) return g;
  const auto p = predictions.data();
  const auto t = targets.data();
  auto out = g.data();
  const double scale = kind == LossKind::kMse ? 2.0 / static_cast<double>(p.size())
                                              : 1.0 / static_cast<double>(predictions.rows());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = scale * (p[i] - t[i]);
  return g;
}

std::vector<std::size_t> argmax_rows(const Matrix& scores) {
  std::vector<std::size_t> out(scores.rows(), 0);
  for (std::size_t s = 0; s < scores.rows(); ++s) {
    auto r = scores.row(s);
    out[s] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

double accuracy(const Matrix& scores, std::span<const std::size_t> labels) {
  if (scores.rows() != labels.size()) throw ShapeError("accuracy: label count mismatch");
  if (labels.empty()) return 0.0;
  const auto pred = argmax_rows(scores);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  Matrix m(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw ValidationError("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                            std::to_string(classes) + ")");
    }
    m(i, labels[i]) = 1.0;
  }
  return m;
}

std::string_view to_string(LossKind k) noexcept {
  return k == LossKind::kMse ? "mse" : "cross_entropy";
}

LossKind parse_loss(std::string_view name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "cross_entropy") return LossKind::kCrossEntropy;
  throw ParseError("unknown loss '" + std::string(name) + "'");
}

}  // namespace gopforge
