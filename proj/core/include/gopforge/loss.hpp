#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gopforge/matrix.hpp"

namespace gopforge {

enum class LossKind { kMse, kCrossEntropy };

// MSE: mean over samples and outputs of the squared error.
// CrossEntropy: mean over samples of -sum_j t_j log p_j, p being softmax
// outputs.
double loss_forward(LossKind kind, const Matrix& predictions, const Matrix& targets);

// MSE returns dL/d(predictions). CrossEntropy returns dL/d(logits) of the
// fused softmax + cross-entropy, i.e. (p - t) / n.
Matrix loss_backward(LossKind kind, const Matrix& predictions, const Matrix& targets);

// Row-wise argmax, lowest index on ties.
std::vector<std::size_t> argmax_rows(const Matrix& scores);
double accuracy(const Matrix& scores, std::span<const std::size_t> labels);

Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes);

std::string_view to_string(LossKind k) noexcept;
LossKind parse_loss(std::string_view name);

}  // namespace gopforge
