#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gopforge/layers.hpp"
#include "gopforge/loss.hpp"
#include "gopforge/matrix.hpp"
#include "gopforge/network.hpp"
#include "gopforge/rng.hpp"

namespace gopforge {

enum class RegularizerKind { kNone, kWeightDecay, kMaxNorm };

struct Regularizer {
  RegularizerKind kind = RegularizerKind::kWeightDecay;
  double value = 1e-4;  // decay coefficient, or the max column norm

  static Regularizer none() { return {RegularizerKind::kNone, 0.0}; }
  static Regularizer weight_decay(double lambda) { return {RegularizerKind::kWeightDecay, lambda}; }
  static Regularizer max_norm(double c) { return {RegularizerKind::kMaxNorm, c}; }
  bool operator==(const Regularizer&) const = default;
};

// How the learning rate falls every `lr_drop_every` epochs:
//   kMultiplicative: lr_initial * factor^floor(epoch / every)
//   kSubtractive:    max(lr_initial - factor * floor(epoch / every), lr_floor)
enum class LrDropMode { kMultiplicative, kSubtractive };

struct TrainConfig {
  std::size_t epochs = 300;
  double lr_initial = 0.01;
  std::size_t lr_drop_every = 100;
  double lr_drop_factor = 0.1;
  LrDropMode lr_drop_mode = LrDropMode::kMultiplicative;
  double lr_floor = 1e-6;
  std::size_t batch_size = 32;
  double dropout_rate = 0.5;
  double momentum = 0.0;
  Regularizer regularizer;
  LossKind loss = LossKind::kMse;

  bool operator==(const TrainConfig&) const = default;
};

// Throws ValidationError. A zero learning rate is accepted only when
// `allow_zero_lr` is set (a frozen finetune).
void validate(const TrainConfig& cfg, bool allow_zero_lr = false);

// Learning rate used during `epoch` (0-based).
double learning_rate(const TrainConfig& cfg, std::size_t epoch);

// Parameter updates applied per parameter group.
struct UpdateCounters {
  std::size_t gop_updates = 0;
  std::size_t output_updates = 0;
  std::size_t memory_updates = 0;
};

struct TrainStats {
  double final_loss = 0.0;          // eval-mode loss on the full training set
  std::vector<double> loss_curve;   // mean mini-batch loss per epoch
  std::vector<double> lr_curve;
  std::vector<double> train_acc_curve;  // running mini-batch accuracy
  std::vector<double> val_acc_curve;    // filled only when an eval set is given
  std::size_t epochs_run = 0;
  UpdateCounters updates;
};

struct TrainResult {
  TrainStats stats;
  GopLayerParams hidden;
  OutputLayer output;
};

struct TrainData {
  const Matrix& x;
  const Matrix& y;  // targets, one-hot for classification
};

struct EvalSet {
  const Matrix& x;
  std::span<const std::size_t> labels;
};

// Trains one single-hidden-layer network with mini-batch SGD. When
// `hidden_memory` is present the hidden representation is
// [hidden(x), memory(x)] with the memory frozen.
//
// Throws TrainingError (with the epoch) if the loss becomes non-finite.
TrainResult train_shln(GopLayerParams hidden, OutputLayer output,
                       const std::optional<MemoryProjection>& hidden_memory,
                       const TrainData& data, const TrainConfig& cfg, RngStream& rng,
                       const std::optional<EvalSet>& eval = std::nullopt);

struct FinetuneResult {
  NetworkModel model;
  TrainStats stats;
};

// Backpropagation through the whole stack. Operator sets and memory
// projections are left untouched.
FinetuneResult finetune_network(NetworkModel model, const TrainData& data, const TrainConfig& cfg,
                                RngStream& rng, const std::optional<EvalSet>& eval = std::nullopt);

// Gradients of the network loss (dropout off) with respect to every trainable
// parameter and to the input. Exposed for gradient checking.
struct NetworkGrads {
  std::vector<Matrix> gop_weights;
  std::vector<std::vector<double>> gop_bias;
  Matrix output_weights;
  std::vector<double> output_bias;
  Matrix input_grad;
};
NetworkGrads network_gradients(const NetworkModel& model, const Matrix& x, const Matrix& y,
                               LossKind loss);
double network_loss(const NetworkModel& model, const Matrix& x, const Matrix& y, LossKind loss);

std::string_view to_string(RegularizerKind k) noexcept;
RegularizerKind parse_regularizer(std::string_view name);

}  // namespace gopforge
