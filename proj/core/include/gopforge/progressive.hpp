#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gopforge/layers.hpp"
#include "gopforge/memory.hpp"
#include "gopforge/network.hpp"
#include "gopforge/search.hpp"
#include "gopforge/training.hpp"

namespace gopforge {

// [input_dim, hidden_sizes..., output_dim]; the progression never grows
// more hidden layers than the template lists.
struct NetworkTemplate {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_sizes;
  std::size_t output_dim = 0;
  bool operator==(const NetworkTemplate&) const = default;
};

// Every hidden width must be >= 3 so 2-correlation pooling is defined in the
// next layer.
void validate(const NetworkTemplate& t);

enum class StopMode { kRelativeAccuracy, kAbsoluteLoss };
enum class MetricSplit { kValidation, kTrain };

struct StoppingRule {
  StopMode mode = StopMode::kRelativeAccuracy;
  double threshold = 1e-4;  // relative gain, or the loss target epsilon
  MetricSplit split = MetricSplit::kValidation;
  bool operator==(const StoppingRule&) const = default;
};

// Relative-accuracy rule on an accuracy history A_1..A_l: never stops after
// the first step; stops when (A_l - A_{l-1}) / A_{l-1} < threshold, which
// includes any drop. When A_{l-1} == 0 the step continues only if A_l > 0.
bool should_stop(std::span<const double> accuracies, double threshold);
bool should_stop(std::span<const StepRecord> history, const StoppingRule& rule);

struct ProgressiveData {
  Matrix x_train;
  std::vector<std::size_t> labels_train;
  std::optional<Matrix> x_val;
  std::vector<std::size_t> labels_val;
  std::size_t num_classes = 0;
};

// Search defaults with 200 epochs at lr 1e-4.
inline TrainConfig default_finetune_config() {
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr_initial = 1e-4;
  return cfg;
}

struct ProgressiveConfig {
  Algorithm algorithm = Algorithm::kPopFast;
  std::optional<MemoryKind> memory_kind;
  NetworkTemplate network;
  TrainConfig search;
  TrainConfig finetune = default_finetune_config();
  bool finetune_enabled = true;
  StoppingRule stopping;
  OutputActivation output_activation = OutputActivation::kSoftmax;
  PcaFitSpec pca;
  LdaFitSpec lda;
  // Caps every memory projection's output width (0 disables memory).
  std::optional<std::size_t> memory_dim_cap;
  std::uint64_t run_seed = 1;
  std::size_t workers = 1;
};

void validate(const ProgressiveConfig& cfg, const ProgressiveData& data);

struct ProgressHooks {
  // After each step; `blocks` are the frozen hidden blocks learned so far.
  std::function<void(const StepRecord&, const std::vector<HiddenBlock>& blocks)> on_step;
  // After each sweep; `phase` names it ("hidden", "pass1-output", ...).
  std::function<void(std::size_t step, std::string_view phase, std::span<const SweepEntry>)> on_sweep;
};

struct ProgressiveResult {
  NetworkModel model;               // finetuned when enabled
  NetworkModel pre_finetune;        // as assembled at the end of the progression
  std::optional<TrainStats> finetune_stats;
  UpdateCounters search_updates;    // summed over every candidate training
  std::vector<TrainStats> step_curves;  // winning candidate's training, per step
};

ProgressiveResult run_pop(const ProgressiveData& data, const ProgressiveConfig& cfg,
                          const ProgressHooks& hooks = {});
ProgressiveResult run_popfast(const ProgressiveData& data, const ProgressiveConfig& cfg,
                              const ProgressHooks& hooks = {});
ProgressiveResult run_popmem_h(const ProgressiveData& data, const ProgressiveConfig& cfg,
                               const ProgressHooks& hooks = {});
ProgressiveResult run_popmem_o(const ProgressiveData& data, const ProgressiveConfig& cfg,
                               const ProgressHooks& hooks = {});
// Dispatches on cfg.algorithm.
ProgressiveResult run_progressive(const ProgressiveData& data, const ProgressiveConfig& cfg,
                                  const ProgressHooks& hooks = {});

// Stream id of candidate `candidate` in sweep `phase` of `step`.
std::uint64_t candidate_stream_id(std::size_t step, std::size_t phase, std::size_t candidate);

// Template whose hidden widths equal the full hidden widths (GOPs plus
// memory) learned by a POPmem-O model, for the GOP-only control run.
NetworkTemplate widened_template(const NetworkModel& popmem_o_model);

std::string_view to_string(StopMode m) noexcept;
std::string_view to_string(MetricSplit s) noexcept;
StopMode parse_stop_mode(std::string_view name);
MetricSplit parse_metric_split(std::string_view name);

}  // namespace gopforge
