#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gopforge/layers.hpp"
#include "gopforge/matrix.hpp"

namespace gopforge {

enum class Algorithm { kPop, kPopFast, kPopMemH, kPopMemO };

// Where a block's frozen memory projection sits.
//   kInput:  applied to the previous block's input and appended to this
//            block's input (hidden-side memory).
//   kHidden: applied to this block's input and appended to this block's
//            output, so the next layer and the output layer both see it.
enum class MemoryPlacement { kNone, kInput, kHidden };

struct HiddenBlock {
  GopLayerParams gop;
  std::optional<MemoryProjection> memory;
  MemoryPlacement placement = MemoryPlacement::kNone;

  bool operator==(const HiddenBlock&) const = default;
};

// Linear (softmax/identity) output for the fast variants, a GOP layer for POP.
using OutputLayer = std::variant<LinearLayerParams, GopLayerParams>;

// One progressive step as recorded in the model history.
struct StepRecord {
  std::size_t step = 0;          // 1-based
  std::size_t candidates = 0;    // jobs evaluated (completed + failed)
  std::size_t trainings = 0;     // SHLN training runs started
  std::size_t failed = 0;
  OperatorSet hidden_opset;
  std::optional<OperatorSet> output_opset;  // POP only
  std::optional<OperatorSet> initial_hidden_opset;  // POP pass-1 random draw
  double best_loss = 0.0;
  double accuracy = 0.0;         // A_l used by the stopping rule
  std::string accuracy_split;    // "validation" or "train"
  bool stopped = false;
  std::size_t input_width = 0;   // SHLN input width
  std::size_t hidden_width = 0;  // h_k
  std::size_t memory_dim = 0;    // dim of the memory projection fitted at this step
  std::size_t output_fan_in = 0;
  double seconds = 0.0;          // wall time; not persisted in model files

  bool operator==(const StepRecord&) const = default;
};

struct NetworkModel {
  Algorithm algorithm = Algorithm::kPopFast;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<HiddenBlock> blocks;
  OutputLayer output;
  std::vector<StepRecord> history;
};

// Width of the representation entering block k (k == blocks.size() gives the
// output layer's fan-in).
std::size_t block_input_width(const NetworkModel& model, std::size_t k);
std::size_t output_fan_in(const NetworkModel& model);

// Checks the wiring of every block and the output layer. Throws ContractError.
void validate_model(const NetworkModel& model);

// Inference (dropout off).
Matrix predict(const NetworkModel& model, const Matrix& x);
// Representation entering the output layer.
Matrix final_hidden(const NetworkModel& model, const Matrix& x);

// GOP and output-layer weights and biases; memory bases are frozen and not
// counted.
std::size_t trainable_parameter_count(const NetworkModel& model);

std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(MemoryPlacement p) noexcept;
MemoryPlacement parse_placement(std::string_view name);

}  // namespace gopforge
