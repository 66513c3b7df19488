#include "gopforge/network.hpp"

#include <string>

#include "gopforge/error.hpp"

namespace gopforge {

namespace {

std::size_t output_layer_fan_in(const OutputLayer& out) {
  return std::visit([](const auto& p) { return p.fan_in(); }, out);
}

std::size_t output_layer_fan_out(const OutputLayer& out) {
  return std::visit([](const auto& p) { return p.fan_out(); }, out);
}

// Width of block k's output representation H_k.
std::size_t hidden_width(const HiddenBlock& b) {
  std::size_t w = b.gop.fan_out();
  if (b.placement == MemoryPlacement::kHidden && b.memory) w += b.memory->out_dim();
  return w;
}

}  // namespace

std::size_t block_input_width(const NetworkModel& model, std::size_t k) {
  if (k > model.blocks.size()) throw ContractError("block_input_width: index out of range");
  if (k == 0) return model.input_dim;
  std::size_t w = hidden_width(model.blocks[k - 1]);
  if (k < model.blocks.size()) {
    const auto& b = model.blocks[k];
    if (b.placement == MemoryPlacement::kInput && b.memory) w += b.memory->out_dim();
  }
  return w;
}

std::size_t output_fan_in(const NetworkModel& model) {
  return block_input_width(model, model.blocks.size());
}

void validate_model(const NetworkModel& model) {
  if (model.blocks.empty()) throw ContractError("model has no hidden blocks");
  for (std::size_t k = 0; k < model.blocks.size(); ++k) {
    const auto& b = model.blocks[k];
    const std::string where = "block " + std::to_string(k);
    if (b.gop.fan_in() != block_input_width(model, k))
      throw ContractError(where + ": GOP fan_in " + std::to_string(b.gop.fan_in()) +
                          " does not match incoming width " +
                          std::to_string(block_input_width(model, k)));
    if (b.gop.bias.size() != b.gop.fan_out()) throw ContractError(where + ": bias length mismatch");
    if ((b.placement == MemoryPlacement::kNone) != !b.memory.has_value())
      throw ContractError(where + ": memory placement and projection disagree");
    if (b.placement == MemoryPlacement::kInput && k == 0)
      throw ContractError(where + ": first block cannot take input-side memory");
    if (b.memory) {
      const std::size_t expected_in = b.placement == MemoryPlacement::kInput
                                          ? block_input_width(model, k - 1)
                                          : block_input_width(model, k);
      if (b.memory->in_dim() != expected_in || b.memory->mean.size() != expected_in)
        throw ContractError(where + ": memory projection input width mismatch");
    }
  }
  if (output_layer_fan_in(model.output) != output_fan_in(model))
    throw ContractError("output layer fan_in does not match final hidden width");
  if (output_layer_fan_out(model.output) != model.output_dim)
    throw ContractError("output layer width does not match output_dim");
}

Matrix final_hidden(const NetworkModel& model, const Matrix& x) {
  validate_model(model);
  Matrix input = x;
  Matrix hidden;
  for (std::size_t k = 0; k < model.blocks.size(); ++k) {
    const auto& b = model.blocks[k];
    Matrix f = gop_infer(b.gop, input);
    hidden = b.placement == MemoryPlacement::kHidden ? concat_features(f, memory_apply(*b.memory, input))
                                                     : std::move(f);
    if (k + 1 < model.blocks.size()) {
      const auto& next = model.blocks[k + 1];
      input = next.placement == MemoryPlacement::kInput
                  ? concat_features(hidden, memory_apply(*next.memory, input))
                  : hidden;
    }
  }
  return hidden;
}

Matrix predict(const NetworkModel& model, const Matrix& x) {
  const Matrix h = final_hidden(model, x);
  if (const auto* lin = std::get_if<LinearLayerParams>(&model.output))
    return linear_forward(*lin, h).output;
  return gop_infer(std::get<GopLayerParams>(model.output), h);
}

std::size_t trainable_parameter_count(const NetworkModel& model) {
  std::size_t n = 0;
  for (const auto& b : model.blocks) n += b.gop.weights.size() + b.gop.bias.size();
  n += std::visit([](const auto& p) { return p.weights.size() + p.bias.size(); }, model.output);
  return n;
}

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::kPop: return "pop";
    case Algorithm::kPopFast: return "popfast";
    case Algorithm::kPopMemH: return "popmem-h";
    case Algorithm::kPopMemO: return "popmem-o";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kPop, Algorithm::kPopFast, Algorithm::kPopMemH, Algorithm::kPopMemO})
    if (to_string(a) == name) return a;
  throw ParseError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(MemoryPlacement p) noexcept {
  switch (p) {
    case MemoryPlacement::kNone: return "none";
    case MemoryPlacement::kInput: return "input";
    case MemoryPlacement::kHidden: return "hidden";
  }
  return "?";
}

MemoryPlacement parse_placement(std::string_view name) {
  for (MemoryPlacement p : {MemoryPlacement::kNone, MemoryPlacement::kInput, MemoryPlacement::kHidden})
    if (to_string(p) == name) return p;
  throw ParseError("unknown memory placement '" + std::string(name) + "'");
}

}  // namespace gopforge
