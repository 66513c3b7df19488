#include "gopforge/training.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "gopforge/error.hpp"

namespace gopforge {

namespace {

struct BlockTrace {
  Matrix input;
  GopCache cache;
  std::vector<double> mask;  // inverted-dropout multipliers; empty when off
};

struct ForwardTrace {
  std::vector<BlockTrace> blocks;
  Matrix hidden;  // representation entering the output layer
  LinearForward linear;
  GopForward gop_output;
  Matrix prediction;
};

void apply_mask(Matrix& m, const std::vector<double>& mask) {
  auto d = m.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= mask[i];
}

ForwardTrace forward(const NetworkModel& model, const Matrix& x, double dropout_rate,
                     RngStream* dropout_rng) {
  ForwardTrace t;
  t.blocks.resize(model.blocks.size());
  Matrix input = x;
  for (std::size_t k = 0; k < model.blocks.size(); ++k) {
    const auto& b = model.blocks[k];
    auto& bt = t.blocks[k];
    GopForward gf = gop_forward(b.gop, input);
    bt.cache = std::move(gf.cache);
    Matrix f = std::move(gf.output);
    if (dropout_rng != nullptr && dropout_rate > 0.0) {
      bt.mask.resize(f.size());
      const double keep_scale = 1.0 / (1.0 - dropout_rate);
      for (double& m : bt.mask) m = dropout_rng->next_double() < dropout_rate ? 0.0 : keep_scale;
      apply_mask(f, bt.mask);
    }
    Matrix hidden = b.placement == MemoryPlacement::kHidden
                        ? concat_features(f, memory_apply(*b.memory, input))
                        : std::move(f);
    Matrix next;
    if (k + 1 < model.blocks.size()) {
      const auto& nb = model.blocks[k + 1];
      next = nb.placement == MemoryPlacement::kInput
                 ? concat_features(hidden, memory_apply(*nb.memory, input))
                 : hidden;
    }
    bt.input = std::move(input);
    if (k + 1 < model.blocks.size()) {
      input = std::move(next);
    } else {
      t.hidden = std::move(hidden);
    }
  }
  if (const auto* lin = std::get_if<LinearLayerParams>(&model.output)) {
    t.linear = linear_forward(*lin, t.hidden);
    t.prediction = t.linear.output;
  } else {
    t.gop_output = gop_forward(std::get<GopLayerParams>(model.output), t.hidden);
    t.prediction = t.gop_output.output;
  }
  return t;
}

NetworkGrads backward(const NetworkModel& model, const ForwardTrace& t, const Matrix& targets,
                      LossKind loss, bool want_input_grad) {
  NetworkGrads g;
  const std::size_t n_blocks = model.blocks.size();
  g.gop_weights.resize(n_blocks);
  g.gop_bias.resize(n_blocks);

  Matrix grad_hidden;
  if (const auto* lin = std::get_if<LinearLayerParams>(&model.output)) {
    LinearGrads lg = loss == LossKind::kCrossEntropy
                         ? linear_backward_logits(*lin, t.hidden,
                                                  loss_backward(loss, t.prediction, targets))
                         : linear_backward(*lin, t.hidden, t.linear,
                                           loss_backward(loss, t.prediction, targets));
    g.output_weights = std::move(lg.weight_grad);
    g.output_bias = std::move(lg.bias_grad);
    grad_hidden = std::move(lg.input_grad);
  } else {
    const auto& out = std::get<GopLayerParams>(model.output);
    GopGrads og = gop_backward(out, t.gop_output.cache, loss_backward(loss, t.prediction, targets));
    g.output_weights = std::move(og.weight_grad);
    g.output_bias = std::move(og.bias_grad);
    grad_hidden = std::move(og.input_grad);
  }

  // pending[k] accumulates dL/d(input of block k) from memory paths.
  std::vector<Matrix> pending(n_blocks);
  for (std::size_t kk = n_blocks; kk-- > 0;) {
    const auto& b = model.blocks[kk];
    const auto& bt = t.blocks[kk];
    const bool need_input = kk > 0 || want_input_grad;
    Matrix grad_f;
    if (b.placement == MemoryPlacement::kHidden) {
      auto [gf, gm] = split_features(grad_hidden, b.gop.fan_out());
      grad_f = std::move(gf);
      if (need_input && gm.cols() > 0) {
        Matrix mg = memory_input_grad(*b.memory, gm);
        pending[kk] = pending[kk].empty() ? std::move(mg) : add(pending[kk], mg);
      }
    } else {
      grad_f = std::move(grad_hidden);
    }
    if (!bt.mask.empty()) apply_mask(grad_f, bt.mask);
    GopGrads gg = gop_backward(b.gop, bt.cache, grad_f, need_input);
    g.gop_weights[kk] = std::move(gg.weight_grad);
    g.gop_bias[kk] = std::move(gg.bias_grad);
    if (!need_input) break;
    Matrix grad_in = pending[kk].empty() ? std::move(gg.input_grad) : add(pending[kk], gg.input_grad);
    if (kk == 0) {
      g.input_grad = std::move(grad_in);
      break;
    }
    if (b.placement == MemoryPlacement::kInput) {
      const std::size_t prev_width = grad_in.cols() - b.memory->out_dim();
      auto [gh, gm] = split_features(grad_in, prev_width);
      grad_hidden = std::move(gh);
      if ((kk - 1 > 0 || want_input_grad) && gm.cols() > 0) {
        Matrix mg = memory_input_grad(*b.memory, gm);
        pending[kk - 1] = pending[kk - 1].empty() ? std::move(mg) : add(pending[kk - 1], mg);
      }
    } else {
      grad_hidden = std::move(grad_in);
    }
  }
  return g;
}

enum class Group { kGop, kOutput, kMemory };

struct ParamRef {
  std::span<double> values;
  std::span<const double> grads;
  std::size_t rows;  // weight matrices are rows x cols with one column per neuron
  std::size_t cols;
  bool is_weight;
  Group group;
};

class Sgd {
 public:
  Sgd(const TrainConfig& cfg, UpdateCounters& counters) : cfg_(cfg), counters_(counters) {}

  void step(std::vector<ParamRef>& refs, double lr) {
    if (velocity_.size() != refs.size()) velocity_.resize(refs.size());
    for (std::size_t r = 0; r < refs.size(); ++r) {
      auto& p = refs[r];
      const bool decay = p.is_weight && cfg_.regularizer.kind == RegularizerKind::kWeightDecay;
      const double lambda = decay ? cfg_.regularizer.value : 0.0;
      if (cfg_.momentum > 0.0) {
        auto& v = velocity_[r];
        if (v.size() != p.values.size()) v.assign(p.values.size(), 0.0);
        for (std::size_t i = 0; i < p.values.size(); ++i) {
          v[i] = cfg_.momentum * v[i] + p.grads[i] + lambda * p.values[i];
          p.values[i] -= lr * v[i];
        }
      } else {
        for (std::size_t i = 0; i < p.values.size(); ++i)
          p.values[i] -= lr * (p.grads[i] + lambda * p.values[i]);
      }
      if (p.is_weight && cfg_.regularizer.kind == RegularizerKind::kMaxNorm)
        clip_columns(p, cfg_.regularizer.value);
      switch (p.group) {
        case Group::kGop: ++counters_.gop_updates; break;
        case Group::kOutput: ++counters_.output_updates; break;
        case Group::kMemory: ++counters_.memory_updates; break;
      }
    }
  }

 private:
  static void clip_columns(ParamRef& p, double limit) {
    for (std::size_t c = 0; c < p.cols; ++c) {
      double sq = 0.0;
      for (std::size_t r = 0; r < p.rows; ++r) sq += p.values[r * p.cols + c] * p.values[r * p.cols + c];
      const double norm = std::sqrt(sq);
      if (norm > limit) {
        const double s = limit / norm;
        for (std::size_t r = 0; r < p.rows; ++r) p.values[r * p.cols + c] *= s;
      }
    }
  }

  const TrainConfig& cfg_;
  UpdateCounters& counters_;
  std::vector<std::vector<double>> velocity_;
};

// Only unfrozen projections would be listed here; fitted ones are frozen.
std::vector<ParamRef> collect_trainable(NetworkModel& model, NetworkGrads& g) {
  std::vector<ParamRef> refs;
  for (std::size_t k = 0; k < model.blocks.size(); ++k) {
    auto& b = model.blocks[k];
    refs.push_back({b.gop.weights.data(), g.gop_weights[k].data(), b.gop.fan_in(), b.gop.fan_out(),
                    true, Group::kGop});
    refs.push_back({b.gop.bias, g.gop_bias[k], 1, b.gop.fan_out(), false, Group::kGop});
  }
  std::visit(
      [&](auto& p) {
        refs.push_back({p.weights.data(), g.output_weights.data(), p.fan_in(), p.fan_out(), true,
                        Group::kOutput});
        refs.push_back({p.bias, g.output_bias, 1, p.fan_out(), false, Group::kOutput});
      },
      model.output);
  return refs;
}

bool params_finite(const NetworkModel& model) {
  for (const auto& b : model.blocks)
    if (!all_finite(b.gop.weights.data()) || !all_finite(b.gop.bias)) return false;
  return std::visit([](const auto& p) { return all_finite(p.weights.data()) && all_finite(p.bias); },
                    model.output);
}

void check_loss_compat(const NetworkModel& model, LossKind loss) {
  if (loss != LossKind::kCrossEntropy) return;
  const auto* lin = std::get_if<LinearLayerParams>(&model.output);
  if (lin == nullptr || lin->activation != OutputActivation::kSoftmax)
    throw ValidationError("cross-entropy loss requires a linear softmax output layer");
}

TrainStats run_sgd(NetworkModel& model, const TrainData& data, const TrainConfig& cfg,
                   RngStream& rng, const std::optional<EvalSet>& eval, bool allow_zero_lr) {
  validate(cfg, allow_zero_lr);
  validate_model(model);
  check_loss_compat(model, cfg.loss);
  if (data.x.rows() != data.y.rows())
    throw ShapeError("training data: " + std::to_string(data.x.rows()) + " inputs vs " +
                     std::to_string(data.y.rows()) + " targets");
  if (data.x.rows() == 0) throw ValidationError("training data is empty");
  if (data.y.cols() != model.output_dim)
    throw ShapeError("training targets have " + std::to_string(data.y.cols()) +
                     " columns, model outputs " + std::to_string(model.output_dim));

  const std::vector<std::size_t> labels = argmax_rows(data.y);
  RngStream shuffle_rng = rng.split(1);
  RngStream dropout_rng = rng.split(2);

  TrainStats stats;
  Sgd sgd(cfg, stats.updates);
  const std::size_t n = data.x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate(cfg, epoch);
    shuffle(std::span<std::size_t>(order), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix xb = select_rows(data.x, idx);
      const Matrix yb = select_rows(data.y, idx);
      const ForwardTrace t = forward(model, xb, cfg.dropout_rate, &dropout_rng);
      const double batch_loss = loss_forward(cfg.loss, t.prediction, yb);
      if (!std::isfinite(batch_loss))
        throw TrainingError("training diverged: non-finite loss in epoch " + std::to_string(epoch),
                            epoch);
      loss_sum += batch_loss * static_cast<double>(idx.size());
      const auto pred = argmax_rows(t.prediction);
      for (std::size_t i = 0; i < idx.size(); ++i) hits += pred[i] == labels[idx[i]] ? 1 : 0;
      if (lr == 0.0) continue;
      NetworkGrads g = backward(model, t, yb, cfg.loss, false);
      auto refs = collect_trainable(model, g);
      sgd.step(refs, lr);
    }
    if (!params_finite(model))
      throw TrainingError("training diverged: non-finite parameters after epoch " +
                              std::to_string(epoch),
                          epoch);
    stats.loss_curve.push_back(loss_sum / static_cast<double>(n));
    stats.lr_curve.push_back(lr);
    stats.train_acc_curve.push_back(static_cast<double>(hits) / static_cast<double>(n));
    if (eval) stats.val_acc_curve.push_back(accuracy(predict(model, eval->x), eval->labels));
    ++stats.epochs_run;
  }
  stats.final_loss = network_loss(model, data.x, data.y, cfg.loss);
  if (!std::isfinite(stats.final_loss))
    throw TrainingError("training diverged: non-finite final loss", cfg.epochs);
  return stats;
}

}  // namespace

void validate(const TrainConfig& cfg, bool allow_zero_lr) {
  if (cfg.epochs < 1) throw ValidationError("train config: epochs must be >= 1");
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0))
    throw ValidationError("train config: dropout_rate must be in [0, 1)");
  if (!(cfg.lr_initial > 0.0 || (allow_zero_lr && cfg.lr_initial == 0.0)))
    throw ValidationError("train config: lr_initial must be > 0");
  if (cfg.batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
  if (cfg.lr_drop_every < 1) throw ValidationError("train config: lr_drop_every must be >= 1");
  if (cfg.lr_drop_mode == LrDropMode::kMultiplicative &&
      !(cfg.lr_drop_factor > 0.0 && cfg.lr_drop_factor <= 1.0))
    throw ValidationError("train config: multiplicative lr_drop_factor must be in (0, 1]");
  if (cfg.lr_drop_mode == LrDropMode::kSubtractive &&
      !(cfg.lr_drop_factor >= 0.0 && cfg.lr_floor > 0.0))
    throw ValidationError("train config: subtractive schedule needs drop >= 0 and lr_floor > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ValidationError("train config: momentum must be in [0, 1)");
  if (cfg.regularizer.kind == RegularizerKind::kWeightDecay && !(cfg.regularizer.value >= 0.0))
    throw ValidationError("train config: weight decay must be >= 0");
  if (cfg.regularizer.kind == RegularizerKind::kMaxNorm && !(cfg.regularizer.value > 0.0))
    throw ValidationError("train config: max-norm limit must be > 0");
}

double learning_rate(const TrainConfig& cfg, std::size_t epoch) {
  const auto drops = static_cast<double>(epoch / cfg.lr_drop_every);
  if (cfg.lr_drop_mode == LrDropMode::kMultiplicative)
    return cfg.lr_initial * std::pow(cfg.lr_drop_factor, drops);
  if (cfg.lr_initial == 0.0) return 0.0;
  return std::max(cfg.lr_initial - cfg.lr_drop_factor * drops, cfg.lr_floor);
}

TrainResult train_shln(GopLayerParams hidden, OutputLayer output,
                       const std::optional<MemoryProjection>& hidden_memory,
                       const TrainData& data, const TrainConfig& cfg, RngStream& rng,
                       const std::optional<EvalSet>& eval) {
  validate_gop_layer(hidden);
  NetworkModel shln;
  shln.input_dim = data.x.cols();
  shln.output_dim = std::visit([](const auto& p) { return p.fan_out(); }, output);
  shln.blocks.push_back(HiddenBlock{std::move(hidden), hidden_memory,
                                    hidden_memory ? MemoryPlacement::kHidden : MemoryPlacement::kNone});
  shln.output = std::move(output);
  TrainStats stats = run_sgd(shln, data, cfg, rng, eval, false);
  return TrainResult{std::move(stats), std::move(shln.blocks.front().gop), std::move(shln.output)};
}

FinetuneResult finetune_network(NetworkModel model, const TrainData& data, const TrainConfig& cfg,
                                RngStream& rng, const std::optional<EvalSet>& eval) {
  TrainStats stats = run_sgd(model, data, cfg, rng, eval, true);
  return FinetuneResult{std::move(model), std::move(stats)};
}

NetworkGrads network_gradients(const NetworkModel& model, const Matrix& x, const Matrix& y,
                               LossKind loss) {
  validate_model(model);
  check_loss_compat(model, loss);
  const ForwardTrace t = forward(model, x, 0.0, nullptr);
  return backward(model, t, y, loss, true);
}

double network_loss(const NetworkModel& model, const Matrix& x, const Matrix& y, LossKind loss) {
  return loss_forward(loss, predict(model, x), y);
}

std::string_view to_string(RegularizerKind k) noexcept {
  switch (k) {
    case RegularizerKind::kNone: return "none";
    case RegularizerKind::kWeightDecay: return "weight_decay";
    case RegularizerKind::kMaxNorm: return "max_norm";
  }
  return "?";
}

RegularizerKind parse_regularizer(std::string_view name) {
  for (auto k : {RegularizerKind::kNone, RegularizerKind::kWeightDecay, RegularizerKind::kMaxNorm})
    if (to_string(k) == name) return k;
  throw ParseError("unknown regularizer '" + std::string(name) + "'");
}

}  // namespace gopforge
