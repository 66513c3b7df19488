#include "gopforge/progressive.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <sstream>
#include <string>

#include "gopforge/error.hpp"
#include "gopforge/loss.hpp"

namespace gopforge {

namespace {

// Child streams of a candidate's stream.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;
// Phase ids used to name streams that are not candidate sweeps.
constexpr std::size_t kDrawPhase = 100;
constexpr std::uint64_t kFinetuneTag = 0xF17E7017ULL;

struct ShlnOutcome {
  GopLayerParams hidden;
  OutputLayer output;
  TrainStats stats;
};

enum class Variant { kFast, kMemH, kMemO };

// State shared by every sweep of one run.
struct RunContext {
  const ProgressiveData& data;
  const ProgressiveConfig& cfg;
  const ProgressHooks& hooks;
  Matrix targets;
  std::atomic<std::size_t> trainings{0};
  std::mutex updates_mutex;
  UpdateCounters updates;
  std::vector<TrainStats> step_curves;

  RunContext(const ProgressiveData& d, const ProgressiveConfig& c, const ProgressHooks& h)
      : data(d), cfg(c), hooks(h), targets(one_hot(d.labels_train, d.num_classes)) {}

  bool eval_on_validation() const {
    return cfg.stopping.split == MetricSplit::kValidation && data.x_val.has_value() &&
           data.x_val->rows() > 0;
  }
  const std::vector<std::size_t>& eval_labels() const {
    return eval_on_validation() ? data.labels_val : data.labels_train;
  }
};

std::string failure_digest(const std::vector<CandidateFailure>& failures) {
  std::ostringstream os;
  const std::size_t shown = std::min<std::size_t>(failures.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    os << (i ? "; " : "") << "#" << failures[i].candidate_index << ": " << failures[i].reason;
  }
  if (failures.size() > shown) os << "; ...";
  return os.str();
}

// MakeLayers: (const CandidateJob&, RngStream& init) -> std::pair<GopLayerParams, OutputLayer>
template <typename MakeLayers>
SweepResult<ShlnOutcome> sweep(RunContext& ctx, const Matrix& train_in, std::size_t step,
                               std::size_t phase, std::string_view phase_name,
                               const std::optional<MemoryProjection>& hidden_memory,
                               MakeLayers make_layers) {
  std::vector<CandidateJob> jobs;
  jobs.reserve(kLibrarySize);
  for (const auto& opset : enumerate_library())
    jobs.push_back({opset.index, opset, candidate_stream_id(step, phase, opset.index)});

  auto train = [&](const CandidateJob& job) -> CandidateOutcome<ShlnOutcome> {
    RngStream rng(ctx.cfg.run_seed, job.rng_stream_id);
    RngStream init = rng.split(kInitStream);
    auto [hidden, output] = make_layers(job, init);
    RngStream train_rng = rng.split(kTrainStream);
    ctx.trainings.fetch_add(1);
    TrainResult r = train_shln(std::move(hidden), std::move(output), hidden_memory,
                               TrainData{train_in, ctx.targets}, ctx.cfg.search, train_rng);
    {
      std::lock_guard lock(ctx.updates_mutex);
      ctx.updates.gop_updates += r.stats.updates.gop_updates;
      ctx.updates.output_updates += r.stats.updates.output_updates;
      ctx.updates.memory_updates += r.stats.updates.memory_updates;
    }
    const double loss = r.stats.final_loss;
    return {loss, ShlnOutcome{std::move(r.hidden), std::move(r.output), std::move(r.stats)}};
  };

  SweepResult<ShlnOutcome> result = run_sweep<ShlnOutcome>(jobs, train, ctx.cfg.workers);
  if (ctx.hooks.on_sweep) ctx.hooks.on_sweep(step, phase_name, result.entries);
  if (result.all_failed()) {
    throw ProgressionError("step " + std::to_string(step) + " (" + std::string(phase_name) +
                           "): all " + std::to_string(jobs.size()) +
                           " candidates failed: " + failure_digest(result.failures));
  }
  return result;
}

MemoryProjection fit_memory(const RunContext& ctx, const Matrix& x, std::size_t step) {
  MemoryProjection p;
  try {
    if (*ctx.cfg.memory_kind == MemoryKind::kPca) {
      p = fit_pca(x, ctx.cfg.pca);
    } else {
      LdaFitSpec spec = ctx.cfg.lda;
      spec.num_classes = ctx.data.num_classes;
      p = fit_lda(x, ctx.data.labels_train, spec);
    }
  } catch (const Error& e) {
    throw ProgressionError("step " + std::to_string(step) + ": memory fit failed: " + e.what());
  }
  if (ctx.cfg.memory_dim_cap && *ctx.cfg.memory_dim_cap < p.out_dim()) {
    const std::size_t keep = *ctx.cfg.memory_dim_cap;
    Matrix basis(p.in_dim(), keep);
    for (std::size_t r = 0; r < p.in_dim(); ++r)
      for (std::size_t c = 0; c < keep; ++c) basis(r, c) = p.basis(r, c);
    p.basis = std::move(basis);
    p.eigenvalues.resize(keep);
  }
  return p;
}

Matrix output_scores(const OutputLayer& out, const Matrix& hidden) {
  if (const auto* lin = std::get_if<LinearLayerParams>(&out)) return linear_forward(*lin, hidden).output;
  return gop_infer(std::get<GopLayerParams>(out), hidden);
}

ProgressiveResult finish(RunContext& ctx, NetworkModel model) {
  validate_model(model);
  ProgressiveResult result;
  result.pre_finetune = model;
  result.search_updates = ctx.updates;
  result.step_curves = std::move(ctx.step_curves);
  if (ctx.cfg.finetune_enabled) {
    RngStream rng(ctx.cfg.run_seed, derive_stream_id({kFinetuneTag}));
    std::optional<EvalSet> eval;
    if (ctx.data.x_val && ctx.data.x_val->rows() > 0)
      eval.emplace(EvalSet{*ctx.data.x_val, ctx.data.labels_val});
    FinetuneResult ft =
        finetune_network(std::move(model), TrainData{ctx.data.x_train, ctx.targets},
                         ctx.cfg.finetune, rng, eval);
    result.model = std::move(ft.model);
    result.finetune_stats = std::move(ft.stats);
  } else {
    result.model = std::move(model);
  }
  return result;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ProgressiveResult run_fast_family(const ProgressiveData& data, const ProgressiveConfig& cfg,
                                  const ProgressHooks& hooks, Variant variant) {
  validate(cfg, data);
  RunContext ctx(data, cfg, hooks);
  const bool use_val = ctx.eval_on_validation();
  const std::size_t classes = data.num_classes;

  Matrix train_in = data.x_train;
  Matrix eval_in = use_val ? *data.x_val : data.x_train;
  Matrix prev_train_in;
  Matrix prev_eval_in;

  NetworkModel model;
  model.algorithm = variant == Variant::kFast   ? Algorithm::kPopFast
                    : variant == Variant::kMemH ? Algorithm::kPopMemH
                                                : Algorithm::kPopMemO;
  model.input_dim = data.x_train.cols();
  model.output_dim = classes;

  for (std::size_t k = 0; k < cfg.network.hidden_sizes.size(); ++k) {
    const std::size_t step = k + 1;
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t trainings_before = ctx.trainings.load();

    std::optional<MemoryProjection> memory;
    MemoryPlacement placement = MemoryPlacement::kNone;
    if (variant == Variant::kMemH && k > 0) {
      memory = fit_memory(ctx, prev_train_in, step);
      placement = MemoryPlacement::kInput;
      train_in = concat_features(train_in, memory_apply(*memory, prev_train_in));
      eval_in = concat_features(eval_in, memory_apply(*memory, prev_eval_in));
    } else if (variant == Variant::kMemO) {
      memory = fit_memory(ctx, train_in, step);
      placement = MemoryPlacement::kHidden;
    }
    const std::optional<MemoryProjection> hidden_memory =
        placement == MemoryPlacement::kHidden ? memory : std::nullopt;

    const std::size_t in_width = train_in.cols();
    const std::size_t width = cfg.network.hidden_sizes[k];
    const std::size_t mem_dim = hidden_memory ? hidden_memory->out_dim() : 0;
    const OutputActivation act = cfg.output_activation;

    auto result = sweep(ctx, train_in, step, 0, "hidden", hidden_memory,
                        [&](const CandidateJob& job, RngStream& init) {
                          GopLayerParams hidden = make_gop_layer(in_width, width, job.opset, init);
                          OutputLayer out = make_linear_layer(width + mem_dim, classes, act, init);
                          return std::pair{std::move(hidden), std::move(out)};
                        });
    ShlnOutcome& winner = *result.winner_params;

    auto represent = [&](const Matrix& in) {
      Matrix f = gop_infer(winner.hidden, in);
      return hidden_memory ? concat_features(f, memory_apply(*hidden_memory, in)) : f;
    };
    Matrix hidden_train = represent(train_in);
    Matrix hidden_eval = use_val ? represent(eval_in) : hidden_train;

    StepRecord rec;
    rec.step = step;
    rec.candidates = result.completed + result.failures.size();
    rec.trainings = ctx.trainings.load() - trainings_before;
    rec.failed = result.failures.size();
    rec.hidden_opset = winner.hidden.opset;
    rec.best_loss = result.losses[result.winner_index];
    rec.accuracy = accuracy(output_scores(winner.output, hidden_eval), ctx.eval_labels());
    rec.accuracy_split = use_val ? "validation" : "train";
    rec.input_width = in_width;
    rec.hidden_width = width;
    rec.memory_dim = memory ? memory->out_dim() : 0;
    rec.output_fan_in = width + mem_dim;

    ctx.step_curves.push_back(std::move(winner.stats));
    model.blocks.push_back(HiddenBlock{std::move(winner.hidden), memory, placement});
    model.output = std::move(winner.output);
    model.history.push_back(rec);
    model.history.back().stopped = should_stop(model.history, cfg.stopping);
    model.history.back().seconds = elapsed_since(t0);
    if (hooks.on_step) hooks.on_step(model.history.back(), model.blocks);
    if (model.history.back().stopped) break;

    prev_train_in = std::move(train_in);
    train_in = std::move(hidden_train);
    prev_eval_in = std::move(eval_in);
    eval_in = use_val ? std::move(hidden_eval) : train_in;
  }
  return finish(ctx, std::move(model));
}

}  // namespace

void validate(const NetworkTemplate& t) {
  if (t.input_dim < 1 || t.output_dim < 1)
    throw ValidationError("network template: input and output dimensions must be >= 1");
  if (t.hidden_sizes.empty())
    throw ValidationError("network template: at least one hidden layer is required");
  for (std::size_t k = 0; k < t.hidden_sizes.size(); ++k)
    if (t.hidden_sizes[k] < 3)
      throw ValidationError("network template: hidden layer " + std::to_string(k + 1) +
                            " has width " + std::to_string(t.hidden_sizes[k]) +
                            ", minimum is 3");
}

void validate(const ProgressiveConfig& cfg, const ProgressiveData& data) {
  validate(cfg.network);
  const bool needs_memory =
      cfg.algorithm == Algorithm::kPopMemH || cfg.algorithm == Algorithm::kPopMemO;
  if (needs_memory && !cfg.memory_kind)
    throw ValidationError("memory_kind is required for " + std::string(to_string(cfg.algorithm)));
  if (!needs_memory && cfg.memory_kind)
    throw ValidationError("memory_kind is only valid for popmem-h and popmem-o");
  if (cfg.algorithm == Algorithm::kPop && cfg.search.loss != LossKind::kMse)
    throw ValidationError("pop trains GOP output layers and requires the mse loss");
  validate(cfg.search);
  if (cfg.finetune_enabled) validate(cfg.finetune, true);
  if (!(cfg.stopping.threshold > 0.0))
    throw ValidationError("stopping threshold must be > 0");
  if (cfg.workers < 1) throw ValidationError("workers must be >= 1");
  if (data.x_train.rows() == 0) throw ValidationError("training split is empty");
  if (data.labels_train.size() != data.x_train.rows())
    throw ValidationError("training labels do not match training rows");
  if (data.x_val && data.labels_val.size() != data.x_val->rows())
    throw ValidationError("validation labels do not match validation rows");
  if (data.num_classes < 2) throw ValidationError("need at least 2 classes");
  if (cfg.network.input_dim != data.x_train.cols())
    throw ValidationError("template input_dim " + std::to_string(cfg.network.input_dim) +
                          " does not match data width " + std::to_string(data.x_train.cols()));
  if (cfg.network.output_dim != data.num_classes)
    throw ValidationError("template output_dim " + std::to_string(cfg.network.output_dim) +
                          " does not match class count " + std::to_string(data.num_classes));
}

bool should_stop(std::span<const double> accuracies, double threshold) {
  if (accuracies.size() < 2) return false;
  const double prev = accuracies[accuracies.size() - 2];
  const double cur = accuracies.back();
  if (prev == 0.0) return !(cur > 0.0);
  return (cur - prev) / prev < threshold;
}

bool should_stop(std::span<const StepRecord> history, const StoppingRule& rule) {
  if (history.empty()) throw ContractError("should_stop: empty history");
  if (rule.mode == StopMode::kAbsoluteLoss) return history.back().best_loss < rule.threshold;
  std::vector<double> acc;
  acc.reserve(history.size());
  for (const auto& r : history) acc.push_back(r.accuracy);
  return should_stop(acc, rule.threshold);
}

std::uint64_t candidate_stream_id(std::size_t step, std::size_t phase, std::size_t candidate) {
  return derive_stream_id({step, phase, candidate});
}

ProgressiveResult run_popfast(const ProgressiveData& data, const ProgressiveConfig& cfg,
                              const ProgressHooks& hooks) {
  return run_fast_family(data, cfg, hooks, Variant::kFast);
}

ProgressiveResult run_popmem_h(const ProgressiveData& data, const ProgressiveConfig& cfg,
                               const ProgressHooks& hooks) {
  return run_fast_family(data, cfg, hooks, Variant::kMemH);
}

ProgressiveResult run_popmem_o(const ProgressiveData& data, const ProgressiveConfig& cfg,
                               const ProgressHooks& hooks) {
  return run_fast_family(data, cfg, hooks, Variant::kMemO);
}

ProgressiveResult run_pop(const ProgressiveData& data, const ProgressiveConfig& cfg,
                          const ProgressHooks& hooks) {
  validate(cfg, data);
  RunContext ctx(data, cfg, hooks);
  const bool use_val = ctx.eval_on_validation();
  const std::size_t classes = data.num_classes;
  const auto& library = enumerate_library();

  Matrix train_in = data.x_train;
  Matrix eval_in = use_val ? *data.x_val : data.x_train;

  NetworkModel model;
  model.algorithm = Algorithm::kPop;
  model.input_dim = data.x_train.cols();
  model.output_dim = classes;

  for (std::size_t k = 0; k < cfg.network.hidden_sizes.size(); ++k) {
    const std::size_t step = k + 1;
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t trainings_before = ctx.trainings.load();
    const std::size_t in_width = train_in.cols();
    const std::size_t width = cfg.network.hidden_sizes[k];

    // Random hidden operator set for pass 1, redrawn until its pooling is
    // defined on this input width.
    RngStream draw(cfg.run_seed, candidate_stream_id(step, kDrawPhase, 0));
    OperatorSet hidden_opset = library[draw.below(kLibrarySize)];
    while (in_width < pool_arity_floor(hidden_opset.pool))
      hidden_opset = library[draw.below(kLibrarySize)];
    const OperatorSet initial = hidden_opset;
    OperatorSet output_opset;

    auto output_sweep = [&](std::size_t phase, std::string_view name, const OperatorSet& fixed_hidden) {
      return sweep(ctx, train_in, step, phase, name, std::nullopt,
                   [&](const CandidateJob& job, RngStream& init) {
                     GopLayerParams hidden = make_gop_layer(in_width, width, fixed_hidden, init);
                     OutputLayer out = make_gop_layer(width, classes, job.opset, init);
                     return std::pair{std::move(hidden), std::move(out)};
                   });
    };
    auto hidden_sweep = [&](std::size_t phase, std::string_view name, const OperatorSet& fixed_output) {
      return sweep(ctx, train_in, step, phase, name, std::nullopt,
                   [&](const CandidateJob& job, RngStream& init) {
                     GopLayerParams hidden = make_gop_layer(in_width, width, job.opset, init);
                     OutputLayer out = make_gop_layer(width, classes, fixed_output, init);
                     return std::pair{std::move(hidden), std::move(out)};
                   });
    };

    std::size_t candidates = 0;
    std::size_t failed = 0;
    auto tally = [&](const SweepResult<ShlnOutcome>& r) {
      candidates += r.completed + r.failures.size();
      failed += r.failures.size();
    };

    auto r1 = output_sweep(0, "pass1-output", hidden_opset);
    tally(r1);
    output_opset = library[r1.winner_index];
    auto r2 = hidden_sweep(1, "pass1-hidden", output_opset);
    tally(r2);
    hidden_opset = library[r2.winner_index];
    auto r3 = output_sweep(2, "pass2-output", hidden_opset);
    tally(r3);
    output_opset = library[r3.winner_index];
    auto r4 = hidden_sweep(3, "pass2-hidden", output_opset);
    tally(r4);
    ShlnOutcome& winner = *r4.winner_params;

    Matrix hidden_train = gop_infer(winner.hidden, train_in);
    Matrix hidden_eval = use_val ? gop_infer(winner.hidden, eval_in) : hidden_train;

    StepRecord rec;
    rec.step = step;
    rec.candidates = candidates;
    rec.trainings = ctx.trainings.load() - trainings_before;
    rec.failed = failed;
    rec.hidden_opset = winner.hidden.opset;
    rec.output_opset = std::get<GopLayerParams>(winner.output).opset;
    rec.initial_hidden_opset = initial;
    rec.best_loss = r4.losses[r4.winner_index];
    rec.accuracy = accuracy(output_scores(winner.output, hidden_eval), ctx.eval_labels());
    rec.accuracy_split = use_val ? "validation" : "train";
    rec.input_width = in_width;
    rec.hidden_width = width;
    rec.output_fan_in = width;

    ctx.step_curves.push_back(std::move(winner.stats));
    model.blocks.push_back(HiddenBlock{std::move(winner.hidden), std::nullopt, MemoryPlacement::kNone});
    model.output = std::move(winner.output);
    model.history.push_back(rec);
    model.history.back().stopped = should_stop(model.history, cfg.stopping);
    model.history.back().seconds = elapsed_since(t0);
    if (hooks.on_step) hooks.on_step(model.history.back(), model.blocks);
    if (model.history.back().stopped) break;

    train_in = std::move(hidden_train);
    eval_in = use_val ? std::move(hidden_eval) : train_in;
  }
  return finish(ctx, std::move(model));
}

ProgressiveResult run_progressive(const ProgressiveData& data, const ProgressiveConfig& cfg,
                                  const ProgressHooks& hooks) {
  switch (cfg.algorithm) {
    case Algorithm::kPop: return run_pop(data, cfg, hooks);
    case Algorithm::kPopFast: return run_popfast(data, cfg, hooks);
    case Algorithm::kPopMemH: return run_popmem_h(data, cfg, hooks);
    case Algorithm::kPopMemO: return run_popmem_o(data, cfg, hooks);
  }
  throw ValidationError("unknown algorithm");
}

NetworkTemplate widened_template(const NetworkModel& model) {
  NetworkTemplate t;
  t.input_dim = model.input_dim;
  t.output_dim = model.output_dim;
  for (const auto& b : model.blocks) {
    std::size_t w = b.gop.fan_out();
    if (b.placement == MemoryPlacement::kHidden && b.memory) w += b.memory->out_dim();
    t.hidden_sizes.push_back(w);
  }
  return t;
}

std::string_view to_string(StopMode m) noexcept {
  return m == StopMode::kRelativeAccuracy ? "relative_accuracy" : "absolute_loss";
}

std::string_view to_string(MetricSplit s) noexcept {
  return s == MetricSplit::kValidation ? "validation" : "train";
}

StopMode parse_stop_mode(std::string_view name) {
  if (name == "relative_accuracy") return StopMode::kRelativeAccuracy;
  if (name == "absolute_loss") return StopMode::kAbsoluteLoss;
  throw ParseError("unknown stopping mode '" + std::string(name) + "'");
}

MetricSplit parse_metric_split(std::string_view name) {
  if (name == "validation") return MetricSplit::kValidation;
  if (name == "train") return MetricSplit::kTrain;
  throw ParseError("unknown metric split '" + std::string(name) + "'");
}

}  // namespace gopforge
