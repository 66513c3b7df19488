#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "experiment.hpp"
#include "gopforge/error.hpp"
#include "gopforge/loss.hpp"
#include "gopforge/model_io.hpp"
#include "gopforge/progressive.hpp"
#include "gopforge/search.hpp"

namespace gopforge::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("error writing '" + path.string() + "'");
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string variant_label(const ProgressiveConfig& run) {
  std::string s(to_string(run.algorithm));
  if (run.memory_kind) s += "-" + std::string(to_string(*run.memory_kind));
  return s;
}

std::string curve_csv(const TrainStats& stats) {
  std::ostringstream os;
  os << "epoch,lr,train_loss,train_acc,val_acc\n";
  for (std::size_t e = 0; e < stats.loss_curve.size(); ++e) {
    os << e << ',' << num(stats.lr_curve[e]) << ',' << num(stats.loss_curve[e]) << ','
       << num(stats.train_acc_curve[e]) << ',';
    if (e < stats.val_acc_curve.size()) os << num(stats.val_acc_curve[e]);
    os << '\n';
  }
  return os.str();
}

std::string sweep_csv(std::span<const SweepEntry> entries) {
  std::ostringstream os;
  os << "candidate_index,nodal,pool,act,loss,seconds,status\n";
  for (const auto& e : entries) {
    os << e.candidate_index << ',' << to_string(e.opset.nodal) << ',' << to_string(e.opset.pool) << ','
       << to_string(e.opset.act) << ',' << num(e.loss) << ',' << num(e.seconds) << ','
       << (e.ok ? "ok" : "failed") << '\n';
  }
  return os.str();
}

std::string steps_csv(const std::vector<StepRecord>& history) {
  std::ostringstream os;
  os << "step,candidates,best_opset_nodal,best_opset_pool,best_opset_act,best_loss,val_acc,stopped,seconds\n";
  for (const auto& r : history) {
    os << r.step << ',' << r.candidates << ',' << to_string(r.hidden_opset.nodal) << ','
       << to_string(r.hidden_opset.pool) << ',' << to_string(r.hidden_opset.act) << ','
       << num(r.best_loss) << ',' << num(r.accuracy) << ',' << (r.stopped ? 1 : 0) << ','
       << num(r.seconds) << '\n';
  }
  return os.str();
}

json accuracy_or_null(const NetworkModel& model, const Dataset& ds, Split s) {
  const auto idx = indices_of(ds, s);
  if (idx.empty()) return nullptr;
  return accuracy(predict(model, select_rows(ds.x, idx)), labels_of(ds, s));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Column names from the first line of a CSV file.
std::vector<std::string> csv_header(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file (no header row)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> names;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      names.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  names.push_back(cur);
  for (auto& n : names) {
    const auto b = n.find_first_not_of(" \t");
    const auto e = n.find_last_not_of(" \t");
    n = b == std::string::npos ? "" : n.substr(b, e - b + 1);
  }
  return names;
}

}  // namespace

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ProgressionError& e) {
    err << "progression failed: " << e.what() << '\n';
    return kExitProgression;
  } catch (const TrainingError& e) {
    err << "training failed: " << e.what() << '\n';
    return kExitProgression;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitProgression;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "dimension mismatch: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

static int run_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  json raw = load_config_file(args.config);
  for (const auto& o : args.overrides) apply_override(raw, o);
  if (args.seed) raw["run_seed"] = *args.seed;
  ExperimentConfig cfg = parse_experiment(raw);
  if (args.workers) cfg.run.workers = *args.workers;
  cfg.run.workers = resolve_workers(cfg.run.workers);
  if (args.out) cfg.out_dir = *args.out;

  LoadedData data = load_experiment_data(cfg.data, cfg.run.run_seed);
  if (cfg.run.network.input_dim == 0) cfg.run.network.input_dim = data.dataset.x.cols();
  if (cfg.run.network.output_dim == 0) cfg.run.network.output_dim = data.dataset.class_count;
  validate(cfg.run, data.progressive);

  const fs::path dir = cfg.out_dir;
  make_dirs(dir / "sweeps");
  make_dirs(dir / "curves");
  write_split_manifest(dir / "splits.csv", data.dataset.split);
  if (cfg.data.source != DataSource::kCsv) write_csv(dir / "dataset.csv", data.raw);

  const std::size_t layers = cfg.run.network.hidden_sizes.size();
  ProgressHooks hooks;
  hooks.on_sweep = [&](std::size_t step, std::string_view phase, std::span<const SweepEntry> entries) {
    write_text(dir / "sweeps" / ("step" + std::to_string(step) + "_" + std::string(phase) + ".csv"),
               sweep_csv(entries));
  };
  hooks.on_step = [&](const StepRecord& r, const std::vector<HiddenBlock>&) {
    if (args.quiet) return;
    err << "step " << r.step << "/" << layers << ": " << to_string(r.hidden_opset)
        << " loss=" << r.best_loss << " " << r.accuracy_split << "_acc=" << r.accuracy << " ("
        << r.candidates << " candidates, " << r.failed << " failed, " << r.seconds << " s)"
        << (r.stopped ? " stop" : "") << '\n';
  };

  if (!args.quiet)
    err << "training " << variant_label(cfg.run) << " on " << cfg.data.name << " ("
        << data.progressive.x_train.rows() << " train rows, " << cfg.run.workers << " workers)\n";
  const auto t0 = std::chrono::steady_clock::now();
  ProgressiveResult result = run_progressive(data.progressive, cfg.run, hooks);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ModelMetadata meta;
  meta.run_seed = cfg.run.run_seed;
  meta.class_names = data.dataset.class_names;
  meta.feature_names = data.dataset.feature_names;
  meta.standardization = data.dataset.standardization;
  meta.config_json = normalized_echo(cfg).dump();
  save_model(dir / "model.gopm-model", result.model, meta);

  write_text(dir / "steps.csv", steps_csv(result.model.history));
  for (std::size_t k = 0; k < result.step_curves.size(); ++k)
    write_text(dir / "curves" / ("step" + std::to_string(k + 1) + "_search.csv"), curve_csv(result.step_curves[k]));
  if (result.finetune_stats) write_text(dir / "curves" / "finetune.csv", curve_csv(*result.finetune_stats));

  double layer_seconds = 0.0;
  for (const auto& r : result.model.history) layer_seconds += r.seconds;
  const json acc = {{"train", accuracy_or_null(result.model, data.dataset, Split::kTrain)},
                    {"val", accuracy_or_null(result.model, data.dataset, Split::kVal)},
                    {"test", accuracy_or_null(result.model, data.dataset, Split::kTest)}};
  const json summary = {{"schema_version", kRunSchemaVersion},
                        {"algorithm", variant_label(cfg.run)},
                        {"dataset", cfg.data.name},
                        {"run_seed", cfg.run.run_seed},
                        {"workers", cfg.run.workers},
                        {"steps", result.model.history.size()},
                        {"hidden_widths", [&] {
                           std::vector<std::size_t> w;
                           for (const auto& b : result.model.blocks) w.push_back(b.gop.fan_out());
                           return w;
                         }()},
                        {"accuracy", acc},
                        {"seconds_total", total},
                        {"seconds_per_layer", layer_seconds / static_cast<double>(result.model.history.size())},
                        {"model", "model.gopm-model"}};
  write_text(dir / "run.json", summary.dump(2) + "\n");

  out << "split,accuracy\n";
  for (const char* s : {"train", "val", "test"})
    if (!acc[s].is_null()) out << s << ',' << num(acc[s].get<double>()) << '\n';
  if (!args.quiet) err << "wrote " << (dir / "model.gopm-model").string() << " in " << total << " s\n";
  return kExitOk;
}

static int run_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const ModelFile mf = load_model(args.model);
  const NetworkModel& model = mf.model;
  std::string label_column = "label";
  const json echo = json::parse(mf.metadata.config_json);
  if (echo.contains("data") && echo["data"].contains("label_column"))
    label_column = echo["data"]["label_column"].get<std::string>();

  // Only the model's feature columns are parsed; extra columns are ignored.
  const std::vector<std::string> header = csv_header(args.data);
  const auto has = [&](const std::string& name) {
    return std::find(header.begin(), header.end(), name) != header.end();
  };
  for (const auto& name : mf.metadata.feature_names) {
    if (has(name)) continue;
    const std::size_t available = header.size() - (has(label_column) ? 1 : 0);
    if (available != model.input_dim)
      throw ShapeError("model expects " + std::to_string(model.input_dim) + " features, data has " +
                       std::to_string(available));
    throw ParseError(args.data.string() + ": missing feature column '" + name + "'");
  }
  CsvSchema schema;
  schema.label_column = label_column;
  schema.class_names = mf.metadata.class_names;
  schema.feature_columns = mf.metadata.feature_names;
  const Dataset ds = load_csv(args.data, schema);
  if (ds.x.cols() != model.input_dim)
    throw ShapeError("model expects " + std::to_string(model.input_dim) + " features, manifest names " +
                     std::to_string(ds.x.cols()));
  Matrix x = ds.x;
  if (mf.metadata.standardization) x = apply_standardization(*mf.metadata.standardization, x);

  std::vector<std::size_t> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  if (!args.split_manifest.empty()) {
    const std::vector<Split> split = read_split_manifest(args.split_manifest, x.rows());
    const Split want = parse_split(args.split.empty() ? "test" : args.split);
    rows.clear();
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i] == want) rows.push_back(i);
    if (rows.empty()) throw ValidationError("split '" + args.split + "' selects no rows");
  }
  const Matrix xs = select_rows(x, rows);
  std::vector<std::size_t> labels;
  for (std::size_t i : rows) labels.push_back(ds.labels[i]);

  const Matrix scores = predict(model, xs);
  const std::vector<std::size_t> pred = argmax_rows(scores);
  const std::size_t classes = model.output_dim;
  std::vector<std::vector<std::size_t>> confusion(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < pred.size(); ++i) ++confusion[labels[i]][pred[i]];
  const double acc = accuracy(scores, labels);

  const auto class_name = [&](std::size_t c) {
    return c < mf.metadata.class_names.size() ? mf.metadata.class_names[c] : std::to_string(c);
  };
  std::ostringstream pcsv;
  pcsv << "sample_index,true,predicted";
  for (std::size_t c = 0; c < classes; ++c) pcsv << ",score_" << class_name(c);
  pcsv << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pcsv << rows[i] << ',' << class_name(labels[i]) << ',' << class_name(pred[i]);
    for (std::size_t c = 0; c < classes; ++c) pcsv << ',' << num(scores(i, c));
    pcsv << '\n';
  }
  const fs::path pred_path =
      args.predictions.empty() ? args.model.parent_path() / "predictions.csv" : args.predictions;
  write_text(pred_path, pcsv.str());

  out << "accuracy," << num(acc) << '\n';
  out << "true\\predicted";
  for (std::size_t c = 0; c < classes; ++c) out << ',' << class_name(c);
  out << '\n';
  for (std::size_t t = 0; t < classes; ++t) {
    out << class_name(t);
    for (std::size_t p = 0; p < classes; ++p) out << ',' << confusion[t][p];
    out << '\n';
  }
  err << "evaluated " << rows.size() << " rows, predictions in " << pred_path.string() << '\n';
  return kExitOk;
}

static int run_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(args.run_dir))
    throw ValidationError("run directory '" + args.run_dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(args.run_dir))
    if (entry.is_regular_file() && entry.path().filename() == "run.json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no run.json files under '" + args.run_dir.string() + "'");

  struct Run {
    std::uint64_t seed;
    json acc;
    double seconds_per_layer;
    std::size_t steps;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Run>> groups;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
      if (j.at("schema_version").get<int>() != kRunSchemaVersion)
        throw ValidationError(f.string() + ": incompatible schema_version " +
                              j.at("schema_version").dump() + " (expected " +
                              std::to_string(kRunSchemaVersion) + ")");
      groups[{j.at("algorithm").get<std::string>(), j.at("dataset").get<std::string>()}].push_back(
          {j.at("run_seed").get<std::uint64_t>(), j.at("accuracy"),
           j.at("seconds_per_layer").get<double>(), j.at("steps").get<std::size_t>()});
    } catch (const json::exception& e) {
      throw ValidationError(f.string() + ": unreadable run summary: " + e.what());
    }
  }

  const auto metric = [](const std::vector<Run>& runs, const char* split) -> std::string {
    std::vector<double> v;
    for (const auto& r : runs)
      if (r.acc.contains(split) && !r.acc[split].is_null()) v.push_back(r.acc[split].get<double>());
    return v.empty() ? "" : num(median(v));
  };
  std::ostringstream table;
  std::ostringstream longform;
  table << "algorithm,dataset,runs,median_test_acc,median_val_acc,median_train_acc,median_seconds_per_layer\n";
  longform << "algorithm,dataset,run_seed,metric,value\n";
  for (const auto& [key, runs] : groups) {
    std::vector<double> secs;
    for (const auto& r : runs) {
      secs.push_back(r.seconds_per_layer);
      for (const char* s : {"train", "val", "test"})
        if (r.acc.contains(s) && !r.acc[s].is_null())
          longform << key.first << ',' << key.second << ',' << r.seed << ',' << s << "_acc,"
                   << num(r.acc[s].get<double>()) << '\n';
      longform << key.first << ',' << key.second << ',' << r.seed << ",seconds_per_layer,"
               << num(r.seconds_per_layer) << '\n';
      longform << key.first << ',' << key.second << ',' << r.seed << ",steps," << r.steps << '\n';
    }
    table << key.first << ',' << key.second << ',' << runs.size() << ',' << metric(runs, "test") << ','
          << metric(runs, "val") << ',' << metric(runs, "train") << ',' << num(median(secs)) << '\n';
  }
  const fs::path dir = args.out.empty() ? args.run_dir : args.out;
  make_dirs(dir);
  write_text(dir / "comparison.csv", table.str());
  write_text(dir / "comparison_long.csv", longform.str());
  out << table.str();
  err << "aggregated " << files.size() << " runs into " << (dir / "comparison.csv").string() << '\n';
  return kExitOk;
}

static int run_inspect(const fs::path& model, std::ostream& out, std::ostream&) {
  out << manifest_json(model) << '\n';
  return kExitOk;
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded([&] { return run_train(args, out, err); }, err);
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded([&] { return run_eval(args, out, err); }, err);
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  return guarded([&] { return run_report(args, out, err); }, err);
}

int cmd_inspect(const fs::path& model, std::ostream& out, std::ostream& err) {
  return guarded([&] { return run_inspect(model, out, err); }, err);
}

}  // namespace gopforge::cli
