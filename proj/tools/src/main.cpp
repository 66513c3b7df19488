#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace gopforge::cli;
  CLI::App app{"gopforge: progressive GOP network training"};
  app.require_subcommand(1);

  TrainArgs train;
  std::string format = "csv";
  auto* t = app.add_subcommand("train", "Run a progressive training experiment");
  t->add_option("--config", train.config, "Experiment config (JSON)")->required();
  t->add_option("--workers", train.workers, "Worker threads for candidate sweeps")->check(CLI::PositiveNumber);
  t->add_option("--seed", train.seed, "Run seed");
  t->add_option("--out", train.out, "Output directory");
  t->add_option("--set", train.overrides, "Override a config key, e.g. search.epochs=20");
  t->add_option("--format", format, "Report format")->check(CLI::IsMember({"csv"}));
  t->add_flag("--quiet", train.quiet, "Suppress progress messages");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a model on a CSV dataset");
  e->add_option("--model", eval.model, "Model file")->required();
  e->add_option("--data", eval.data, "CSV dataset")->required();
  e->add_option("--split-manifest", eval.split_manifest, "Split manifest CSV (sample_index,split)");
  e->add_option("--split", eval.split, "Split to evaluate with --split-manifest (default test)");
  e->add_option("--predictions", eval.predictions, "Predictions CSV path");
  e->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Aggregate run summaries into comparison tables");
  r->add_option("--run-dir", report.run_dir, "Directory searched for run.json files")->required();
  r->add_option("--out", report.out, "Output directory (default: the run directory)");
  r->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));

  std::string model;
  auto* i = app.add_subcommand("inspect", "Print a model manifest");
  i->add_option("--model", model, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (t->parsed()) return cmd_train(train, std::cout, std::cerr);
  if (e->parsed()) return cmd_eval(eval, std::cout, std::cerr);
  if (r->parsed()) return cmd_report(report, std::cout, std::cerr);
  return cmd_inspect(model, std::cout, std::cerr);
}
