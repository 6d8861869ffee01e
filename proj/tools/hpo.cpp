#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpo/commands.hpp"
#include "hpo/error.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

int exit_code(const hpo::Error& e) {
  switch (e.category()) {
    case hpo::Error::Category::kConfig: return kUsage;
    case hpo::Error::Category::kData: return kData;
    case hpo::Error::Category::kRuntime: return kRuntime;
  }
  return kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical policy optimization for simultaneous translation"};
  app.require_subcommand(1);

  std::string scorer = "proxy";
  std::optional<std::string> config;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  hpo::cli::EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Align, score and time hypotheses against references");
  eval_cmd->add_option("hyp", eval.hyp, "Hypothesis trajectories (JSONL)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("ref", eval.ref, "Reference documents (JSONL)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--scorer", scorer, "proxy or remote")->check(CLI::IsMember({"proxy", "remote"}));
  eval_cmd->add_option("--out", out, "Output directory (report.json, manifest.json); stdout if omitted");

  hpo::cli::TrainArgs train;
  std::optional<std::string> from_manifest;
  auto* train_cmd = app.add_subcommand("train", "Train the toy policy on the simulated corpus");
  train_cmd->add_option("--config", config, "JSON config")->check(CLI::ExistingFile);
  train_cmd->add_option("--from-manifest", from_manifest, "Rerun from a previous manifest.json")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", seed, "Run seed");
  train_cmd->add_option("--variant", variant, "Reward variant");
  train_cmd->add_option("--scorer", scorer, "proxy or remote")->check(CLI::IsMember({"proxy", "remote"}));
  train_cmd->add_option("--out", out, "Run directory")->required();

  hpo::cli::SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Build read/write trajectories from word alignments");
  synth_cmd->add_option("input", synth.input, "Input JSONL")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--chunk-s", synth.chunk_s, "Chunk duration in seconds")->capture_default_str();
  synth_cmd->add_option("--max-chunks", synth.max_chunks, "Longest segment in chunks")->capture_default_str();
  synth_cmd->add_option("--seed", seed, "Accepted for uniformity; synthesis is deterministic");
  synth_cmd->add_option("--out", out, "Output directory")->required();

  hpo::cli::AblateArgs ablate;
  std::optional<std::string> parameter;
  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep one reward hyperparameter over seeds");
  ablate_cmd->add_option("--config", config, "JSON config")->check(CLI::ExistingFile);
  ablate_cmd->add_option("--param", parameter, "variant, q_thres, l_max or lambda");
  ablate_cmd->add_option("--values", ablate.values, "Values to sweep");
  ablate_cmd->add_option("--seed", seed, "First seed");
  ablate_cmd->add_option("--variant", variant, "Reward variant for non-variant sweeps");
  ablate_cmd->add_option("--scorer", scorer, "proxy or remote")->check(CLI::IsMember({"proxy", "remote"}));
  ablate_cmd->add_option("--out", out, "Output directory")->required();

  hpo::cli::ReportArgs report;
  std::vector<std::string> runs;
  auto* report_cmd = app.add_subcommand("report", "Quality-vs-latency series from run directories");
  report_cmd->add_option("runs", runs, "Run directories")->required();
  report_cmd->add_option("--out", out, "Output directory; stdout if omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*eval_cmd) {
      eval.scorer = scorer;
      if (out) eval.out = *out;
      hpo::cli::cmd_eval(eval, std::cout);
    } else if (*train_cmd) {
      train.config = config ? std::optional<std::filesystem::path>(*config) : std::nullopt;
      train.from_manifest = from_manifest ? std::optional<std::filesystem::path>(*from_manifest) : std::nullopt;
      train.seed = seed;
      train.variant = variant;
      train.scorer = scorer;
      train.out = *out;
      hpo::cli::cmd_train(train, std::cerr);
    } else if (*synth_cmd) {
      synth.out = *out;
      hpo::cli::cmd_synth(synth, std::cerr);
    } else if (*ablate_cmd) {
      ablate.config = config ? std::optional<std::filesystem::path>(*config) : std::nullopt;
      ablate.parameter = parameter;
      ablate.seed = seed;
      ablate.variant = variant;
      ablate.scorer = scorer;
      ablate.out = *out;
      hpo::cli::cmd_ablate(ablate, std::cout, std::cerr);
    } else if (*report_cmd) {
      for (const auto& r : runs) report.runs.emplace_back(r);
      if (out) report.out = *out;
      hpo::cli::cmd_report(report, std::cout, std::cerr);
    }
  } catch (const hpo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
