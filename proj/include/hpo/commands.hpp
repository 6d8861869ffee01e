#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hpo/config.hpp"
#include "hpo/core.hpp"
#include "hpo/io.hpp"
#include "hpo/quality.hpp"
#include "hpo/simenv.hpp"

namespace hpo::cli {

/// "proxy" or "remote" (endpoint from HPO_SCORER_ENDPOINT).
std::unique_ptr<quality::QualityScorer> make_scorer(const std::string& name);

/// Per-document alignment, per-link quality and latency, null-link counts and
/// corpus means. Every reference document needs a hypothesis and vice versa.
OrderedJson evaluate_corpus(const std::vector<Trajectory>& hypotheses,
                            const std::vector<ReferenceDocument>& references,
                            const quality::QualityScorer& scorer);

struct Corpora {
  std::vector<simenv::SimSource> train;
  std::vector<simenv::SimSource> val;
  std::vector<simenv::SimSource> eval;
};
Corpora build_corpora(const RunConfig& config);

struct RunOutcome {
  std::uint64_t seed = 0;
  simenv::TrainResult result;
  simenv::PolicyMetrics final_metrics;  // final policy on the held-out corpus
  simenv::PolicyMetrics best_metrics;   // best-validation checkpoint on the same corpus
};

/// Trains one policy and measures it on the held-out corpus with a fixed
/// evaluation stream shared by all runs.
RunOutcome run_training(const RunConfig& config, std::uint64_t seed, const Corpora& corpora,
                        const simenv::StepCallback& on_step = {});

OrderedJson to_json(const simenv::StepRecord& record);

struct EvalArgs {
  std::filesystem::path hyp;
  std::filesystem::path ref;
  std::string scorer = "proxy";
  std::optional<std::filesystem::path> out;  // directory; stdout when unset
};
void cmd_eval(const EvalArgs& args, std::ostream& out);

struct TrainArgs {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> from_manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::string scorer = "proxy";
  std::filesystem::path out;
};
void cmd_train(const TrainArgs& args, std::ostream& log);

struct SynthArgs {
  std::filesystem::path input;
  double chunk_s = 1.12;
  int max_chunks = 60;
  std::filesystem::path out;
};
void cmd_synth(const SynthArgs& args, std::ostream& log);

struct AblateArgs {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> parameter;
  std::vector<std::string> values;
  std::optional<std::uint64_t> seed;  // first seed; the configured seed count is kept
  std::optional<std::string> variant;
  std::string scorer = "proxy";
  std::filesystem::path out;
};
void cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& log);

struct ReportArgs {
  std::vector<std::filesystem::path> runs;
  std::optional<std::filesystem::path> out;
};
void cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& warn);

}  // namespace hpo::cli
