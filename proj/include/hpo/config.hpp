#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hpo/grpo.hpp"
#include "hpo/io.hpp"
#include "hpo/reward.hpp"
#include "hpo/simenv.hpp"

namespace hpo {

/// One-dimensional sweep for `hpo ablate`.
struct AblateSpec {
  std::string parameter = "variant";  // variant | q_thres | l_max | lambda
  std::vector<std::string> values = {"normalize", "normalize-truncate", "hierarchical-doc", "hierarchical-sent"};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

/// Everything `hpo train` and `hpo ablate` need. Sections: reward, optimizer,
/// corpus, train, ablate.
struct RunConfig {
  reward::RewardConfig reward;
  grpo::OptimizerConfig optimizer;
  simenv::CorpusSpec corpus;
  /// Seed of the generated corpus; fixed so that run seeds vary only the
  /// rollouts and the optimisation.
  std::uint64_t corpus_seed = 7;
  int val_docs = 8;
  int eval_docs = 16;
  int eval_rollouts = 8;
  simenv::TrainConfig train;
  AblateSpec ablate;

  /// Throws one ConfigError listing every invalid field.
  void validate() const;
};

/// The shipped defaults.
RunConfig default_config();

/// Overlays `document` on the defaults. Unknown sections or keys and wrongly
/// typed values are errors; all problems are reported together.
RunConfig parse_config(const Json& document);
RunConfig load_config(const std::filesystem::path& path);
OrderedJson to_json(const RunConfig& config);

/// Applies one ablation value ("hierarchical-sent", "-3", ...) to a copy.
RunConfig with_ablation_value(RunConfig config, const std::string& parameter, const std::string& value);

}  // namespace hpo
