#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hpo/core.hpp"
#include "hpo/grpo.hpp"
#include "hpo/io.hpp"
#include "hpo/quality.hpp"
#include "hpo/reward.hpp"

namespace hpo::simenv {

/// Number of policy features; the policy chooses how many tokens to write
/// after each chunk, from 0 to kMaxEmit.
inline constexpr int kNumFeatures = 6;
inline constexpr int kMaxEmit = 3;

using Params = Eigen::Matrix<double, kNumFeatures, 1>;
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, kNumFeatures>;

/// Out-of-vocabulary replacement written for a token emitted before the
/// source carried enough information to translate it.
inline constexpr const char* kCorruptToken = "<unk>";

struct SimToken {
  std::string text;
  int reveal_chunk = 1;  // chunk after which the aligned source word has been heard
  int info_chunk = 1;    // earliest chunk after which the token is translated correctly
  /// Needs the whole stream: always wrong when written before the last chunk.
  bool final_only = false;
};

struct SimSentence {
  std::string transcript;
  std::vector<SimToken> tokens;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct SimSource {
  std::string id;
  ChunkTimeline timeline;
  std::vector<SimSentence> sentences;
  /// Added to the chunk margin before the corruption sigmoid: a token written
  /// at chunk i < info_chunk is corrupted with probability
  /// 1 - sigmoid(i - info_chunk + anticipation).
  double anticipation = 0.0;
  /// Probability that any written token is wrong regardless of timing.
  double error_rate = 0.0;

  std::size_t num_tokens() const;
  ReferenceDocument reference() const;
  /// Checks reveal <= info <= num_chunks, info non-decreasing, spans sorted.
  void validate() const;
};

struct CorpusSpec {
  int num_docs = 32;
  int sentences_per_doc = 3;
  int min_sentence_tokens = 6;
  int max_sentence_tokens = 10;
  double min_word_s = 0.45;
  double max_word_s = 0.95;
  double pause_s = 0.4;
  /// Extra chunks before a token becomes translatable, Uniform{min..max}.
  int min_info_lag = 0;
  int max_info_lag = 3;
  /// Probability that a token is only translatable at the end of the stream.
  double unbounded_lag_prob = 0.0;
  double anticipation = 0.0;
  double error_rate = 0.0;
  double chunk_duration_s = 1.12;
  std::string id_prefix = "sim";

  void validate() const;
};

/// 64-bit seed mixing; used to derive independent streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t hash_string(std::string_view text);
/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

std::vector<SimSource> make_corpus(const CorpusSpec& spec, std::uint64_t seed);

/// One write decision: candidate features per option k = 0..rows-1 and the
/// option taken.
struct Decision {
  int chunk = 0;
  FeatureMatrix features;
  int action = 0;
};

struct Rollout {
  Trajectory trajectory;
  std::vector<Decision> decisions;
  int corrupted = 0;
};

/// Log-probabilities of the tokens a decision contributes to the training
/// sequence: one per written token (log S_m - log S_{m-1}, S_m the mass of
/// options >= m) followed by an end-of-write token (log p_k - log S_k). They
/// sum to log p_k. Writes d logp / d theta when `jacobian` is non-null.
void decision_logps(const Params& theta, const Decision& decision, Eigen::Ref<Eigen::VectorXd> logp,
                    Eigen::MatrixXd* jacobian, Eigen::Index row_offset = 0);
int decision_length(const Decision& decision);
int sequence_length(const Rollout& rollout);

/// Concatenated decision log-probabilities of a rollout.
void sequence_logps(const Params& theta, const Rollout& rollout, Eigen::VectorXd& logp,
                    Eigen::MatrixXd* jacobian);

struct PolicyOptions {
  /// Logits are divided by the temperature; 0 picks the argmax deterministically.
  double temperature = 1.0;
};

/// Plays one stream. Tokens left over at the final chunk are written there
/// with log-probability 0 and are not part of the training sequence.
Rollout rollout(const Params& theta, const SimSource& source, std::mt19937_64& rng,
                const PolicyOptions& options = {});

/// n rollouts with streams derived from (seed, source id, member).
std::vector<Rollout> sample_group(const Params& theta, const SimSource& source, int n, std::uint64_t seed,
                                  const PolicyOptions& options = {}, int threads = 1);

/// Training tokens of a group, log-probabilities filled for theta, old and ref.
grpo::RolloutGroup to_rollout_group(const SimSource& source, std::span<const Rollout> rollouts,
                                    std::span<const double> rewards, const Params& theta_old,
                                    const Params& theta_ref);

/// Policy evaluator over groups[g][j] -> rollouts[g][j].
grpo::PolicyEvaluator make_evaluator(const std::vector<std::vector<Rollout>>& rollouts);

struct TrainConfig {
  int steps = 60;
  int sources_per_step = 8;
  int group_size = 16;
  int val_every = 10;
  int val_rollouts = 4;
  int threads = 1;
  Params theta_init = Params::Zero();
};

struct StepRecord {
  int step = 0;
  double J = 0.0;
  double mean_q = 0.0;
  double mean_laal_s = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
};

struct ValidationRecord {
  int step = 0;
  double mean_q = 0.0;
  double mean_laal_s = 0.0;
};

struct TrainResult {
  std::vector<StepRecord> curve;
  std::vector<ValidationRecord> validation;
  Params final_theta = Params::Zero();
  Params best_theta = Params::Zero();
  int best_step = 0;
  double best_val_q = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

struct PolicyMetrics {
  double mean_q = 0.0;
  double mean_laal_s = 0.0;
};

/// Mean per-link proxy quality and mean StreamLAAL over `rollouts_per_source`
/// samples per source.
PolicyMetrics evaluate_policy(const Params& theta, std::span<const SimSource> sources, int rollouts_per_source,
                              std::uint64_t seed, int threads = 1);

using StepCallback = std::function<void(const StepRecord&)>;

/// rollout -> segment/align -> score -> reward -> update, for config.steps
/// steps. The reference policy is theta_init; theta_old is refreshed before
/// each rollout phase.
TrainResult train(std::span<const SimSource> train_set, std::span<const SimSource> val_set,
                  const reward::RewardConfig& reward_config, const grpo::OptimizerConfig& optimizer_config,
                  const TrainConfig& config, std::uint64_t seed, const StepCallback& on_step = {});

/// Runs fn(i) for i in [0, n) over `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

SimSource source_from_json(const Json& record, std::size_t line);
OrderedJson to_json(const SimSource& source);

}  // namespace hpo::simenv
