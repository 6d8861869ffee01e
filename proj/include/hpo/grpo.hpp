#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace hpo::grpo {

enum class ObjectiveMode {
  kAsWritten,     // R_t = ratio * (C_t - beta * KL_t)
  kStandardGrpo,  // R_t = C_t - beta * KL_t
};

std::string_view to_string(ObjectiveMode mode);
ObjectiveMode parse_objective_mode(std::string_view name);

struct OptimizerConfig {
  double epsilon = 0.2;
  double beta = 0.01;
  double learning_rate = 0.05;
  double grad_clip_norm = 1.0;
  /// Trajectories per parameter update; whole groups are never split.
  int minibatch_size = 128;
  ObjectiveMode objective_mode = ObjectiveMode::kAsWritten;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

/// Log-probabilities of one generated token under the current, behaviour and
/// frozen reference policies.
struct TokenLogProbs {
  double theta = 0.0;
  double old = 0.0;
  double ref = 0.0;
};

struct Sample {
  double reward = 0.0;
  std::vector<TokenLogProbs> tokens;
};

/// n >= 2 rollouts of one source with their scalar rewards.
struct RolloutGroup {
  std::string source_id;
  std::vector<Sample> samples;
};

/// exp(logp_theta - logp_old). Throws DataError on non-finite input.
double importance_ratio(double logp_theta, double logp_old);

/// min(ratio * r, clip(ratio, 1 - eps, 1 + eps) * r).
double clipped_reward(double ratio, double r, double epsilon);

/// ratio * (pi_ref / pi_theta - log(pi_ref / pi_theta) - 1).
double kl_onpolicy(double logp_theta, double logp_old, double logp_ref);

double token_reward(const TokenLogProbs& token, double r, const OptimizerConfig& config);

/// d token_reward / d logp_theta, holding r, logp_old and logp_ref fixed.
double token_reward_derivative(const TokenLogProbs& token, double r, const OptimizerConfig& config);

/// Mean over groups of (1/n) sum_j (1/|y_j|) sum_t R_t. Samples without
/// tokens contribute zero.
double objective(std::span<const RolloutGroup> groups, const OptimizerConfig& config);

/// Recomputes `logp` (one entry per token of the sample) under `theta` and,
/// when `jacobian` is non-null, the (tokens x dim) matrix of d logp / d theta.
using PolicyEvaluator = std::function<void(const Eigen::VectorXd& theta, std::size_t group,
                                           std::size_t sample, Eigen::VectorXd& logp,
                                           Eigen::MatrixXd* jacobian)>;

/// Wraps an evaluator that only produces log-probabilities with a central
/// finite-difference Jacobian.
PolicyEvaluator finite_difference_evaluator(PolicyEvaluator logp_only, double step = 1e-6);

/// Writes logp_theta of every token from `evaluate` at `theta`.
void refresh_theta_logps(std::span<RolloutGroup> groups, const Eigen::VectorXd& theta,
                         const PolicyEvaluator& evaluate);

struct ObjectiveValue {
  double J = 0.0;
  Eigen::VectorXd gradient;
  double mean_kl = 0.0;  // token mean of KL_t
};

/// J and dJ/dtheta at `theta`; rewards are constants.
ObjectiveValue objective_and_gradient(std::span<RolloutGroup> groups, const Eigen::VectorXd& theta,
                                      const PolicyEvaluator& evaluate, const OptimizerConfig& config);

/// Adam moments with decoupled weight decay, ascending the objective.
class AdamW {
 public:
  explicit AdamW(Eigen::Index dimension) : m_(Eigen::VectorXd::Zero(dimension)), v_(Eigen::VectorXd::Zero(dimension)) {}

  void ascend(Eigen::VectorXd& theta, const Eigen::VectorXd& gradient, const OptimizerConfig& config);
  long steps() const { return t_; }

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

struct StepStats {
  double J = 0.0;          // objective over all groups before the first update
  double kl = 0.0;         // mean token KL before the first update
  double grad_norm = 0.0;  // mean pre-clip gradient norm over minibatches
  int updates = 0;
};

/// One optimisation phase: for each minibatch, recompute log-probs at the
/// current theta, clip the gradient norm, and take an AdamW step. Throws
/// RuntimeFailure on a non-finite gradient, leaving theta untouched for that
/// minibatch.
StepStats step(Eigen::VectorXd& theta, std::span<RolloutGroup> groups, const PolicyEvaluator& evaluate,
               const OptimizerConfig& config, AdamW& optimizer);

}  // namespace hpo::grpo
