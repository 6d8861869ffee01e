#include "hpo/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "hpo/error.hpp"

namespace hpo::grpo {

std::string_view to_string(ObjectiveMode mode) {
  return mode == ObjectiveMode::kAsWritten ? "as-written" : "standard-grpo";
}

ObjectiveMode parse_objective_mode(std::string_view name) {
  if (name == "as-written") return ObjectiveMode::kAsWritten;
  if (name == "standard-grpo") return ObjectiveMode::kStandardGrpo;
  throw ConfigError("optimizer.objective_mode: expected as-written or standard-grpo, got '" +
                    std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("optimizer.epsilon must lie in (0, 1)");
  if (!(beta >= 0.0)) throw ConfigError("optimizer.beta must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("optimizer.learning_rate must be positive");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("optimizer.grad_clip_norm must be positive");
  if (minibatch_size < 1) throw ConfigError("optimizer.minibatch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("optimizer.adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("optimizer.adam_beta2 must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("optimizer.adam_epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay must be >= 0");
}

double importance_ratio(double logp_theta, double logp_old) {
  if (!std::isfinite(logp_theta) || !std::isfinite(logp_old))
    throw DataError("importance_ratio: non-finite log-probability");
  return std::exp(logp_theta - logp_old);
}

double clipped_reward(double ratio, double r, double epsilon) {
  return std::min(ratio * r, std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * r);
}

double kl_onpolicy(double logp_theta, double logp_old, double logp_ref) {
  const double z = logp_ref - logp_theta;
  return importance_ratio(logp_theta, logp_old) * (std::exp(z) - z - 1.0);
}

double token_reward(const TokenLogProbs& token, double r, const OptimizerConfig& config) {
  const double ratio = importance_ratio(token.theta, token.old);
  const double inner = clipped_reward(ratio, r, config.epsilon) - config.beta * kl_onpolicy(token.theta, token.old, token.ref);
  return config.objective_mode == ObjectiveMode::kAsWritten ? ratio * inner : inner;
}

double token_reward_derivative(const TokenLogProbs& token, double r, const OptimizerConfig& config) {
  const double ratio = importance_ratio(token.theta, token.old);
  // d ratio / d logp_theta = ratio. The clipped branch is flat in logp_theta.
  const double clipped = std::clamp(ratio, 1.0 - config.epsilon, 1.0 + config.epsilon) * r;
  const double c = std::min(ratio * r, clipped);
  const double dc = ratio * r <= clipped ? ratio * r : 0.0;

  const double z = token.ref - token.theta;
  const double g = std::exp(z) - z - 1.0;
  const double kl = ratio * g;
  const double dkl = ratio * g + ratio * (1.0 - std::exp(z));

  const double inner = c - config.beta * kl;
  const double dinner = dc - config.beta * dkl;
  return config.objective_mode == ObjectiveMode::kAsWritten ? ratio * inner + ratio * dinner : dinner;
}

double objective(std::span<const RolloutGroup> groups, const OptimizerConfig& config) {
  if (groups.empty()) throw DataError("objective: no rollout groups");
  double total = 0.0;
  for (const auto& group : groups) {
    if (group.samples.empty()) throw DataError("objective: empty rollout group");
    double sum = 0.0;
    for (const auto& sample : group.samples) {
      if (sample.tokens.empty()) continue;
      double s = 0.0;
      for (const auto& tok : sample.tokens) s += token_reward(tok, sample.reward, config);
      sum += s / static_cast<double>(sample.tokens.size());
    }
    total += sum / static_cast<double>(group.samples.size());
  }
  return total / static_cast<double>(groups.size());
}

PolicyEvaluator finite_difference_evaluator(PolicyEvaluator logp_only, double step) {
  return [logp_only = std::move(logp_only), step](const Eigen::VectorXd& theta, std::size_t group,
                                                  std::size_t sample, Eigen::VectorXd& logp,
                                                  Eigen::MatrixXd* jacobian) {
    logp_only(theta, group, sample, logp, nullptr);
    if (jacobian == nullptr) return;
    jacobian->resize(logp.size(), theta.size());
    Eigen::VectorXd probe = theta;
    Eigen::VectorXd up;
    Eigen::VectorXd down;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      probe(k) = theta(k) + step;
      logp_only(probe, group, sample, up, nullptr);
      probe(k) = theta(k) - step;
      logp_only(probe, group, sample, down, nullptr);
      probe(k) = theta(k);
      jacobian->col(k) = (up - down) / (2.0 * step);
    }
  };
}

void refresh_theta_logps(std::span<RolloutGroup> groups, const Eigen::VectorXd& theta,
                         const PolicyEvaluator& evaluate) {
  Eigen::VectorXd logp;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t j = 0; j < groups[g].samples.size(); ++j) {
      auto& sample = groups[g].samples[j];
      evaluate(theta, g, j, logp, nullptr);
      if (static_cast<std::size_t>(logp.size()) != sample.tokens.size())
        throw RuntimeFailure("policy evaluator returned the wrong number of log-probabilities");
      for (std::size_t t = 0; t < sample.tokens.size(); ++t) sample.tokens[t].theta = logp(static_cast<Eigen::Index>(t));
    }
  }
}

ObjectiveValue objective_and_gradient(std::span<RolloutGroup> groups, const Eigen::VectorXd& theta,
                                      const PolicyEvaluator& evaluate, const OptimizerConfig& config) {
  if (groups.empty()) throw DataError("objective: no rollout groups");
  ObjectiveValue out;
  out.gradient = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd logp;
  Eigen::MatrixXd jac;
  Eigen::VectorXd weights;
  double kl_sum = 0.0;
  std::size_t kl_count = 0;

  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& group = groups[g];
    if (group.samples.empty()) throw DataError("objective: empty rollout group");
    const double group_scale = 1.0 / (static_cast<double>(groups.size()) * static_cast<double>(group.samples.size()));
    for (std::size_t j = 0; j < group.samples.size(); ++j) {
      auto& sample = group.samples[j];
      if (sample.tokens.empty()) continue;
      evaluate(theta, g, j, logp, &jac);
      if (static_cast<std::size_t>(logp.size()) != sample.tokens.size())
        throw RuntimeFailure("policy evaluator returned the wrong number of log-probabilities");
      const double scale = group_scale / static_cast<double>(sample.tokens.size());
      weights.resize(logp.size());
      double s = 0.0;
      for (std::size_t t = 0; t < sample.tokens.size(); ++t) {
        auto& tok = sample.tokens[t];
        tok.theta = logp(static_cast<Eigen::Index>(t));
        s += token_reward(tok, sample.reward, config);
        weights(static_cast<Eigen::Index>(t)) = token_reward_derivative(tok, sample.reward, config);
        kl_sum += kl_onpolicy(tok.theta, tok.old, tok.ref);
        ++kl_count;
      }
      out.J += scale * s;
      out.gradient.noalias() += scale * (jac.transpose() * weights);
    }
  }
  out.mean_kl = kl_count > 0 ? kl_sum / static_cast<double>(kl_count) : 0.0;
  return out;
}

void AdamW::ascend(Eigen::VectorXd& theta, const Eigen::VectorXd& gradient, const OptimizerConfig& config) {
  ++t_;
  m_ = config.adam_beta1 * m_ + (1.0 - config.adam_beta1) * gradient;
  v_ = config.adam_beta2 * v_ + (1.0 - config.adam_beta2) * gradient.cwiseAbs2();
  const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(t_));
  theta *= 1.0 - config.learning_rate * config.weight_decay;
  theta.array() += config.learning_rate * (m_.array() / bias1) / ((v_.array() / bias2).sqrt() + config.adam_epsilon);
}

StepStats step(Eigen::VectorXd& theta, std::span<RolloutGroup> groups, const PolicyEvaluator& evaluate,
               const OptimizerConfig& config, AdamW& optimizer) {
  config.validate();
  if (groups.empty()) throw DataError("step: no rollout groups");
  StepStats stats;
  {
    refresh_theta_logps(groups, theta, evaluate);
    stats.J = objective(groups, config);
    double kl = 0.0;
    std::size_t count = 0;
    for (const auto& g : groups)
      for (const auto& s : g.samples)
        for (const auto& t : s.tokens) {
          kl += kl_onpolicy(t.theta, t.old, t.ref);
          ++count;
        }
    stats.kl = count > 0 ? kl / static_cast<double>(count) : 0.0;
  }

  std::size_t begin = 0;
  double norm_sum = 0.0;
  while (begin < groups.size()) {
    std::size_t end = begin;
    std::size_t trajectories = 0;
    do {
      trajectories += groups[end].samples.size();
      ++end;
    } while (end < groups.size() &&
             trajectories + groups[end].samples.size() <= static_cast<std::size_t>(config.minibatch_size));

    auto minibatch = groups.subspan(begin, end - begin);
    // Minibatches index groups from zero; map back to the caller's indices.
    const std::size_t offset = begin;
    const PolicyEvaluator shifted = [&evaluate, offset](const Eigen::VectorXd& th, std::size_t g, std::size_t j,
                                                        Eigen::VectorXd& logp, Eigen::MatrixXd* jac) {
      evaluate(th, g + offset, j, logp, jac);
    };
    auto value = objective_and_gradient(minibatch, theta, shifted, config);
    if (!value.gradient.allFinite() || !std::isfinite(value.J))
      throw RuntimeFailure("non-finite gradient in minibatch starting at group " + std::to_string(begin) +
                           " (J = " + std::to_string(value.J) + ")");
    const double norm = value.gradient.norm();
    norm_sum += norm;
    if (norm > config.grad_clip_norm) value.gradient *= config.grad_clip_norm / norm;
    optimizer.ascend(theta, value.gradient, config);
    ++stats.updates;
    begin = end;
  }
  stats.grad_norm = norm_sum / static_cast<double>(stats.updates);
  return stats;
}

}  // namespace hpo::grpo
