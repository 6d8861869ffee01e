#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hpo/core.hpp"
#include "hpo/quality.hpp"
#include "hpo/segalign.hpp"

namespace hpo::reward {

/// How per-link quality and latency become a per-hypothesis reward.
enum class Variant {
  kHierarchicalSent,   // gate latency on quality per sentence link
  kHierarchicalDoc,    // gate latency on the hypothesis-average quality
  kNormalize,          // no gate
  kNormalizeTruncate,  // no gate; per-link latency floored at truncate_floor_s
};

std::string_view to_string(Variant variant);
/// Accepts hierarchical-sent, hierarchical-doc, normalize, normalize-truncate.
Variant parse_variant(std::string_view name);

enum class LatencyNormDenominator { kStdLatency, kStdQuality };

std::string_view to_string(LatencyNormDenominator denominator);
LatencyNormDenominator parse_latency_norm_denominator(std::string_view name);

struct RewardConfig {
  double q_thres = -5.0;
  double l_max = 10.0;
  double lambda = 0.5;
  Variant variant = Variant::kHierarchicalSent;
  double norm_epsilon = 1e-6;
  /// Divisor of the latency deviation. kStdQuality reproduces the formula
  /// exactly as printed in the original write-up.
  LatencyNormDenominator latency_norm_denominator = LatencyNormDenominator::kStdLatency;
  /// Floor for kNormalizeTruncate; unset means chunk duration / 3.
  std::optional<double> truncate_floor_s;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Quality and latency of one link after the variant's per-link rule.
struct LinkValue {
  double quality = 0.0;
  double latency_s = 0.0;
};

/// Raw measurements of one alignment link.
struct LinkScore {
  segalign::AlignmentLink link;
  double quality = 0.0;  // scale.worst for null links
  double laal_s = 0.0;   // raw LAAL; l_max for null links
  bool is_null = false;
};

struct RewardBreakdown {
  std::vector<LinkValue> per_link;
  double q_j = 0.0;
  double l_j = 0.0;
  double q_bar = 0.0;
  double l_bar = 0.0;
  double r = 0.0;
  int null_links = 0;
};

/// Latency credited to a scored link: the measured LAAL when q >= q_thres,
/// l_max otherwise.
double gate_latency(double q, double laal_s, const RewardConfig& config);

/// Unweighted means (q_j, l_j) over the links. Throws on an empty list.
std::pair<double, double> aggregate(std::span<const LinkValue> per_link);

/// (v - mean) / (std + epsilon) with the population standard deviation.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> group_normalize(
    const Eigen::ArrayBase<Derived>& values, typename Derived::Scalar epsilon,
    typename Derived::Scalar denominator_std) {
  using Scalar = typename Derived::Scalar;
  const Scalar mean = values.mean();
  return (values - mean) / (denominator_std + epsilon);
}

template <typename Derived>
typename Derived::Scalar population_std(const Eigen::ArrayBase<Derived>& values) {
  const auto mean = values.mean();
  return std::sqrt((values - mean).square().mean());
}

template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> group_normalize(
    const Eigen::ArrayBase<Derived>& values, typename Derived::Scalar epsilon) {
  return group_normalize(values, epsilon, population_std(values));
}

/// Checked entry point: throws if fewer than two values.
std::vector<double> group_normalize(std::span<const double> values, double epsilon = 1e-6);

inline double combine(double q_bar, double l_bar, double lambda) { return q_bar - lambda * l_bar; }

/// Segmentation, alignment and per-link measurement of one hypothesis.
struct ScoredHypothesis {
  std::vector<segalign::HypothesisSentence> sentences;
  segalign::Alignment alignment;
  std::vector<LinkScore> links;
};

/// Splits and aligns every hypothesis, then scores every non-null link in a
/// single scorer batch. Null links get (scale.worst, null_latency_s).
std::vector<ScoredHypothesis> score_hypotheses(std::span<const Trajectory> hypotheses,
                                               const ReferenceDocument& reference,
                                               const quality::QualityScorer& scorer,
                                               double null_latency_s,
                                               const segalign::AlignOptions& align = {});

/// Rewards for one group from already measured links. `chunk_duration_s`
/// supplies the default truncation floor.
std::vector<RewardBreakdown> rewards_from_scores(std::span<const std::vector<LinkScore>> group,
                                                 const RewardConfig& config, double chunk_duration_s);

/// Full reward path for n >= 2 rollouts of the same source.
std::vector<RewardBreakdown> compute_group_rewards(std::span<const Trajectory> hypotheses,
                                                   const ReferenceDocument& reference,
                                                   const quality::QualityScorer& scorer,
                                                   const RewardConfig& config,
                                                   const segalign::AlignOptions& align = {});

}  // namespace hpo::reward
