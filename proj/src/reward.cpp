#include "hpo/reward.hpp"

#include <cmath>
#include <tuple>

#include "hpo/error.hpp"
#include "hpo/latency.hpp"

namespace hpo::reward {

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kHierarchicalSent: return "hierarchical-sent";
    case Variant::kHierarchicalDoc: return "hierarchical-doc";
    case Variant::kNormalize: return "normalize";
    case Variant::kNormalizeTruncate: return "normalize-truncate";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::kHierarchicalSent, Variant::kHierarchicalDoc, Variant::kNormalize,
                 Variant::kNormalizeTruncate}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown reward variant '" + std::string(name) +
                    "' (expected hierarchical-sent, hierarchical-doc, normalize, normalize-truncate)");
}

std::string_view to_string(LatencyNormDenominator denominator) {
  return denominator == LatencyNormDenominator::kStdLatency ? "std_latency" : "std_quality";
}

LatencyNormDenominator parse_latency_norm_denominator(std::string_view name) {
  if (name == "std_latency") return LatencyNormDenominator::kStdLatency;
  if (name == "std_quality") return LatencyNormDenominator::kStdQuality;
  throw ConfigError("reward.latency_norm_denominator: expected std_latency or std_quality, got '" +
                    std::string(name) + "'");
}

void RewardConfig::validate() const {
  if (!(l_max > 0.0)) throw ConfigError("reward.l_max must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("reward.lambda must be >= 0");
  if (!(norm_epsilon > 0.0)) throw ConfigError("reward.norm_epsilon must be positive");
  if (!std::isfinite(q_thres)) throw ConfigError("reward.q_thres must be finite");
  if (truncate_floor_s && !(*truncate_floor_s >= 0.0))
    throw ConfigError("reward.truncate_floor_s must be >= 0");
}

double gate_latency(double q, double laal_s, const RewardConfig& config) {
  return q >= config.q_thres ? laal_s : config.l_max;
}

std::pair<double, double> aggregate(std::span<const LinkValue> per_link) {
  if (per_link.empty()) throw DataError("aggregate: hypothesis has no alignment links");
  double q = 0.0;
  double l = 0.0;
  for (const auto& v : per_link) {
    q += v.quality;
    l += v.latency_s;
  }
  const auto m = static_cast<double>(per_link.size());
  return {q / m, l / m};
}

std::vector<double> group_normalize(std::span<const double> values, double epsilon) {
  if (values.size() < 2) throw DataError("group_normalize: group size must exceed 1");
  const Eigen::Map<const Eigen::ArrayXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
  const Eigen::ArrayXd out = group_normalize(v, epsilon);
  return {out.begin(), out.end()};
}

std::vector<ScoredHypothesis> score_hypotheses(std::span<const Trajectory> hypotheses,
                                               const ReferenceDocument& reference,
                                               const quality::QualityScorer& scorer,
                                               double null_latency_s,
                                               const segalign::AlignOptions& align) {
  std::vector<std::string> ref_texts;
  ref_texts.reserve(reference.sentences.size());
  for (const auto& s : reference.sentences) ref_texts.push_back(s.reference);

  std::vector<ScoredHypothesis> out(hypotheses.size());
  std::vector<quality::ScoreItem> batch;
  std::vector<std::pair<std::size_t, std::size_t>> batch_owner;  // (hypothesis, link)

  for (std::size_t j = 0; j < hypotheses.size(); ++j) {
    auto& scored = out[j];
    scored.sentences = segalign::segment_hypothesis(hypotheses[j]);
    std::vector<std::string> hyp_texts;
    hyp_texts.reserve(scored.sentences.size());
    for (const auto& s : scored.sentences) hyp_texts.push_back(s.text());
    scored.alignment = segalign::align_sentences(hyp_texts, ref_texts, segalign::lexical_similarity, align);

    for (const auto& link : scored.alignment) {
      LinkScore ls;
      ls.link = link;
      ls.is_null = link.is_null();
      if (ls.is_null) {
        ls.quality = quality::null_link_score(scorer.scale());
        ls.laal_s = null_latency_s;
      } else {
        ls.laal_s = latency::link_laal(scored.sentences, reference, link);
        std::string src;
        for (int r : link.ref) {
          if (!src.empty()) src += ' ';
          src += reference.sentences[static_cast<std::size_t>(r)].transcript;
        }
        batch.push_back({segalign::join_sentences(hyp_texts, link.hyp),
                         segalign::join_sentences(ref_texts, link.ref), std::move(src)});
        batch_owner.emplace_back(j, scored.links.size());
      }
      scored.links.push_back(std::move(ls));
    }
  }

  if (!batch.empty()) {
    const auto scores = scorer.score(batch);
    if (scores.size() != batch.size()) throw RuntimeFailure("scorer returned the wrong number of scores");
    for (std::size_t b = 0; b < batch.size(); ++b) {
      out[batch_owner[b].first].links[batch_owner[b].second].quality = scores[b];
    }
  }
  return out;
}

std::vector<RewardBreakdown> rewards_from_scores(std::span<const std::vector<LinkScore>> group,
                                                 const RewardConfig& config, double chunk_duration_s) {
  config.validate();
  if (group.size() < 2) throw DataError("reward group must contain at least two hypotheses");
  const double floor_s = config.truncate_floor_s.value_or(chunk_duration_s / 3.0);

  const auto n = static_cast<Eigen::Index>(group.size());
  std::vector<RewardBreakdown> out(group.size());
  Eigen::ArrayXd q(n);
  Eigen::ArrayXd l(n);

  for (std::size_t j = 0; j < group.size(); ++j) {
    auto& b = out[j];
    for (const auto& link : group[j]) {
      LinkValue v{link.quality, link.laal_s};
      if (link.is_null) {
        v.latency_s = config.l_max;
        ++b.null_links;
      } else if (config.variant == Variant::kHierarchicalSent) {
        v.latency_s = gate_latency(link.quality, link.laal_s, config);
      } else if (config.variant == Variant::kNormalizeTruncate) {
        v.latency_s = std::max(link.laal_s, floor_s);
      }
      b.per_link.push_back(v);
    }
    std::tie(b.q_j, b.l_j) = aggregate(b.per_link);
    if (config.variant == Variant::kHierarchicalDoc && b.q_j < config.q_thres) b.l_j = config.l_max;
    q(static_cast<Eigen::Index>(j)) = b.q_j;
    l(static_cast<Eigen::Index>(j)) = b.l_j;
  }

  const double std_q = population_std(q);
  const double std_l = config.latency_norm_denominator == LatencyNormDenominator::kStdLatency
                           ? population_std(l)
                           : std_q;
  const Eigen::ArrayXd q_bar = group_normalize(q, config.norm_epsilon, std_q);
  const Eigen::ArrayXd l_bar = group_normalize(l, config.norm_epsilon, std_l);
  for (std::size_t j = 0; j < group.size(); ++j) {
    auto& b = out[j];
    b.q_bar = q_bar(static_cast<Eigen::Index>(j));
    b.l_bar = l_bar(static_cast<Eigen::Index>(j));
    b.r = combine(b.q_bar, b.l_bar, config.lambda);
  }
  return out;
}

std::vector<RewardBreakdown> compute_group_rewards(std::span<const Trajectory> hypotheses,
                                                   const ReferenceDocument& reference,
                                                   const quality::QualityScorer& scorer,
                                                   const RewardConfig& config,
                                                   const segalign::AlignOptions& align) {
  if (hypotheses.size() < 2) throw DataError("reward group must contain at least two hypotheses");
  const auto scored = score_hypotheses(hypotheses, reference, scorer, config.l_max, align);
  std::vector<std::vector<LinkScore>> links;
  links.reserve(scored.size());
  for (const auto& s : scored) links.push_back(s.links);
  return rewards_from_scores(links, config, hypotheses.front().timeline.chunk_duration_s);
}

}  // namespace hpo::reward
