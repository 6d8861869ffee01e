#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hpo::quality {

/// Score range of a quality metric and the threshold the hierarchical reward
/// gates latency on.
struct QualityScale {
  double worst = -25.0;
  double best = 0.0;
  double threshold = -5.0;

  /// MetricX-style error scale: -25 is worst, 0 is best.
  static QualityScale metricx() { return {-25.0, 0.0, -5.0}; }
  /// COMET-style similarity scale in [0, 1].
  static QualityScale comet() { return {0.0, 1.0, 0.8}; }

  /// Throws ConfigError unless worst < threshold < best.
  void validate() const;
  double clamp(double score) const;
};

/// One (hypothesis, reference, source) triple to be scored.
struct ScoreItem {
  std::string hyp;
  std::string ref;
  std::string src;
};

class QualityScorer {
 public:
  virtual ~QualityScorer() = default;
  virtual const QualityScale& scale() const = 0;
  /// Scores in batch order, each within scale().
  virtual std::vector<double> score(std::span<const ScoreItem> batch) const = 0;

  double score_one(const ScoreItem& item) const { return score(std::span(&item, 1)).front(); }
};

/// Token-level F1 between hypothesis and reference bags of tokens mapped to
/// -25 * (1 - F1). Both empty scores 0, exactly one empty scores -25. The
/// source is accepted but unused.
double proxy_score(std::string_view hyp, std::string_view ref, std::string_view src = {});

/// Bag-of-tokens F1 in [0, 1].
double token_f1(std::string_view hyp, std::string_view ref);

/// Worst score of the scale; what a link with an empty side receives.
inline double null_link_score(const QualityScale& scale) { return scale.worst; }

/// Deterministic built-in scorer on the MetricX scale.
class ProxyScorer final : public QualityScorer {
 public:
  ProxyScorer() = default;
  explicit ProxyScorer(double threshold) { scale_.threshold = threshold; scale_.validate(); }

  const QualityScale& scale() const override { return scale_; }
  std::vector<double> score(std::span<const ScoreItem> batch) const override;

 private:
  QualityScale scale_ = QualityScale::metricx();
};

}  // namespace hpo::quality
