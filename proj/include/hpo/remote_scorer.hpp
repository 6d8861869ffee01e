#pragma once

#include <atomic>
#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "hpo/quality.hpp"

namespace hpo::quality {

inline constexpr const char* kScorerEndpointEnv = "HPO_SCORER_ENDPOINT";

struct RemoteScorerOptions {
  /// Full URL, e.g. http://localhost:8500/score.
  std::string endpoint;
  QualityScale scale = QualityScale::metricx();
  /// Extra attempts after the first failed one.
  int retries = 2;
  /// Delay before retry k is initial_backoff * 2^(k-1).
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds timeout{60000};
  /// Batches sent concurrently by score_batches.
  int max_in_flight = 4;
};

/// Client for an external scorer speaking JSON over HTTP POST:
///
///   request  {"id": str, "items": [{"hyp", "ref", "src"}, ...],
///             "scale": {"worst": float, "best": float}}
///   response {"id": str, "scores": [float, ...]}
///
/// Scores are clamped to the configured scale. Transport failures are
/// retried with exponential backoff and end in RetriableError; malformed
/// responses raise ProtocolError.
class RemoteScorer final : public QualityScorer {
 public:
  explicit RemoteScorer(RemoteScorerOptions options);

  const QualityScale& scale() const override { return options_.scale; }
  std::vector<double> score(std::span<const ScoreItem> batch) const override;

  /// Sends up to max_in_flight batches at a time. Results come back in
  /// submission order.
  std::vector<std::vector<double>> score_batches(std::span<const std::vector<ScoreItem>> batches) const;

  const RemoteScorerOptions& options() const { return options_; }

 private:
  std::vector<double> send(std::span<const ScoreItem> batch, const std::string& request_id) const;

  RemoteScorerOptions options_;
  std::string base_url_;
  std::string path_;
  mutable std::atomic<unsigned long> next_request_{0};
};

}  // namespace hpo::quality
