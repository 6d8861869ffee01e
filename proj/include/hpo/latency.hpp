#pragma once

#include <span>
#include <vector>

#include "hpo/core.hpp"
#include "hpo/segalign.hpp"

namespace hpo::latency {

/// Latency charged to a link with an empty side.
inline constexpr double kNullLinkPenaltyS = 10.0;

/// Inputs of one length-adaptive average lagging evaluation.
struct LatencyInputs {
  std::span<const double> delays;  // per hypothesis token, non-decreasing
  double src_duration_s = 0.0;     // T of the aligned source span
  int ref_len = 0;                 // reference tokens
  int hyp_len = 0;                 // hypothesis tokens; equals delays.size()
};

/// Length-adaptive average lagging:
///
///   LAAL = 1/tau * sum_{i=1..tau} (d_i - (i-1) * T / max(ref_len, hyp_len))
///
/// where tau is the first (1-based) token with d_i >= T, or hyp_len if the
/// hypothesis finished before the source did. Throws on empty delays.
double laal(const LatencyInputs& inputs);

/// Shifts delays so that `segment_start_s` becomes time 0. Negative results
/// are kept.
std::vector<double> offset_delays(std::span<const double> delays, double segment_start_s);

enum class Aggregation {
  kPerLink,        // unweighted mean over links
  kTokenWeighted,  // links weighted by max(|hyp tokens|, |ref tokens|)
};

struct StreamLaalOptions {
  double null_penalty_s = kNullLinkPenaltyS;
  Aggregation aggregation = Aggregation::kPerLink;
};

struct StreamLaal {
  double mean_s = 0.0;
  std::vector<double> per_link_s;
};

/// LAAL of one non-null link: hypothesis delays offset by the start of the
/// first reference sentence, T spanning the linked reference sentences.
double link_laal(std::span<const segalign::HypothesisSentence> hyp, const ReferenceDocument& ref,
                 const segalign::AlignmentLink& link);

/// Long-form latency over an aligned document. Null links cost
/// `null_penalty_s`. Throws StructuralError on out-of-range indices.
StreamLaal stream_laal(std::span<const segalign::HypothesisSentence> hyp, const ReferenceDocument& ref,
                       const segalign::Alignment& alignment, const StreamLaalOptions& options = {});
StreamLaal stream_laal(const Trajectory& trajectory, const ReferenceDocument& ref,
                       const segalign::Alignment& alignment, const StreamLaalOptions& options = {});

}  // namespace hpo::latency
