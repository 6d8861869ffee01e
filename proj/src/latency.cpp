#include "hpo/latency.hpp"

#include <algorithm>
#include <cmath>

#include "hpo/error.hpp"

namespace hpo::latency {
namespace {

void check_link_indices(const segalign::AlignmentLink& link, std::size_t num_hyp, std::size_t num_ref) {
  for (int h : link.hyp) {
    if (h < 0 || static_cast<std::size_t>(h) >= num_hyp)
      throw StructuralError("alignment hypothesis index " + std::to_string(h) + " out of range");
  }
  for (int r : link.ref) {
    if (r < 0 || static_cast<std::size_t>(r) >= num_ref)
      throw StructuralError("alignment reference index " + std::to_string(r) + " out of range");
  }
}

int reference_tokens(const ReferenceDocument& ref, const segalign::AlignmentLink& link) {
  int n = 0;
  for (int r : link.ref) n += static_cast<int>(tokenize(ref.sentences[static_cast<std::size_t>(r)].reference).size());
  return n;
}

int hypothesis_tokens(std::span<const segalign::HypothesisSentence> hyp, const segalign::AlignmentLink& link) {
  int n = 0;
  for (int h : link.hyp) n += static_cast<int>(hyp[static_cast<std::size_t>(h)].tokens.size());
  return n;
}

}  // namespace

double laal(const LatencyInputs& inputs) {
  if (inputs.delays.empty()) throw DataError("laal: hypothesis has no tokens");
  if (static_cast<std::size_t>(inputs.hyp_len) != inputs.delays.size())
    throw DataError("laal: hyp_len does not match the number of delays");
  if (!(inputs.src_duration_s > 0.0)) throw DataError("laal: source duration must be positive");
  const double T = inputs.src_duration_s;
  const double rate = T / static_cast<double>(std::max(inputs.ref_len, inputs.hyp_len));

  std::size_t tau = inputs.delays.size();
  for (std::size_t i = 0; i < inputs.delays.size(); ++i) {
    if (inputs.delays[i] >= T) {
      tau = i + 1;
      break;
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < tau; ++i) sum += inputs.delays[i] - static_cast<double>(i) * rate;
  return sum / static_cast<double>(tau);
}

std::vector<double> offset_delays(std::span<const double> delays, double segment_start_s) {
  std::vector<double> out(delays.begin(), delays.end());
  for (auto& d : out) d -= segment_start_s;
  return out;
}

double link_laal(std::span<const segalign::HypothesisSentence> hyp, const ReferenceDocument& ref,
                 const segalign::AlignmentLink& link) {
  if (link.is_null()) throw DataError("link_laal: null link has no latency");
  check_link_indices(link, hyp.size(), ref.sentences.size());
  std::vector<double> delays;
  for (int h : link.hyp) {
    const auto& s = hyp[static_cast<std::size_t>(h)];
    delays.insert(delays.end(), s.delays.begin(), s.delays.end());
  }
  const auto& first = ref.sentences[static_cast<std::size_t>(link.ref.front())];
  const auto& last = ref.sentences[static_cast<std::size_t>(link.ref.back())];
  const auto shifted = offset_delays(delays, first.start_s);
  return laal(LatencyInputs{shifted, last.end_s - first.start_s, reference_tokens(ref, link),
                            static_cast<int>(shifted.size())});
}

StreamLaal stream_laal(std::span<const segalign::HypothesisSentence> hyp, const ReferenceDocument& ref,
                       const segalign::Alignment& alignment, const StreamLaalOptions& options) {
  StreamLaal out;
  double weighted = 0.0;
  double total_weight = 0.0;
  for (const auto& link : alignment) {
    check_link_indices(link, hyp.size(), ref.sentences.size());
    const double value = link.is_null() ? options.null_penalty_s : link_laal(hyp, ref, link);
    const double weight = options.aggregation == Aggregation::kPerLink
                              ? 1.0
                              : static_cast<double>(std::max(hypothesis_tokens(hyp, link), reference_tokens(ref, link)));
    out.per_link_s.push_back(value);
    weighted += weight * value;
    total_weight += weight;
  }
  if (alignment.empty()) throw DataError("stream_laal: alignment has no links");
  out.mean_s = weighted / total_weight;
  return out;
}

StreamLaal stream_laal(const Trajectory& trajectory, const ReferenceDocument& ref,
                       const segalign::Alignment& alignment, const StreamLaalOptions& options) {
  return stream_laal(segalign::segment_hypothesis(trajectory), ref, alignment, options);
}

}  // namespace hpo::latency
