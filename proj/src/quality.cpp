#include "hpo/quality.hpp"

#include <algorithm>
#include <unordered_map>

#include "hpo/core.hpp"
#include "hpo/error.hpp"

namespace hpo::quality {

void QualityScale::validate() const {
  if (!(worst < threshold && threshold < best))
    throw ConfigError("quality scale requires worst < threshold < best");
}

double QualityScale::clamp(double score) const { return std::clamp(score, worst, best); }

double token_f1(std::string_view hyp, std::string_view ref) {
  const auto h = tokenize(hyp);
  const auto r = tokenize(ref);
  if (h.empty() && r.empty()) return 1.0;
  if (h.empty() || r.empty()) return 0.0;
  std::unordered_map<std::string, int> ref_counts;
  for (const auto& t : r) ++ref_counts[t];
  int overlap = 0;
  for (const auto& t : h) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(h.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(r.size());
  return 2.0 * precision * recall / (precision + recall);
}

double proxy_score(std::string_view hyp, std::string_view ref, std::string_view /*src*/) {
  return 25.0 * (token_f1(hyp, ref) - 1.0);
}

std::vector<double> ProxyScorer::score(std::span<const ScoreItem> batch) const {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& item : batch) out.push_back(scale_.clamp(proxy_score(item.hyp, item.ref, item.src)));
  return out;
}

}  // namespace hpo::quality
