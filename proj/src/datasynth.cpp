#include "hpo/datasynth.hpp"

#include <algorithm>
#include <cmath>

#include "hpo/error.hpp"

namespace hpo::datasynth {
namespace {

void check_source_times(std::span<const TimedWord> src_words) {
  double last = 0.0;
  for (std::size_t k = 0; k < src_words.size(); ++k) {
    const double t = src_words[k].end_time_s;
    if (!std::isfinite(t) || t < 0.0)
      throw StructuralError("source word " + std::to_string(k) + " has a negative or non-finite end time");
    if (t < last) throw StructuralError("source end times decrease at word " + std::to_string(k));
    last = t;
  }
}

}  // namespace

WordAlignment WordAlignment::normalized(int num_src, int num_tgt) const {
  WordAlignment out;
  for (const auto& [s, t] : pairs) {
    if (s < 0 || s >= num_src || t < 0 || t >= num_tgt)
      throw DataError("alignment pair (" + std::to_string(s) + ", " + std::to_string(t) + ") out of range for " +
                      std::to_string(num_src) + " source and " + std::to_string(num_tgt) + " target words");
    out.pairs.emplace_back(s, t);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.pairs.erase(std::unique(out.pairs.begin(), out.pairs.end()), out.pairs.end());
  return out;
}

std::vector<int> enforce_monotonic(const WordAlignment& alignment, int num_src, int num_tgt) {
  const auto clean = alignment.normalized(num_src, num_tgt);
  std::vector<int> best(static_cast<std::size_t>(num_tgt), -1);
  for (const auto& [s, t] : clean.pairs) best[static_cast<std::size_t>(t)] = std::max(best[static_cast<std::size_t>(t)], s);
  std::vector<int> anchors(static_cast<std::size_t>(num_tgt), 0);
  int running = 0;
  for (std::size_t t = 0; t < anchors.size(); ++t) {
    running = std::max(running, best[t]);
    anchors[t] = running;
  }
  return anchors;
}

Trajectory group_by_chunk(const std::string& id, std::span<const std::string> tgt_words,
                          std::span<const int> anchors, std::span<const TimedWord> src_words,
                          double chunk_duration_s) {
  if (tgt_words.size() != anchors.size()) throw DataError("one anchor per target word required");
  if (src_words.empty()) throw DataError("document '" + id + "' has no source words");
  check_source_times(src_words);
  // A document whose only word ends at 0 still occupies one chunk.
  const double total = std::max(src_words.back().end_time_s, 1e-6 * chunk_duration_s);

  Trajectory traj;
  traj.id = id;
  traj.timeline = ChunkTimeline::from_duration(total, chunk_duration_s);
  traj.emissions.resize(static_cast<std::size_t>(traj.timeline.num_chunks));
  int last_anchor = 0;
  for (std::size_t t = 0; t < tgt_words.size(); ++t) {
    const int a = anchors[t];
    if (a < 0 || a >= static_cast<int>(src_words.size()))
      throw DataError("anchor " + std::to_string(a) + " out of range");
    if (a < last_anchor) throw StructuralError("anchors decrease at target " + std::to_string(t));
    last_anchor = a;
    const int chunk = traj.timeline.chunk_of(src_words[static_cast<std::size_t>(a)].end_time_s);
    traj.emissions[static_cast<std::size_t>(chunk - 1)].push_back({tgt_words[t], 0.0, {}, {}, {}});
  }
  return traj;
}

Trajectory synthesize(const SynthesisInput& input, double chunk_duration_s) {
  const auto anchors = enforce_monotonic(input.alignment, static_cast<int>(input.src_words.size()),
                                         static_cast<int>(input.tgt_words.size()));
  auto traj = assign_delays(group_by_chunk(input.id, input.tgt_words, anchors, input.src_words, chunk_duration_s));
  traj.validate();
  return traj;
}

std::vector<Trajectory> synthesize_segments(const SynthesisInput& input, double chunk_duration_s, int max_chunks) {
  if (!(chunk_duration_s > 0.0)) throw ConfigError("chunk duration must be positive");
  if (max_chunks < 1) throw ConfigError("max_chunks must be >= 1");
  if (input.src_words.empty()) throw DataError("document '" + input.id + "' has no source words");
  check_source_times(input.src_words);
  const int num_src = static_cast<int>(input.src_words.size());
  const auto anchors = enforce_monotonic(input.alignment, num_src, static_cast<int>(input.tgt_words.size()));
  const double limit = max_chunks * chunk_duration_s * (1.0 + 1e-9);

  // Source word ranges [begin, end) per segment.
  std::vector<std::pair<int, int>> ranges;
  int begin = 0;
  while (begin < num_src) {
    const double start = begin == 0 ? 0.0 : input.src_words[static_cast<std::size_t>(begin - 1)].end_time_s;
    int end = begin + 1;
    while (end < num_src && input.src_words[static_cast<std::size_t>(end)].end_time_s - start <= limit) ++end;
    ranges.emplace_back(begin, end);
    begin = end;
  }

  std::vector<Trajectory> out;
  std::size_t t = 0;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const auto [b, e] = ranges[k];
    const double start = b == 0 ? 0.0 : input.src_words[static_cast<std::size_t>(b - 1)].end_time_s;
    std::vector<TimedWord> src;
    for (int s = b; s < e; ++s) {
      const auto& w = input.src_words[static_cast<std::size_t>(s)];
      src.push_back({w.text, w.end_time_s - start});
    }
    std::vector<std::string> tgt;
    std::vector<int> local;
    while (t < anchors.size() && anchors[t] < e) {
      tgt.push_back(input.tgt_words[t]);
      local.push_back(anchors[t] - b);
      ++t;
    }
    const std::string id = ranges.size() == 1 ? input.id : input.id + "/" + std::to_string(k);
    auto traj = assign_delays(group_by_chunk(id, tgt, local, src, chunk_duration_s));
    traj.validate();
    out.push_back(std::move(traj));
  }
  return out;
}

SynthesisInput synthesis_input_from_json(const Json& record, std::size_t line) {
  SynthesisInput in;
  in.id = require_string(record, "id", line);
  const Json& src = require_field(record, "src_words", line);
  if (!src.is_array()) throw ParseError(line, "src_words", "expected an array");
  for (const auto& w : src) {
    if (!w.is_object()) throw ParseError(line, "src_words", "each word must be an object");
    in.src_words.push_back({require_string(w, "text", line), require_number(w, "end_s", line)});
  }
  const Json& tgt = require_field(record, "tgt_words", line);
  if (!tgt.is_array()) throw ParseError(line, "tgt_words", "expected an array of strings");
  for (const auto& w : tgt) {
    if (!w.is_string()) throw ParseError(line, "tgt_words", "expected an array of strings");
    in.tgt_words.push_back(w.get<std::string>());
  }
  const Json& align = require_field(record, "align", line);
  if (!align.is_array()) throw ParseError(line, "align", "expected an array of [src, tgt] pairs");
  for (const auto& p : align) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
      throw ParseError(line, "align", "expected an array of [src, tgt] integer pairs");
    in.alignment.pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
  }
  try {
    (void)in.alignment.normalized(static_cast<int>(in.src_words.size()), static_cast<int>(in.tgt_words.size()));
    check_source_times(in.src_words);
  } catch (const DataError& e) {
    throw ParseError(line, "align", e.what());
  }
  return in;
}

std::vector<SynthesisInput> read_synthesis_inputs(const std::filesystem::path& path) {
  std::vector<SynthesisInput> out;
  for_each_jsonl(path, [&](const Json& r, std::size_t line) { out.push_back(synthesis_input_from_json(r, line)); });
  return out;
}

}  // namespace hpo::datasynth
