#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hpo/core.hpp"
#include "hpo/io.hpp"

namespace hpo::datasynth {

/// Longest segment written by synthesize_segments, in chunks.
inline constexpr int kMaxSegmentChunks = 60;

struct TimedWord {
  std::string text;
  double end_time_s = 0.0;
};

/// (source index, target index) pairs.
struct WordAlignment {
  std::vector<std::pair<int, int>> pairs;

  /// Sorts, removes duplicates and checks ranges. Throws DataError.
  WordAlignment normalized(int num_src, int num_tgt) const;
};

struct SynthesisInput {
  std::string id;
  std::vector<TimedWord> src_words;
  std::vector<std::string> tgt_words;
  WordAlignment alignment;
};

/// Source anchor per target word: the largest aligned source index, then a
/// running maximum over targets. Unaligned targets take the previous anchor
/// (0 for the first).
std::vector<int> enforce_monotonic(const WordAlignment& alignment, int num_src, int num_tgt);

/// Writes each target word in the chunk where its anchor's source word ends,
/// clamped to the final chunk. The timeline covers the last source word.
Trajectory group_by_chunk(const std::string& id, std::span<const std::string> tgt_words,
                          std::span<const int> anchors, std::span<const TimedWord> src_words,
                          double chunk_duration_s);

/// enforce_monotonic, group_by_chunk and assign_delays on one document.
Trajectory synthesize(const SynthesisInput& input, double chunk_duration_s);

/// Splits a long document at source word boundaries into segments of at most
/// `max_chunks` chunks and synthesizes each; times restart at the end of the
/// previous segment. A single segment keeps the document id, otherwise ids
/// are "<id>/<k>".
std::vector<Trajectory> synthesize_segments(const SynthesisInput& input, double chunk_duration_s,
                                            int max_chunks = kMaxSegmentChunks);

SynthesisInput synthesis_input_from_json(const Json& record, std::size_t line);
std::vector<SynthesisInput> read_synthesis_inputs(const std::filesystem::path& path);

}  // namespace hpo::datasynth
