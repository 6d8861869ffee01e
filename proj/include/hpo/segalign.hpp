#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpo/io.hpp"

namespace hpo::segalign {

/// One element of a hypothesis/reference sentence alignment. Either side may
/// be empty: an empty `ref` marks over-translation, an empty `hyp` marks
/// under-translation.
struct AlignmentLink {
  std::vector<int> hyp;
  std::vector<int> ref;

  bool is_null() const { return hyp.empty() || ref.empty(); }
  bool is_over_translation() const { return ref.empty() && !hyp.empty(); }
  bool is_under_translation() const { return hyp.empty() && !ref.empty(); }

  friend bool operator==(const AlignmentLink&, const AlignmentLink&) = default;
};

using Alignment = std::vector<AlignmentLink>;

/// Sentence similarity in [0, 1].
using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

/// Shape of a link: number of hypothesis and reference sentences it covers.
struct LinkShape {
  int hyp = 0;
  int ref = 0;
  friend bool operator==(const LinkShape&, const LinkShape&) = default;
};

struct AlignOptions {
  /// Largest |H| or |R| of a merged link.
  int max_merge = 3;
  /// Score of a link with one empty side.
  double null_score = 0.0;
  /// Subtracted per extra sentence in a link: score = sim - penalty * (|H| + |R| - 2).
  double merge_penalty = 0.02;
  /// Half-width of the diagonal band, in sentences. Unset: unbounded for
  /// documents up to `auto_band_threshold` sentences, `auto_band_width` above.
  std::optional<int> band_width;
  int auto_band_threshold = 200;
  int auto_band_width = 24;
  /// Totals closer than this are ties.
  double tie_tolerance = 1e-9;
};

/// Link shapes allowed under `max_merge`, in tie-break preference order:
/// larger merges first (so ties favour merging early), then 1-1, then the
/// null shapes 1-0 and 0-1.
std::vector<LinkShape> allowed_shapes(int max_merge);

/// Sentence boundaries fall after a token ending in . ! ? (with an
/// abbreviation guard) and after every CJK 。！？. Closing quotes and
/// brackets that follow a boundary stay with the sentence they close.
/// Returns half-open token ranges.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};
std::vector<TokenRange> split_token_sentences(std::span<const std::string> tokens);

/// A hypothesis sentence together with the delay of each of its tokens.
struct HypothesisSentence {
  std::vector<std::string> tokens;
  std::vector<double> delays;
  std::string text() const { return detokenize(tokens); }
};

/// Splits a flattened trajectory into sentences, keeping token delays.
std::vector<HypothesisSentence> segment_hypothesis(const FlatTokens& flat);
std::vector<HypothesisSentence> segment_hypothesis(const Trajectory& trajectory);

/// Text form of split_token_sentences. Whitespace inside a sentence is
/// normalised to single spaces.
std::vector<std::string> split_sentences(std::string_view text);

/// True when `token` is on the abbreviation guard list (case-insensitive).
bool is_abbreviation(std::string_view token);

/// Cosine similarity of character 3-gram count vectors after ASCII
/// lowercasing. Non-empty strings shorter than three code points count as a
/// single gram. Returns 0 if either side is empty.
double lexical_similarity(std::string_view a, std::string_view b);

/// Concatenates sentences the way a merged link is scored.
std::string join_sentences(std::span<const std::string> sentences, std::span<const int> indices);

/// Score of one link under `options`.
double link_score(std::span<const std::string> hyp, std::span<const std::string> ref,
                  const AlignmentLink& link, const SimilarityFn& sim, const AlignOptions& options);

/// Optimal monotone alignment by dynamic programming over the allowed link
/// shapes. Ties on total score prefer fewer null links, then the
/// lexicographically earliest shape sequence under allowed_shapes order.
Alignment align_sentences(std::span<const std::string> hyp, std::span<const std::string> ref,
                          const SimilarityFn& sim, const AlignOptions& options = {});

/// Total score and null-link count of an alignment.
struct AlignmentScore {
  double score = 0.0;
  int nulls = 0;
};
AlignmentScore score_alignment(std::span<const std::string> hyp, std::span<const std::string> ref,
                               const Alignment& alignment, const SimilarityFn& sim,
                               const AlignOptions& options = {});

/// Checks coverage, monotonicity and merge limits. Throws StructuralError.
void validate_alignment(const Alignment& alignment, std::size_t num_hyp, std::size_t num_ref,
                        int max_merge = 3);

OrderedJson to_json(const std::string& id, const Alignment& alignment);
Alignment alignment_from_json(const Json& record, std::size_t line);

}  // namespace hpo::segalign
