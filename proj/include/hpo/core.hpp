#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hpo {

/// Fixed-duration chunking of a source stream. Chunks are 1-indexed and chunk
/// i has fully arrived at time i * chunk_duration_s.
struct ChunkTimeline {
  double chunk_duration_s = 1.0;
  int num_chunks = 0;
  double total_duration_s = 0.0;

  /// Smallest chunk count covering `total_s`.
  static ChunkTimeline from_duration(double total_s, double chunk_s);
  /// Timeline whose duration is exactly `num_chunks * chunk_s`.
  static ChunkTimeline from_chunks(int num_chunks, double chunk_s);

  /// Throws StructuralError when the chunk count does not cover the duration.
  void validate() const;

  double chunk_end_s(int chunk) const { return chunk * chunk_duration_s; }
  /// 1-based chunk containing time t (a time exactly on a boundary belongs to
  /// the chunk that ends there). Clamped to [1, num_chunks].
  int chunk_of(double t) const;
};

struct EmittedToken {
  std::string text;
  double delay_s = 0.0;
  std::optional<double> logp_theta;
  std::optional<double> logp_old;
  std::optional<double> logp_ref;
};

/// Tokens written after one chunk; empty means the policy waited.
using Emission = std::vector<EmittedToken>;

struct Trajectory {
  std::string id;
  ChunkTimeline timeline;
  std::vector<Emission> emissions;

  std::size_t num_tokens() const;
  /// Checks the timeline, the emission count, delays against chunk ends, and
  /// log-probability signs.
  void validate() const;
};

struct ReferenceSentence {
  std::string transcript;
  std::string reference;
  double start_s = 0.0;
  double end_s = 0.0;

  double duration_s() const { return end_s - start_s; }
};

struct ReferenceDocument {
  std::string id;
  std::vector<ReferenceSentence> sentences;

  /// Sentences must be sorted, non-overlapping and of positive duration.
  void validate() const;
};

/// Sets every token of chunk i (1-based) to delay i * c.
Trajectory assign_delays(Trajectory trajectory);

struct FlatTokens {
  std::vector<std::string> tokens;
  std::vector<double> delays;
};

/// Chunk order, then emission order.
FlatTokens flatten(const Trajectory& trajectory);

/// Inverse of flatten: places each token in the chunk whose end equals its
/// delay.
std::vector<Emission> regroup_by_delay(const FlatTokens& flat, const ChunkTimeline& timeline);

// Tokenization. Whitespace separates Latin-script tokens; every CJK code point
// (ideographs, kana, CJK and full-width punctuation) is a token of its own.

bool is_cjk(char32_t cp);
std::vector<char32_t> decode_utf8(std::string_view text);
std::string encode_utf8(std::span<const char32_t> cps);
std::vector<std::string> tokenize(std::string_view text);
/// Joins with single spaces, except around CJK tokens. tokenize(detokenize(t)) == t
/// for any token list produced by tokenize.
std::string detokenize(std::span<const std::string> tokens);

}  // namespace hpo
