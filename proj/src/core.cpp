#include "hpo/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpo/error.hpp"

namespace hpo {
namespace {

// Relative slack for comparing durations built from floating chunk sizes
// (3 * 1.12 is not exactly 3.36).
constexpr double kTimeSlack = 1e-9;

bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
         cp == U'\v' || cp == 0x3000;
}

}  // namespace

ChunkTimeline ChunkTimeline::from_duration(double total_s, double chunk_s) {
  if (!(chunk_s > 0.0)) throw StructuralError("chunk duration must be positive");
  if (!(total_s > 0.0)) throw StructuralError("total duration must be positive");
  const double ratio = total_s / chunk_s;
  int n = static_cast<int>(std::ceil(ratio - kTimeSlack * std::max(1.0, ratio)));
  n = std::max(n, 1);
  return ChunkTimeline{chunk_s, n, total_s};
}

ChunkTimeline ChunkTimeline::from_chunks(int num_chunks, double chunk_s) {
  return ChunkTimeline{chunk_s, num_chunks, num_chunks * chunk_s};
}

void ChunkTimeline::validate() const {
  if (!(chunk_duration_s > 0.0)) throw StructuralError("chunk_duration_s must be positive");
  if (num_chunks < 1) throw StructuralError("num_chunks must be at least 1");
  const double slack = kTimeSlack * std::max(1.0, total_duration_s);
  if (num_chunks * chunk_duration_s < total_duration_s - slack)
    throw StructuralError("chunks do not cover total_duration_s");
  if (!(total_duration_s > (num_chunks - 1) * chunk_duration_s + slack))
    throw StructuralError("total_duration_s leaves the final chunk empty");
}

int ChunkTimeline::chunk_of(double t) const {
  const double ratio = t / chunk_duration_s;
  int chunk = static_cast<int>(std::ceil(ratio - kTimeSlack * std::max(1.0, std::abs(ratio))));
  return std::clamp(chunk, 1, num_chunks);
}

std::size_t Trajectory::num_tokens() const {
  std::size_t n = 0;
  for (const auto& e : emissions) n += e.size();
  return n;
}

void Trajectory::validate() const {
  timeline.validate();
  if (static_cast<int>(emissions.size()) != timeline.num_chunks)
    throw StructuralError("trajectory '" + id + "': " + std::to_string(emissions.size()) +
                          " emissions for " + std::to_string(timeline.num_chunks) + " chunks");
  double last = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < emissions.size(); ++i) {
    const double expected = timeline.chunk_end_s(static_cast<int>(i) + 1);
    for (const auto& tok : emissions[i]) {
      if (std::abs(tok.delay_s - expected) > kTimeSlack * std::max(1.0, expected))
        throw StructuralError("trajectory '" + id + "': token delay does not match chunk " +
                              std::to_string(i + 1));
      if (tok.delay_s < last) throw StructuralError("trajectory '" + id + "': delays decrease");
      last = tok.delay_s;
      for (const auto& lp : {tok.logp_theta, tok.logp_old, tok.logp_ref}) {
        if (lp && !(*lp <= 0.0))
          throw StructuralError("trajectory '" + id + "': log-probability must be <= 0");
      }
    }
  }
}

void ReferenceDocument::validate() const {
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const auto& s = sentences[k];
    if (!(s.end_s > s.start_s))
      throw StructuralError("reference '" + id + "': sentence " + std::to_string(k) +
                            " has end_s <= start_s");
    if (k > 0 && s.start_s < sentences[k - 1].end_s)
      throw StructuralError("reference '" + id + "': sentence " + std::to_string(k) +
                            " overlaps or precedes its predecessor");
  }
}

Trajectory assign_delays(Trajectory trajectory) {
  trajectory.timeline.validate();
  if (static_cast<int>(trajectory.emissions.size()) != trajectory.timeline.num_chunks)
    throw StructuralError("trajectory '" + trajectory.id + "': chunk index out of range (" +
                          std::to_string(trajectory.emissions.size()) + " emissions, " +
                          std::to_string(trajectory.timeline.num_chunks) + " chunks)");
  for (std::size_t i = 0; i < trajectory.emissions.size(); ++i) {
    const double d = trajectory.timeline.chunk_end_s(static_cast<int>(i) + 1);
    for (auto& tok : trajectory.emissions[i]) tok.delay_s = d;
  }
  return trajectory;
}

FlatTokens flatten(const Trajectory& trajectory) {
  FlatTokens flat;
  flat.tokens.reserve(trajectory.num_tokens());
  flat.delays.reserve(trajectory.num_tokens());
  for (const auto& emission : trajectory.emissions) {
    for (const auto& tok : emission) {
      flat.tokens.push_back(tok.text);
      flat.delays.push_back(tok.delay_s);
    }
  }
  return flat;
}

std::vector<Emission> regroup_by_delay(const FlatTokens& flat, const ChunkTimeline& timeline) {
  if (flat.tokens.size() != flat.delays.size())
    throw StructuralError("token and delay counts differ");
  std::vector<Emission> out(static_cast<std::size_t>(timeline.num_chunks));
  for (std::size_t t = 0; t < flat.tokens.size(); ++t) {
    const double ratio = flat.delays[t] / timeline.chunk_duration_s;
    const long chunk = std::lround(ratio);
    if (chunk < 1 || chunk > timeline.num_chunks ||
        std::abs(ratio - static_cast<double>(chunk)) > 1e-6)
      throw StructuralError("delay " + std::to_string(flat.delays[t]) + " is not a chunk end");
    out[static_cast<std::size_t>(chunk - 1)].push_back(EmittedToken{flat.tokens[t], flat.delays[t], {}, {}, {}});
  }
  return out;
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x2E80 && cp <= 0x2FDF) ||   // radicals
         (cp >= 0x3000 && cp <= 0x303F) ||   // CJK symbols and punctuation
         (cp >= 0x3040 && cp <= 0x30FF) ||   // kana
         (cp >= 0x3100 && cp <= 0x31FF) ||   // bopomofo, kana extensions
         (cp >= 0x3400 && cp <= 0x4DBF) ||   // extension A
         (cp >= 0x4E00 && cp <= 0x9FFF) ||   // unified ideographs
         (cp >= 0xAC00 && cp <= 0xD7AF) ||   // hangul syllables
         (cp >= 0xF900 && cp <= 0xFAFF) ||   // compatibility ideographs
         (cp >= 0xFF00 && cp <= 0xFFEF) ||   // full-width forms
         (cp >= 0x20000 && cp <= 0x2FA1F);   // supplementary ideographs
}

std::vector<char32_t> decode_utf8(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
      len = 4;
      cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if (b0 >= 0x80) {
      cp = 0xFFFD;  // stray continuation byte
    }
    if (len > 1) {
      if (i + len > text.size()) {
        out.push_back(0xFFFD);
        break;
      }
      for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::string encode_utf8(std::span<const char32_t> cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::vector<char32_t> pending;
  auto flush = [&] {
    if (!pending.empty()) {
      tokens.push_back(encode_utf8(pending));
      pending.clear();
    }
  };
  for (char32_t cp : decode_utf8(text)) {
    if (is_space(cp)) {
      flush();
    } else if (is_cjk(cp)) {
      flush();
      const char32_t one[1] = {cp};
      tokens.push_back(encode_utf8(one));
    } else {
      pending.push_back(cp);
    }
  }
  flush();
  return tokens;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool prev_cjk = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto cps = decode_utf8(tokens[i]);
    if (cps.empty()) continue;
    if (!out.empty() && !prev_cjk && !is_cjk(cps.front())) out += ' ';
    out += tokens[i];
    prev_cjk = is_cjk(cps.back());
  }
  return out;
}

}  // namespace hpo
