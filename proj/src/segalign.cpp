#include "hpo/segalign.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "hpo/error.hpp"

namespace hpo::segalign {
namespace {

constexpr std::array<std::string_view, 17> kAbbreviations = {
    "e.g.", "i.e.", "vs.", "cf.", "mr.", "mrs.", "ms.", "dr.", "prof.",
    "st.", "jr.", "sr.", "approx.", "fig.", "eq.", "no.", "al."};

bool is_terminal(char32_t cp) {
  return cp == U'.' || cp == U'!' || cp == U'?' || cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;
}

bool is_cjk_terminal(char32_t cp) { return cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F; }

bool is_closer(char32_t cp) {
  return cp == U'"' || cp == U'\'' || cp == U')' || cp == U']' || cp == 0x201D || cp == 0x2019 ||
         cp == 0x300D || cp == 0x300F || cp == 0xFF09 || cp == 0x3011;
}

bool ends_sentence(const std::string& token) {
  auto cps = decode_utf8(token);
  while (!cps.empty() && is_closer(cps.back())) cps.pop_back();
  if (cps.empty() || !is_terminal(cps.back())) return false;
  if (is_cjk_terminal(cps.back())) return true;
  return !is_abbreviation(encode_utf8(cps));
}

bool is_closing_token(const std::string& token) {
  const auto cps = decode_utf8(token);
  return !cps.empty() && std::all_of(cps.begin(), cps.end(), is_closer);
}

std::map<std::u32string, double> trigram_counts(std::string_view text) {
  auto cps = decode_utf8(text);
  for (auto& cp : cps) {
    if (cp >= U'A' && cp <= U'Z') cp = cp - U'A' + U'a';
  }
  std::map<std::u32string, double> counts;
  if (cps.empty()) return counts;
  if (cps.size() < 3) {
    counts[std::u32string(cps.begin(), cps.end())] = 1.0;
    return counts;
  }
  for (std::size_t i = 0; i + 3 <= cps.size(); ++i) counts[std::u32string(cps.begin() + i, cps.begin() + i + 3)] += 1.0;
  return counts;
}

struct Cell {
  double score = -std::numeric_limits<double>::infinity();
  int nulls = 0;
  int shape = -1;  // index into the shape list; -1 for the terminal cell
};

}  // namespace

std::vector<LinkShape> allowed_shapes(int max_merge) {
  if (max_merge < 1) throw ConfigError("max_merge must be at least 1");
  std::vector<LinkShape> shapes;
  for (int k = max_merge; k >= 2; --k) {
    shapes.push_back({k, 1});
    shapes.push_back({1, k});
  }
  shapes.push_back({1, 1});
  shapes.push_back({1, 0});
  shapes.push_back({0, 1});
  return shapes;
}

bool is_abbreviation(std::string_view token) {
  std::string lower(token);
  for (auto& ch : lower) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end();
}

std::vector<TokenRange> split_token_sentences(std::span<const std::string> tokens) {
  std::vector<TokenRange> out;
  std::size_t begin = 0;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (ends_sentence(tokens[i])) {
      std::size_t end = i + 1;
      while (end < tokens.size() && is_closing_token(tokens[end])) ++end;
      out.push_back({begin, end});
      begin = end;
      i = end;
    } else {
      ++i;
    }
  }
  if (begin < tokens.size()) out.push_back({begin, tokens.size()});
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  const auto tokens = tokenize(text);
  std::vector<std::string> out;
  for (const auto& r : split_token_sentences(tokens)) {
    out.push_back(detokenize(std::span<const std::string>(tokens).subspan(r.begin, r.size())));
  }
  return out;
}

std::vector<HypothesisSentence> segment_hypothesis(const FlatTokens& flat) {
  if (flat.tokens.size() != flat.delays.size()) throw StructuralError("token and delay counts differ");
  std::vector<HypothesisSentence> out;
  for (const auto& r : split_token_sentences(flat.tokens)) {
    HypothesisSentence s;
    s.tokens.assign(flat.tokens.begin() + static_cast<std::ptrdiff_t>(r.begin),
                    flat.tokens.begin() + static_cast<std::ptrdiff_t>(r.end));
    s.delays.assign(flat.delays.begin() + static_cast<std::ptrdiff_t>(r.begin),
                    flat.delays.begin() + static_cast<std::ptrdiff_t>(r.end));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<HypothesisSentence> segment_hypothesis(const Trajectory& trajectory) {
  return segment_hypothesis(flatten(trajectory));
}

double lexical_similarity(std::string_view a, std::string_view b) {
  const auto ca = trigram_counts(a);
  const auto cb = trigram_counts(b);
  if (ca.empty() || cb.empty()) return 0.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [gram, count] : ca) {
    na += count * count;
    if (auto it = cb.find(gram); it != cb.end()) dot += count * it->second;
  }
  for (const auto& [gram, count] : cb) nb += count * count;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

std::string join_sentences(std::span<const std::string> sentences, std::span<const int> indices) {
  std::string out;
  for (int idx : indices) {
    const std::string& s = sentences[static_cast<std::size_t>(idx)];
    if (s.empty()) continue;
    if (!out.empty()) {
      const auto prev = decode_utf8(out);
      const auto next = decode_utf8(s);
      if (!is_cjk(prev.back()) && !is_cjk(next.front())) out += ' ';
    }
    out += s;
  }
  return out;
}

double link_score(std::span<const std::string> hyp, std::span<const std::string> ref,
                  const AlignmentLink& link, const SimilarityFn& sim, const AlignOptions& options) {
  if (link.is_null()) return options.null_score;
  const double s = sim(join_sentences(hyp, link.hyp), join_sentences(ref, link.ref));
  const auto extra = static_cast<double>(link.hyp.size() + link.ref.size() - 2);
  return s - options.merge_penalty * extra;
}

Alignment align_sentences(std::span<const std::string> hyp, std::span<const std::string> ref,
                          const SimilarityFn& sim, const AlignOptions& options) {
  const auto shapes = allowed_shapes(options.max_merge);
  const int nh = static_cast<int>(hyp.size());
  const int nr = static_cast<int>(ref.size());

  std::optional<int> band = options.band_width;
  if (!band && std::max(nh, nr) > options.auto_band_threshold) band = options.auto_band_width;
  auto in_band = [&](int i, int j) {
    if (!band || nh == 0 || nr == 0) return true;
    const double di = static_cast<double>(i) / nh;
    const double dj = static_cast<double>(j) / nr;
    return std::abs(di - dj) * std::max(nh, nr) <= *band + 1e-12;
  };

  auto make_link = [](int i, int j, const LinkShape& shape) {
    AlignmentLink link;
    for (int a = 0; a < shape.hyp; ++a) link.hyp.push_back(i + a);
    for (int b = 0; b < shape.ref; ++b) link.ref.push_back(j + b);
    return link;
  };

  // Suffix DP: cell (i, j) holds the best alignment of hyp[i:] with ref[j:].
  std::vector<Cell> table(static_cast<std::size_t>((nh + 1) * (nr + 1)));
  auto at = [&](int i, int j) -> Cell& { return table[static_cast<std::size_t>(i * (nr + 1) + j)]; };
  at(nh, nr) = Cell{0.0, 0, -1};

  for (int i = nh; i >= 0; --i) {
    for (int j = nr; j >= 0; --j) {
      if (i == nh && j == nr) continue;
      if (!in_band(i, j)) continue;
      Cell best;
      for (std::size_t s = 0; s < shapes.size(); ++s) {
        const LinkShape& shape = shapes[s];
        if (i + shape.hyp > nh || j + shape.ref > nr) continue;
        const Cell& next = at(i + shape.hyp, j + shape.ref);
        if (!std::isfinite(next.score)) continue;
        const AlignmentLink link = make_link(i, j, shape);
        const double cand = link_score(hyp, ref, link, sim, options) + next.score;
        const int nulls = next.nulls + (link.is_null() ? 1 : 0);
        const bool better =
            !std::isfinite(best.score) || cand > best.score + options.tie_tolerance ||
            (std::abs(cand - best.score) <= options.tie_tolerance && nulls < best.nulls);
        if (better) best = Cell{cand, nulls, static_cast<int>(s)};
      }
      at(i, j) = best;
    }
  }

  Alignment out;
  int i = 0;
  int j = 0;
  while (i < nh || j < nr) {
    const Cell& cell = at(i, j);
    if (cell.shape < 0) throw RuntimeFailure("alignment band excludes every path");
    const LinkShape& shape = shapes[static_cast<std::size_t>(cell.shape)];
    out.push_back(make_link(i, j, shape));
    i += shape.hyp;
    j += shape.ref;
  }
  return out;
}

AlignmentScore score_alignment(std::span<const std::string> hyp, std::span<const std::string> ref,
                               const Alignment& alignment, const SimilarityFn& sim,
                               const AlignOptions& options) {
  AlignmentScore total;
  for (const auto& link : alignment) {
    total.score += link_score(hyp, ref, link, sim, options);
    if (link.is_null()) ++total.nulls;
  }
  return total;
}

void validate_alignment(const Alignment& alignment, std::size_t num_hyp, std::size_t num_ref,
                        int max_merge) {
  int next_h = 0;
  int next_r = 0;
  for (std::size_t k = 0; k < alignment.size(); ++k) {
    const auto& link = alignment[k];
    const std::string where = "alignment link " + std::to_string(k);
    if (link.hyp.empty() && link.ref.empty()) throw StructuralError(where + " has two empty sides");
    if (static_cast<int>(link.hyp.size()) > max_merge || static_cast<int>(link.ref.size()) > max_merge)
      throw StructuralError(where + " exceeds the merge limit");
    for (int h : link.hyp) {
      if (h != next_h) throw StructuralError(where + ": hypothesis index " + std::to_string(h) +
                                             " out of order or out of range");
      ++next_h;
    }
    for (int r : link.ref) {
      if (r != next_r) throw StructuralError(where + ": reference index " + std::to_string(r) +
                                             " out of order or out of range");
      ++next_r;
    }
  }
  if (next_h != static_cast<int>(num_hyp) || next_r != static_cast<int>(num_ref))
    throw StructuralError("alignment does not cover every sentence");
}

OrderedJson to_json(const std::string& id, const Alignment& alignment) {
  OrderedJson links = OrderedJson::array();
  for (const auto& link : alignment) {
    OrderedJson l;
    l["hyp"] = link.hyp;
    l["ref"] = link.ref;
    links.push_back(std::move(l));
  }
  OrderedJson out;
  out["id"] = id;
  out["links"] = std::move(links);
  return out;
}

Alignment alignment_from_json(const Json& record, std::size_t line) {
  const Json& links = require_field(record, "links", line);
  if (!links.is_array()) throw ParseError(line, "links", "expected an array");
  Alignment out;
  for (const auto& l : links) {
    AlignmentLink link;
    for (const char* side : {"hyp", "ref"}) {
      const Json& idx = require_field(l, side, line);
      if (!idx.is_array()) throw ParseError(line, side, "expected an array of integers");
      for (const auto& v : idx) {
        if (!v.is_number_integer()) throw ParseError(line, side, "expected an array of integers");
        (std::string_view(side) == "hyp" ? link.hyp : link.ref).push_back(v.get<int>());
      }
    }
    out.push_back(std::move(link));
  }
  return out;
}

}  // namespace hpo::segalign
