#include "oracles/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hpo/simenv.hpp"
#include "oracles/alignment_oracle.hpp"

namespace fixture {
namespace {

const std::vector<std::string> kVocab = {"river", "stone", "light", "paper", "north", "green", "quiet", "metal",
                                         "bread", "cloud", "seven", "horse", "glass", "field", "storm", "salt"};

std::vector<std::string> words_of(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string random_sentence(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(2, 6);
  std::uniform_int_distribution<std::size_t> pick(0, kVocab.size() - 1);
  std::string s;
  for (int k = len(rng); k > 0; --k) s += (s.empty() ? "" : " ") + kVocab[pick(rng)];
  return s + ".";
}

std::string garble(std::mt19937_64& rng, const std::string& sentence) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, kVocab.size() - 1);
  auto w = words_of(sentence);
  w.back().pop_back();
  std::vector<std::string> out;
  for (auto& x : w) {
    const double p = u(rng);
    if (p < 0.15) continue;
    out.push_back(p < 0.35 ? kVocab[pick(rng)] : x);
  }
  if (out.empty()) out.push_back(kVocab[pick(rng)]);
  std::string s;
  for (auto& x : out) s += (s.empty() ? "" : " ") + x;
  return s + ".";
}

}  // namespace

hpo::Trajectory streamed(const std::string& id, const std::vector<std::string>& sentences,
                         const std::vector<int>& chunks, int num_chunks, double chunk_s) {
  hpo::Trajectory t;
  t.id = id;
  t.timeline = hpo::ChunkTimeline::from_chunks(num_chunks, chunk_s);
  t.emissions.assign(static_cast<std::size_t>(num_chunks), {});
  for (std::size_t k = 0; k < sentences.size(); ++k)
    for (auto& w : words_of(sentences[k]))
      t.emissions[static_cast<std::size_t>(chunks[k] - 1)].push_back({w, 0.0, {}, {}, {}});
  return hpo::assign_delays(std::move(t));
}

Group random_group(std::mt19937_64& rng, int group_size, double chunk_s) {
  std::uniform_int_distribution<int> nsent(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0), dur(1.0, 4.0), gap(0.0, 1.0);
  Group g;
  g.reference.id = "doc";
  double t = 0.0;
  for (int k = nsent(rng); k > 0; --k) {
    const double start = t + gap(rng);
    const double end = start + dur(rng);
    const auto ref = random_sentence(rng);
    g.reference.sentences.push_back({ref, ref, start, end});
    t = end;
  }
  const int num_chunks = static_cast<int>(std::ceil(t / chunk_s)) + 1;
  std::uniform_int_distribution<int> lag(0, 3);
  for (int j = 0; j < group_size; ++j) {
    std::vector<std::string> sentences;
    std::vector<int> chunks;
    int last_chunk = 1;
    for (const auto& rs : g.reference.sentences) {
      const double p = u(rng);
      if (p < 0.1) continue;  // under-translation
      if (p < 0.2) {          // over-translation before this sentence
        sentences.push_back(random_sentence(rng));
        chunks.push_back(last_chunk);
      }
      sentences.push_back(u(rng) < 0.5 ? rs.reference : garble(rng, rs.reference));
      const int ideal = static_cast<int>(std::ceil(rs.end_s / chunk_s)) - 2 + lag(rng);
      last_chunk = std::clamp(std::max(ideal, last_chunk), 1, num_chunks);
      chunks.push_back(last_chunk);
    }
    if (sentences.empty() || u(rng) < 0.1) {
      sentences.push_back(random_sentence(rng));
      chunks.push_back(num_chunks);
    }
    g.hypotheses.push_back(streamed("doc", sentences, chunks, num_chunks, chunk_s));
  }
  return g;
}

std::vector<oracle::Link> oracle_links(const hpo::Trajectory& hypothesis, const hpo::ReferenceDocument& reference) {
  // Sentence split: every token ending in '.' closes a sentence.
  std::vector<std::vector<std::string>> sent_words(1);
  std::vector<std::vector<double>> sent_delays(1);
  for (std::size_t c = 0; c < hypothesis.emissions.size(); ++c)
    for (const auto& tok : hypothesis.emissions[c]) {
      sent_words.back().push_back(tok.text);
      sent_delays.back().push_back(static_cast<double>(c + 1) * hypothesis.timeline.chunk_duration_s);
      if (tok.text.back() == '.') {
        sent_words.emplace_back();
        sent_delays.emplace_back();
      }
    }
  if (sent_words.back().empty()) {
    sent_words.pop_back();
    sent_delays.pop_back();
  }
  std::vector<std::string> hyp_texts;
  for (auto& w : sent_words) {
    std::string s;
    for (auto& x : w) s += (s.empty() ? "" : " ") + x;
    hyp_texts.push_back(s);
  }
  std::vector<std::string> ref_texts;
  for (auto& s : reference.sentences) ref_texts.push_back(s.reference);

  const auto brute = oracle::exhaustive_alignment(hyp_texts, ref_texts, hpo::segalign::lexical_similarity);
  std::vector<oracle::Link> links;
  for (const auto& link : brute.alignment) {
    if (link.hyp.empty() || link.ref.empty()) {
      links.push_back({0.0, 0.0, true});
      continue;
    }
    std::string hyp, ref;
    std::vector<double> delays;
    int ref_len = 0;
    for (int h : link.hyp) {
      hyp += (hyp.empty() ? "" : " ") + hyp_texts[static_cast<std::size_t>(h)];
      for (double d : sent_delays[static_cast<std::size_t>(h)]) delays.push_back(d);
    }
    for (int r : link.ref) {
      ref += (ref.empty() ? "" : " ") + ref_texts[static_cast<std::size_t>(r)];
      ref_len += static_cast<int>(words_of(ref_texts[static_cast<std::size_t>(r)]).size());
    }
    const double start = reference.sentences[static_cast<std::size_t>(link.ref.front())].start_s;
    const double end = reference.sentences[static_cast<std::size_t>(link.ref.back())].end_s;
    for (auto& d : delays) d -= start;
    links.push_back({oracle::proxy_quality(hyp, ref), oracle::laal(delays, end - start, ref_len), false});
  }
  return links;
}

double gradient_check(std::mt19937_64& rng, hpo::grpo::ObjectiveMode mode, double h) {
  namespace sim = hpo::simenv;
  static const auto corpus = [] {
    sim::CorpusSpec spec;
    spec.num_docs = 4;
    spec.sentences_per_doc = 1;
    spec.anticipation = 1.0;
    return sim::make_corpus(spec, 3);
  }();
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  sim::Params theta_old, theta_ref, theta;
  for (int k = 0; k < sim::kNumFeatures; ++k) {
    theta_old(k) = 0.7 * g(rng);
    theta_ref(k) = theta_old(k) + 0.3 * g(rng);
    theta(k) = theta_old(k) + 0.15 * g(rng);
  }
  hpo::grpo::OptimizerConfig cfg;
  cfg.objective_mode = mode;
  cfg.epsilon = 0.1 + 0.2 * u(rng);
  cfg.beta = 0.5 * u(rng);

  std::vector<std::vector<sim::Rollout>> rollouts;
  std::vector<hpo::grpo::RolloutGroup> groups;
  for (int gi = 0; gi < 2; ++gi) {
    const auto& source = corpus[rng() % corpus.size()];
    const int n = 2 + static_cast<int>(rng() % 3);
    auto rs = sim::sample_group(theta_old, source, n, rng());
    std::vector<double> rewards(static_cast<std::size_t>(n));
    for (auto& r : rewards) r = g(rng);
    groups.push_back(sim::to_rollout_group(source, rs, rewards, theta_old, theta_ref));
    rollouts.push_back(std::move(rs));
  }
  const auto evaluate = sim::make_evaluator(rollouts);
  const Eigen::VectorXd at = theta;
  const auto analytic = hpo::grpo::objective_and_gradient(groups, at, evaluate, cfg).gradient;

  Eigen::VectorXd numeric(at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    Eigen::VectorXd plus = at, minus = at;
    plus(k) += h;
    minus(k) -= h;
    hpo::grpo::refresh_theta_logps(groups, plus, evaluate);
    const double jp = hpo::grpo::objective(groups, cfg);
    hpo::grpo::refresh_theta_logps(groups, minus, evaluate);
    const double jm = hpo::grpo::objective(groups, cfg);
    numeric(k) = (jp - jm) / (2.0 * h);
  }
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-8});
  return (analytic - numeric).norm() / scale;
}

}  // namespace fixture
