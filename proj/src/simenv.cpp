#include "hpo/simenv.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

#include "hpo/error.hpp"
#include "hpo/latency.hpp"
#include "hpo/segalign.hpp"

namespace hpo::simenv {
namespace {

constexpr std::array<const char*, 14> kOnsets = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
constexpr std::array<const char*, 5> kVowels = {"a", "e", "i", "o", "u"};
constexpr int kIdleCap = 4;

std::string make_word(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> syllables(2, 3);
  std::uniform_int_distribution<std::size_t> onset(0, kOnsets.size() - 1);
  std::uniform_int_distribution<std::size_t> vowel(0, kVowels.size() - 1);
  std::string w;
  const int n = syllables(rng);
  for (int s = 0; s < n; ++s) {
    w += kOnsets[onset(rng)];
    w += kVowels[vowel(rng)];
  }
  return w;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

// Replacement for a token written too early. Terminal punctuation survives so
// the hypothesis still splits into the same sentences.
std::string corrupt(const std::string& token) {
  std::string tail;
  std::size_t end = token.size();
  while (end > 0 && (token[end - 1] == '.' || token[end - 1] == '!' || token[end - 1] == '?')) --end;
  tail = token.substr(end);
  return kCorruptToken + tail;
}

struct TokenRef {
  std::size_t sentence = 0;
  std::size_t index = 0;
};

}  // namespace

std::size_t SimSource::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

ReferenceDocument SimSource::reference() const {
  ReferenceDocument doc;
  doc.id = id;
  for (const auto& s : sentences) {
    std::vector<std::string> words;
    for (const auto& t : s.tokens) words.push_back(t.text);
    doc.sentences.push_back({s.transcript, detokenize(words), s.start_s, s.end_s});
  }
  return doc;
}

void SimSource::validate() const {
  timeline.validate();
  reference().validate();
  int last_info = 1;
  for (const auto& s : sentences) {
    if (s.tokens.empty()) throw StructuralError("source '" + id + "': empty sentence");
    for (const auto& t : s.tokens) {
      if (t.reveal_chunk < 1 || t.info_chunk < t.reveal_chunk || t.info_chunk > timeline.num_chunks)
        throw StructuralError("source '" + id + "': token '" + t.text + "' has reveal " +
                              std::to_string(t.reveal_chunk) + ", info " + std::to_string(t.info_chunk));
      if (t.final_only && t.info_chunk != timeline.num_chunks)
        throw StructuralError("source '" + id + "': final-only token '" + t.text + "' is not in the last chunk");
      if (t.info_chunk < last_info)
        throw StructuralError("source '" + id + "': info chunks decrease at '" + t.text + "'");
      last_info = t.info_chunk;
    }
  }
}

void CorpusSpec::validate() const {
  if (num_docs < 1) throw ConfigError("corpus.num_docs must be >= 1");
  if (sentences_per_doc < 1) throw ConfigError("corpus.sentences_per_doc must be >= 1");
  if (min_sentence_tokens < 1 || max_sentence_tokens < min_sentence_tokens)
    throw ConfigError("corpus.min_sentence_tokens/max_sentence_tokens must satisfy 1 <= min <= max");
  if (!(min_word_s > 0.0) || max_word_s < min_word_s)
    throw ConfigError("corpus.min_word_s/max_word_s must satisfy 0 < min <= max");
  if (!(pause_s >= 0.0)) throw ConfigError("corpus.pause_s must be >= 0");
  if (min_info_lag < 0 || max_info_lag < min_info_lag)
    throw ConfigError("corpus.min_info_lag/max_info_lag must satisfy 0 <= min <= max");
  if (!(unbounded_lag_prob >= 0.0 && unbounded_lag_prob <= 1.0))
    throw ConfigError("corpus.unbounded_lag_prob must lie in [0, 1]");
  if (!(chunk_duration_s > 0.0)) throw ConfigError("corpus.chunk_duration_s must be positive");
  if (!std::isfinite(anticipation)) throw ConfigError("corpus.anticipation must be finite");
  if (!(error_rate >= 0.0 && error_rate < 1.0)) throw ConfigError("corpus.error_rate must lie in [0, 1)");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_string(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<SimSource> make_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<SimSource> out;
  for (int d = 0; d < spec.num_docs; ++d) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(d)));
    std::uniform_int_distribution<int> length(spec.min_sentence_tokens, spec.max_sentence_tokens);
    std::uniform_int_distribution<int> lag(spec.min_info_lag, spec.max_info_lag);

    SimSource src;
    src.id = spec.id_prefix + "-" + std::to_string(d);
    src.anticipation = spec.anticipation;
    src.error_rate = spec.error_rate;
    std::set<std::string> used;
    auto fresh_word = [&] {
      std::string w;
      do {
        w = make_word(rng);
      } while (!used.insert(w).second);
      return w;
    };

    struct Pending {
      double end_s;
      int lag;
      bool unbounded;
    };
    std::vector<std::vector<Pending>> timing;
    double t = 0.0;
    for (int s = 0; s < spec.sentences_per_doc; ++s) {
      if (s > 0) t += spec.pause_s;
      SimSentence sent;
      sent.start_s = t;
      const int n = length(rng);
      std::vector<std::string> src_words;
      std::vector<Pending> times;
      for (int k = 0; k < n; ++k) {
        t += spec.min_word_s + (spec.max_word_s - spec.min_word_s) * uniform01(rng);
        src_words.push_back(fresh_word());
        std::string tgt = fresh_word();
        if (k + 1 == n) tgt += '.';
        sent.tokens.push_back({tgt, 1, 1});
        const bool unbounded = uniform01(rng) < spec.unbounded_lag_prob;
        times.push_back({t, lag(rng), unbounded});
      }
      src_words.back() += '.';
      sent.transcript = detokenize(src_words);
      sent.end_s = t;
      src.sentences.push_back(std::move(sent));
      timing.push_back(std::move(times));
    }
    src.timeline = ChunkTimeline::from_duration(t + 0.5 * spec.pause_s + 1e-3, spec.chunk_duration_s);

    int running = 1;
    for (std::size_t s = 0; s < src.sentences.size(); ++s) {
      for (std::size_t k = 0; k < src.sentences[s].tokens.size(); ++k) {
        auto& tok = src.sentences[s].tokens[k];
        const auto& p = timing[s][k];
        tok.reveal_chunk = src.timeline.chunk_of(p.end_s);
        const int info = p.unbounded ? src.timeline.num_chunks
                                     : std::min(tok.reveal_chunk + p.lag, src.timeline.num_chunks);
        running = std::max(running, info);
        tok.info_chunk = running;
        tok.final_only = p.unbounded;
      }
    }
    src.validate();
    out.push_back(std::move(src));
  }
  return out;
}

int decision_length(const Decision& decision) { return decision.action + 1; }

int sequence_length(const Rollout& rollout) {
  int n = 0;
  for (const auto& d : rollout.decisions) n += decision_length(d);
  return n;
}

void decision_logps(const Params& theta, const Decision& decision, Eigen::Ref<Eigen::VectorXd> logp,
                    Eigen::MatrixXd* jacobian, Eigen::Index row_offset) {
  const Eigen::Index options = decision.features.rows();
  const int k = decision.action;
  const Eigen::VectorXd logits = decision.features * theta;

  // Tail sums over options >= m, in log space, and the feature mean under
  // the distribution restricted to that tail.
  Eigen::VectorXd log_tail(options);
  Eigen::Matrix<double, Eigen::Dynamic, kNumFeatures> tail_mean(options, kNumFeatures);
  for (Eigen::Index m = 0; m < options; ++m) {
    const auto tail = logits.tail(options - m);
    log_tail(m) = log_sum_exp(tail);
    const Eigen::VectorXd w = (tail.array() - log_tail(m)).exp();
    tail_mean.row(m) = w.transpose() * decision.features.bottomRows(options - m);
  }

  for (int m = 1; m <= k; ++m) {
    logp(row_offset + m - 1) = log_tail(m) - log_tail(m - 1);
    if (jacobian) jacobian->row(row_offset + m - 1) = tail_mean.row(m) - tail_mean.row(m - 1);
  }
  logp(row_offset + k) = logits(k) - log_tail(k);
  if (jacobian) jacobian->row(row_offset + k) = decision.features.row(k) - tail_mean.row(k);
}

void sequence_logps(const Params& theta, const Rollout& rollout, Eigen::VectorXd& logp,
                    Eigen::MatrixXd* jacobian) {
  const int n = sequence_length(rollout);
  logp.resize(n);
  if (jacobian) jacobian->resize(n, kNumFeatures);
  Eigen::Index offset = 0;
  for (const auto& d : rollout.decisions) {
    decision_logps(theta, d, logp, jacobian, offset);
    offset += decision_length(d);
  }
}

Rollout rollout(const Params& theta, const SimSource& source, std::mt19937_64& rng, const PolicyOptions& options) {
  std::vector<TokenRef> order;
  for (std::size_t s = 0; s < source.sentences.size(); ++s)
    for (std::size_t k = 0; k < source.sentences[s].tokens.size(); ++k) order.push_back({s, k});
  auto token = [&](std::size_t pos) -> const SimToken& {
    return source.sentences[order[pos].sentence].tokens[order[pos].index];
  };

  Rollout out;
  out.trajectory.id = source.id;
  out.trajectory.timeline = source.timeline;
  out.trajectory.emissions.resize(static_cast<std::size_t>(source.timeline.num_chunks));

  // Text actually written for a token at `chunk`: early tokens go wrong with
  // a probability that shrinks as the margin to info_chunk closes.
  auto write = [&](const SimToken& tok, int chunk) {
    bool wrong = tok.final_only && chunk < source.timeline.num_chunks;
    if (!wrong && tok.info_chunk > chunk)
      wrong = uniform01(rng) >= sigmoid(static_cast<double>(chunk - tok.info_chunk) + source.anticipation);
    if (!wrong && source.error_rate > 0.0) wrong = uniform01(rng) < source.error_rate;
    if (!wrong) return tok.text;
    ++out.corrupted;
    return corrupt(tok.text);
  };

  const int last = source.timeline.num_chunks;
  std::size_t next = 0;
  int idle = 0;
  for (int chunk = 1; chunk <= last; ++chunk) {
    auto& emission = out.trajectory.emissions[static_cast<std::size_t>(chunk - 1)];
    const double delay = source.timeline.chunk_end_s(chunk);
    if (chunk == last) {
      for (; next < order.size(); ++next) emission.push_back({write(token(next), chunk), delay, 0.0, 0.0, {}});
      break;
    }
    std::size_t backlog = 0;
    while (next + backlog < order.size() && token(next + backlog).reveal_chunk <= chunk) ++backlog;
    if (backlog == 0) {
      ++idle;
      continue;
    }
    std::size_t ready = 0;
    while (ready < backlog && token(next + ready).info_chunk <= chunk) ++ready;

    const auto& sent = source.sentences[order[next].sentence];
    const double position = static_cast<double>(order[next].index) / static_cast<double>(sent.tokens.size());
    const double noise = 2.0 * uniform01(rng) - 1.0;
    const int options_n = static_cast<int>(std::min<std::size_t>(kMaxEmit, backlog)) + 1;

    Decision decision;
    decision.chunk = chunk;
    decision.features.resize(options_n, kNumFeatures);
    for (int k = 0; k < options_n; ++k) {
      const double safe = std::min<double>(k, static_cast<double>(ready));
      decision.features.row(k) << k - safe, k * std::min(idle, kIdleCap) / double(kIdleCap), safe, k,
          k * position, k * noise;
    }

    const Eigen::VectorXd logits = decision.features * theta;
    int action = 0;
    if (options.temperature <= 0.0) {
      logits.maxCoeff(&action);
    } else {
      const Eigen::VectorXd scaled = logits / options.temperature;
      const Eigen::VectorXd p = (scaled.array() - log_sum_exp(scaled)).exp();
      double u = uniform01(rng);
      action = options_n - 1;
      for (int k = 0; k < options_n; ++k) {
        if (u < p(k)) {
          action = k;
          break;
        }
        u -= p(k);
      }
    }
    decision.action = action;

    Eigen::VectorXd lp(action + 1);
    decision_logps(theta, decision, lp, nullptr);
    for (int m = 0; m < action; ++m, ++next) {
      emission.push_back({write(token(next), chunk), delay, lp(m), lp(m), {}});
    }
    idle = action > 0 ? 0 : idle + 1;
    out.decisions.push_back(std::move(decision));
  }
  return out;
}

std::vector<Rollout> sample_group(const Params& theta, const SimSource& source, int n, std::uint64_t seed,
                                  const PolicyOptions& options, int threads) {
  if (n < 1) throw ConfigError("group size must be >= 1");
  std::vector<Rollout> out(static_cast<std::size_t>(n));
  const std::uint64_t base = mix_seed(seed, hash_string(source.id));
  parallel_for(out.size(), threads, [&](std::size_t j) {
    std::mt19937_64 rng(mix_seed(base, j));
    out[j] = rollout(theta, source, rng, options);
  });
  return out;
}

grpo::RolloutGroup to_rollout_group(const SimSource& source, std::span<const Rollout> rollouts,
                                    std::span<const double> rewards, const Params& theta_old,
                                    const Params& theta_ref) {
  if (rollouts.size() != rewards.size()) throw DataError("one reward per rollout required");
  grpo::RolloutGroup group;
  group.source_id = source.id;
  Eigen::VectorXd old_lp;
  Eigen::VectorXd ref_lp;
  for (std::size_t j = 0; j < rollouts.size(); ++j) {
    sequence_logps(theta_old, rollouts[j], old_lp, nullptr);
    sequence_logps(theta_ref, rollouts[j], ref_lp, nullptr);
    grpo::Sample sample;
    sample.reward = rewards[j];
    for (Eigen::Index t = 0; t < old_lp.size(); ++t) sample.tokens.push_back({old_lp(t), old_lp(t), ref_lp(t)});
    group.samples.push_back(std::move(sample));
  }
  return group;
}

grpo::PolicyEvaluator make_evaluator(const std::vector<std::vector<Rollout>>& rollouts) {
  return [&rollouts](const Eigen::VectorXd& theta, std::size_t g, std::size_t j, Eigen::VectorXd& logp,
                     Eigen::MatrixXd* jacobian) {
    if (theta.size() != kNumFeatures) throw RuntimeFailure("policy expects 6 parameters");
    sequence_logps(Params(theta), rollouts.at(g).at(j), logp, jacobian);
  };
}

namespace {

struct GroupOutcome {
  std::vector<Rollout> rollouts;
  std::vector<double> rewards;
  std::vector<double> quality;
  std::vector<double> latency;
};

GroupOutcome play_and_score(const Params& theta, const SimSource& source, int n, std::uint64_t seed,
                            const reward::RewardConfig* reward_config, int threads) {
  static const quality::ProxyScorer scorer;
  GroupOutcome out;
  out.rollouts = sample_group(theta, source, n, seed, {}, threads);
  std::vector<Trajectory> hyps;
  for (const auto& r : out.rollouts) hyps.push_back(r.trajectory);
  const auto reference = source.reference();
  const auto scored = reward::score_hypotheses(hyps, reference, scorer, latency::kNullLinkPenaltyS);
  std::vector<std::vector<reward::LinkScore>> links;
  for (const auto& s : scored) {
    double q = 0.0;
    double l = 0.0;
    for (const auto& link : s.links) {
      q += link.quality;
      l += link.laal_s;
    }
    out.quality.push_back(q / static_cast<double>(s.links.size()));
    out.latency.push_back(l / static_cast<double>(s.links.size()));
    links.push_back(s.links);
  }
  if (reward_config) {
    for (const auto& b : reward::rewards_from_scores(links, *reward_config, source.timeline.chunk_duration_s))
      out.rewards.push_back(b.r);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

PolicyMetrics evaluate_policy(const Params& theta, std::span<const SimSource> sources, int rollouts_per_source,
                              std::uint64_t seed, int threads) {
  if (sources.empty()) throw DataError("evaluate_policy: no sources");
  std::vector<GroupOutcome> outcomes(sources.size());
  parallel_for(sources.size(), threads, [&](std::size_t i) {
    outcomes[i] = play_and_score(theta, sources[i], rollouts_per_source, seed, nullptr, 1);
  });
  std::vector<double> q;
  std::vector<double> l;
  for (const auto& o : outcomes) {
    q.insert(q.end(), o.quality.begin(), o.quality.end());
    l.insert(l.end(), o.latency.begin(), o.latency.end());
  }
  return {mean(q), mean(l)};
}

TrainResult train(std::span<const SimSource> train_set, std::span<const SimSource> val_set,
                  const reward::RewardConfig& reward_config, const grpo::OptimizerConfig& optimizer_config,
                  const TrainConfig& config, std::uint64_t seed, const StepCallback& on_step) {
  reward_config.validate();
  optimizer_config.validate();
  if (train_set.empty()) throw DataError("train: empty training corpus");
  if (config.steps < 0 || config.sources_per_step < 1 || config.group_size < 2 || config.val_every < 1 ||
      config.val_rollouts < 1)
    throw ConfigError("train: steps >= 0, sources_per_step >= 1, group_size >= 2, val_every >= 1 and "
                      "val_rollouts >= 1 required");

  const Params theta_ref = config.theta_init;
  Eigen::VectorXd theta = config.theta_init;
  grpo::AdamW optimizer(kNumFeatures);
  TrainResult result;
  result.best_theta = config.theta_init;
  const std::uint64_t val_seed = mix_seed(seed, 0x76616c);

  auto validate = [&](int step) {
    if (val_set.empty()) return;
    const auto m = evaluate_policy(Params(theta), val_set, config.val_rollouts, val_seed, config.threads);
    result.validation.push_back({step, m.mean_q, m.mean_laal_s});
    if (result.validation.size() == 1 || m.mean_q > result.best_val_q) {
      result.best_val_q = m.mean_q;
      result.best_step = step;
      result.best_theta = Params(theta);
    }
  };
  validate(0);

  for (int step = 1; step <= config.steps; ++step) {
    const Params theta_old(theta);
    const std::uint64_t step_seed = mix_seed(seed, static_cast<std::uint64_t>(step));
    std::vector<GroupOutcome> outcomes(static_cast<std::size_t>(config.sources_per_step));
    parallel_for(outcomes.size(), config.threads, [&](std::size_t b) {
      const auto& src = train_set[((static_cast<std::size_t>(step) - 1) * outcomes.size() + b) % train_set.size()];
      outcomes[b] = play_and_score(theta_old, src, config.group_size, step_seed, &reward_config, 1);
    });

    std::vector<std::vector<Rollout>> rollouts;
    std::vector<grpo::RolloutGroup> groups;
    std::vector<double> q;
    std::vector<double> l;
    for (std::size_t b = 0; b < outcomes.size(); ++b) {
      const auto& src = train_set[((static_cast<std::size_t>(step) - 1) * outcomes.size() + b) % train_set.size()];
      groups.push_back(to_rollout_group(src, outcomes[b].rollouts, outcomes[b].rewards, theta_old, theta_ref));
      rollouts.push_back(std::move(outcomes[b].rollouts));
      q.insert(q.end(), outcomes[b].quality.begin(), outcomes[b].quality.end());
      l.insert(l.end(), outcomes[b].latency.begin(), outcomes[b].latency.end());
    }

    StepRecord record;
    record.step = step;
    record.mean_q = mean(q);
    record.mean_laal_s = mean(l);
    Eigen::VectorXd candidate = theta;
    try {
      const auto stats = grpo::step(candidate, groups, make_evaluator(rollouts), optimizer_config, optimizer);
      if (!candidate.allFinite()) throw RuntimeFailure("parameters became non-finite");
      record.J = stats.J;
      record.kl = stats.kl;
      record.grad_norm = stats.grad_norm;
    } catch (const RuntimeFailure& e) {
      result.aborted = true;
      result.abort_reason = "step " + std::to_string(step) + ": " + e.what();
      break;
    }
    theta = candidate;
    result.curve.push_back(record);
    if (on_step) on_step(record);
    if (step % config.val_every == 0 || step == config.steps) validate(step);
  }
  result.final_theta = Params(theta);
  return result;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < n; i = cursor++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

OrderedJson to_json(const SimSource& source) {
  OrderedJson out = to_json(source.reference());
  out["chunk_duration_s"] = source.timeline.chunk_duration_s;
  out["total_duration_s"] = source.timeline.total_duration_s;
  out["anticipation"] = source.anticipation;
  out["error_rate"] = source.error_rate;
  for (std::size_t s = 0; s < source.sentences.size(); ++s) {
    std::vector<int> reveal;
    std::vector<int> info;
    std::vector<bool> final_only;
    for (const auto& t : source.sentences[s].tokens) {
      reveal.push_back(t.reveal_chunk);
      info.push_back(t.info_chunk);
      final_only.push_back(t.final_only);
    }
    out["sentences"][s]["reveal_chunks"] = reveal;
    out["sentences"][s]["info_chunks"] = info;
    if (std::find(final_only.begin(), final_only.end(), true) != final_only.end())
      out["sentences"][s]["final_only"] = final_only;
  }
  return out;
}

SimSource source_from_json(const Json& record, std::size_t line) {
  const ReferenceDocument doc = reference_from_json(record, line);
  SimSource src;
  src.id = doc.id;
  src.anticipation = optional_number(record, "anticipation", line).value_or(0.0);
  src.error_rate = optional_number(record, "error_rate", line).value_or(0.0);
  src.timeline = ChunkTimeline::from_duration(require_number(record, "total_duration_s", line),
                                              require_number(record, "chunk_duration_s", line));
  const Json& sentences = record.at("sentences");
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    SimSentence sent;
    sent.transcript = doc.sentences[s].transcript;
    sent.start_s = doc.sentences[s].start_s;
    sent.end_s = doc.sentences[s].end_s;
    const auto words = tokenize(doc.sentences[s].reference);
    const Json& reveal = require_field(sentences[s], "reveal_chunks", line);
    const Json& info = require_field(sentences[s], "info_chunks", line);
    if (!reveal.is_array() || !info.is_array() || reveal.size() != words.size() || info.size() != words.size())
      throw ParseError(line, "info_chunks", "expected one reveal and info chunk per reference token");
    const Json* final_only = sentences[s].contains("final_only") ? &sentences[s]["final_only"] : nullptr;
    if (final_only && (!final_only->is_array() || final_only->size() != words.size()))
      throw ParseError(line, "final_only", "expected one flag per reference token");
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (!reveal[k].is_number_integer() || !info[k].is_number_integer())
        throw ParseError(line, "info_chunks", "expected integers");
      if (final_only && !(*final_only)[k].is_boolean()) throw ParseError(line, "final_only", "expected booleans");
      sent.tokens.push_back({words[k], reveal[k].get<int>(), info[k].get<int>(),
                             final_only && (*final_only)[k].get<bool>()});
    }
    src.sentences.push_back(std::move(sent));
  }
  try {
    src.validate();
  } catch (const StructuralError& e) {
    throw ParseError(line, "sentences", e.what());
  }
  return src;
}

}  // namespace hpo::simenv
