#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hpo/config.hpp"
#include "hpo/error.hpp"
#include "hpo/latency.hpp"
#include "hpo/reward.hpp"
#include "hpo/simenv.hpp"

using namespace hpo;
using namespace hpo::simenv;

namespace {

// Feature order: unsafe writes, idle gate, safe writes, bias, sentence position, noise.
Params wait_all() { return (Params() << 0, 0, 0, -40, 0, 0).finished(); }
Params write_all() { return (Params() << 0, 0, 0, 40, 0, 0).finished(); }
Params write_ready() { return (Params() << -40, 0, 20, 0, 0, 0).finished(); }

CorpusSpec small_spec() {
  CorpusSpec s;
  s.num_docs = 6;
  s.sentences_per_doc = 2;
  return s;
}

double mean_quality(const Params& theta, const SimSource& source, int n, std::uint64_t seed) {
  const auto rs = sample_group(theta, source, n, seed);
  std::vector<Trajectory> hyps;
  for (auto& r : rs) hyps.push_back(r.trajectory);
  const quality::ProxyScorer scorer;
  double q = 0.0;
  int links = 0;
  for (const auto& s : reward::score_hypotheses(hyps, source.reference(), scorer, 10.0))
    for (const auto& l : s.links) {
      q += l.quality;
      ++links;
    }
  return q / links;
}

}  // namespace

TEST(Corpus, RegenerationIsIdentical) {
  CorpusSpec spec;
  spec.num_docs = 10;
  spec.sentences_per_doc = 3;
  spec.min_info_lag = 0;
  spec.max_info_lag = 3;
  const auto a = make_corpus(spec, 7), b = make_corpus(spec, 7);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
    EXPECT_EQ(a[i].sentences.size(), 3u);
    EXPECT_NO_THROW(a[i].validate());
  }
  EXPECT_NE(to_json(make_corpus(spec, 8)[0]).dump(), to_json(a[0]).dump());
}

TEST(Corpus, SerializesToReferenceFormat) {
  auto spec = small_spec();
  spec.unbounded_lag_prob = 0.2;
  for (const auto& src : make_corpus(spec, 3)) {
    const Json j = Json::parse(to_json(src).dump());
    const auto ref = reference_from_json(j, 1);
    EXPECT_EQ(ref.sentences.size(), src.sentences.size());
    const auto back = source_from_json(j, 1);
    EXPECT_EQ(to_json(back).dump(), to_json(src).dump());
  }
}

TEST(Corpus, InfoChunksAreMonotoneAndCovered) {
  auto spec = default_config().corpus;
  for (const auto& src : make_corpus(spec, 11)) {
    int last = 1;
    for (const auto& s : src.sentences)
      for (const auto& t : s.tokens) {
        EXPECT_GE(t.info_chunk, last);
        EXPECT_GE(t.info_chunk, t.reveal_chunk);
        EXPECT_LE(t.info_chunk, src.timeline.num_chunks);
        last = t.info_chunk;
      }
  }
}

TEST(Corpus, RejectsBadSpec) {
  CorpusSpec s;
  s.error_rate = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.max_info_lag = -1;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Rollout, FixedSeedIsByteIdentical) {
  const auto src = make_corpus(default_config().corpus, 5)[0];
  Params theta;
  theta << 0.3, -0.2, 0.5, 0.1, -0.4, 0.2;
  std::mt19937_64 a(42), b(42);
  const auto ra = rollout(theta, src, a), rb = rollout(theta, src, b);
  EXPECT_EQ(to_json(ra.trajectory).dump(), to_json(rb.trajectory).dump());
  EXPECT_EQ(sequence_length(ra), sequence_length(rb));
}

TEST(Rollout, WaitingPolicyWritesEverythingAtTheEnd) {
  auto spec = small_spec();
  spec.sentences_per_doc = 1;
  const auto src = make_corpus(spec, 1)[0];
  std::mt19937_64 rng(1);
  const auto r = rollout(wait_all(), src, rng);
  for (std::size_t c = 0; c + 1 < r.trajectory.emissions.size(); ++c) EXPECT_TRUE(r.trajectory.emissions[c].empty());
  EXPECT_EQ(r.trajectory.emissions.back().size(), src.num_tokens());
  const auto flat = flatten(r.trajectory);
  const auto& sent = src.sentences[0];
  const double T = sent.end_s - sent.start_s;
  const double l = latency::laal({latency::offset_delays(flat.delays, sent.start_s), T,
                                  static_cast<int>(sent.tokens.size()), static_cast<int>(flat.delays.size())});
  EXPECT_GE(l, T);
  EXPECT_LE(l, T + sent.start_s + src.timeline.chunk_duration_s);
}

TEST(Rollout, EagerPolicyIsFastButWrong) {
  auto spec = default_config().corpus;
  spec.num_docs = 4;
  const auto corpus = make_corpus(spec, 2);
  const auto eager = evaluate_policy(write_all(), corpus, 4, 1);
  const auto careful = evaluate_policy(write_ready(), corpus, 4, 1);
  EXPECT_LT(eager.mean_q, -5.0);
  EXPECT_LT(eager.mean_laal_s, careful.mean_laal_s);
  EXPECT_GT(careful.mean_q, eager.mean_q);
}

TEST(Rollout, ZeroLagCorpusLetsEagerPolicyBePerfect) {
  auto spec = small_spec();
  spec.max_info_lag = 0;
  for (const auto& src : make_corpus(spec, 4)) {
    std::mt19937_64 rng(9);
    const auto r = rollout(write_all(), src, rng);
    EXPECT_EQ(r.corrupted, 0);
    EXPECT_DOUBLE_EQ(mean_quality(write_all(), src, 3, 1), 0.0);
  }
}

TEST(Rollout, FinalOnlyTokensAreWrongBeforeTheEnd) {
  auto spec = small_spec();
  spec.unbounded_lag_prob = 1.0;
  spec.anticipation = 5.0;
  for (const auto& src : make_corpus(spec, 6)) {
    std::mt19937_64 rng(3);
    const auto r = rollout(write_all(), src, rng);
    int early = 0;
    for (std::size_t c = 0; c + 1 < r.trajectory.emissions.size(); ++c)
      for (const auto& t : r.trajectory.emissions[c]) {
        EXPECT_EQ(t.text.rfind(kCorruptToken, 0), 0u) << t.text;
        ++early;
      }
    EXPECT_EQ(r.corrupted, early);
    for (const auto& t : r.trajectory.emissions.back()) EXPECT_EQ(t.text.find(kCorruptToken), std::string::npos);
  }
}

TEST(Rollout, CorruptionKeepsSentencePunctuation) {
  auto spec = small_spec();
  spec.unbounded_lag_prob = 1.0;
  const auto src = make_corpus(spec, 1)[0];
  std::mt19937_64 rng(3);
  const auto r = rollout(write_all(), src, rng);
  std::size_t pos = 0;
  std::vector<std::string> want;
  for (const auto& s : src.sentences)
    for (const auto& t : s.tokens) want.push_back(t.text);
  for (const auto& e : r.trajectory.emissions)
    for (const auto& t : e) {
      EXPECT_EQ(t.text.back() == '.', want[pos].back() == '.');
      ++pos;
    }
}

TEST(Rollout, EarlyWritingLowersExpectedQuality) {
  auto spec = small_spec();
  spec.min_info_lag = 1;
  spec.anticipation = 1.0;
  const auto src = make_corpus(spec, 12)[0];
  const double careful = mean_quality(write_ready(), src, 1000, 5);
  const double eager = mean_quality(write_all(), src, 1000, 5);
  EXPECT_DOUBLE_EQ(careful, 0.0);
  EXPECT_LT(eager, careful);
}

TEST(Rollout, PolicySweepHasAParetoFrontier) {
  auto spec = default_config().corpus;
  spec.num_docs = 4;
  const auto corpus = make_corpus(spec, 21);
  double min_any = 1e9, min_good = 1e9;
  for (double unsafe : {-6.0, -2.0, 0.0, 2.0})
    for (double bias : {-3.0, 0.0, 3.0, 6.0}) {
      const Params theta = (Params() << unsafe, 0, 2, bias, 0, 0).finished();
      const auto m = evaluate_policy(theta, corpus, 2, 4);
      min_any = std::min(min_any, m.mean_laal_s);
      if (m.mean_q >= -5.0) min_good = std::min(min_good, m.mean_laal_s);
    }
  ASSERT_LT(min_good, 1e9) << "no policy reached the quality threshold";
  EXPECT_GT(min_good, min_any);
}

TEST(DecisionLogps, TokensSumToActionLogProbability) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Decision d;
    d.features.resize(1 + trial % 4, kNumFeatures);
    for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features.data()[i] = g(rng);
    d.action = static_cast<int>(rng() % static_cast<std::uint64_t>(d.features.rows()));
    Params theta;
    for (int k = 0; k < kNumFeatures; ++k) theta(k) = g(rng);
    Eigen::VectorXd lp(decision_length(d));
    Eigen::MatrixXd jac(decision_length(d), kNumFeatures);
    decision_logps(theta, d, lp, &jac);
    const Eigen::VectorXd logits = d.features * theta;
    const double lse = std::log(logits.array().exp().sum());
    EXPECT_NEAR(lp.sum(), logits(d.action) - lse, 1e-12);
    EXPECT_TRUE((lp.array() <= 1e-15).all());
    for (int k = 0; k < kNumFeatures; ++k) {
      Params p = theta, m = theta;
      p(k) += 1e-6;
      m(k) -= 1e-6;
      Eigen::VectorXd lpp(lp.size()), lpm(lp.size());
      decision_logps(p, d, lpp, nullptr);
      decision_logps(m, d, lpm, nullptr);
      const Eigen::VectorXd fd = (lpp - lpm) / 2e-6;
      EXPECT_LT((fd - jac.col(k)).cwiseAbs().maxCoeff(), 1e-7);
    }
  }
}

TEST(SampleGroup, PairNormalizesAndDuplicatesScoreZero) {
  auto spec = small_spec();
  spec.max_info_lag = 0;
  const auto src = make_corpus(spec, 2)[1];
  const auto rs = sample_group(write_ready(), src, 2, 8, PolicyOptions{0.0});
  std::vector<Trajectory> hyps = {rs[0].trajectory, rs[1].trajectory};
  EXPECT_EQ(to_json(hyps[0]).dump(), to_json(hyps[1]).dump());
  const quality::ProxyScorer scorer;
  for (const auto& b : reward::compute_group_rewards(hyps, src.reference(), scorer, reward::RewardConfig{}))
    EXPECT_EQ(b.r, 0.0);
}

TEST(SampleGroup, MembersDifferAndThreadsAgree) {
  const auto src = make_corpus(default_config().corpus, 3)[0];
  const Params theta = Params::Zero();
  const auto one = sample_group(theta, src, 6, 17, {}, 1);
  const auto many = sample_group(theta, src, 6, 17, {}, 3);
  for (std::size_t j = 0; j < one.size(); ++j)
    EXPECT_EQ(to_json(one[j].trajectory).dump(), to_json(many[j].trajectory).dump());
  EXPECT_NE(to_json(one[0].trajectory).dump(), to_json(one[1].trajectory).dump());
}

TEST(SampleGroup, LogProbsRecordedForAllPolicies) {
  const auto src = make_corpus(default_config().corpus, 3)[0];
  Params old, ref;
  old << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  ref.setZero();
  const auto rs = sample_group(old, src, 3, 1);
  const std::vector<double> rewards = {1.0, 0.0, -1.0};
  const auto group = to_rollout_group(src, rs, rewards, old, ref);
  ASSERT_EQ(group.samples.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(group.samples[j].tokens.size(), static_cast<std::size_t>(sequence_length(rs[j])));
    for (const auto& t : group.samples[j].tokens) {
      EXPECT_EQ(t.theta, t.old);
      EXPECT_TRUE(std::isfinite(t.ref));
    }
  }
}

namespace {

TrainResult tiny_train(double beta, std::uint64_t seed) {
  auto spec = small_spec();
  spec.anticipation = 1.0;
  const auto corpus = make_corpus(spec, 1);
  const std::vector<SimSource> val(corpus.begin(), corpus.begin() + 2);
  grpo::OptimizerConfig opt;
  opt.beta = beta;
  opt.learning_rate = 0.1;
  TrainConfig tc;
  tc.steps = 12;
  tc.sources_per_step = 2;
  tc.group_size = 4;
  tc.val_every = 4;
  tc.val_rollouts = 2;
  return train(corpus, val, reward::RewardConfig{}, opt, tc, seed);
}

}  // namespace

TEST(Train, SameSeedSameCurve) {
  const auto a = tiny_train(0.01, 5), b = tiny_train(0.01, 5);
  ASSERT_EQ(a.curve.size(), 12u);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].J, b.curve[i].J);
    EXPECT_EQ(a.curve[i].mean_q, b.curve[i].mean_q);
    EXPECT_EQ(a.curve[i].grad_norm, b.curve[i].grad_norm);
  }
  EXPECT_EQ(a.final_theta, b.final_theta);
  EXPECT_EQ(a.validation.size(), 4u);  // steps 0, 4, 8, 12
}

TEST(Train, BestCheckpointHasBestValidationQuality) {
  const auto r = tiny_train(0.01, 2);
  double best = -1e9;
  for (const auto& v : r.validation) best = std::max(best, v.mean_q);
  EXPECT_EQ(r.best_val_q, best);
}

TEST(Train, StrongKlPenaltyAnchorsParameters) {
  const auto loose = tiny_train(0.0, 3), anchored = tiny_train(10.0, 3);
  EXPECT_LT(anchored.final_theta.norm(), loose.final_theta.norm());
}
