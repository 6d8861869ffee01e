// Acceptance suite: prints one PASS/FAIL line per criterion. Optional
// arguments select criteria by number, e.g. `acceptance 1 4 9`.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "hpo/commands.hpp"
#include "hpo/config.hpp"
#include "hpo/grpo.hpp"
#include "hpo/io.hpp"
#include "hpo/latency.hpp"
#include "hpo/reward.hpp"
#include "hpo/segalign.hpp"
#include "oracles/alignment_oracle.hpp"
#include "oracles/fixtures.hpp"
#include "oracles/reward_oracle.hpp"

namespace fs = std::filesystem;
using namespace hpo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1. Reward fidelity against the straight-line oracle.
Outcome reward_fidelity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const quality::ProxyScorer scorer;
  double worst = 0.0;
  int matched = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = fixture::random_group(rng, 2 + trial % 15);
    std::vector<std::vector<oracle::Link>> links;
    for (const auto& h : g.hypotheses) links.push_back(fixture::oracle_links(h, g.reference));
    const auto got = reward::compute_group_rewards(g.hypotheses, g.reference, scorer, reward::RewardConfig{});
    const auto want = oracle::group_rewards(links, oracle::RewardParams{});
    double err = 0.0;
    for (std::size_t j = 0; j < got.size(); ++j)
      err = std::max({err, std::abs(got[j].r - want[j].r), std::abs(got[j].q_j - want[j].q),
                      std::abs(got[j].l_j - want[j].l)});
    worst = std::max(worst, err);
    matched += err <= 1e-10;
  }
  // Boundary: q exactly at the threshold keeps its measured latency.
  const reward::RewardConfig cfg;
  const std::vector<std::vector<reward::LinkScore>> edge = {{{{}, -5.0, 1.2, false}}, {{{}, -6.0, 1.2, false}}};
  const auto b = reward::rewards_from_scores(edge, cfg, 1.12);
  const bool inclusive = b[0].l_j == 1.2 && b[1].l_j == 10.0;
  const double secs = seconds_since(t0);
  return {matched == 200 && inclusive && secs < 5.0,
          std::to_string(matched) + "/200 groups within 1e-10 (max err " + fmt("%.2e", worst) + "), boundary " +
              (inclusive ? "inclusive" : "EXCLUSIVE") + ", " + fmt("%.2f s", secs)};
}

// 2. The only hypothesis clearing the threshold on every link wins. Gated
// links sit at l_max, so passing links are drawn with LAAL within [0, l_max].
Outcome hierarchical_dominance() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> good_q(-5.0, 0.0), bad_q(-25.0, -5.0 - 1e-9), lat(0.0, 10.0);
  std::uniform_int_distribution<int> nlinks(1, 5), nhyp(2, 16);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = nhyp(rng), links = nlinks(rng);
    const auto winner = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
    std::vector<std::vector<reward::LinkScore>> group(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < group.size(); ++j)
      for (int k = 0; k < links; ++k) {
        const bool is_null = j != winner && rng() % 4 == 0;
        if (is_null) {
          group[j].push_back({{}, -25.0, 10.0, true});
          continue;
        }
        group[j].push_back({{}, j == winner ? good_q(rng) : bad_q(rng), lat(rng), false});
      }
    bool all = true;
    for (double lambda : {0.0, 0.2, 0.5, 1.0}) {
      reward::RewardConfig cfg;
      cfg.lambda = lambda;
      const auto r = reward::rewards_from_scores(group, cfg, 1.12);
      for (std::size_t j = 0; j < r.size(); ++j)
        if (j != winner && r[j].r > r[winner].r) all = false;
    }
    wins += all;
  }
  return {wins == 100, std::to_string(wins) + "/100 groups, lambda in {0, 0.2, 0.5, 1.0}"};
}

// 3. Hand-derived LAAL values and time scaling.
Outcome laal_oracle() {
  auto run = [](const std::vector<double>& d, double T, int ref) {
    return latency::laal({d, T, ref, static_cast<int>(d.size())});
  };
  const bool hand = std::abs(run({1, 2, 3, 4}, 4, 4) - 1.0) <= 1e-9 && std::abs(run({4, 4, 4, 4}, 4, 4) - 4.0) <= 1e-9 &&
                    std::abs(run({2, 4, 6}, 6, 6) - 3.0) <= 1e-9;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> n(1, 30);
  std::uniform_real_distribution<double> T(0.5, 30.0), k(0.05, 20.0), u(0.0, 1.0);
  int held = 0;
  for (int i = 0; i < 1000; ++i) {
    const double t = T(rng), s = k(rng);
    std::vector<double> d(static_cast<std::size_t>(n(rng)));
    for (auto& x : d) x = 1.5 * t * u(rng);
    std::sort(d.begin(), d.end());
    auto scaled = d;
    for (auto& x : scaled) x *= s;
    const int ref = n(rng);
    const double a = run(scaled, s * t, ref), b = s * run(d, t, ref);
    held += std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
  }
  return {hand && held == 1000, std::string("hand cases ") + (hand ? "exact" : "WRONG") + ", scaling " +
                                    std::to_string(held) + "/1000"};
}

// 4. DP alignment equals exhaustive enumeration.
Outcome alignment_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  static const char* words[] = {"red", "car", "dog", "sun", "sky", "tree", "blue", "fast"};
  std::uniform_int_distribution<int> size(0, 6), len(1, 4), pick(0, 7);
  auto sentences = [&](int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) {
      std::string s;
      for (int k = len(rng); k > 0; --k) s += std::string(s.empty() ? "" : " ") + words[pick(rng)];
      out.push_back(s + ".");
    }
    return out;
  };
  const segalign::SimilarityFn sim = [](std::string_view a, std::string_view b) {
    return segalign::lexical_similarity(a, b);
  };
  int same = 0, done = 0;
  while (done < 500) {
    const auto h = sentences(size(rng)), r = sentences(size(rng));
    if (h.empty() && r.empty()) continue;
    ++done;
    const auto dp = segalign::align_sentences(h, r, sim);
    const auto brute = oracle::exhaustive_alignment(h, r, sim);
    const auto s = segalign::score_alignment(h, r, dp, sim);
    same += dp == brute.alignment && std::abs(s.score - brute.score) <= 1e-9;
  }
  const double secs = seconds_since(t0);
  return {same == 500 && secs < 30.0, std::to_string(same) + "/500 instances up to 6x6, " + fmt("%.2f s", secs)};
}

// 5. Analytic gradient against central differences.
Outcome gradient_check() {
  std::mt19937_64 rng(505);
  std::string detail;
  bool pass = true;
  for (auto mode : {grpo::ObjectiveMode::kAsWritten, grpo::ObjectiveMode::kStandardGrpo}) {
    int good = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double e = fixture::gradient_check(rng, mode, 1e-5);
      good += e < 1e-4;
      worst = std::max(worst, e);
    }
    pass = pass && good >= 99;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(grpo::to_string(mode)) + " " +
              std::to_string(good) + "/100 (max rel err " + fmt("%.1e", worst) + ")";
  }
  return {pass, detail};
}

// 6. On-policy, beta = 0: J is the mean group reward.
Outcome on_policy_reduction() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> lp(-5.0, -0.01), r(-3.0, 3.0);
  int ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    grpo::RolloutGroup g{"g", {}};
    const int n = 2 + trial % 15;
    double mean = 0.0;
    for (int j = 0; j < n; ++j) {
      grpo::Sample s{r(rng), {}};
      for (int t = 0; t <= trial % 9; ++t) {
        const double x = lp(rng);
        s.tokens.push_back({x, x, lp(rng)});
      }
      mean += s.reward;
      g.samples.push_back(s);
    }
    mean /= n;
    bool both = true;
    for (auto mode : {grpo::ObjectiveMode::kAsWritten, grpo::ObjectiveMode::kStandardGrpo}) {
      grpo::OptimizerConfig cfg;
      cfg.beta = 0.0;
      cfg.objective_mode = mode;
      const std::vector<grpo::RolloutGroup> groups = {g};
      const double err = std::abs(grpo::objective(groups, cfg) - mean);
      worst = std::max(worst, err);
      both = both && err <= 1e-12;
    }
    ok += both;
  }
  return {ok == 100, std::to_string(ok) + "/100 groups (max err " + fmt("%.1e", worst) + ")"};
}

// Training runs shared by criteria 7 and 8.
struct Sweep {
  std::vector<simenv::PolicyMetrics> runs;
};

std::map<std::string, Sweep>& sweeps() {
  static std::map<std::string, Sweep> cache;
  return cache;
}

const Sweep& sweep(const std::string& name, const RunConfig& config, const cli::Corpora& corpora) {
  auto& cache = sweeps();
  if (auto it = cache.find(name); it != cache.end()) return it->second;
  Sweep s;
  for (const auto seed : config.ablate.seeds) {
    const auto o = cli::run_training(config, seed, corpora);
    s.runs.push_back(o.final_metrics);
    std::cerr << "  [" << name << " seed " << seed << "] q " << o.final_metrics.mean_q << " laal "
              << o.final_metrics.mean_laal_s << (o.result.aborted ? " (aborted)" : "") << "\n";
  }
  return cache[name] = s;
}

const cli::Corpora& default_corpora() {
  static const cli::Corpora c = cli::build_corpora(default_config());
  return c;
}

double mean_latency(const Sweep& s) {
  double m = 0.0;
  for (const auto& r : s.runs) m += r.mean_laal_s;
  return m / static_cast<double>(s.runs.size());
}

// 7. Hierarchical-sent beats normalize on quality at comparable latency.
Outcome table_ordering() {
  const auto t0 = Clock::now();
  const auto base = default_config();
  const auto& h = sweep("hierarchical-sent", with_ablation_value(base, "variant", "hierarchical-sent"), default_corpora());
  const auto& n = sweep("normalize", with_ablation_value(base, "variant", "normalize"), default_corpora());
  int better = 0;
  for (std::size_t i = 0; i < h.runs.size(); ++i) better += h.runs[i].mean_q > n.runs[i].mean_q;
  const double lh = mean_latency(h), ln = mean_latency(n);
  const bool latency_ok = lh <= 1.10 * ln;
  return {better >= 4 && latency_ok,
          "quality higher in " + std::to_string(better) + "/" + std::to_string(h.runs.size()) + " seeds, latency " +
              fmt("%.3f", lh) + " s vs " + fmt("%.3f s", ln) + " (" + fmt("%+.1f%%", 100.0 * (lh / ln - 1.0)) + "), " +
              fmt("%.0f s", seconds_since(t0))};
}

// 8. Threshold and latency-weight sensitivity.
Outcome sensitivity() {
  const auto t0 = Clock::now();
  const auto base = with_ablation_value(default_config(), "variant", "hierarchical-sent");
  const auto& h = sweep("hierarchical-sent", base, default_corpora());
  const auto& strict = sweep("q_thres=-3", with_ablation_value(base, "q_thres", "-3"), default_corpora());
  const auto& heavy = sweep("lambda=1.0", with_ablation_value(base, "lambda", "1.0"), default_corpora());
  int slower = 0, faster = 0;
  for (std::size_t i = 0; i < h.runs.size(); ++i) {
    slower += strict.runs[i].mean_laal_s > h.runs[i].mean_laal_s;
    faster += heavy.runs[i].mean_laal_s < h.runs[i].mean_laal_s && heavy.runs[i].mean_q <= h.runs[i].mean_q;
  }
  const auto n = std::to_string(h.runs.size());
  return {slower >= 4 && faster >= 4, "q_thres -5 -> -3 raised latency in " + std::to_string(slower) + "/" + n +
                                          " seeds; lambda 0.5 -> 1.0 lowered latency without raising quality in " +
                                          std::to_string(faster) + "/" + n + " seeds, " +
                                          fmt("%.0f s", seconds_since(t0))};
}

// 9. Planted over- and under-translations get (worst, 10 s) in both paths.
Outcome null_bookkeeping() {
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<int> letter(0, 25), digit(0, 9), nsent(2, 5), nword(3, 6);
  auto word = [&](bool junk) {
    std::string w;
    for (int i = 0; i < 5; ++i) w += junk ? static_cast<char>('0' + digit(rng)) : static_cast<char>('a' + letter(rng));
    return w;
  };
  auto sentence = [&](bool junk) {
    std::string s;
    for (int k = nword(rng); k > 0; --k) s += (s.empty() ? "" : " ") + word(junk);
    return s + ".";
  };
  std::vector<ReferenceDocument> refs;
  std::vector<Trajectory> hyps;
  std::vector<std::vector<std::string>> planted;  // expected kind per link
  for (int d = 0; d < 40; ++d) {
    const std::string id = "doc" + std::to_string(d);
    ReferenceDocument ref{id, {}};
    std::vector<std::string> hyp_sents, kinds;
    std::vector<int> chunks;
    const bool under = d % 2 == 0;
    const int n = nsent(rng);
    bool planted_one = false;
    for (int s = 0; s < n; ++s) {
      const auto text = sentence(false);
      ref.sentences.push_back({text, text, 3.0 * s, 3.0 * s + 2.5});
      const bool drop = under && s > 0 && rng() % 2 == 0;
      if (drop || (under && !planted_one && s == n - 1)) {
        kinds.push_back("under");
        planted_one = true;
        continue;
      }
      hyp_sents.push_back(text);
      chunks.push_back(3 * s + 3);
      kinds.push_back("match");
      if (!under && (rng() % 2 == 0 || (!planted_one && s == n - 1))) {
        hyp_sents.push_back(sentence(true));
        chunks.push_back(3 * s + 3);
        kinds.push_back("over");
        planted_one = true;
      }
    }
    refs.push_back(ref);
    hyps.push_back(fixture::streamed(id, hyp_sents, chunks, 3 * n + 1, 1.0));
    planted.push_back(kinds);
  }

  int expected = 0, eval_hits = 0, reward_hits = 0;
  for (const auto& kinds : planted) expected += static_cast<int>(std::count_if(kinds.begin(), kinds.end(), [](auto& k) { return k != "match"; }));

  const quality::ProxyScorer scorer;
  const auto report = cli::evaluate_corpus(hyps, refs, scorer);
  for (std::size_t d = 0; d < refs.size(); ++d) {
    const auto& links = report["documents"][d]["links"];
    if (links.size() != planted[d].size()) continue;
    for (std::size_t k = 0; k < links.size(); ++k)
      if (planted[d][k] != "match" && links[k]["kind"] == planted[d][k] && links[k]["quality"] == -25.0 &&
          links[k]["laal_s"] == 10.0)
        ++eval_hits;
  }

  reward::RewardConfig cfg;
  for (std::size_t d = 0; d < refs.size(); ++d) {
    const std::vector<Trajectory> group = {hyps[d], hyps[d]};
    const auto scored = reward::score_hypotheses(group, refs[d], scorer, cfg.l_max);
    const auto& links = scored[0].links;
    std::vector<std::vector<reward::LinkScore>> both = {scored[0].links, scored[1].links};
    const auto r = reward::rewards_from_scores(both, cfg, 1.0);
    if (links.size() != planted[d].size()) continue;
    for (std::size_t k = 0; k < links.size(); ++k) {
      const bool kind_ok = planted[d][k] == "over"    ? links[k].link.is_over_translation()
                           : planted[d][k] == "under" ? links[k].link.is_under_translation()
                                                      : false;
      if (kind_ok && links[k].quality == -25.0 && links[k].laal_s == 10.0 && r[0].per_link[k].quality == -25.0 &&
          r[0].per_link[k].latency_s == 10.0)
        ++reward_hits;
    }
  }
  return {expected > 0 && eval_hits == expected && reward_hits == expected,
          "evaluation " + std::to_string(eval_hits) + "/" + std::to_string(expected) + ", reward " +
              std::to_string(reward_hits) + "/" + std::to_string(expected) + " planted null links"};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(HPO_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 10. Rerunning from a manifest reproduces curves.jsonl byte for byte.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("hpo-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  RunConfig config = default_config();
  config.train.steps = 12;
  write_file(dir / "config.json", to_json(config).dump(2));
  const auto log = dir / "log.txt";
  bool ok = run_cli("train --config " + (dir / "config.json").string() + " --seed 11 --out " + (dir / "a").string(), log) == 0;
  ok = ok && run_cli("train --from-manifest " + (dir / "a/manifest.json").string() + " --out " + (dir / "b").string(), log) == 0;
  ok = ok && run_cli("train --from-manifest " + (dir / "a/manifest.json").string() + " --out " + (dir / "c").string(), log) == 0;
  std::string detail;
  bool same = false;
  if (ok) {
    const auto a = read_file(dir / "a/curves.jsonl"), b = read_file(dir / "b/curves.jsonl"),
               c = read_file(dir / "c/curves.jsonl");
    same = !a.empty() && a == b && b == c;
    detail = "3 runs, curves.jsonl " + std::string(same ? "identical" : "DIFFER") + " (" + std::to_string(a.size()) +
             " bytes, " + std::to_string(config.train.steps) + " steps)";
  } else {
    detail = "hpo train failed: " + read_file(log);
  }
  fs::remove_all(dir);
  return {ok && same, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"reward-equation fidelity", reward_fidelity},
      {"hierarchical dominance", hierarchical_dominance},
      {"LAAL oracle", laal_oracle},
      {"alignment optimality", alignment_optimality},
      {"GRPO gradient check", gradient_check},
      {"on-policy reduction", on_policy_reduction},
      {"directional variant ordering", table_ordering},
      {"directional hyperparameter sensitivity", sensitivity},
      {"null-penalty bookkeeping", null_bookkeeping},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << number << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
