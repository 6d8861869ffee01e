#include "hpo/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "hpo/datasynth.hpp"
#include "hpo/error.hpp"
#include "hpo/latency.hpp"
#include "hpo/manifest.hpp"
#include "hpo/remote_scorer.hpp"
#include "hpo/reward.hpp"

namespace hpo::cli {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kEvalStreamSalt = 0x6576616c;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create directory " + dir.string() + ": " + ec.message());
}

OrderedJson theta_json(const simenv::Params& theta) {
  return std::vector<double>(theta.data(), theta.data() + simenv::kNumFeatures);
}

OrderedJson metrics_json(const simenv::PolicyMetrics& m) {
  OrderedJson out;
  out["mean_q"] = m.mean_q;
  out["mean_laal_s"] = m.mean_laal_s;
  return out;
}

std::string link_kind(const segalign::AlignmentLink& link) {
  if (link.is_over_translation()) return "over";
  if (link.is_under_translation()) return "under";
  return "match";
}

RunConfig resolve_config(const std::optional<fs::path>& path, const std::optional<std::string>& variant) {
  RunConfig config = path ? load_config(*path) : default_config();
  if (variant) {
    try {
      config.reward.variant = reward::parse_variant(*variant);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("--variant: ") + e.what());
    }
  }
  config.validate();
  return config;
}

void require_proxy(const std::string& scorer, const char* command) {
  if (scorer != "proxy")
    throw ConfigError(std::string(command) + ": the simulated environment is scored with --scorer proxy only");
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

}  // namespace

std::unique_ptr<quality::QualityScorer> make_scorer(const std::string& name) {
  if (name == "proxy") return std::make_unique<quality::ProxyScorer>();
  if (name == "remote") {
    const char* endpoint = std::getenv(quality::kScorerEndpointEnv);
    if (endpoint == nullptr || *endpoint == '\0')
      throw ConfigError(std::string("--scorer remote requires ") + quality::kScorerEndpointEnv);
    quality::RemoteScorerOptions options;
    options.endpoint = endpoint;
    return std::make_unique<quality::RemoteScorer>(options);
  }
  throw ConfigError("--scorer: expected proxy or remote, got '" + name + "'");
}

OrderedJson evaluate_corpus(const std::vector<Trajectory>& hypotheses,
                            const std::vector<ReferenceDocument>& references,
                            const quality::QualityScorer& scorer) {
  std::map<std::string, const Trajectory*> by_id;
  for (const auto& h : hypotheses) {
    if (!by_id.emplace(h.id, &h).second) throw DataError("duplicate hypothesis id '" + h.id + "'");
  }
  std::set<std::string> ref_ids;
  std::vector<std::string> missing_hyp;
  for (const auto& r : references) {
    if (!ref_ids.insert(r.id).second) throw DataError("duplicate reference id '" + r.id + "'");
    if (!by_id.count(r.id)) missing_hyp.push_back(r.id);
  }
  std::vector<std::string> missing_ref;
  for (const auto& h : hypotheses)
    if (!ref_ids.count(h.id)) missing_ref.push_back(h.id);
  if (!missing_hyp.empty() || !missing_ref.empty()) {
    std::string msg = "id mismatch between hypothesis and reference files";
    auto list = [](const std::vector<std::string>& ids) {
      std::string s;
      for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
      return s;
    };
    if (!missing_hyp.empty()) msg += "; no hypothesis for: " + list(missing_hyp);
    if (!missing_ref.empty()) msg += "; no reference for: " + list(missing_ref);
    throw DataError(msg);
  }

  OrderedJson docs = OrderedJson::array();
  double q_sum = 0.0;
  double l_sum = 0.0;
  int total_links = 0;
  int over = 0;
  int under = 0;
  for (const auto& ref : references) {
    const Trajectory& hyp = *by_id.at(ref.id);
    const Trajectory one[1] = {hyp};
    const auto scored = reward::score_hypotheses(one, ref, scorer, latency::kNullLinkPenaltyS).front();
    OrderedJson links = OrderedJson::array();
    double dq = 0.0;
    double dl = 0.0;
    int d_over = 0;
    int d_under = 0;
    for (const auto& l : scored.links) {
      OrderedJson lj;
      lj["hyp"] = l.link.hyp;
      lj["ref"] = l.link.ref;
      lj["kind"] = link_kind(l.link);
      lj["quality"] = l.quality;
      lj["laal_s"] = l.laal_s;
      links.push_back(std::move(lj));
      dq += l.quality;
      dl += l.laal_s;
      d_over += l.link.is_over_translation() ? 1 : 0;
      d_under += l.link.is_under_translation() ? 1 : 0;
    }
    const auto n = static_cast<double>(scored.links.size());
    OrderedJson d;
    d["id"] = ref.id;
    d["hyp_sentences"] = scored.sentences.size();
    d["ref_sentences"] = ref.sentences.size();
    d["quality"] = n > 0 ? dq / n : 0.0;
    d["stream_laal_s"] = n > 0 ? dl / n : 0.0;
    d["over_translations"] = d_over;
    d["under_translations"] = d_under;
    d["links"] = std::move(links);
    docs.push_back(std::move(d));
    q_sum += n > 0 ? dq / n : 0.0;
    l_sum += n > 0 ? dl / n : 0.0;
    total_links += static_cast<int>(scored.links.size());
    over += d_over;
    under += d_under;
  }
  const double nd = static_cast<double>(references.size());
  OrderedJson corpus;
  corpus["documents"] = references.size();
  corpus["links"] = total_links;
  corpus["quality_mean"] = references.empty() ? 0.0 : q_sum / nd;
  corpus["stream_laal_s_mean"] = references.empty() ? 0.0 : l_sum / nd;
  corpus["null_links"] = over + under;
  corpus["over_translations"] = over;
  corpus["under_translations"] = under;
  OrderedJson report;
  report["scale"] = {{"worst", scorer.scale().worst}, {"best", scorer.scale().best}, {"threshold", scorer.scale().threshold}};
  report["null_link_latency_s"] = latency::kNullLinkPenaltyS;
  report["corpus"] = std::move(corpus);
  report["documents"] = std::move(docs);
  return report;
}

Corpora build_corpora(const RunConfig& config) {
  Corpora c;
  c.train = simenv::make_corpus(config.corpus, config.corpus_seed);
  simenv::CorpusSpec spec = config.corpus;
  spec.num_docs = config.val_docs;
  spec.id_prefix = config.corpus.id_prefix + "-val";
  c.val = simenv::make_corpus(spec, simenv::mix_seed(config.corpus_seed, 1));
  spec.num_docs = config.eval_docs;
  spec.id_prefix = config.corpus.id_prefix + "-eval";
  c.eval = simenv::make_corpus(spec, simenv::mix_seed(config.corpus_seed, 2));
  return c;
}

RunOutcome run_training(const RunConfig& config, std::uint64_t seed, const Corpora& corpora,
                        const simenv::StepCallback& on_step) {
  RunOutcome out;
  out.seed = seed;
  out.result = simenv::train(corpora.train, corpora.val, config.reward, config.optimizer, config.train, seed, on_step);
  const std::uint64_t eval_seed = simenv::mix_seed(config.corpus_seed, kEvalStreamSalt);
  out.final_metrics = simenv::evaluate_policy(out.result.final_theta, corpora.eval, config.eval_rollouts, eval_seed,
                                              config.train.threads);
  out.best_metrics = simenv::evaluate_policy(out.result.best_theta, corpora.eval, config.eval_rollouts, eval_seed,
                                             config.train.threads);
  return out;
}

OrderedJson to_json(const simenv::StepRecord& r) {
  OrderedJson out;
  out["step"] = r.step;
  out["J"] = r.J;
  out["mean_q"] = r.mean_q;
  out["mean_laal_s"] = r.mean_laal_s;
  out["kl"] = r.kl;
  out["grad_norm"] = r.grad_norm;
  return out;
}

void cmd_eval(const EvalArgs& args, std::ostream& out) {
  const auto scorer = make_scorer(args.scorer);
  RunManifest manifest;
  manifest.command = "eval";
  manifest.started_at = utc_timestamp();
  manifest.config = {{"scorer", args.scorer}};
  const auto hyps = read_trajectories(args.hyp);
  const auto refs = read_references(args.ref);
  const auto report = evaluate_corpus(hyps, refs, *scorer);
  const std::string text = report.dump(2) + "\n";
  if (!args.out) {
    out << text;
    return;
  }
  ensure_dir(*args.out);
  write_file(*args.out / "report.json", text);
  manifest.add_input("hyp", args.hyp);
  manifest.add_input("ref", args.ref);
  manifest.finished_at = utc_timestamp();
  manifest.write(*args.out);
  out << "wrote " << (*args.out / "report.json").string() << "\n";
}

void cmd_train(const TrainArgs& args, std::ostream& log) {
  require_proxy(args.scorer, "train");
  RunManifest manifest;
  manifest.command = "train";
  RunConfig config;
  std::uint64_t seed = 1;
  if (args.from_manifest) {
    if (args.config || args.variant) throw ConfigError("--from-manifest cannot be combined with --config or --variant");
    const auto previous = RunManifest::read(*args.from_manifest);
    if (previous.command != "train") throw ConfigError("--from-manifest: manifest was written by '" + previous.command + "'");
    if (previous.seeds.size() != 1) throw ConfigError("--from-manifest: expected exactly one seed");
    config = parse_config(previous.config);
    seed = args.seed.value_or(previous.seeds.front());
    manifest.inputs = previous.inputs;
  } else {
    config = resolve_config(args.config, args.variant);
    seed = args.seed.value_or(1);
    if (args.config) manifest.add_input("config", *args.config);
  }
  manifest.config = Json::parse(to_json(config).dump());
  manifest.seeds = {seed};
  manifest.started_at = utc_timestamp();

  ensure_dir(args.out);
  ensure_dir(args.out / "checkpoints");
  const Corpora corpora = build_corpora(config);
  std::ofstream curves(args.out / "curves.jsonl", std::ios::trunc);
  if (!curves) throw RuntimeFailure("cannot write " + (args.out / "curves.jsonl").string());

  log << "training " << reward::to_string(config.reward.variant) << " seed " << seed << " for "
      << config.train.steps << " steps\n";
  const auto outcome = run_training(config, seed, corpora, [&](const simenv::StepRecord& r) {
    write_jsonl_line(curves, to_json(r));
    curves.flush();
    if (r.step % 10 == 0) log << "step " << r.step << " J " << r.J << " q " << r.mean_q << " laal " << r.mean_laal_s << "\n";
  });
  curves.close();

  const auto& res = outcome.result;
  {
    std::ofstream val(args.out / "validation.jsonl", std::ios::trunc);
    for (const auto& v : res.validation)
      write_jsonl_line(val, OrderedJson{{"step", v.step}, {"mean_q", v.mean_q}, {"mean_laal_s", v.mean_laal_s}});
  }
  const int completed = res.curve.empty() ? 0 : res.curve.back().step;
  write_file(args.out / "checkpoints" / "best.json",
             OrderedJson{{"step", res.best_step}, {"val_mean_q", res.best_val_q}, {"theta", theta_json(res.best_theta)}}.dump(2) + "\n");
  write_file(args.out / "checkpoints" / "final.json",
             OrderedJson{{"step", completed}, {"theta", theta_json(res.final_theta)}}.dump(2) + "\n");

  // Held-out corpus and one rollout per document of the final policy, in the
  // formats `hpo eval` reads.
  {
    std::ofstream refs(args.out / "eval_refs.jsonl", std::ios::trunc);
    std::ofstream hyps(args.out / "eval_rollouts.jsonl", std::ios::trunc);
    const std::uint64_t stream = simenv::mix_seed(config.corpus_seed, kEvalStreamSalt);
    for (const auto& src : corpora.eval) {
      write_jsonl_line(refs, to_json(src.reference()));
      const auto group = simenv::sample_group(res.final_theta, src, 1, stream);
      write_jsonl_line(hyps, to_json(group.front().trajectory));
    }
  }

  OrderedJson summary;
  summary["variant"] = std::string(reward::to_string(config.reward.variant));
  summary["seed"] = seed;
  summary["steps_completed"] = completed;
  summary["aborted"] = res.aborted;
  summary["abort_reason"] = res.abort_reason;
  summary["best_step"] = res.best_step;
  summary["best_val_q"] = res.best_val_q;
  summary["final"] = metrics_json(outcome.final_metrics);
  summary["best"] = metrics_json(outcome.best_metrics);
  write_file(args.out / "summary.json", summary.dump(2) + "\n");

  manifest.finished_at = utc_timestamp();
  manifest.write(args.out);
  log << "final policy: q " << outcome.final_metrics.mean_q << " laal " << outcome.final_metrics.mean_laal_s << " s\n";
  if (res.aborted) throw RuntimeFailure("training diverged at " + res.abort_reason + "; last valid checkpoint kept");
}

void cmd_synth(const SynthArgs& args, std::ostream& log) {
  if (!(args.chunk_s > 0.0)) throw ConfigError("--chunk-s must be positive");
  if (args.max_chunks < 1) throw ConfigError("--max-chunks must be >= 1");
  RunManifest manifest;
  manifest.command = "synth";
  manifest.config = {{"chunk_s", args.chunk_s}, {"max_chunks", args.max_chunks}};
  manifest.started_at = utc_timestamp();
  const auto inputs = datasynth::read_synthesis_inputs(args.input);
  std::vector<Trajectory> out;
  for (const auto& in : inputs) {
    auto segs = datasynth::synthesize_segments(in, args.chunk_s, args.max_chunks);
    out.insert(out.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
  }
  ensure_dir(args.out);
  write_trajectories(args.out / "trajectories.jsonl", out);
  manifest.add_input("input", args.input);
  manifest.finished_at = utc_timestamp();
  manifest.write(args.out);
  log << "synthesized " << out.size() << " trajectories from " << inputs.size() << " documents\n";
}

void cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& log) {
  require_proxy(args.scorer, "ablate");
  RunConfig config = resolve_config(args.config, args.variant);
  if (args.parameter) config.ablate.parameter = *args.parameter;
  if (!args.values.empty()) config.ablate.values = args.values;
  if (args.seed) {
    const auto n = config.ablate.seeds.size();
    config.ablate.seeds.clear();
    for (std::size_t i = 0; i < n; ++i) config.ablate.seeds.push_back(*args.seed + i);
  }
  config.validate();

  RunManifest manifest;
  manifest.command = "ablate";
  manifest.config = Json::parse(to_json(config).dump());
  manifest.seeds = config.ablate.seeds;
  manifest.started_at = utc_timestamp();
  if (args.config) manifest.add_input("config", *args.config);
  ensure_dir(args.out);

  const Corpora corpora = build_corpora(config);
  OrderedJson rows = OrderedJson::array();
  struct Row {
    std::string value;
    double q_mean, q_std, l_mean, l_std;
  };
  std::vector<Row> table;
  for (const auto& value : config.ablate.values) {
    const RunConfig cell = with_ablation_value(config, config.ablate.parameter, value);
    std::vector<double> qs;
    std::vector<double> ls;
    OrderedJson seeds = OrderedJson::array();
    for (const auto seed : config.ablate.seeds) {
      const auto o = run_training(cell, seed, corpora);
      qs.push_back(o.final_metrics.mean_q);
      ls.push_back(o.final_metrics.mean_laal_s);
      seeds.push_back({{"seed", seed}, {"mean_q", o.final_metrics.mean_q}, {"mean_laal_s", o.final_metrics.mean_laal_s},
                       {"aborted", o.result.aborted}});
      log << config.ablate.parameter << "=" << value << " seed " << seed << ": q " << o.final_metrics.mean_q << " laal "
          << o.final_metrics.mean_laal_s << "\n";
    }
    Row r{value, mean_of(qs), sample_std(qs), mean_of(ls), sample_std(ls)};
    rows.push_back({{"value", value}, {"mean_q", r.q_mean}, {"std_q", r.q_std}, {"mean_laal_s", r.l_mean},
                    {"std_laal_s", r.l_std}, {"seeds", std::move(seeds)}});
    table.push_back(r);
  }
  OrderedJson result;
  result["parameter"] = config.ablate.parameter;
  result["rows"] = std::move(rows);
  write_file(args.out / "ablation.json", result.dump(2) + "\n");

  std::size_t width = config.ablate.parameter.size();
  for (const auto& r : table) width = std::max(width, r.value.size());
  std::ostringstream text;
  text << std::left << std::setw(static_cast<int>(width)) << config.ablate.parameter << "  " << std::right
       << std::setw(18) << "quality" << "  " << std::setw(18) << "latency_s" << "\n";
  text << std::fixed << std::setprecision(3);
  for (const auto& r : table) {
    std::ostringstream q;
    std::ostringstream l;
    q << std::fixed << std::setprecision(3) << r.q_mean << " +- " << r.q_std;
    l << std::fixed << std::setprecision(3) << r.l_mean << " +- " << r.l_std;
    text << std::left << std::setw(static_cast<int>(width)) << r.value << "  " << std::right << std::setw(18) << q.str()
         << "  " << std::setw(18) << l.str() << "\n";
  }
  write_file(args.out / "ablation.txt", text.str());
  manifest.finished_at = utc_timestamp();
  manifest.write(args.out);
  out << text.str();
}

void cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& warn) {
  if (args.runs.empty()) throw ConfigError("report: at least one run directory required");
  OrderedJson series = OrderedJson::array();
  OrderedJson excluded = OrderedJson::array();
  for (const auto& run : args.runs) {
    const fs::path curves = run / "curves.jsonl";
    if (!fs::exists(curves)) throw DataError("run " + run.string() + ": missing curves.jsonl");
    OrderedJson points = OrderedJson::array();
    for_each_jsonl(curves, [&](const Json& r, std::size_t line) {
      points.push_back({{"step", require_field(r, "step", line).get<int>()},
                        {"latency_s", require_number(r, "mean_laal_s", line)},
                        {"quality", require_number(r, "mean_q", line)}});
    });
    if (points.empty()) {
      warn << "warning: run " << run.string() << " has no completed steps; excluded\n";
      excluded.push_back(run.string());
      continue;
    }
    std::string label = run.filename().string();
    if (label.empty()) label = run.parent_path().filename().string();
    if (fs::exists(run / kManifestFile)) {
      const auto m = RunManifest::read(run / kManifestFile);
      if (m.config.contains("reward") && !m.seeds.empty())
        label = m.config["reward"].value("variant", std::string("run")) + " seed " + std::to_string(m.seeds.front());
    }
    series.push_back({{"run", run.string()}, {"label", label}, {"points", std::move(points)}});
  }
  OrderedJson report;
  report["x"] = "latency_s";
  report["y"] = "quality";
  report["series"] = std::move(series);
  report["excluded"] = std::move(excluded);
  const std::string text = report.dump(2) + "\n";
  if (args.out) {
    ensure_dir(*args.out);
    write_file(*args.out / "report.json", text);
  } else {
    out << text;
  }
}

}  // namespace hpo::cli
