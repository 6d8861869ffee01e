#include "hpo/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "hpo/error.hpp"

namespace hpo {
namespace {

// Reads the keys of one section, recording problems instead of throwing.
class SectionReader {
 public:
  SectionReader(const Json& doc, std::string section, std::vector<std::string>& errors)
      : section_(std::move(section)), errors_(errors) {
    if (!doc.contains(section_)) return;
    const Json& s = doc.at(section_);
    if (!s.is_object()) {
      errors_.push_back(section_ + ": expected an object");
      return;
    }
    node_ = &s;
  }

  ~SectionReader() {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (!seen_.count(it.key())) errors_.push_back(section_ + "." + it.key() + ": unknown key");
  }

  void number(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else bad(key, "expected a number");
    }
  }
  void integer(const char* key, int& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_integer()) out = v->get<int>();
      else bad(key, "expected an integer");
    }
  }
  void seed(const char* key, std::uint64_t& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0)) out = v->get<std::uint64_t>();
      else bad(key, "expected a non-negative integer");
    }
  }
  void string(const char* key, const std::function<void(const std::string&)>& apply) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) {
        bad(key, "expected a string");
        return;
      }
      try {
        apply(v->get<std::string>());
      } catch (const ConfigError& e) {
        bad(key, e.what());
      }
    }
  }
  void optional_number(const char* key, std::optional<double>& out) {
    if (const Json* v = find(key)) {
      if (v->is_null()) out.reset();
      else if (v->is_number()) out = v->get<double>();
      else bad(key, "expected a number or null");
    }
  }
  const Json* raw(const char* key) { return find(key); }
  void bad(const char* key, const std::string& why) { errors_.push_back(section_ + "." + key + ": " + why); }

 private:
  const Json* find(const char* key) {
    seen_[key] = true;
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  std::string section_;
  std::vector<std::string>& errors_;
  const Json* node_ = nullptr;
  std::map<std::string, bool> seen_;
};

template <typename F>
void collect(std::vector<std::string>& errors, F&& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }
}

[[noreturn]] void raise(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError("expected a number, got '" + text + "'");
  return v;
}

}  // namespace

void RunConfig::validate() const {
  std::vector<std::string> errors;
  collect(errors, [&] { reward.validate(); });
  collect(errors, [&] { optimizer.validate(); });
  collect(errors, [&] { corpus.validate(); });
  if (val_docs < 1) errors.push_back("corpus.val_docs must be >= 1");
  if (eval_docs < 1) errors.push_back("corpus.eval_docs must be >= 1");
  if (eval_rollouts < 1) errors.push_back("train.eval_rollouts must be >= 1");
  if (train.steps < 0) errors.push_back("train.steps must be >= 0");
  if (train.sources_per_step < 1) errors.push_back("train.sources_per_step must be >= 1");
  if (train.group_size < 2) errors.push_back("train.group_size must be >= 2");
  if (train.val_every < 1) errors.push_back("train.val_every must be >= 1");
  if (train.val_rollouts < 1) errors.push_back("train.val_rollouts must be >= 1");
  if (train.threads < 1) errors.push_back("train.threads must be >= 1");
  if (!train.theta_init.allFinite()) errors.push_back("train.theta_init must be finite");
  if (ablate.parameter != "variant" && ablate.parameter != "q_thres" && ablate.parameter != "l_max" &&
      ablate.parameter != "lambda")
    errors.push_back("ablate.parameter: expected variant, q_thres, l_max or lambda");
  if (ablate.values.empty()) errors.push_back("ablate.values must not be empty");
  if (ablate.seeds.empty()) errors.push_back("ablate.seeds must not be empty");
  for (const auto& v : ablate.values) {
    collect(errors, [&] { with_ablation_value(*this, ablate.parameter, v).reward.validate(); });
  }
  if (!errors.empty()) raise(errors);
}

RunConfig default_config() {
  RunConfig c;
  c.corpus.num_docs = 32;
  c.corpus.min_sentence_tokens = 12;
  c.corpus.max_sentence_tokens = 20;
  c.corpus.min_word_s = 0.35;
  c.corpus.max_word_s = 0.75;
  c.corpus.max_info_lag = 4;
  c.corpus.anticipation = 2.0;
  c.corpus.error_rate = 0.04;
  c.train.steps = 100;
  return c;
}

RunConfig parse_config(const Json& doc) {
  RunConfig c = default_config();
  std::vector<std::string> errors;
  if (!doc.is_object()) raise({"top level: expected an object"});
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k != "reward" && k != "optimizer" && k != "corpus" && k != "train" && k != "ablate")
      errors.push_back(k + ": unknown section");
  }
  {
    SectionReader r(doc, "reward", errors);
    r.number("q_thres", c.reward.q_thres);
    r.number("l_max", c.reward.l_max);
    r.number("lambda", c.reward.lambda);
    r.string("variant", [&](const std::string& v) { c.reward.variant = reward::parse_variant(v); });
    r.number("norm_epsilon", c.reward.norm_epsilon);
    r.string("latency_norm_denominator", [&](const std::string& v) {
      c.reward.latency_norm_denominator = reward::parse_latency_norm_denominator(v);
    });
    r.optional_number("truncate_floor_s", c.reward.truncate_floor_s);
  }
  {
    SectionReader r(doc, "optimizer", errors);
    r.number("epsilon", c.optimizer.epsilon);
    r.number("beta", c.optimizer.beta);
    r.number("learning_rate", c.optimizer.learning_rate);
    r.number("grad_clip_norm", c.optimizer.grad_clip_norm);
    r.integer("minibatch_size", c.optimizer.minibatch_size);
    r.string("objective_mode", [&](const std::string& v) { c.optimizer.objective_mode = grpo::parse_objective_mode(v); });
    r.number("adam_beta1", c.optimizer.adam_beta1);
    r.number("adam_beta2", c.optimizer.adam_beta2);
    r.number("adam_epsilon", c.optimizer.adam_epsilon);
    r.number("weight_decay", c.optimizer.weight_decay);
  }
  {
    SectionReader r(doc, "corpus", errors);
    r.seed("seed", c.corpus_seed);
    r.integer("num_docs", c.corpus.num_docs);
    r.integer("val_docs", c.val_docs);
    r.integer("eval_docs", c.eval_docs);
    r.integer("sentences_per_doc", c.corpus.sentences_per_doc);
    r.integer("min_sentence_tokens", c.corpus.min_sentence_tokens);
    r.integer("max_sentence_tokens", c.corpus.max_sentence_tokens);
    r.number("min_word_s", c.corpus.min_word_s);
    r.number("max_word_s", c.corpus.max_word_s);
    r.number("pause_s", c.corpus.pause_s);
    r.integer("min_info_lag", c.corpus.min_info_lag);
    r.integer("max_info_lag", c.corpus.max_info_lag);
    r.number("unbounded_lag_prob", c.corpus.unbounded_lag_prob);
    r.number("anticipation", c.corpus.anticipation);
    r.number("error_rate", c.corpus.error_rate);
    r.number("chunk_duration_s", c.corpus.chunk_duration_s);
  }
  {
    SectionReader r(doc, "train", errors);
    r.integer("steps", c.train.steps);
    r.integer("sources_per_step", c.train.sources_per_step);
    r.integer("group_size", c.train.group_size);
    r.integer("val_every", c.train.val_every);
    r.integer("val_rollouts", c.train.val_rollouts);
    r.integer("eval_rollouts", c.eval_rollouts);
    r.integer("threads", c.train.threads);
    if (const Json* v = r.raw("theta_init")) {
      if (!v->is_array() || v->size() != static_cast<std::size_t>(simenv::kNumFeatures)) {
        r.bad("theta_init", "expected an array of 6 numbers");
      } else {
        for (std::size_t i = 0; i < v->size(); ++i) {
          if (!(*v)[i].is_number()) {
            r.bad("theta_init", "expected an array of 6 numbers");
            break;
          }
          c.train.theta_init(static_cast<Eigen::Index>(i)) = (*v)[i].get<double>();
        }
      }
    }
  }
  {
    SectionReader r(doc, "ablate", errors);
    if (const Json* v = r.raw("parameter")) {
      if (v->is_string()) c.ablate.parameter = v->get<std::string>();
      else r.bad("parameter", "expected a string");
    }
    if (const Json* v = r.raw("values")) {
      c.ablate.values.clear();
      if (!v->is_array()) r.bad("values", "expected an array");
      else
        for (const auto& x : *v) {
          if (x.is_string()) c.ablate.values.push_back(x.get<std::string>());
          else if (x.is_number()) c.ablate.values.push_back(x.dump());
          else r.bad("values", "expected strings or numbers");
        }
    }
    if (const Json* v = r.raw("seeds")) {
      c.ablate.seeds.clear();
      if (!v->is_array()) r.bad("seeds", "expected an array of non-negative integers");
      else
        for (const auto& x : *v) {
          if (x.is_number_integer() && x.get<long long>() >= 0) c.ablate.seeds.push_back(x.get<std::uint64_t>());
          else r.bad("seeds", "expected an array of non-negative integers");
        }
    }
  }
  if (!errors.empty()) raise(errors);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(doc);
}

OrderedJson to_json(const RunConfig& c) {
  OrderedJson out;
  auto& r = out["reward"];
  r["q_thres"] = c.reward.q_thres;
  r["l_max"] = c.reward.l_max;
  r["lambda"] = c.reward.lambda;
  r["variant"] = std::string(reward::to_string(c.reward.variant));
  r["norm_epsilon"] = c.reward.norm_epsilon;
  r["latency_norm_denominator"] = std::string(reward::to_string(c.reward.latency_norm_denominator));
  r["truncate_floor_s"] = c.reward.truncate_floor_s ? OrderedJson(*c.reward.truncate_floor_s) : OrderedJson();
  auto& o = out["optimizer"];
  o["epsilon"] = c.optimizer.epsilon;
  o["beta"] = c.optimizer.beta;
  o["learning_rate"] = c.optimizer.learning_rate;
  o["grad_clip_norm"] = c.optimizer.grad_clip_norm;
  o["minibatch_size"] = c.optimizer.minibatch_size;
  o["objective_mode"] = std::string(grpo::to_string(c.optimizer.objective_mode));
  o["adam_beta1"] = c.optimizer.adam_beta1;
  o["adam_beta2"] = c.optimizer.adam_beta2;
  o["adam_epsilon"] = c.optimizer.adam_epsilon;
  o["weight_decay"] = c.optimizer.weight_decay;
  auto& k = out["corpus"];
  k["seed"] = c.corpus_seed;
  k["num_docs"] = c.corpus.num_docs;
  k["val_docs"] = c.val_docs;
  k["eval_docs"] = c.eval_docs;
  k["sentences_per_doc"] = c.corpus.sentences_per_doc;
  k["min_sentence_tokens"] = c.corpus.min_sentence_tokens;
  k["max_sentence_tokens"] = c.corpus.max_sentence_tokens;
  k["min_word_s"] = c.corpus.min_word_s;
  k["max_word_s"] = c.corpus.max_word_s;
  k["pause_s"] = c.corpus.pause_s;
  k["min_info_lag"] = c.corpus.min_info_lag;
  k["max_info_lag"] = c.corpus.max_info_lag;
  k["unbounded_lag_prob"] = c.corpus.unbounded_lag_prob;
  k["anticipation"] = c.corpus.anticipation;
  k["error_rate"] = c.corpus.error_rate;
  k["chunk_duration_s"] = c.corpus.chunk_duration_s;
  auto& t = out["train"];
  t["steps"] = c.train.steps;
  t["sources_per_step"] = c.train.sources_per_step;
  t["group_size"] = c.train.group_size;
  t["val_every"] = c.train.val_every;
  t["val_rollouts"] = c.train.val_rollouts;
  t["eval_rollouts"] = c.eval_rollouts;
  t["threads"] = c.train.threads;
  t["theta_init"] = std::vector<double>(c.train.theta_init.data(), c.train.theta_init.data() + simenv::kNumFeatures);
  auto& a = out["ablate"];
  a["parameter"] = c.ablate.parameter;
  a["values"] = c.ablate.values;
  a["seeds"] = c.ablate.seeds;
  return out;
}

RunConfig with_ablation_value(RunConfig config, const std::string& parameter, const std::string& value) {
  try {
    if (parameter == "variant") config.reward.variant = reward::parse_variant(value);
    else if (parameter == "q_thres") config.reward.q_thres = parse_double(value);
    else if (parameter == "l_max") config.reward.l_max = parse_double(value);
    else if (parameter == "lambda") config.reward.lambda = parse_double(value);
    else throw ConfigError("expected variant, q_thres, l_max or lambda");
  } catch (const ConfigError& e) {
    throw ConfigError("ablate." + parameter + " value '" + value + "': " + e.what());
  }
  return config;
}

}  // namespace hpo
