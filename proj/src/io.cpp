#include "hpo/io.hpp"

#include <fstream>
#include <sstream>

#include "hpo/error.hpp"

namespace hpo {

void for_each_jsonl(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(number, "<record>", std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(number, "<record>", "expected a JSON object");
    fn(record, number);
  }
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  for_each_jsonl(in, fn);
}

const Json& require_field(const Json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(line, field, "missing");
  return *it;
}

std::string require_string(const Json& obj, const char* field, std::size_t line) {
  const Json& v = require_field(obj, field, line);
  if (!v.is_string()) throw ParseError(line, field, "expected a string");
  return v.get<std::string>();
}

double require_number(const Json& obj, const char* field, std::size_t line) {
  const Json& v = require_field(obj, field, line);
  if (!v.is_number()) throw ParseError(line, field, "expected a number");
  return v.get<double>();
}

std::optional<double> optional_number(const Json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(line, field, "expected a number");
  return it->get<double>();
}

OrderedJson to_json(const Trajectory& trajectory) {
  OrderedJson emissions = OrderedJson::array();
  for (const auto& emission : trajectory.emissions) {
    OrderedJson chunk = OrderedJson::array();
    for (const auto& tok : emission) {
      OrderedJson t;
      t["text"] = tok.text;
      if (tok.logp_theta) t["logp_theta"] = *tok.logp_theta;
      if (tok.logp_old) t["logp_old"] = *tok.logp_old;
      if (tok.logp_ref) t["logp_ref"] = *tok.logp_ref;
      chunk.push_back(std::move(t));
    }
    emissions.push_back(std::move(chunk));
  }
  OrderedJson out;
  out["id"] = trajectory.id;
  out["chunk_duration_s"] = trajectory.timeline.chunk_duration_s;
  out["total_duration_s"] = trajectory.timeline.total_duration_s;
  out["emissions"] = std::move(emissions);
  return out;
}

OrderedJson to_json(const ReferenceDocument& document) {
  OrderedJson sentences = OrderedJson::array();
  for (const auto& s : document.sentences) {
    OrderedJson j;
    j["transcript"] = s.transcript;
    j["reference"] = s.reference;
    j["start_s"] = s.start_s;
    j["end_s"] = s.end_s;
    sentences.push_back(std::move(j));
  }
  OrderedJson out;
  out["id"] = document.id;
  out["sentences"] = std::move(sentences);
  return out;
}

Trajectory trajectory_from_json(const Json& record, std::size_t line) {
  Trajectory t;
  t.id = require_string(record, "id", line);
  const double c = require_number(record, "chunk_duration_s", line);
  if (!(c > 0.0)) throw ParseError(line, "chunk_duration_s", "must be positive");
  const Json& emissions = require_field(record, "emissions", line);
  if (!emissions.is_array()) throw ParseError(line, "emissions", "expected an array of chunks");
  if (emissions.empty()) throw ParseError(line, "emissions", "at least one chunk is required");
  for (const auto& chunk : emissions) {
    if (!chunk.is_array()) throw ParseError(line, "emissions", "each chunk must be an array");
    Emission emission;
    for (const auto& tok : chunk) {
      if (!tok.is_object()) throw ParseError(line, "emissions", "each token must be an object");
      EmittedToken et;
      et.text = require_string(tok, "text", line);
      et.logp_theta = optional_number(tok, "logp_theta", line);
      et.logp_old = optional_number(tok, "logp_old", line);
      et.logp_ref = optional_number(tok, "logp_ref", line);
      emission.push_back(std::move(et));
    }
    t.emissions.push_back(std::move(emission));
  }
  const int n = static_cast<int>(t.emissions.size());
  t.timeline = ChunkTimeline::from_chunks(n, c);
  if (auto total = optional_number(record, "total_duration_s", line)) t.timeline.total_duration_s = *total;
  try {
    t = assign_delays(std::move(t));
    t.validate();
  } catch (const StructuralError& e) {
    throw ParseError(line, "emissions", e.what());
  }
  return t;
}

ReferenceDocument reference_from_json(const Json& record, std::size_t line) {
  ReferenceDocument doc;
  doc.id = require_string(record, "id", line);
  const Json& sentences = require_field(record, "sentences", line);
  if (!sentences.is_array()) throw ParseError(line, "sentences", "expected an array");
  for (const auto& s : sentences) {
    if (!s.is_object()) throw ParseError(line, "sentences", "each sentence must be an object");
    ReferenceSentence rs;
    rs.transcript = require_string(s, "transcript", line);
    rs.reference = require_string(s, "reference", line);
    rs.start_s = require_number(s, "start_s", line);
    rs.end_s = require_number(s, "end_s", line);
    doc.sentences.push_back(std::move(rs));
  }
  try {
    doc.validate();
  } catch (const StructuralError& e) {
    throw ParseError(line, "sentences", e.what());
  }
  return doc;
}

std::vector<Trajectory> read_trajectories(std::istream& in) {
  std::vector<Trajectory> out;
  for_each_jsonl(in, [&](const Json& r, std::size_t line) { out.push_back(trajectory_from_json(r, line)); });
  return out;
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
  std::vector<Trajectory> out;
  for_each_jsonl(path, [&](const Json& r, std::size_t line) { out.push_back(trajectory_from_json(r, line)); });
  return out;
}

std::vector<ReferenceDocument> read_references(std::istream& in) {
  std::vector<ReferenceDocument> out;
  for_each_jsonl(in, [&](const Json& r, std::size_t line) { out.push_back(reference_from_json(r, line)); });
  return out;
}

std::vector<ReferenceDocument> read_references(const std::filesystem::path& path) {
  std::vector<ReferenceDocument> out;
  for_each_jsonl(path, [&](const Json& r, std::size_t line) { out.push_back(reference_from_json(r, line)); });
  return out;
}

void write_jsonl_line(std::ostream& out, const OrderedJson& record) {
  out << record.dump(-1, ' ', false, OrderedJson::error_handler_t::strict) << '\n';
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (const auto& t : trajectories) write_jsonl_line(out, to_json(t));
}

void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajectories) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_trajectories(out, trajectories);
}

void write_references(std::ostream& out, std::span<const ReferenceDocument> documents) {
  for (const auto& d : documents) write_jsonl_line(out, to_json(d));
}

void write_references(const std::filesystem::path& path, std::span<const ReferenceDocument> documents) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_references(out, documents);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
}

}  // namespace hpo
