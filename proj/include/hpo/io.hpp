#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpo/core.hpp"

namespace hpo {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Calls `fn(record, line_number)` for every non-blank line. Lines that are
/// not JSON objects raise ParseError with field "<record>".
void for_each_jsonl(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn);
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

// Field accessors that raise ParseError naming the line and field.
const Json& require_field(const Json& obj, const char* field, std::size_t line);
std::string require_string(const Json& obj, const char* field, std::size_t line);
double require_number(const Json& obj, const char* field, std::size_t line);
std::optional<double> optional_number(const Json& obj, const char* field, std::size_t line);

OrderedJson to_json(const Trajectory& trajectory);
OrderedJson to_json(const ReferenceDocument& document);
/// Parses a trajectory record and assigns delays from chunk positions.
Trajectory trajectory_from_json(const Json& record, std::size_t line);
ReferenceDocument reference_from_json(const Json& record, std::size_t line);

std::vector<Trajectory> read_trajectories(std::istream& in);
std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);
std::vector<ReferenceDocument> read_references(std::istream& in);
std::vector<ReferenceDocument> read_references(const std::filesystem::path& path);

void write_jsonl_line(std::ostream& out, const OrderedJson& record);
void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories);
void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajectories);
void write_references(std::ostream& out, std::span<const ReferenceDocument> documents);
void write_references(const std::filesystem::path& path, std::span<const ReferenceDocument> documents);

/// Whole-file helpers used by the CLI.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace hpo
