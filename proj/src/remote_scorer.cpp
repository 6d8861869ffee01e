#include "hpo/remote_scorer.hpp"

#include <deque>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hpo/error.hpp"

namespace hpo::quality {
namespace {

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool retriable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

RemoteScorer::RemoteScorer(RemoteScorerOptions options) : options_(std::move(options)) {
  options_.scale.validate();
  const auto& url = options_.endpoint;
  const auto scheme = url.find("://");
  if (url.empty() || scheme == std::string::npos)
    throw ConfigError("scorer endpoint must be a URL like http://host:port/path, got '" + url + "'");
  const auto path_start = url.find('/', scheme + 3);
  base_url_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (options_.retries < 0) throw ConfigError("scorer retries must be >= 0");
  if (options_.max_in_flight < 1) throw ConfigError("scorer max_in_flight must be >= 1");
}

std::vector<double> RemoteScorer::score(std::span<const ScoreItem> batch) const {
  return send(batch, "req-" + std::to_string(next_request_.fetch_add(1)));
}

std::vector<std::vector<double>> RemoteScorer::score_batches(
    std::span<const std::vector<ScoreItem>> batches) const {
  std::vector<std::vector<double>> results(batches.size());
  std::deque<std::pair<std::size_t, std::future<std::vector<double>>>> in_flight;
  auto drain_one = [&] {
    auto& [index, fut] = in_flight.front();
    results[index] = fut.get();
    in_flight.pop_front();
  };
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (static_cast<int>(in_flight.size()) >= options_.max_in_flight) drain_one();
    const std::string id = "req-" + std::to_string(next_request_.fetch_add(1));
    in_flight.emplace_back(i, std::async(std::launch::async, [this, &batches, i, id] {
                             return send(batches[i], id);
                           }));
  }
  while (!in_flight.empty()) drain_one();
  return results;
}

std::vector<double> RemoteScorer::send(std::span<const ScoreItem> batch, const std::string& request_id) const {
  if (batch.empty()) return {};
  nlohmann::ordered_json request;
  request["id"] = request_id;
  request["items"] = nlohmann::ordered_json::array();
  for (const auto& item : batch)
    request["items"].push_back({{"hyp", item.hyp}, {"ref", item.ref}, {"src", item.src}});
  request["scale"] = {{"worst", options_.scale.worst}, {"best", options_.scale.best}};
  const std::string body = request.dump();

  httplib::Client client(base_url_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.initial_backoff * (1 << (attempt - 1)));
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (retriable_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProtocolError("scorer answered HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));

    nlohmann::json response;
    try {
      response = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError("scorer response is not JSON: " + excerpt(res->body));
    }
    if (!response.is_object() || !response.contains("id") || response["id"] != request_id)
      throw ProtocolError("scorer response id does not match request " + request_id + ": " + excerpt(res->body));
    if (!response.contains("scores") || !response["scores"].is_array())
      throw ProtocolError("scorer response lacks a 'scores' array: " + excerpt(res->body));
    const auto& scores = response["scores"];
    if (scores.size() != batch.size())
      throw ProtocolError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(batch.size()) + " items: " + excerpt(res->body));
    std::vector<double> out;
    out.reserve(scores.size());
    for (const auto& s : scores) {
      if (!s.is_number()) throw ProtocolError("non-numeric score in response: " + excerpt(res->body));
      out.push_back(options_.scale.clamp(s.get<double>()));
    }
    return out;
  }
  throw RetriableError("scorer at " + options_.endpoint + " unavailable after " +
                           std::to_string(options_.retries) + " retries: " + last_error,
                       options_.retries + 1);
}

}  // namespace hpo::quality
