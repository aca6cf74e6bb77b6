#pragma once

#include <chrono>
#include <regex>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ccl/protocol.hpp"
#include "ccl/retriever.hpp"

namespace ccl {

struct RemoteRetrieverConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8000/v1/chat/completions
  std::string model = "Qwen2.5-7B-Instruct";
  double temperature = 0.7;
  int timeout_ms = 30000;
  int max_retries = 3;
  int backoff_ms = 200;  // first retry delay; doubles per attempt
  int max_in_flight = 8;
  std::string prompt_template = "fact-lookup-v1";

  void validate() const {
    if (endpoint.empty()) throw std::invalid_argument("remote retriever requires an endpoint");
    if (temperature < 0) throw std::invalid_argument("temperature must be >= 0");
    if (timeout_ms <= 0) throw std::invalid_argument("timeout must be positive");
    if (max_retries < 0) throw std::invalid_argument("max retries must be >= 0");
    if (max_in_flight <= 0) throw std::invalid_argument("in-flight cap must be positive");
    if (prompt_template != "fact-lookup-v1")
      throw std::invalid_argument("unknown prompt template '" + prompt_template + "'");
  }
};

/// Chat-completion client speaking the fact-lookup protocol over JSON/HTTP.
///
/// Transport failures, HTTP 429 and 5xx are retried with exponential backoff; other
/// HTTP errors and malformed bodies become BackendError immediately. Replies are
/// interpreted by parse_llm_reply, so "idk" surfaces as Rejected.
class RemoteRetriever : public Retriever {
 public:
  explicit RemoteRetriever(RemoteRetrieverConfig config)
      : config_(std::move(config)), slots_((config_.validate(), config_.max_in_flight)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url))
      throw std::invalid_argument("endpoint must be an http(s) URL: " + config_.endpoint);
    origin_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
  }

  RetrieveResponse retrieve(const RetrieveRequest& request) override {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};
    return retrieve_unbounded(request);
  }

  bool concurrent_safe() const override { return true; }

  nlohmann::json request_body(const RetrieveRequest& request) const {
    auto messages = nlohmann::json::array();
    for (const auto& m : build_rejection_prompt(request))
      messages.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", config_.model}, {"temperature", config_.temperature}, {"messages", messages}};
  }

  const RemoteRetrieverConfig& config() const { return config_; }

 private:
  RetrieveResponse retrieve_unbounded(const RetrieveRequest& request) {
    const std::string body = request_body(request).dump();
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms) * (1 << (attempt - 1)));
      httplib::Client client(origin_);
      auto timeout = std::chrono::milliseconds(config_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      auto res = client.Post(path_, body, "application/json");
      if (!res) {
        last_error = "transport: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) return RetrieveResponse::error("HTTP " + std::to_string(res->status));
      return interpret(res->body, request.kind);
    }
    return RetrieveResponse::error("retries exhausted: " + last_error);
  }

  static RetrieveResponse interpret(const std::string& body, ValueKind kind) {
    auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) return RetrieveResponse::error("malformed response body");
    const nlohmann::json* content = nullptr;
    if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
      const auto& choice = doc["choices"][0];
      if (choice.contains("message") && choice["message"].contains("content"))
        content = &choice["message"]["content"];
    }
    if (!content || !content->is_string()) return RetrieveResponse::error("response lacks message content");
    return parse_llm_reply(content->get<std::string>(), kind);
  }

  RemoteRetrieverConfig config_;
  std::counting_semaphore<> slots_;
  std::string origin_;
  std::string path_;
};

}  // namespace ccl
