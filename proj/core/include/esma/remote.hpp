#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "esma/types.hpp"

namespace esma::remote {

enum class PromptKind { direct, meta, direct_idk };

std::string_view to_string(PromptKind k);

inline constexpr std::string_view kQuestionPlaceholder = "{question}";

class PromptTemplate {
 public:
  /// Throws Error(config) unless `text` contains the placeholder exactly once.
  PromptTemplate(PromptKind kind, std::string text);

  /// English templates used for every remote evaluation.
  static const PromptTemplate& builtin(PromptKind kind);

  PromptKind kind() const noexcept { return kind_; }
  const std::string& text() const noexcept { return text_; }

  /// Substitutes the question verbatim; the question itself is never scanned
  /// for placeholders.
  std::string render(std::string_view question) const;

 private:
  PromptKind kind_;
  std::string text_;
  std::size_t placeholder_pos_;
};

/// 1 iff some normalized alias occurs as a contiguous token run of the
/// normalized response.
bool grade_answer(std::string_view response, std::span<const std::string> aliases);

/// First alphabetic token decides ("yes"/"no"); otherwise the response must
/// mention exactly one of the two words as a standalone token.
MetaAnswer parse_meta(std::string_view response);

struct IdkParse {
  bool abstained = false;
  std::string text;
};

/// Abstained iff the normalized response contains "i dont know".
IdkParse parse_idk(std::string_view response);

struct EndpointConfig {
  /// e.g. "https://api.openai.com/v1"; "/chat/completions" is appended.
  std::string base_url;
  std::string model;
  /// Name of the environment variable holding the bearer token (may be empty).
  std::string token_env;
  double temperature = 0.0;
  std::size_t max_concurrent = 4;
  double timeout_seconds = 60.0;
  std::filesystem::path cache_dir = ".esma-cache";
  /// Ask for top log-probabilities on meta requests to derive confidence D.
  bool request_logprobs = false;
  std::size_t max_attempts = 3;
  double backoff_seconds = 0.5;
  /// Shared request-start rate limit; 0 disables.
  double requests_per_second = 0.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const EndpointConfig& c);
/// Missing keys keep the values already in `c`.
void merge_from_json(const nlohmann::json& j, EndpointConfig& c);

/// Request body: {model, messages:[{role:"user", content}], temperature}
/// plus logprobs/top_logprobs when asked for.
nlohmann::json build_request(const EndpointConfig& cfg, std::string_view prompt, bool with_logprobs);

struct ChatReply {
  std::string content;
  std::optional<double> yes_logprob;
  std::optional<double> no_logprob;
};

/// Reads choices[0].message.content and, when present, the first token's
/// top log-probabilities for "Yes"/"No". Throws Error(protocol) on a reply
/// that does not follow the chat-completions schema.
ChatReply parse_reply(const nlohmann::json& body);

/// One JSON file per request digest: {request, response, timestamp}.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  /// SHA-256 of the canonical request body (model, prompt, temperature, logprob flags).
  static std::string key(const nlohmann::json& request);

  std::optional<nlohmann::json> load(const std::string& key) const;
  void store(const std::string& key, const nlohmann::json& request, const nlohmann::json& response) const;

 private:
  std::filesystem::path dir_;
};

enum class Protocol { dual, idk, both };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view s);

struct RemoteEvalResult {
  /// Dataset order; failed items are absent. For Protocol::idk the dual
  /// fields hold the IDK mapping (correct = answered correctly, meta = No iff
  /// abstained).
  std::vector<EvalRecord> records;
  std::vector<std::string> failed_ids;
  std::size_t network_requests = 0;
  std::size_t cache_hits = 0;
  std::size_t max_in_flight = 0;
};

/// Runs the selected protocols, one independent single-turn request per
/// prompt kind and item, with at most max_concurrent requests in flight.
/// Cached exchanges are replayed without touching the network.
RemoteEvalResult evaluate_remote(const EndpointConfig& cfg, const Dataset& data, Protocol protocol);

}  // namespace esma::remote
