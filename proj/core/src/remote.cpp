#include "esma/remote.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "esma/digest.hpp"
#include "esma/error.hpp"
#include "esma/io.hpp"
#include "esma/parallel.hpp"
#include "esma/sdt.hpp"
#include "esma/text.hpp"

namespace esma::remote {

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::direct: return "direct";
    case PromptKind::meta: return "meta";
    case PromptKind::direct_idk: return "direct_idk";
  }
  return "direct";
}

PromptTemplate::PromptTemplate(PromptKind kind, std::string text) : kind_(kind), text_(std::move(text)) {
  placeholder_pos_ = text_.find(kQuestionPlaceholder);
  if (placeholder_pos_ == std::string::npos) {
    throw Error(ErrorKind::config, "prompt template lacks the {question} placeholder");
  }
  if (text_.find(kQuestionPlaceholder, placeholder_pos_ + kQuestionPlaceholder.size()) != std::string::npos) {
    throw Error(ErrorKind::config, "prompt template contains {question} more than once");
  }
}

const PromptTemplate& PromptTemplate::builtin(PromptKind kind) {
  static const PromptTemplate direct(PromptKind::direct,
                                     "Answer the following question with keywords.\n"
                                     "Question: {question}");
  static const PromptTemplate meta(PromptKind::meta,
                                   "Do you know the answer to the following question? If you know and are sure "
                                   "about the answer, just return \"Yes\". If you don't know the answer or are "
                                   "uncertain, just return \"No\".\n"
                                   "Question: {question}");
  static const PromptTemplate idk(PromptKind::direct_idk,
                                  "Answer the following question with keywords. If you don't know the answer, "
                                  "just return \"I don't know\".\n"
                                  "Question: {question}");
  switch (kind) {
    case PromptKind::direct: return direct;
    case PromptKind::meta: return meta;
    case PromptKind::direct_idk: return idk;
  }
  return direct;
}

std::string PromptTemplate::render(std::string_view question) const {
  std::string out;
  out.reserve(text_.size() + question.size());
  out.append(text_, 0, placeholder_pos_);
  out.append(question);
  out.append(text_, placeholder_pos_ + kQuestionPlaceholder.size());
  return out;
}

bool grade_answer(std::string_view response, std::span<const std::string> aliases) {
  const auto tokens = normalized_tokens(response);
  return std::any_of(aliases.begin(), aliases.end(),
                     [&](const std::string& alias) { return contains_token_run(tokens, normalized_tokens(alias)); });
}

namespace {

std::vector<std::string> alphabetic_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      cur.push_back(static_cast<char>(c | 0x20));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace

MetaAnswer parse_meta(std::string_view response) {
  const auto tokens = alphabetic_tokens(response);
  if (tokens.empty()) return MetaAnswer::unparseable;
  if (tokens.front() == "yes") return MetaAnswer::yes;
  if (tokens.front() == "no") return MetaAnswer::no;
  const bool has_yes = std::find(tokens.begin(), tokens.end(), "yes") != tokens.end();
  const bool has_no = std::find(tokens.begin(), tokens.end(), "no") != tokens.end();
  if (has_yes == has_no) return MetaAnswer::unparseable;
  return has_yes ? MetaAnswer::yes : MetaAnswer::no;
}

IdkParse parse_idk(std::string_view response) {
  // Typographic apostrophes (U+2018/U+2019) read as ASCII ones.
  std::string text(response);
  for (std::string_view curly : {"\xE2\x80\x98", "\xE2\x80\x99"}) {
    for (auto pos = text.find(curly); pos != std::string::npos; pos = text.find(curly, pos)) {
      text.replace(pos, curly.size(), "'");
    }
  }
  static const std::vector<std::string> kPhrase{"i", "dont", "know"};
  return {contains_token_run(normalized_tokens(text), kPhrase), std::string(response)};
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw Error(ErrorKind::config, "endpoint.base_url is required");
  if (model.empty()) throw Error(ErrorKind::config, "endpoint.model is required");
  if (max_concurrent < 1) throw Error(ErrorKind::config, "endpoint.max_concurrent must be >= 1");
  if (max_attempts < 1) throw Error(ErrorKind::config, "endpoint.max_attempts must be >= 1");
  if (!(timeout_seconds > 0.0)) throw Error(ErrorKind::config, "endpoint.timeout_seconds must be > 0");
  if (!(backoff_seconds >= 0.0)) throw Error(ErrorKind::config, "endpoint.backoff_seconds must be >= 0");
  if (!(requests_per_second >= 0.0)) throw Error(ErrorKind::config, "endpoint.requests_per_second must be >= 0");
}

void to_json(nlohmann::json& j, const EndpointConfig& c) {
  j = nlohmann::json{{"base_url", c.base_url},
                     {"model", c.model},
                     {"token_env", c.token_env},
                     {"temperature", c.temperature},
                     {"max_concurrent", c.max_concurrent},
                     {"timeout_seconds", c.timeout_seconds},
                     {"cache_dir", c.cache_dir.string()},
                     {"request_logprobs", c.request_logprobs},
                     {"max_attempts", c.max_attempts},
                     {"backoff_seconds", c.backoff_seconds},
                     {"requests_per_second", c.requests_per_second}};
}

void merge_from_json(const nlohmann::json& j, EndpointConfig& c) {
  if (j.contains("base_url")) c.base_url = j["base_url"].get<std::string>();
  if (j.contains("model")) c.model = j["model"].get<std::string>();
  if (j.contains("token_env")) c.token_env = j["token_env"].get<std::string>();
  if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
  if (j.contains("max_concurrent")) c.max_concurrent = j["max_concurrent"].get<std::size_t>();
  if (j.contains("timeout_seconds")) c.timeout_seconds = j["timeout_seconds"].get<double>();
  if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
  if (j.contains("request_logprobs")) c.request_logprobs = j["request_logprobs"].get<bool>();
  if (j.contains("max_attempts")) c.max_attempts = j["max_attempts"].get<std::size_t>();
  if (j.contains("backoff_seconds")) c.backoff_seconds = j["backoff_seconds"].get<double>();
  if (j.contains("requests_per_second")) c.requests_per_second = j["requests_per_second"].get<double>();
}

nlohmann::json build_request(const EndpointConfig& cfg, std::string_view prompt, bool with_logprobs) {
  nlohmann::json req{{"model", cfg.model},
                     {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
                     {"temperature", cfg.temperature}};
  if (with_logprobs) {
    req["logprobs"] = true;
    req["top_logprobs"] = 20;
  }
  return req;
}

ChatReply parse_reply(const nlohmann::json& body) {
  try {
    const auto& choice = body.at("choices").at(0);
    ChatReply reply;
    const auto& content = choice.at("message").at("content");
    reply.content = content.is_null() ? std::string() : content.get<std::string>();

    auto lp = choice.find("logprobs");
    if (lp != choice.end() && lp->is_object() && lp->contains("content") && (*lp)["content"].is_array() &&
        !(*lp)["content"].empty()) {
      const auto& first = (*lp)["content"][0];
      if (first.contains("top_logprobs") && first["top_logprobs"].is_array()) {
        for (const auto& cand : first["top_logprobs"]) {
          const std::string token = normalize_answer(cand.at("token").get<std::string>());
          const double value = cand.at("logprob").get<double>();
          if (token == "yes" && !reply.yes_logprob) reply.yes_logprob = value;
          if (token == "no" && !reply.no_logprob) reply.no_logprob = value;
        }
      }
    }
    return reply;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::protocol, std::string("malformed chat-completions reply: ") + e.what());
  }
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ResponseCache::key(const nlohmann::json& request) { return sha256_hex(request.dump()); }

std::optional<nlohmann::json> ResponseCache::load(const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    auto entry = nlohmann::json::parse(io::read_file(path));
    return entry.at("response");
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // unreadable entries are refetched and overwritten
  }
}

void ResponseCache::store(const std::string& key, const nlohmann::json& request,
                          const nlohmann::json& response) const {
  const nlohmann::json entry{{"request", request}, {"response", response}, {"timestamp", io::utc_timestamp()}};
  io::write_file_atomic(dir_ / (key + ".json"), entry.dump(2) + "\n");
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::dual: return "dual";
    case Protocol::idk: return "idk";
    case Protocol::both: return "both";
  }
  return "dual";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "dual") return Protocol::dual;
  if (s == "idk") return Protocol::idk;
  if (s == "both") return Protocol::both;
  throw Error(ErrorKind::config, "unknown protocol '" + std::string(s) + "' (expected dual|idk|both)");
}

namespace {

struct Url {
  std::string scheme_host_port;
  std::string path_prefix;
};

Url split_url(const std::string& base) {
  const auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::config, "endpoint.base_url needs a scheme: " + base);
  const auto path_start = base.find('/', scheme_end + 3);
  Url u;
  u.scheme_host_port = base.substr(0, path_start);
  u.path_prefix = path_start == std::string::npos ? "" : base.substr(path_start);
  while (!u.path_prefix.empty() && u.path_prefix.back() == '/') u.path_prefix.pop_back();
  return u;
}

/// Spaces request starts at least 1/rps apart across all workers.
class RateLimiter {
 public:
  explicit RateLimiter(double rps) : interval_(rps > 0.0 ? 1.0 / rps : 0.0) {}

  void acquire() {
    if (interval_ <= 0.0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double>(interval_));
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  double interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

class Transport {
 public:
  Transport(const EndpointConfig& cfg) : cfg_(cfg), url_(split_url(cfg.base_url)), limiter_(cfg.requests_per_second) {
    if (!cfg.token_env.empty()) {
      if (const char* token = std::getenv(cfg.token_env.c_str()); token != nullptr && *token != '\0') {
        token_ = token;
      }
    }
  }

  /// nullopt once every attempt has failed.
  std::optional<nlohmann::json> post(const nlohmann::json& request) {
    const std::string body = request.dump();
    const std::string path = url_.path_prefix + "/chat/completions";
    double backoff = cfg_.backoff_seconds;
    for (std::size_t attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        backoff *= 2.0;
      }
      limiter_.acquire();
      httplib::Client client(url_.scheme_host_port);
      const auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      httplib::Headers headers;
      if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

      requests_.fetch_add(1);
      const auto res = client.Post(path, headers, body, "application/json");
      if (!res || res->status != 200) continue;
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::protocol, std::string("endpoint returned invalid JSON: ") + e.what());
      }
    }
    return std::nullopt;
  }

  std::size_t requests() const { return requests_.load(); }

 private:
  const EndpointConfig& cfg_;
  Url url_;
  RateLimiter limiter_;
  std::string token_;
  std::atomic<std::size_t> requests_{0};
};

struct Job {
  std::size_t item = 0;
  PromptKind kind = PromptKind::direct;
};

}  // namespace

RemoteEvalResult evaluate_remote(const EndpointConfig& cfg, const Dataset& data, Protocol protocol) {
  cfg.validate();
  const bool dual = protocol != Protocol::idk;
  const bool idk = protocol != Protocol::dual;

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (dual) {
      jobs.push_back({i, PromptKind::direct});
      jobs.push_back({i, PromptKind::meta});
    }
    if (idk) jobs.push_back({i, PromptKind::direct_idk});
  }

  ResponseCache cache(cfg.cache_dir);
  Transport transport(cfg);
  std::vector<std::optional<ChatReply>> replies(jobs.size());
  std::atomic<std::size_t> hits{0}, in_flight{0}, max_in_flight{0};

  parallel_for(jobs.size(), cfg.max_concurrent, [&](std::size_t j) {
    const Job& job = jobs[j];
    const bool logprobs = cfg.request_logprobs && job.kind == PromptKind::meta;
    const auto request =
        build_request(cfg, PromptTemplate::builtin(job.kind).render(data.items[job.item].question), logprobs);
    const std::string key = ResponseCache::key(request);
    if (auto cached = cache.load(key)) {
      hits.fetch_add(1);
      replies[j] = parse_reply(*cached);
      return;
    }
    const std::size_t now = in_flight.fetch_add(1) + 1;
    for (std::size_t seen = max_in_flight.load(); now > seen && !max_in_flight.compare_exchange_weak(seen, now);) {
    }
    std::optional<nlohmann::json> body;
    try {
      body = transport.post(request);
    } catch (...) {
      in_flight.fetch_sub(1);
      throw;
    }
    in_flight.fetch_sub(1);
    if (!body) return;
    replies[j] = parse_reply(*body);
    cache.store(key, request, *body);
  });

  RemoteEvalResult result;
  result.network_requests = transport.requests();
  result.cache_hits = hits.load();
  result.max_in_flight = max_in_flight.load();

  const std::size_t per_item = (dual ? 2 : 0) + (idk ? 1 : 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const QaItem& item = data.items[i];
    const std::size_t base = i * per_item;
    bool failed = false;
    for (std::size_t k = 0; k < per_item; ++k) failed = failed || !replies[base + k];
    if (failed) {
      result.failed_ids.push_back(item.id);
      continue;
    }

    EvalRecord rec;
    rec.item_id = item.id;
    std::size_t k = base;
    if (dual) {
      const ChatReply& direct = *replies[k++];
      const ChatReply& meta = *replies[k++];
      rec.correct = grade_answer(direct.content, item.answers);
      rec.meta = parse_meta(meta.content);
      if (meta.yes_logprob && meta.no_logprob) rec.confidence = sdt::confidence(*meta.yes_logprob, *meta.no_logprob);
    }
    if (idk) {
      const IdkParse parsed = parse_idk(replies[k++]->content);
      IdkOutcome o{parsed.abstained, !parsed.abstained && grade_answer(parsed.text, item.answers)};
      rec.idk = o;
      if (!dual) {
        rec.correct = o.correct;
        rec.meta = o.meta_yes() ? MetaAnswer::yes : MetaAnswer::no;
      }
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace esma::remote
