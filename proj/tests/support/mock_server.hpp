#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace httplib {
class Server;
}

namespace mock {

struct Reply {
  int status = 200;
  std::string content;
  /// (logprob of "Yes", logprob of "No") for the first generated token.
  std::optional<std::pair<double, double>> logprobs;
  /// Sent verbatim instead of a generated body when non-empty.
  std::string raw_body;
  std::chrono::milliseconds delay{0};
};

/// Maps the user prompt of a request to a canned reply.
using Script = std::function<Reply(const std::string& prompt)>;

/// Local chat-completions endpoint with request instrumentation.
class ChatServer {
 public:
  explicit ChatServer(Script script);
  ~ChatServer();
  ChatServer(const ChatServer&) = delete;
  ChatServer& operator=(const ChatServer&) = delete;

  /// "http://127.0.0.1:<port>/v1"
  std::string base_url() const;

  std::size_t requests() const { return requests_.load(); }
  std::size_t max_in_flight() const { return max_in_flight_.load(); }
  std::vector<nlohmann::json> bodies() const;
  std::vector<std::string> auth_headers() const;

 private:
  Script script_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> bodies_;
  std::vector<std::string> auth_;
};

/// Scripted replies keyed on the question text embedded in the prompt.
/// `direct`, `meta` and `idk` are looked up by the prompt kind.
struct Transcript {
  struct Entry {
    std::string question;
    std::string direct;
    std::string meta;
    std::string idk;
  };
  std::vector<Entry> entries;

  Script script() const;
};

}  // namespace mock
