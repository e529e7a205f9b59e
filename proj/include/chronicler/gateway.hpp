#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace chronicler {

// Single abstraction over every LLM interaction. Everything upstream talks
// to LlmGateway; tests and offline runs use the scripted mock, live runs the
// HTTP chat-completions client.

struct ChatTurn {
  enum class Role { User, Assistant };
  Role role;
  std::string content;
};

struct ChatRequest {
  std::string system;
  std::vector<ChatTurn> turns;  // non-empty, last turn must be User
  double temperature = 0.0;
  int max_tokens = 512;
  std::string tag;  // pipeline stage that issued the call

  // Convenience: single user turn.
  static ChatRequest user(std::string tag, std::string system, std::string content,
                          double temperature = 0.0, int max_tokens = 512);
  void check() const;  // enforces the turn invariants
};

enum class FinishReason { Stop, Length, Error };

struct TokenUsage {
  int prompt = 0;
  int completion = 0;
};

struct ChatResponse {
  std::string content;
  FinishReason finish_reason = FinishReason::Stop;
  TokenUsage usage;
};

struct CallRecord {
  std::string tag;
  std::string last_user_content;
  FinishReason finish = FinishReason::Stop;
};

class LlmGateway {
 public:
  virtual ~LlmGateway() = default;

  // Sends one request. Transport faults are retried with backoff up to the
  // configured budget; a well-formed model reply is never retried here.
  virtual ChatResponse chat(const ChatRequest& request) = 0;

  // Per-stage traffic log, for the audit trail.
  virtual std::vector<CallRecord> call_log() const = 0;
};

// --- scripted mock -----------------------------------------------------------

struct MockEntry {
  std::string tag = "*";      // '*' answers any tag without its own queue
  std::string content;
  bool sticky = false;        // never consumed; answers every later call
  std::string fault;          // "" | "timeout" (transport fault, retryable)
  FinishReason finish = FinishReason::Stop;
};

struct MockScript {
  std::vector<MockEntry> entries;

  static MockScript from_json(const std::string& json_text);
  static MockScript load(const std::filesystem::path& file);
  std::string to_json() const;
};

// Deterministic replay: per-tag FIFO queues; a sticky entry stays at the
// head once reached. Script consumption is serialized so replay order is
// total even under concurrent callers.
class MockGateway : public LlmGateway {
 public:
  explicit MockGateway(MockScript script, int retry_budget = 2);

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<CallRecord> call_log() const override;
  std::size_t calls_made() const;

 private:
  ChatResponse next_response(const ChatRequest& request);

  mutable std::mutex mu_;
  std::map<std::string, std::vector<MockEntry>> queues_;
  std::map<std::string, std::size_t> cursors_;
  std::vector<CallRecord> log_;
  int retry_budget_;
};

// --- live HTTP client ----------------------------------------------------------

struct HttpGatewayConfig {
  std::string endpoint;  // e.g. http://host:port  (path /v1/chat/completions)
  std::string model;
  std::string api_key_env;
  int retry_budget = 2;
  int backoff_ms = 100;
  int timeout_sec = 60;
};

class HttpGateway : public LlmGateway {
 public:
  explicit HttpGateway(HttpGatewayConfig config);

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<CallRecord> call_log() const override;

 private:
  ChatResponse send_once(const ChatRequest& request);

  HttpGatewayConfig config_;
  mutable std::mutex mu_;
  std::vector<CallRecord> log_;
};

// --- prompt templates -----------------------------------------------------------

// Templates are plain text files <name>.txt in a prompts directory with
// {placeholder} substitution. '{{' and '}}' emit literal braces. Rendering
// with an unbound placeholder is an error, never silently emitted.
class PromptLibrary {
 public:
  explicit PromptLibrary(std::filesystem::path dir);

  std::string render(const std::string& template_name,
                     const std::map<std::string, std::string>& vars) const;
  static std::string render_text(const std::string& template_text,
                                 const std::map<std::string, std::string>& vars);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::string> cache_;
};

}  // namespace chronicler
