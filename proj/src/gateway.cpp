#include "chronicler/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "chronicler/errors.hpp"
#include "chronicler/text.hpp"
#include "json.hpp"
#include "httplib.h"

namespace chronicler {

using nlohmann::json;

ChatRequest ChatRequest::user(std::string tag, std::string system, std::string content,
                              double temperature, int max_tokens) {
  ChatRequest r;
  r.tag = std::move(tag);
  r.system = std::move(system);
  r.turns.push_back(ChatTurn{ChatTurn::Role::User, std::move(content)});
  r.temperature = temperature;
  r.max_tokens = max_tokens;
  return r;
}

void ChatRequest::check() const {
  if (turns.empty()) throw Error(Errc::InvalidData, "chat request has no turns");
  if (turns.back().role != ChatTurn::Role::User) {
    throw Error(Errc::InvalidData, "chat request must end with a user turn");
  }
  if (temperature < 0) throw Error(Errc::InvalidData, "negative temperature");
  if (max_tokens <= 0) throw Error(Errc::InvalidData, "max_tokens must be positive");
}

// --- MockScript ---------------------------------------------------------------

MockScript MockScript::from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidData, std::string("mock script: ") + e.what());
  }
  MockScript script;
  if (!doc.is_object() || !doc.contains("responses") || !doc["responses"].is_array()) {
    throw Error(Errc::InvalidData, "mock script: expected {\"responses\": [...]}");
  }
  for (const auto& item : doc["responses"]) {
    MockEntry e;
    e.tag = item.value("tag", "*");
    e.content = item.value("content", "");
    e.sticky = item.value("sticky", false);
    e.fault = item.value("fault", "");
    std::string finish = item.value("finish_reason", "stop");
    if (finish == "stop") e.finish = FinishReason::Stop;
    else if (finish == "length") e.finish = FinishReason::Length;
    else if (finish == "error") e.finish = FinishReason::Error;
    else throw Error(Errc::InvalidData, "mock script: bad finish_reason " + finish);
    if (!e.fault.empty() && e.fault != "timeout") {
      throw Error(Errc::InvalidData, "mock script: unknown fault " + e.fault);
    }
    script.entries.push_back(std::move(e));
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open mock script " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string MockScript::to_json() const {
  json arr = json::array();
  for (const auto& e : entries) {
    json item;
    item["tag"] = e.tag;
    item["content"] = e.content;
    if (e.sticky) item["sticky"] = true;
    if (!e.fault.empty()) item["fault"] = e.fault;
    if (e.finish == FinishReason::Length) item["finish_reason"] = "length";
    arr.push_back(std::move(item));
  }
  json doc;
  doc["version"] = 1;
  doc["responses"] = std::move(arr);
  return doc.dump(2) + "\n";
}

// --- MockGateway ----------------------------------------------------------------

MockGateway::MockGateway(MockScript script, int retry_budget)
    : retry_budget_(retry_budget) {
  for (auto& e : script.entries) {
    queues_[e.tag].push_back(std::move(e));
  }
}

ChatResponse MockGateway::next_response(const ChatRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  auto take_from = [&](const std::string& key) -> const MockEntry* {
    auto it = queues_.find(key);
    if (it == queues_.end()) return nullptr;
    std::size_t& cur = cursors_[key];
    if (cur >= it->second.size()) return nullptr;
    const MockEntry* e = &it->second[cur];
    if (!e->sticky) ++cur;
    return e;
  };
  const MockEntry* entry = take_from(request.tag);
  if (entry == nullptr) entry = take_from("*");
  if (entry == nullptr) {
    throw Error(Errc::GatewayUnavailable,
                "mock script has no response left for tag '" + request.tag + "'");
  }
  {
    CallRecord rec;
    rec.tag = request.tag;
    rec.last_user_content = request.turns.empty() ? "" : request.turns.back().content;
    rec.finish = entry->finish;
    log_.push_back(std::move(rec));
  }
  if (entry->fault == "timeout") {
    throw Error(Errc::Transport, "scripted timeout");
  }
  ChatResponse resp;
  resp.content = entry->content;
  resp.finish_reason = entry->finish;
  resp.usage.completion = static_cast<int>(tokenize(entry->content).size());
  return resp;
}

ChatResponse MockGateway::chat(const ChatRequest& request) {
  request.check();
  int attempts = retry_budget_ + 1;
  for (int i = 0; i < attempts; ++i) {
    try {
      return next_response(request);
    } catch (const Error& e) {
      if (e.code() != Errc::Transport || i + 1 == attempts) {
        if (e.code() == Errc::Transport) {
          throw Error(Errc::GatewayUnavailable, "transport retries exhausted");
        }
        throw;
      }
    }
  }
  throw Error(Errc::GatewayUnavailable, "transport retries exhausted");
}

std::vector<CallRecord> MockGateway::call_log() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_;
}

std::size_t MockGateway::calls_made() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_.size();
}

// --- HttpGateway ----------------------------------------------------------------

HttpGateway::HttpGateway(HttpGatewayConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw Error(Errc::ConfigError, "http gateway requires an endpoint");
  }
}

ChatResponse HttpGateway::send_once(const ChatRequest& request) {
  json body;
  body["model"] = config_.model;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  json messages = json::array();
  if (!request.system.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system}});
  }
  for (const auto& turn : request.turns) {
    messages.push_back(
        {{"role", turn.role == ChatTurn::Role::User ? "user" : "assistant"},
         {"content", turn.content}});
  }
  body["messages"] = std::move(messages);

  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout_sec);
  client.set_read_timeout(config_.timeout_sec);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res) {
    throw Error(Errc::Transport, "connection failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(Errc::AuthError, "authentication rejected (HTTP " +
                                     std::to_string(res->status) + ")");
  }
  if (res->status >= 500) {
    throw Error(Errc::Transport, "server error (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    throw Error(Errc::HttpError, "unexpected HTTP status " + std::to_string(res->status));
  }
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(Errc::HttpError, std::string("malformed response body: ") + e.what());
  }
  ChatResponse out;
  try {
    const auto& choice = reply.at("choices").at(0);
    out.content = choice.at("message").at("content").get<std::string>();
    std::string finish = choice.value("finish_reason", "stop");
    out.finish_reason = finish == "length" ? FinishReason::Length : FinishReason::Stop;
    if (reply.contains("usage")) {
      out.usage.prompt = reply["usage"].value("prompt_tokens", 0);
      out.usage.completion = reply["usage"].value("completion_tokens", 0);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::HttpError, std::string("unexpected response shape: ") + e.what());
  }
  return out;
}

ChatResponse HttpGateway::chat(const ChatRequest& request) {
  request.check();
  int attempts = config_.retry_budget + 1;
  for (int i = 0; i < attempts; ++i) {
    try {
      ChatResponse resp = send_once(request);
      std::lock_guard<std::mutex> lock(mu_);
      CallRecord rec;
      rec.tag = request.tag;
      rec.last_user_content = request.turns.back().content;
      rec.finish = resp.finish_reason;
      log_.push_back(std::move(rec));
      return resp;
    } catch (const Error& e) {
      if (e.code() != Errc::Transport) throw;
      if (i + 1 == attempts) {
        throw Error(Errc::GatewayUnavailable, "transport retries exhausted: " + e.message());
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms * (i + 1)));
    }
  }
  throw Error(Errc::GatewayUnavailable, "transport retries exhausted");
}

std::vector<CallRecord> HttpGateway::call_log() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_;
}

// --- PromptLibrary ----------------------------------------------------------------

PromptLibrary::PromptLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string PromptLibrary::render_text(const std::string& tpl,
                                       const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    char c = tpl[i];
    if (c == '{') {
      if (i + 1 < tpl.size() && tpl[i + 1] == '{') {
        out.push_back('{');
        ++i;
        continue;
      }
      auto close = tpl.find('}', i + 1);
      if (close == std::string::npos) {
        throw Error(Errc::UnboundPlaceholder, "unterminated placeholder");
      }
      std::string name = tpl.substr(i + 1, close - i - 1);
      auto it = vars.find(name);
      if (it == vars.end()) {
        throw Error(Errc::UnboundPlaceholder, "placeholder {" + name + "} not bound");
      }
      out += it->second;
      i = close;
    } else if (c == '}') {
      if (i + 1 < tpl.size() && tpl[i + 1] == '}') {
        out.push_back('}');
        ++i;
        continue;
      }
      out.push_back('}');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string PromptLibrary::render(const std::string& template_name,
                                  const std::map<std::string, std::string>& vars) const {
  std::string tpl;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(template_name);
    if (it != cache_.end()) {
      tpl = it->second;
    } else {
      auto path = dir_ / (template_name + ".txt");
      std::ifstream in(path, std::ios::binary);
      if (!in) {
        throw Error(Errc::MissingTemplate, "no template " + path.string());
      }
      std::stringstream buf;
      buf << in.rdbuf();
      tpl = buf.str();
      cache_[template_name] = tpl;
    }
  }
  return render_text(tpl, vars);
}

}  // namespace chronicler
