#include "rcov/gateway.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rcov/errors.hpp"
#include "rcov/strings.hpp"

namespace rcov {

using nlohmann::json;

std::string_view to_string(MessageRole role) noexcept {
  switch (role) {
    case MessageRole::system: return "system";
    case MessageRole::user: return "user";
    case MessageRole::assistant: return "assistant";
  }
  return "?";
}

std::string_view to_string(ChatRole role) noexcept {
  return role == ChatRole::vision ? "vision" : "text";
}

std::size_t ChatExchange::image_count() const noexcept {
  std::size_t n = 0;
  for (const auto& m : messages) n += m.image.has_value();
  return n;
}

std::string_view ChatExchange::last_user_text() const noexcept {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == MessageRole::user) return it->text;
  }
  return {};
}

namespace {

json canonical_exchange(const ChatExchange& ex, ChatRole role, bool with_sample_index) {
  json messages = json::array();
  for (const auto& m : ex.messages) {
    messages.push_back({
        {"role", to_string(m.role)},
        {"text", m.text},
        {"image", m.image ? json(m.image->mime_type + ":" + sha256(m.image->bytes).hex())
                          : json(nullptr)},
    });
  }
  json doc = {
      {"v", "rcov-cache-1"},
      {"role", to_string(role)},
      {"model", ex.model_name},
      {"messages", std::move(messages)},
      {"temperature", ex.temperature ? json(*ex.temperature) : json(nullptr)},
  };
  if (with_sample_index) doc["sample_index"] = ex.sample_index;
  return doc;
}

}  // namespace

Digest256 cache_key(const ChatExchange& exchange, ChatRole role) {
  return sha256(canonical_exchange(exchange, role, true).dump());
}

Digest256 script_key(const ChatExchange& exchange, ChatRole role) {
  return sha256(canonical_exchange(exchange, role, false).dump());
}

// ---- scripted backend ----------------------------------------------------

ScriptedBackend::ScriptedBackend(std::string model) : model_(std::move(model)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_jsonl(std::string_view jsonl,
                                                             std::string model) {
  auto backend = std::make_shared<ScriptedBackend>(std::move(model));
  std::size_t line_no = 0;
  for (auto line : split(jsonl, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    try {
      const auto j = json::parse(line);
      Rule rule;
      if (j.contains("role")) {
        const auto r = j.at("role").get<std::string>();
        if (r == "vision") {
          rule.role = ChatRole::vision;
        } else if (r == "text") {
          rule.role = ChatRole::text;
        } else {
          throw ConfigError("role must be vision or text");
        }
      }
      if (j.contains("key")) rule.key = Digest256::from_hex(j.at("key").get<std::string>());
      if (j.contains("contains")) rule.contains = j.at("contains").get<std::vector<std::string>>();
      rule.responses = j.at("responses").get<std::vector<std::string>>();
      if (rule.responses.empty()) throw ConfigError("responses must not be empty");
      backend->add(std::move(rule));
    } catch (const std::exception& e) {
      throw ConfigError("fixture line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return backend;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path,
                                                            std::string model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read fixture " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str(), std::move(model));
}

void ScriptedBackend::add(Rule rule) {
  if (rule.key) {
    by_key_[*rule.key] = std::move(rule.responses);
  } else {
    rules_.push_back(std::move(rule));
  }
}

std::string ScriptedBackend::complete(const ChatExchange& exchange, ChatRole role) {
  auto pick = [&](const std::vector<std::string>& responses) -> std::string {
    if (responses.size() == 1) return responses.front();
    if (exchange.sample_index < responses.size()) return responses[exchange.sample_index];
    throw ScriptMissError("scripted backend: no response for sample_index " +
                          std::to_string(exchange.sample_index));
  };

  if (auto it = by_key_.find(script_key(exchange, role)); it != by_key_.end()) {
    return pick(it->second);
  }
  const auto user_text = exchange.last_user_text();
  for (const auto& rule : rules_) {
    if (rule.role && *rule.role != role) continue;
    bool all = true;
    for (const auto& needle : rule.contains) {
      if (user_text.find(needle) == std::string_view::npos) {
        all = false;
        break;
      }
    }
    if (all) return pick(rule.responses);
  }
  throw ScriptMissError("scripted backend: no response for " + std::string(to_string(role)) +
                        " request " + script_key(exchange, role).hex());
}

// ---- cache ---------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(*dir_);
  std::ifstream in(*dir_ / "index.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    try {
      const auto j = json::parse(line);
      index_[Digest256::from_hex(j.at("key").get<std::string>())] =
          Digest256::from_hex(j.at("sha256").get<std::string>());
    } catch (const std::exception&) {
      // A torn index line only costs a cache miss.
    }
  }
}

std::optional<std::string> ResponseCache::get(const Digest256& key) {
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (!dir_) return std::nullopt;

  const auto idx = index_.find(key);
  if (idx == index_.end()) return std::nullopt;
  std::ifstream in(*dir_ / key.hex(), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  auto text = ss.str();
  if (sha256(text) != idx->second) {
    index_.erase(idx);
    return std::nullopt;
  }
  memory_.emplace(key, text);
  return text;
}

void ResponseCache::put(const Digest256& key, const std::string& text) {
  std::lock_guard lock(mutex_);
  memory_[key] = text;
  if (!dir_) return;

  const auto final_path = *dir_ / key.hex();
  const auto tmp_path = *dir_ / (key.hex() + ".tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) return;  // read-only cache dir: keep the in-memory copy
  }
  std::error_code ec;
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) return;
  const auto content = sha256(text);
  index_[key] = content;
  std::ofstream index(*dir_ / "index.jsonl", std::ios::app);
  index << json{{"key", key.hex()}, {"sha256", content.hex()}}.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return memory_.size();
}

// ---- gateway -------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<ChatBackend> vision, std::shared_ptr<ChatBackend> text,
                 GatewayOptions options)
    : vision_(std::move(vision)), text_(std::move(text)), options_(std::move(options)) {
  if (!vision_) throw std::invalid_argument("gateway needs a vision backend");
  if (options_.cache_enabled) {
    cache_ = options_.cache_dir ? std::make_unique<ResponseCache>(*options_.cache_dir)
                                : std::make_unique<ResponseCache>();
  }
  if (!options_.retry.sleep) {
    options_.retry.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::shared_ptr<ChatBackend> Gateway::make_backend(const EndpointDescriptor& endpoint) {
  if (endpoint.kind == EndpointDescriptor::Kind::scripted) {
    return ScriptedBackend::from_file(endpoint.fixture,
                                      endpoint.model.empty() ? "scripted" : endpoint.model);
  }
  return std::make_shared<HttpChatBackend>(endpoint);
}

Gateway Gateway::from_binding(const BackendBinding& binding, GatewayOptions options) {
  auto vision = make_backend(binding.vision);
  std::shared_ptr<ChatBackend> text;
  if (binding.text) text = make_backend(*binding.text);
  return Gateway(std::move(vision), std::move(text), std::move(options));
}

std::string Gateway::chat(ChatRole role, ChatExchange exchange) {
  if (exchange.messages.empty()) throw std::invalid_argument("exchange has no messages");
  const auto images = exchange.image_count();
  if (images > 1) throw std::invalid_argument("at most one image per request");
  if (images == 1 && role == ChatRole::text) {
    throw std::invalid_argument("image not allowed for text role");
  }
  if (exchange.temperature && !(*exchange.temperature >= 0.0)) {
    throw std::invalid_argument("temperature must be non-negative");
  }

  ChatBackend& backend = (role == ChatRole::text && text_) ? *text_ : *vision_;
  if (exchange.model_name.empty()) exchange.model_name = backend.model_name();
  ++calls_;

  std::optional<Digest256> key;
  if (cache_) {
    key = cache_key(exchange, role);
    if (auto hit = cache_->get(*key)) {
      ++hits_;
      return *hit;
    }
  }
  auto text = call_with_retry(backend, exchange, role);
  if (cache_) cache_->put(*key, text);
  return text;
}

std::string Gateway::call_with_retry(ChatBackend& backend, const ChatExchange& exchange,
                                     ChatRole role) {
  const auto& policy = options_.retry;
  for (int attempt = 0;; ++attempt) {
    try {
      ++upstream_;
      return backend.complete(exchange, role);
    } catch (const TransportError& e) {
      if (attempt >= policy.max_retries) {
        throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) +
                             " attempts)");
      }
      const auto& backoff = policy.backoff;
      if (!backoff.empty()) {
        policy.sleep(backoff[std::min<std::size_t>(static_cast<std::size_t>(attempt),
                                                   backoff.size() - 1)]);
      }
    }
  }
}

}  // namespace rcov
