#pragma once

// Access to the vision-chat and text-chat model endpoints.
//
// Every model call in the project goes through Gateway::chat, which
// validates the request, consults the response cache, routes the call to the
// right backend, and retries transport failures.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rcov/digest.hpp"

namespace rcov {

enum class MessageRole { system, user, assistant };
enum class ChatRole { vision, text };

std::string_view to_string(MessageRole role) noexcept;
std::string_view to_string(ChatRole role) noexcept;

struct ImageAttachment {
  std::string mime_type = "image/png";
  std::vector<std::uint8_t> bytes;
};

struct ChatMessage {
  MessageRole role = MessageRole::user;
  std::string text;
  std::optional<ImageAttachment> image;
};

struct ChatExchange {
  std::vector<ChatMessage> messages;
  /// Absent: the endpoint's default decoding temperature.
  std::optional<double> temperature;
  /// Tells apart otherwise identical sampled calls.
  std::uint32_t sample_index = 0;
  /// Filled in by the gateway from the routed endpoint when empty.
  std::string model_name;

  std::size_t image_count() const noexcept;
  /// Text of the last user message, or empty.
  std::string_view last_user_text() const noexcept;
};

/// Digest over role, model, messages (images by content digest),
/// temperature and sample index.
Digest256 cache_key(const ChatExchange& exchange, ChatRole role);

/// Like cache_key but ignoring sample_index; scripted fixtures key on this
/// and hold one response per sample index.
Digest256 script_key(const ChatExchange& exchange, ChatRole role);

struct EndpointDescriptor {
  enum class Kind { http, scripted };

  Kind kind = Kind::http;
  std::string model;
  // http
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string api_key;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_tokens;
  std::chrono::seconds timeout{120};
  // scripted
  std::filesystem::path fixture;
};

/// A text backend left empty aliases the vision backend.
struct BackendBinding {
  EndpointDescriptor vision;
  std::optional<EndpointDescriptor> text;

  bool text_aliases_vision() const noexcept { return !text.has_value(); }
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Returns the assistant text. Throws TransportError for retryable
  /// failures and ProtocolError / ScriptMissError otherwise.
  virtual std::string complete(const ChatExchange& exchange, ChatRole role) = 0;
  virtual std::string model_name() const = 0;
};

/// Replays canned responses.
///
/// Fixture files are JSONL. Each record holds `responses` (one per sample
/// index, or a single response used for every index) plus match fields:
///   key       script_key hex digest; exact match, checked first
///   role      "vision" or "text"
///   contains  substrings that must all occur in the last user message
/// Records without a key are tried in file order; the first match wins.
class ScriptedBackend final : public ChatBackend {
 public:
  struct Rule {
    std::optional<ChatRole> role;
    std::optional<Digest256> key;
    std::vector<std::string> contains;
    std::vector<std::string> responses;
  };

  explicit ScriptedBackend(std::string model = "scripted");

  static std::shared_ptr<ScriptedBackend> from_jsonl(std::string_view jsonl,
                                                     std::string model = "scripted");
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path,
                                                    std::string model = "scripted");

  void add(Rule rule);

  std::string complete(const ChatExchange& exchange, ChatRole role) override;
  std::string model_name() const override { return model_; }

 private:
  std::string model_;
  std::map<Digest256, std::vector<std::string>> by_key_;
  std::vector<Rule> rules_;
};

/// Backend driven by a callable; used by tests and fuzz harnesses.
class CallbackBackend final : public ChatBackend {
 public:
  using Fn = std::function<std::string(const ChatExchange&, ChatRole)>;
  explicit CallbackBackend(Fn fn, std::string model = "callback")
      : fn_(std::move(fn)), model_(std::move(model)) {}

  std::string complete(const ChatExchange& exchange, ChatRole role) override {
    return fn_(exchange, role);
  }
  std::string model_name() const override { return model_; }

 private:
  Fn fn_;
  std::string model_;
};

/// OpenAI-compatible chat-completions client.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(EndpointDescriptor endpoint);

  std::string complete(const ChatExchange& exchange, ChatRole role) override;
  std::string model_name() const override { return endpoint_.model; }

 private:
  EndpointDescriptor endpoint_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // .../chat/completions
};

/// Request body: model, messages (text and image_url content parts, images
/// as base64 data URIs), temperature when set, seed when configured.
nlohmann::json build_chat_request(const ChatExchange& exchange, const EndpointDescriptor& endpoint);

/// Extracts choices[0].message.content. Throws ProtocolError.
std::string parse_chat_response(std::string_view body);

/// Content-addressed response store.
///
/// With a directory, each entry is a file named by the key's hex digest and
/// holding the raw assistant text; `index.jsonl` records the SHA-256 of each
/// entry's content. Entries whose content no longer matches the index, or
/// that have no index record, are treated as misses.
class ResponseCache {
 public:
  ResponseCache() = default;  // memory only
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const Digest256& key);
  void put(const Digest256& key, const std::string& text);

  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mutex_;
  std::map<Digest256, std::string> memory_;
  std::map<Digest256, Digest256> index_;  // key -> content digest
};

struct RetryPolicy {
  /// Retries after the first attempt.
  int max_retries = 3;
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(2000),
                                                 std::chrono::milliseconds(4000)};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct GatewayOptions {
  bool cache_enabled = true;
  std::optional<std::filesystem::path> cache_dir;
  RetryPolicy retry;
};

class Gateway {
 public:
  /// A null text backend routes text calls to the vision backend.
  Gateway(std::shared_ptr<ChatBackend> vision, std::shared_ptr<ChatBackend> text,
          GatewayOptions options = {});

  static std::shared_ptr<ChatBackend> make_backend(const EndpointDescriptor& endpoint);
  static Gateway from_binding(const BackendBinding& binding, GatewayOptions options = {});

  /// Throws std::invalid_argument for invalid exchanges (images on the text
  /// role, more than one image, no messages), TransportError after retries
  /// are exhausted, and whatever non-retryable error the backend raises.
  std::string chat(ChatRole role, ChatExchange exchange);

  bool text_aliases_vision() const noexcept { return !text_; }

  std::uint64_t calls() const noexcept { return calls_.load(); }
  std::uint64_t upstream_calls() const noexcept { return upstream_.load(); }
  std::uint64_t cache_hits() const noexcept { return hits_.load(); }

 private:
  std::string call_with_retry(ChatBackend& backend, const ChatExchange& exchange, ChatRole role);

  std::shared_ptr<ChatBackend> vision_;
  std::shared_ptr<ChatBackend> text_;
  GatewayOptions options_;
  std::unique_ptr<ResponseCache> cache_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> upstream_{0};
  std::atomic<std::uint64_t> hits_{0};
};

}  // namespace rcov
