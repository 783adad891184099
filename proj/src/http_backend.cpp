// OpenAI-compatible chat-completions transport.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "rcov/errors.hpp"
#include "rcov/gateway.hpp"
#include "rcov/strings.hpp"

namespace rcov {

using nlohmann::json;

nlohmann::json build_chat_request(const ChatExchange& exchange,
                                  const EndpointDescriptor& endpoint) {
  json messages = json::array();
  for (const auto& m : exchange.messages) {
    json msg = {{"role", to_string(m.role)}};
    if (m.image) {
      json parts = json::array();
      parts.push_back({{"type", "text"}, {"text", m.text}});
      parts.push_back({{"type", "image_url"},
                       {"image_url",
                        {{"url", "data:" + m.image->mime_type + ";base64," +
                                     base64_encode(m.image->bytes)}}}});
      msg["content"] = std::move(parts);
    } else {
      msg["content"] = m.text;
    }
    messages.push_back(std::move(msg));
  }
  json body = {
      {"model", exchange.model_name.empty() ? endpoint.model : exchange.model_name},
      {"messages", std::move(messages)},
  };
  if (exchange.temperature) body["temperature"] = *exchange.temperature;
  // Distinct seeds per sample keep repeated sampled calls diverse.
  if (endpoint.seed) body["seed"] = *endpoint.seed + exchange.sample_index;
  if (endpoint.max_tokens) body["max_tokens"] = *endpoint.max_tokens;
  return body;
}

std::string parse_chat_response(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception&) {
    throw ProtocolError("malformed endpoint reply: not JSON");
  }
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string text;
      for (const auto& part : content) {
        if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
      }
      return text;
    }
  } catch (const json::exception&) {
  }
  throw ProtocolError("malformed endpoint reply: no choices[0].message.content");
}

HttpChatBackend::HttpChatBackend(EndpointDescriptor endpoint) : endpoint_(std::move(endpoint)) {
  const auto& url = endpoint_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint url must start with http:// or https://: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

std::string HttpChatBackend::complete(const ChatExchange& exchange, ChatRole) {
  httplib::Client client(origin_);
  const auto timeout = static_cast<time_t>(endpoint_.timeout.count());
  client.set_connection_timeout(timeout, 0);
  client.set_read_timeout(timeout, 0);
  client.set_write_timeout(timeout, 0);

  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
  }
  const auto body = build_chat_request(exchange, endpoint_).dump();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    throw TransportError("POST " + origin_ + path_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw TransportError("POST " + origin_ + path_ + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProtocolError("POST " + origin_ + path_ + ": HTTP " + std::to_string(res->status) +
                        ": " + res->body.substr(0, 500));
  }
  return parse_chat_response(res->body);
}

}  // namespace rcov
