// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/http_endpoint.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <openssl/evp.h>

namespace zoomcot {
namespace {

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

nlohmann::json build_chat_payload(const std::string& model,
                                  const std::vector<ChatMessage>& messages,
                                  const DecodeParams& decode) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    if (m.images.empty()) {
      msgs.push_back({{"role", m.role}, {"content", m.text}});
      continue;
    }
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", m.text}});
    for (const auto& img : m.images) {
      content.push_back(
          {{"type", "image_url"},
           {"image_url", {{"url", "data:image/png;base64," + base64_encode(encode_png(img))}}}});
    }
    msgs.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  return {{"model", model},
          {"temperature", decode.temperature},
          {"max_tokens", decode.max_tokens},
          {"messages", std::move(msgs)}};
}

std::string extract_completion_text(const std::string& body) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    throw TransportError(TransportErrorKind::bad_response, "response body is not JSON");
  }
  const auto* choices = doc.contains("choices") ? &doc["choices"] : nullptr;
  if (!choices || !choices->is_array() || choices->empty()) {
    throw TransportError(TransportErrorKind::bad_response, "response has no choices");
  }
  const auto& msg = (*choices)[0].value("message", nlohmann::json::object());
  const auto content = msg.value("content", nlohmann::json());
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string text;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  }
  throw TransportError(TransportErrorKind::bad_response, "response message has no content");
}

HttpEndpoint::HttpEndpoint(EndpointConfig config) : config_(std::move(config)) {
  const char* cred = std::getenv(config_.credential_env.c_str());
  if (cred == nullptr || *cred == '\0') {
    throw TransportError(TransportErrorKind::credential_missing,
                         "environment variable " + config_.credential_env + " is not set");
  }
  credential_ = cred;
  if (config_.base_url.empty()) {
    throw TransportError(TransportErrorKind::transport, "endpoint base_url is empty");
  }
  in_flight_ = std::make_unique<std::counting_semaphore<1024>>(
      std::clamp(config_.max_in_flight, 1, 1024));
}

std::string HttpEndpoint::post(const std::string& body) {
  SemaphoreGuard guard(*in_flight_);
  httplib::Client client(config_.base_url);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout_s));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  client.set_bearer_token_auth(credential_);

  const auto res = client.Post(config_.path, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                          ? TransportErrorKind::timeout
                          : TransportErrorKind::transport;
    throw TransportError(kind, httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(TransportErrorKind::status,
                         "HTTP " + std::to_string(res->status), res->status);
  }
  return extract_completion_text(res->body);
}

std::string HttpEndpoint::call(const GenRequest& req) {
  req.validate();
  return complete({ChatMessage{"user", req.text, req.images}}, req.decode);
}

std::string HttpEndpoint::complete(const std::vector<ChatMessage>& messages,
                                   const DecodeParams& decode) {
  return post(build_chat_payload(config_.model, messages, decode).dump());
}

}  // namespace zoomcot
