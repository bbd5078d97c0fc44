// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "zoomcot/generator_client.hpp"

namespace zoomcot {

struct EndpointConfig {
  std::string base_url;
  std::string model;
  std::string credential_env = "ZOOMCOT_API_KEY";
  std::string path = "/v1/chat/completions";
  double timeout_s = 60.0;
  int retries = 2;
  int max_in_flight = 4;
};

/// Chat-completions style JSON body with images attached as base64 PNG data
/// URLs.
nlohmann::json build_chat_payload(const std::string& model,
                                  const std::vector<ChatMessage>& messages,
                                  const DecodeParams& decode);
/// Pulls choices[0].message.content out of a completion body.
std::string extract_completion_text(const std::string& body);

std::string base64_encode(std::string_view bytes);

/// HTTP(S) client for an OpenAI-compatible endpoint. The credential is read
/// from the environment at construction; a missing credential throws
/// TransportError(credential_missing) before any connection is attempted.
class HttpEndpoint : public GeneratorClient, public ChatModel {
 public:
  explicit HttpEndpoint(EndpointConfig config);

  std::string call(const GenRequest& req) override;
  std::string complete(const std::vector<ChatMessage>& messages,
                       const DecodeParams& decode) override;

  const EndpointConfig& config() const noexcept { return config_; }

 private:
  std::string post(const std::string& body);

  EndpointConfig config_;
  std::string credential_;
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
};

}  // namespace zoomcot
