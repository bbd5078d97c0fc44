// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zoomcot/geometry.hpp"
#include "zoomcot/grounding_parser.hpp"
#include "zoomcot/imaging.hpp"
#include "zoomcot/prompts.hpp"

namespace zoomcot {

struct DecodeParams {
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct GenRequest {
  std::string template_id;
  std::string text;
  std::vector<ImageView> images;
  DecodeParams decode;
  /// Global-frame box of the attached view. Recorded for provenance only.
  std::optional<BoxPx> view_box;

  /// Throws PromptError when the template is unknown or the image count does
  /// not match its arity.
  void validate(const PromptRegistry& registry = PromptRegistry::builtin()) const;
};

enum class TransportErrorKind { timeout, transport, status, credential_missing, bad_response };

std::string_view to_string(TransportErrorKind kind);

class TransportError : public std::runtime_error {
 public:
  TransportError(TransportErrorKind kind, const std::string& what, int status = 0);

  TransportErrorKind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }
  /// Timeouts, connection failures, 429 and 5xx are worth another attempt.
  bool retryable() const noexcept;

 private:
  TransportErrorKind kind_;
  int status_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t begin, std::size_t end)
      : std::runtime_error(what), begin_(begin), end_(end) {}

  std::size_t begin() const noexcept { return begin_; }
  std::size_t end() const noexcept { return end_; }

 private:
  std::size_t begin_;
  std::size_t end_;
};

class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  /// Returns the raw completion text or throws TransportError.
  virtual std::string call(const GenRequest& req) = 0;
};

struct ChatMessage {
  std::string role;
  std::string text;
  std::vector<ImageView> images;
};

/// Multi-turn chat interface used by the zoom evaluation harness.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               const DecodeParams& decode) = 0;
};

struct TripletResponse {
  std::string description;
  BoxRatio aoi;
  std::string reasoning;
  bool repaired = false;
  BoxUnit unit = BoxUnit::ratio;
};

/// Reads the "Scene Description:", "Area of Interest:" and "Reasoning:"
/// sections (headers matched case-insensitively, in any order).
TripletResponse parse_triplet(std::string_view raw,
                              std::optional<FrameDims> frame = std::nullopt);
std::string render_triplet(const TripletResponse& t);

struct QAResponse {
  std::string question;
  std::string short_answer;
  std::string long_answer;
  BoxRatio target_box;
  bool repaired = false;
  BoxUnit unit = BoxUnit::ratio;
};

QAResponse parse_qa(std::string_view raw, std::optional<FrameDims> frame = std::nullopt);
std::string render_qa(const QAResponse& qa);

struct RetryPolicy {
  int retries = 2;
};

/// Calls `gen` and parses the reply, retrying retryable transport errors and
/// parse errors. At most 1 + policy.retries attempts; the last error escapes.
template <typename Parse>
auto call_with_retry(GeneratorClient& gen, const GenRequest& req, const RetryPolicy& policy,
                     Parse&& parse, int* attempts_out = nullptr) -> decltype(parse(std::string{})) {
  const int max_attempts = 1 + std::max(0, policy.retries);
  for (int attempt = 1;; ++attempt) {
    if (attempts_out) *attempts_out = attempt;
    try {
      return parse(gen.call(req));
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= max_attempts) throw;
    } catch (const ParseError&) {
      if (attempt >= max_attempts) throw;
    }
  }
}

/// Replays raw responses in order and then repeats the last one. Safe to share
/// between threads; the call index is atomic.
class ScriptedGenerator : public GeneratorClient {
 public:
  explicit ScriptedGenerator(std::vector<std::string> script);

  std::string call(const GenRequest& req) override;

  std::size_t calls() const noexcept { return index_.load(); }
  std::vector<GenRequest> requests() const;

 private:
  std::vector<std::string> script_;
  std::atomic<std::size_t> index_{0};
  mutable std::mutex mu_;
  std::vector<GenRequest> requests_;
};

std::unique_ptr<GeneratorClient> scripted_oracle(const std::vector<TripletResponse>& script);

class CallbackGenerator : public GeneratorClient {
 public:
  using Fn = std::function<std::string(const GenRequest&, std::size_t call_index)>;
  explicit CallbackGenerator(Fn fn) : fn_(std::move(fn)) {}

  std::string call(const GenRequest& req) override { return fn_(req, index_++); }
  std::size_t calls() const noexcept { return index_.load(); }

 private:
  Fn fn_;
  std::atomic<std::size_t> index_{0};
};

/// Replays assistant turns in order; once exhausted it keeps returning the
/// last one.
class ScriptedChatModel : public ChatModel {
 public:
  explicit ScriptedChatModel(std::vector<std::string> turns);

  std::string complete(const std::vector<ChatMessage>& messages,
                       const DecodeParams& decode) override;

  std::size_t calls() const noexcept { return index_; }
  const std::vector<std::vector<ChatMessage>>& conversations() const { return seen_; }

 private:
  std::vector<std::string> turns_;
  std::size_t index_ = 0;
  std::vector<std::vector<ChatMessage>> seen_;
};

}  // namespace zoomcot
