// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "zoomcot/http_endpoint.hpp"
#include "zoomcot/imaging.hpp"
#include "zoomcot/protocol.hpp"
#include "zoomcot/trace_gen.hpp"

namespace zoomcot {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AppConfig {
  std::optional<EndpointConfig> endpoint;  // set when endpoint.base_url is given
  GenPolicy gen;
  GenPolicy gen_3d = GenPolicy::depth_aware();
  PixelBudget budget;
  int eval_r_max = kVisualCotRounds;
  int workers = 1;
  std::optional<std::filesystem::path> prompts_dir;
};

/// Parses `key = value` lines; `#` starts a comment. Credentials never live
/// in config files, so keys that look like one are rejected.
AppConfig parse_config(std::string_view text, std::string_view origin = "<config>");
AppConfig load_config(const std::filesystem::path& path);

}  // namespace zoomcot
