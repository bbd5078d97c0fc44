// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "text_util.hpp"

namespace zoomcot {
namespace {

[[noreturn]] void fail(std::string_view origin, int line, const std::string& msg) {
  throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_num(std::string_view v, std::string_view origin, int line, std::string_view key) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    fail(origin, line, "invalid number '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

bool looks_like_credential(std::string_view key) {
  const std::string k = detail::lower_copy(key);
  for (const char* bad : {"api_key", "apikey", "token", "secret", "password"}) {
    if (k.find(bad) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

AppConfig parse_config(std::string_view text, std::string_view origin) {
  AppConfig cfg;
  EndpointConfig ep;
  bool have_endpoint = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim_view(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(origin, n, "expected key = value");
    const std::string key(detail::trim_view(line.substr(0, eq)));
    const std::string_view val = detail::trim_view(line.substr(eq + 1));
    if (looks_like_credential(key)) {
      fail(origin, n, "'" + key + "' looks like a credential; set it through the environment instead");
    }
    auto i = [&] { return parse_num<int>(val, origin, n, key); };
    auto d = [&] { return parse_num<double>(val, origin, n, key); };
    auto i64 = [&] { return parse_num<std::int64_t>(val, origin, n, key); };

    if (key == "endpoint.base_url") {
      ep.base_url = std::string(val);
      have_endpoint = !val.empty();
    } else if (key == "endpoint.model") {
      ep.model = std::string(val);
    } else if (key == "endpoint.credential_env") {
      ep.credential_env = std::string(val);
    } else if (key == "endpoint.path") {
      ep.path = std::string(val);
    } else if (key == "endpoint.timeout_s") {
      ep.timeout_s = d();
      if (!(ep.timeout_s > 0)) fail(origin, n, "endpoint.timeout_s must be positive");
    } else if (key == "endpoint.retries") {
      ep.retries = i();
      if (ep.retries < 0) fail(origin, n, "endpoint.retries must be >= 0");
    } else if (key == "endpoint.max_in_flight") {
      ep.max_in_flight = i();
      if (ep.max_in_flight < 1 || ep.max_in_flight > 1024) {
        fail(origin, n, "endpoint.max_in_flight must be in [1, 1024]");
      }
    } else if (key == "gen.r_max") {
      cfg.gen.r_max = i();
    } else if (key == "gen.r_max_3d") {
      cfg.gen_3d.r_max = i();
    } else if (key == "gen.area_ratio_n") {
      cfg.gen.area_ratio_n = cfg.gen_3d.area_ratio_n = d();
    } else if (key == "gen.tau_large") {
      cfg.gen.tau_large = cfg.gen_3d.tau_large = d();
    } else if (key == "gen.temperature") {
      cfg.gen.decode.temperature = cfg.gen_3d.decode.temperature = d();
    } else if (key == "gen.max_tokens") {
      cfg.gen.decode.max_tokens = cfg.gen_3d.decode.max_tokens = i();
    } else if (key == "gen.retries") {
      cfg.gen.retry.retries = cfg.gen_3d.retry.retries = i();
    } else if (key == "budget.min_pixels") {
      cfg.budget.min_pixels = i64();
    } else if (key == "budget.max_pixels") {
      cfg.budget.max_pixels = i64();
    } else if (key == "eval.r_max") {
      cfg.eval_r_max = i();
      if (cfg.eval_r_max < 1) fail(origin, n, "eval.r_max must be >= 1");
    } else if (key == "workers") {
      cfg.workers = i();
      if (cfg.workers < 1) fail(origin, n, "workers must be >= 1");
    } else if (key == "prompts.dir") {
      cfg.prompts_dir = std::filesystem::path(std::string(val));
    } else {
      fail(origin, n, "unknown key '" + key + "'");
    }
  }
  try {
    cfg.gen.validate();
    cfg.gen_3d.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(origin) + ": " + e.what());
  }
  if (!cfg.budget.valid()) throw ConfigError(std::string(origin) + ": invalid pixel budget");
  if (have_endpoint) {
    if (ep.model.empty()) throw ConfigError(std::string(origin) + ": endpoint.model is required");
    cfg.endpoint = ep;
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace zoomcot
