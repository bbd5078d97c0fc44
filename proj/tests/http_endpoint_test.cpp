// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/http_endpoint.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "zoomcot/config.hpp"

namespace zoomcot {
namespace {

using nlohmann::json;

class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }

  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string completion(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

EndpointConfig config_for(const LocalServer& s) {
  EndpointConfig c;
  c.base_url = s.url();
  c.model = "test-model";
  c.credential_env = "ZOOMCOT_TEST_KEY";
  c.timeout_s = 2.0;
  return c;
}

class HttpEndpointTest : public ::testing::Test {
 protected:
  void SetUp() override { ::setenv("ZOOMCOT_TEST_KEY", "sekrit", 1); }
  void TearDown() override { ::unsetenv("ZOOMCOT_TEST_KEY"); }
};

TEST(Payload, ShapeWithImage) {
  cv::Mat m(4, 6, CV_8UC3, cv::Scalar(1, 2, 3));
  const auto view = ImageView::root(m);
  const auto p = build_chat_payload("m", {{"system", "sys", {}}, {"user", "look", {view}}}, {0.0, 77});
  EXPECT_EQ(p["model"], "m");
  EXPECT_EQ(p["max_tokens"], 77);
  EXPECT_EQ(p["messages"][0]["content"], "sys");
  const auto& parts = p["messages"][1]["content"];
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0]["text"], "look");
  const std::string url = parts[1]["image_url"]["url"];
  EXPECT_EQ(url.rfind("data:image/png;base64,", 0), 0u);
  EXPECT_EQ(url.substr(22), base64_encode(encode_png(view)));
}

TEST(Base64, KnownVectors) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("foob"), "Zm9vYg==");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
}

TEST(Completion, StringAndPartsForms) {
  EXPECT_EQ(extract_completion_text(completion("hi")), "hi");
  const json parts{{"choices",
                    {{{"message",
                       {{"content", {{{"type", "text"}, {"text", "a"}}, {{"type", "text"}, {"text", "b"}}}}}}}}}};
  EXPECT_EQ(extract_completion_text(parts.dump()), "ab");
  EXPECT_THROW(extract_completion_text("nope"), TransportError);
  EXPECT_THROW(extract_completion_text(R"({"choices": []})"), TransportError);
}

TEST_F(HttpEndpointTest, PostsBearerAndReturnsContent) {
  LocalServer srv;
  std::mutex mu;
  std::string auth, body;
  srv.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    auth = req.get_header_value("Authorization");
    body = req.body;
    res.set_content(completion("Description: d\nAoI: [0,0,1,1]\nReasoning: r"), "application/json");
  });
  HttpEndpoint ep(config_for(srv));
  GenRequest req;
  req.template_id = std::string(prompt_id::kDistill);
  req.text = "hello";
  EXPECT_EQ(parse_triplet(ep.call(req)).description, "d");
  std::lock_guard lock(mu);
  EXPECT_EQ(auth, "Bearer sekrit");
  const auto sent = json::parse(body);
  EXPECT_EQ(sent["model"], "test-model");
  EXPECT_EQ(sent["messages"][0]["content"], "hello");
}

TEST_F(HttpEndpointTest, ServerErrorIsRetryableClientErrorIsNot) {
  LocalServer srv;
  int hits = 0;
  srv.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    res.status = req.body.find("bad") != std::string::npos ? 400 : (hits < 3 ? 503 : 200);
    if (res.status == 200) res.set_content(completion("ok"), "application/json");
  });
  HttpEndpoint ep(config_for(srv));
  GenRequest req;
  req.template_id = std::string(prompt_id::kDistill);
  req.text = "fine";
  int attempts = 0;
  EXPECT_EQ(call_with_retry(ep, req, RetryPolicy{2}, [](const std::string& s) { return s; }, &attempts), "ok");
  EXPECT_EQ(attempts, 3);

  req.text = "bad";
  try {
    call_with_retry(ep, req, RetryPolicy{2}, [](const std::string& s) { return s; }, &attempts);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportErrorKind::status);
    EXPECT_EQ(e.status(), 400);
    EXPECT_EQ(attempts, 1);
  }
}

TEST_F(HttpEndpointTest, SlowServerTimesOut) {
  LocalServer srv;
  srv.server().Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    res.set_content(completion("late"), "application/json");
  });
  auto cfg = config_for(srv);
  cfg.timeout_s = 0.2;
  HttpEndpoint ep(cfg);
  try {
    ep.complete({{"user", "x", {}}}, {});
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportErrorKind::timeout);
    EXPECT_TRUE(e.retryable());
  }
}

TEST_F(HttpEndpointTest, UnreachableHostIsTransportError) {
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.model = "m";
  cfg.credential_env = "ZOOMCOT_TEST_KEY";
  cfg.timeout_s = 1.0;
  HttpEndpoint ep(cfg);
  EXPECT_THROW(ep.complete({{"user", "x", {}}}, {}), TransportError);
}

TEST(HttpEndpointCredential, MissingEnvFailsBeforeConnecting) {
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.credential_env = "ZOOMCOT_SURELY_UNSET_VAR";
  ::unsetenv("ZOOMCOT_SURELY_UNSET_VAR");
  try {
    HttpEndpoint ep(cfg);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportErrorKind::credential_missing);
    EXPECT_FALSE(e.retryable());
  }
}

TEST(Config, ParsesKeysAndComments) {
  const auto c = parse_config(R"(# endpoint
endpoint.base_url = https://example.invalid
endpoint.model = vlm-large
endpoint.timeout_s = 12.5
gen.r_max = 4
gen.area_ratio_n = 3
budget.max_pixels = 500000
workers = 3
)");
  ASSERT_TRUE(c.endpoint);
  EXPECT_EQ(c.endpoint->model, "vlm-large");
  EXPECT_EQ(c.endpoint->credential_env, "ZOOMCOT_API_KEY");
  EXPECT_DOUBLE_EQ(c.endpoint->timeout_s, 12.5);
  EXPECT_EQ(c.gen.r_max, 4);
  EXPECT_EQ(c.gen.area_ratio_n, 3);
  EXPECT_EQ(c.gen_3d.area_ratio_n, 3);
  EXPECT_EQ(c.budget.max_pixels, 500000);
  EXPECT_EQ(c.workers, 3);
}

TEST(Config, RejectsCredentialsAndUnknownKeys) {
  EXPECT_THROW(parse_config("endpoint.api_key = abc"), ConfigError);
  EXPECT_THROW(parse_config("token = abc"), ConfigError);
  EXPECT_THROW(parse_config("endpoint.colour = red"), ConfigError);
  EXPECT_THROW(parse_config("endpoint.base_url = http://x"), ConfigError);
  EXPECT_THROW(parse_config("gen.r_max = 0"), ConfigError);
  EXPECT_THROW(parse_config("workers"), ConfigError);
  try {
    parse_config("endpoint.secret = x");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("credential"), std::string::npos);
  }
}

}  // namespace
}  // namespace zoomcot
