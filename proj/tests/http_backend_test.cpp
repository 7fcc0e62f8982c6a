#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "judgecal/elicitation.hpp"
#include "judgecal/http_backend.hpp"

using namespace judgecal;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(JUDGECAL_TEST_DATA) / ".." / "docs" / "fixtures";

std::string fixture(const std::string& name) {
  std::ifstream in(kFixtures / name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Local chat-completions stub. Counts concurrent handlers.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler h) : handler_(std::move(h)) {
    server_.new_task_queue = [] { return new httplib::ThreadPool(16); };
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int now = ++live_;
      for (int p = peak_.load(); now > p && !peak_.compare_exchange_weak(p, now);) {
      }
      {
        std::lock_guard lock(mu_);
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
      }
      handler_(req, res);
      --live_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int peak() const { return peak_.load(); }
  std::vector<std::string> bodies() {
    std::lock_guard lock(mu_);
    return bodies_;
  }
  std::vector<std::string> auth() {
    std::lock_guard lock(mu_);
    return auth_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> live_{0}, peak_{0};
  std::mutex mu_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
};

HttpOptions opts(const StubServer& s, std::size_t conc = 2) {
  HttpOptions o;
  o.endpoint = s.endpoint();
  o.model = "stub-model";
  o.max_concurrency = conc;
  o.timeout_seconds = 5;
  return o;
}

void respond_fixture(httplib::Response& res, const std::string& name) {
  res.set_content(fixture(name), "application/json");
}

}  // namespace

TEST(RequestBody, ChatCompletionsShape) {
  HttpOptions o;
  o.model = "gpt-4.1";
  o.supports_logprobs = true;
  auto body = build_chat_request_body(o, {"<rendered prompt>", 0.0, true});
  auto expected = json::parse(fixture("openai_request_logprobs.json"));
  EXPECT_EQ(body, expected);
  auto plain = build_chat_request_body(o, {"hi", 0.7, false});
  EXPECT_FALSE(plain.contains("logprobs"));
  EXPECT_DOUBLE_EQ(plain["temperature"].get<double>(), 0.7);
}

TEST(ParseChatResponse, ProviderFixtures) {
  for (const char* name : {"openai_response.json", "deepseek_response.json", "dashscope_response.json"}) {
    auto reply = parse_chat_response(fixture(name));
    EXPECT_FALSE(reply.logprobs) << name;
    auto o = parse_judge_json(reply.text);
    EXPECT_TRUE(o.valid) << name;
  }
  auto lp = parse_chat_response(fixture("openai_response_logprobs.json"));
  ASSERT_TRUE(lp.logprobs);
  auto d = extract_decision_logits(lp);
  EXPECT_DOUBLE_EQ(d.pair.a, -2.18);
  EXPECT_DOUBLE_EQ(d.pair.b, -0.12);
  auto vllm = parse_chat_response(fixture("vllm_response_logprobs.json"));
  EXPECT_TRUE(extract_decision_logits(vllm).approximate);
}

TEST(ParseChatResponse, MalformedBodies) {
  EXPECT_THROW(parse_chat_response("not json"), BackendError);
  EXPECT_THROW(parse_chat_response(R"({"choices":[]})"), BackendError);
  EXPECT_THROW(parse_chat_response(fixture("error_response.json")), BackendError);
}

TEST(HttpBackend, WireRoundTrip) {
  StubServer s([](const httplib::Request&, httplib::Response& res) { respond_fixture(res, "openai_response.json"); });
  HttpBackend b("gpt", opts(s));
  auto reply = b.chat_complete({"prompt text", 0.0, false});
  EXPECT_EQ(parse_chat_response(fixture("openai_response.json")).text, reply.text);
  auto sent = json::parse(s.bodies().at(0));
  EXPECT_EQ(sent["model"], "stub-model");
  EXPECT_EQ(sent["messages"][0]["role"], "user");
  EXPECT_EQ(sent["messages"][0]["content"], "prompt text");
}

TEST(HttpBackend, NeverExceedsMaxConcurrency) {
  StubServer s([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    respond_fixture(res, "openai_response.json");
  });
  HttpBackend b("gpt", opts(s, 3));
  std::vector<ChatRequest> reqs(12, ChatRequest{"p"});
  auto out = b.chat_batch(reqs);
  EXPECT_EQ(out.size(), 12u);
  EXPECT_LE(s.peak(), 3);
  EXPECT_GE(s.peak(), 2);
  EXPECT_LE(b.peak_in_flight(), 3u);
}

TEST(HttpBackend, SemaphoreHoldsUnderOuterParallelism) {
  StubServer s([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    respond_fixture(res, "openai_response.json");
  });
  HttpBackend b("gpt", opts(s, 2));
  auto out = run_bounded(10, 8, [&](std::size_t) { return b.chat_complete({"p"}).text; });
  for (auto& o : out) EXPECT_TRUE(o.ok());
  EXPECT_LE(s.peak(), 2);
}

TEST(HttpBackend, NonSuccessStatusIsHttpError) {
  StubServer s([](const httplib::Request&, httplib::Response& res) {
    res.status = 429;
    respond_fixture(res, "error_response.json");
  });
  HttpBackend b("gpt", opts(s));
  try {
    b.chat_complete({"p"});
    FAIL();
  } catch (const HttpError& e) {
    EXPECT_EQ(e.status(), 429);
    EXPECT_NE(e.body_excerpt().find("rate_limit"), std::string::npos);
    EXPECT_LE(e.body_excerpt().size(), 200u);
  }
}

TEST(HttpBackend, TimeoutRetriedOnceThenRaised) {
  std::atomic<int> calls{0};
  StubServer s([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    respond_fixture(res, "openai_response.json");
  });
  auto o = opts(s);
  o.timeout_seconds = 0.2;
  HttpBackend b("gpt", o);
  EXPECT_THROW(b.chat_complete({"p"}), TimeoutError);
  std::this_thread::sleep_for(std::chrono::milliseconds(700));
  EXPECT_EQ(calls.load(), 2);
}

TEST(HttpBackend, TimeoutThenSuccess) {
  std::atomic<int> calls{0};
  StubServer s([&](const httplib::Request&, httplib::Response& res) {
    if (++calls == 1) std::this_thread::sleep_for(std::chrono::milliseconds(500));
    respond_fixture(res, "openai_response.json");
  });
  auto o = opts(s);
  o.timeout_seconds = 0.2;
  HttpBackend b("gpt", o);
  EXPECT_NO_THROW(b.chat_complete({"p"}));
  std::this_thread::sleep_for(std::chrono::milliseconds(500));
  EXPECT_EQ(calls.load(), 2);
}

TEST(HttpBackend, LogprobCapability) {
  StubServer s([](const httplib::Request&, httplib::Response& res) { respond_fixture(res, "openai_response_logprobs.json"); });
  HttpBackend plain("gpt", opts(s));
  EXPECT_THROW(plain.chat_complete({"p", 0.0, true}), CapabilityError);
  auto o = opts(s);
  o.supports_logprobs = true;
  HttpBackend lp("gpt", o);
  auto reply = lp.chat_complete({"p", 0.0, true});
  ASSERT_TRUE(reply.logprobs);
  auto sent = json::parse(s.bodies().back());
  EXPECT_EQ(sent["logprobs"], true);
  EXPECT_EQ(sent["top_logprobs"], 5);
}

TEST(HttpBackend, BearerFromEnvironment) {
  StubServer s([](const httplib::Request&, httplib::Response& res) { respond_fixture(res, "openai_response.json"); });
  ::setenv("JUDGECAL_TEST_KEY", "sk-test-123", 1);
  auto o = opts(s);
  o.api_key_env = "JUDGECAL_TEST_KEY";
  HttpBackend b("gpt", o);
  b.chat_complete({"p"});
  EXPECT_EQ(s.auth().back(), "Bearer sk-test-123");
  ::unsetenv("JUDGECAL_TEST_KEY");
  b.chat_complete({"p"});
  EXPECT_EQ(s.auth().back(), "");
}

TEST(HttpBackend, ConnectionRefusedIsBackendError) {
  HttpOptions o;
  o.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  o.model = "m";
  o.timeout_seconds = 1;
  HttpBackend b("x", o);
  EXPECT_THROW(b.chat_complete({"p"}), BackendError);
}

TEST(HttpBackend, ConfigValidation) {
  HttpOptions o;
  EXPECT_THROW(HttpBackend("x", o), ConfigError);
  o.endpoint = "localhost:8000";
  o.model = "m";
  EXPECT_THROW(HttpBackend("x", o), ConfigError);
  o.endpoint = "http://localhost:8000/v1/chat/completions";
  o.max_concurrency = 0;
  EXPECT_THROW(HttpBackend("x", o), ConfigError);
}
