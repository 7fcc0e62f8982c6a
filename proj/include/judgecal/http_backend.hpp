#pragma once

// Chat-completions HTTP backend. Request body:
//   {"model": ..., "messages": [{"role": "user", "content": ...}],
//    "temperature": ..., "logprobs": true, "top_logprobs": k}
// Reply text is read from choices[0].message.content and token
// log-probabilities from choices[0].logprobs.content[].

#include <atomic>
#include <cstdlib>
#include <semaphore>
#include <string>

#include <httplib.h>

#include "judgecal/backends.hpp"

namespace judgecal {

struct HttpOptions {
  std::string endpoint;  // full URL, e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  double timeout_seconds = 120.0;
  std::size_t max_concurrency = 4;
  bool supports_logprobs = false;
  int top_logprobs = 5;
  int timeout_retries = 1;
  std::string api_key_env;  // name of the env var holding the key; never the key itself
};

inline json build_chat_request_body(const HttpOptions& opts, const ChatRequest& req) {
  json body = json::object();
  body["model"] = opts.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", req.prompt}}});
  body["temperature"] = req.temperature;
  if (req.want_logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = opts.top_logprobs;
  }
  return body;
}

/// Decodes a chat-completions response body.
inline ChatReply parse_chat_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("response is not JSON: ") + e.what());
  }
  try {
    const auto& choice = j.at("choices").at(0);
    ChatReply reply;
    const auto& content = choice.at("message").at("content");
    reply.text = content.is_null() ? std::string() : content.get<std::string>();
    auto lp = choice.find("logprobs");
    if (lp != choice.end() && lp->is_object()) {
      auto c = lp->find("content");
      if (c != lp->end() && c->is_array()) {
        std::vector<TokenLogprob> tokens;
        for (const auto& t : *c) {
          TokenLogprob tok;
          tok.token = t.at("token").get<std::string>();
          tok.logprob = t.at("logprob").get<double>();
          if (auto top = t.find("top_logprobs"); top != t.end() && top->is_array())
            for (const auto& alt : *top)
              tok.top.push_back({alt.at("token").get<std::string>(), alt.at("logprob").get<double>()});
          tokens.push_back(std::move(tok));
        }
        reply.logprobs = std::move(tokens);
      }
    }
    return reply;
  } catch (const json::exception& e) {
    throw BackendError(std::string("unexpected response shape: ") + e.what());
  }
}

class HttpBackend : public Backend {
 public:
  HttpBackend(std::string id, HttpOptions opts)
      : id_(std::move(id)), opts_(std::move(opts)), slots_(static_cast<std::ptrdiff_t>(opts_.max_concurrency)) {
    if (opts_.endpoint.empty() || opts_.model.empty())
      throw ConfigError("http backend '" + id_ + "' needs endpoint and model");
    if (opts_.max_concurrency < 1) throw ConfigError("http backend '" + id_ + "': max_concurrency must be >= 1");
    auto scheme = opts_.endpoint.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint must start with http:// or https://");
    auto path = opts_.endpoint.find('/', scheme + 3);
    base_ = opts_.endpoint.substr(0, path);
    path_ = path == std::string::npos ? "/" : opts_.endpoint.substr(path);
  }

  std::string id() const override { return id_; }
  bool supports_logprobs() const override { return opts_.supports_logprobs; }
  std::size_t max_concurrency() const override { return opts_.max_concurrency; }

  ChatReply chat_complete(const ChatRequest& req) override {
    if (req.want_logprobs && !opts_.supports_logprobs)
      throw CapabilityError("backend '" + id_ + "' is not configured for logprobs");
    const std::string body = build_chat_request_body(opts_, req).dump();
    for (int attempt = 0;; ++attempt) {
      try {
        return send(body);
      } catch (const TimeoutError&) {
        if (attempt >= opts_.timeout_retries) throw;
      }
    }
  }

  /// Highest number of simultaneous in-flight requests observed.
  std::size_t peak_in_flight() const { return peak_.load(); }

 private:
  ChatReply send(const std::string& body) {
    slots_.acquire();
    struct Release {
      HttpBackend* self;
      ~Release() {
        --self->in_flight_;
        self->slots_.release();
      }
    } release{this};
    auto now = ++in_flight_;
    for (auto peak = peak_.load(); now > peak && !peak_.compare_exchange_weak(peak, now);) {
    }

    httplib::Client cli(base_);
    const auto secs = static_cast<time_t>(opts_.timeout_seconds);
    const auto usecs = static_cast<time_t>((opts_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!opts_.api_key_env.empty()) {
      if (const char* key = std::getenv(opts_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = cli.Post(path_, headers, body, "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
        throw TimeoutError("request to " + opts_.endpoint + " timed out (" + httplib::to_string(err) + ")");
      throw BackendError("request to " + opts_.endpoint + " failed: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) throw HttpError(res->status, res->body.substr(0, 200));
    return parse_chat_response(res->body);
  }

  std::string id_;
  HttpOptions opts_;
  std::string base_;
  std::string path_;
  std::counting_semaphore<> slots_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_{0};
};

}  // namespace judgecal
