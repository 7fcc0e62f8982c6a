#pragma once

// Judge backend abstraction: request/reply types, a scripted mock, bounded
// batch execution and decision-token logit extraction.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "judgecal/core.hpp"

namespace judgecal {

struct ChatRequest {
  std::string prompt;
  double temperature = 0.0;
  bool want_logprobs = false;
};

struct TokenAlternative {
  std::string token;
  double logprob = 0.0;
};

/// One generated token with its log-probability and the top alternatives offered
/// at that position.
struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
  std::vector<TokenAlternative> top;
};

struct ChatReply {
  std::string text;
  std::optional<std::vector<TokenLogprob>> logprobs;
};

/// Outcome of one task in a bounded batch: a value or the exception it raised.
template <class T>
struct Outcome {
  std::optional<T> value;
  std::exception_ptr error;

  bool ok() const noexcept { return value.has_value(); }
  const T& get() const {
    if (error) std::rethrow_exception(error);
    return *value;
  }
};

/// Runs fn(0..n-1) on at most `max_concurrency` threads. Results are returned
/// in index order regardless of completion order.
template <class F>
auto run_bounded(std::size_t n, std::size_t max_concurrency, F&& fn)
    -> std::vector<Outcome<std::invoke_result_t<F&, std::size_t>>> {
  using T = std::invoke_result_t<F&, std::size_t>;
  std::vector<Outcome<T>> out(n);
  auto run_one = [&](std::size_t i) {
    try {
      out[i].value.emplace(fn(i));
    } catch (...) {
      out[i].error = std::current_exception();
    }
  };
  const std::size_t workers = std::min(n, std::max<std::size_t>(1, max_concurrency));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) run_one(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string id() const = 0;
  virtual bool supports_logprobs() const = 0;
  virtual std::size_t max_concurrency() const { return 1; }

  /// Throws BackendError (TimeoutError, HttpError, CapabilityError, ...).
  virtual ChatReply chat_complete(const ChatRequest& request) = 0;

  /// Replies in request order. The first failing request's error is rethrown
  /// after the batch completes.
  virtual std::vector<ChatReply> chat_batch(std::span<const ChatRequest> requests) {
    auto outcomes = run_bounded(requests.size(), max_concurrency(),
                                [&](std::size_t i) { return chat_complete(requests[i]); });
    std::vector<ChatReply> replies;
    replies.reserve(outcomes.size());
    for (auto& o : outcomes) replies.push_back(o.get());
    return replies;
  }
};

/// Deterministic backend replaying a fixed script, or delegating to a
/// responder callback. Requests are served strictly one at a time.
class MockBackend : public Backend {
 public:
  using Responder = std::function<ChatReply(const ChatRequest&)>;

  explicit MockBackend(std::string id, std::vector<ChatReply> script, bool supports_logprobs = false)
      : id_(std::move(id)), script_(std::move(script)), supports_logprobs_(supports_logprobs) {}

  MockBackend(std::string id, std::vector<std::string> texts, bool supports_logprobs = false)
      : id_(std::move(id)), supports_logprobs_(supports_logprobs) {
    for (auto& t : texts) script_.push_back(ChatReply{std::move(t), std::nullopt});
  }

  MockBackend(std::string id, Responder responder, bool supports_logprobs = false)
      : id_(std::move(id)), responder_(std::move(responder)), supports_logprobs_(supports_logprobs) {}

  std::string id() const override { return id_; }
  bool supports_logprobs() const override { return supports_logprobs_; }

  ChatReply chat_complete(const ChatRequest& request) override {
    std::lock_guard lock(mu_);
    if (request.want_logprobs && !supports_logprobs_)
      throw CapabilityError("mock backend '" + id_ + "' does not provide logprobs");
    log_.push_back(request);
    if (responder_) return responder_(request);
    if (cursor_ >= script_.size())
      throw ScriptExhaustedError("mock backend '" + id_ + "' script exhausted after " +
                                 std::to_string(script_.size()) + " replies");
    return script_[cursor_++];
  }

  const std::vector<ChatRequest>& requests() const { return log_; }
  std::size_t remaining() const { return script_.size() - std::min(cursor_, script_.size()); }

 private:
  std::string id_;
  std::vector<ChatReply> script_;
  Responder responder_;
  bool supports_logprobs_;
  std::size_t cursor_ = 0;
  std::vector<ChatRequest> log_;
  std::mutex mu_;
};

struct LogitPair {
  double a = 0.0;
  double b = 0.0;
};

/// Tokens that render each label at the decision position. Matching compares
/// the whitespace-trimmed token text for equality.
struct LabelTokenMap {
  std::vector<std::string> a_tokens{"Output (a)", "a"};
  std::vector<std::string> b_tokens{"Output (b)", "b"};
};

struct DecisionLogits {
  LogitPair pair;
  bool approximate = false;  // one side reconstructed from residual probability mass
  std::size_t position = 0;  // token index of the decision
};

namespace detail {

inline std::string trim_copy(std::string_view s) {
  auto b = s.find_first_not_of(" \t\n\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\n\r");
  return std::string(s.substr(b, e - b + 1));
}

inline bool matches_any(const std::string& token, const std::vector<std::string>& set) {
  auto t = trim_copy(token);
  return std::find(set.begin(), set.end(), t) != set.end();
}

}  // namespace detail

inline constexpr double kResidualFloor = 1e-12;

/// Finds the first token rendering a label and reads the A/B log-probabilities
/// among that position's alternatives. A missing side is filled with the log of
/// the residual mass and flagged approximate.
inline DecisionLogits extract_decision_logits(const ChatReply& reply, const LabelTokenMap& map = {}) {
  if (!reply.logprobs) throw ExtractionError("reply carries no token log-probabilities");
  const auto& tokens = *reply.logprobs;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& pos = tokens[i];
    if (!std::isfinite(pos.logprob)) throw ExtractionError("non-finite logprob at token " + std::to_string(i));
    const bool is_a = detail::matches_any(pos.token, map.a_tokens);
    const bool is_b = detail::matches_any(pos.token, map.b_tokens);
    if (!is_a && !is_b) continue;

    std::optional<double> lp_a;
    std::optional<double> lp_b;
    auto consider = [&](const std::string& tok, double lp) {
      if (!std::isfinite(lp)) throw ExtractionError("non-finite alternative logprob at token " + std::to_string(i));
      if (detail::matches_any(tok, map.a_tokens)) lp_a = lp_a ? std::max(*lp_a, lp) : lp;
      if (detail::matches_any(tok, map.b_tokens)) lp_b = lp_b ? std::max(*lp_b, lp) : lp;
    };
    consider(pos.token, pos.logprob);
    for (const auto& alt : pos.top) consider(alt.token, alt.logprob);

    DecisionLogits out;
    out.position = i;
    if (lp_a && lp_b) {
      out.pair = {*lp_a, *lp_b};
      return out;
    }
    const double present = lp_a ? *lp_a : *lp_b;
    const double residual = std::log(std::max(1.0 - std::exp(present), kResidualFloor));
    out.pair = lp_a ? LogitPair{present, residual} : LogitPair{residual, present};
    out.approximate = true;
    return out;
  }
  throw ExtractionError("no decision token found among " + std::to_string(tokens.size()) + " tokens");
}

}  // namespace judgecal
