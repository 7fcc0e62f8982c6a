#pragma once

// Run configuration (JSON) and backend construction. See docs/config.md for
// the file format.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "judgecal/backends.hpp"
#include "judgecal/elicitation.hpp"
#include "judgecal/fuser.hpp"
#include "judgecal/http_backend.hpp"
#include "judgecal/metrics.hpp"
#include "judgecal/synthetic.hpp"

namespace judgecal {

enum class BackendKind { Http, Mock, Synthetic };

struct BackendSpec {
  BackendKind kind = BackendKind::Mock;
  std::string endpoint;
  std::string model_name;
  double timeout_seconds = 120.0;
  std::size_t max_concurrency = 4;
  bool supports_logprobs = false;
  int top_logprobs = 5;
  std::string api_key_env;
  std::vector<ChatReply> script;                // Mock
  std::optional<SyntheticJudgeProfile> profile; // Synthetic

  void validate(const std::string& owner) const {
    if (kind == BackendKind::Http) {
      if (endpoint.empty() || model_name.empty())
        throw ConfigError(owner + ": http backend requires endpoint and model");
      if (max_concurrency < 1) throw ConfigError(owner + ": max_concurrency must be >= 1");
    }
    if (kind == BackendKind::Synthetic && !profile) throw ConfigError(owner + ": synthetic backend needs a profile");
  }
};

struct JudgeSpec {
  std::string id;
  Setting setting = Setting::SC;
  BackendSpec backend;
};

struct FuserSpec {
  std::string id;
  BackendSpec backend;
  std::vector<std::string> judges;  // render order; empty = roster order
};

struct SimulateSpec {
  std::size_t n_items = 10000;
  std::vector<SyntheticJudgeProfile> profiles;
};

struct RunConfig {
  std::filesystem::path items_path;
  std::optional<std::filesystem::path> records_path;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  MetricConfig metrics;
  ElicitationConfig elicitation;
  FuserConfig fuser_config;
  std::vector<JudgeSpec> judges;
  std::vector<FuserSpec> fusers;
  Setting aggregate_setting = Setting::SC;
  Setting fuse_setting = Setting::SC;
  SimulateSpec simulate;

  std::filesystem::path records_file() const { return records_path.value_or(out_dir / "records.jsonl"); }

  void validate() const {
    metrics.th.validate();
    if (metrics.bins < 1) throw ConfigError("bins must be >= 1");
    elicitation.validate();
    std::set<std::string> ids;
    for (const auto& j : judges) {
      if (j.id.empty()) throw ConfigError("judge with empty id");
      if (!ids.insert(j.id).second) throw ConfigError("duplicate judge id '" + j.id + "'");
      if (j.setting != Setting::SC && j.setting != Setting::MP && j.setting != Setting::LogP)
        throw ConfigError("judge '" + j.id + "': setting must be SC, MP or LogP");
      j.backend.validate("judge '" + j.id + "'");
    }
    for (const auto& f : fusers) {
      if (f.id.empty()) throw ConfigError("fuser with empty id");
      if (f.backend.kind == BackendKind::Synthetic) throw ConfigError("fuser '" + f.id + "' cannot be synthetic");
      f.backend.validate("fuser '" + f.id + "'");
    }
  }
};

/// splitmix64 finalizer, used to derive per-judge seeds from the run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

inline ChatReply reply_from_json(const json& j) {
  if (j.is_string()) return ChatReply{j.get<std::string>(), std::nullopt};
  if (!j.is_object()) throw ConfigError("mock script entries must be strings or objects");
  ChatReply r;
  r.text = j.value("text", std::string());
  if (auto lp = j.find("logprobs"); lp != j.end()) {
    std::vector<TokenLogprob> toks;
    for (const auto& t : *lp) {
      TokenLogprob tok{t.at("token").get<std::string>(), t.at("logprob").get<double>(), {}};
      if (auto top = t.find("top_logprobs"); top != t.end())
        for (const auto& a : *top) tok.top.push_back({a.at("token").get<std::string>(), a.at("logprob").get<double>()});
      toks.push_back(std::move(tok));
    }
    r.logprobs = std::move(toks);
  }
  return r;
}

inline ConfidenceModel confidence_model_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "Constant") return ConstantConfidence{j.at("c").get<double>()};
  if (type == "Calibrated") return CalibratedConfidence{};
  if (type == "BetaNoise") return BetaNoiseConfidence{j.at("a").get<double>(), j.at("b").get<double>()};
  throw ConfigError("unknown confidence_model type '" + type + "'");
}

inline SyntheticJudgeProfile profile_from_json(const json& j, const std::string& id, std::uint64_t default_seed) {
  SyntheticJudgeProfile p;
  p.judge_id = id;
  p.true_accuracy = j.value("true_accuracy", 0.5);
  p.confidence_model = j.contains("confidence_model") ? confidence_model_from_json(j.at("confidence_model"))
                                                      : ConfidenceModel{CalibratedConfidence{}};
  p.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : default_seed;
  return p;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

inline BackendSpec backend_from_json(const json& j, const std::string& id, const std::filesystem::path& base,
                                     std::uint64_t default_seed) {
  BackendSpec s;
  const auto kind = j.value("kind", std::string("Mock"));
  if (kind == "Http") s.kind = BackendKind::Http;
  else if (kind == "Mock") s.kind = BackendKind::Mock;
  else if (kind == "Synthetic") s.kind = BackendKind::Synthetic;
  else throw ConfigError("unknown backend kind '" + kind + "'");
  s.endpoint = j.value("endpoint", std::string());
  s.model_name = j.value("model", std::string());
  s.timeout_seconds = j.value("timeout", 120.0);
  s.max_concurrency = j.value("max_concurrency", std::size_t{4});
  s.supports_logprobs = j.value("supports_logprobs", false);
  s.top_logprobs = j.value("top_logprobs", 5);
  s.api_key_env = j.value("api_key_env", std::string());
  if (j.contains("api_key")) throw ConfigError(id + ": put API keys in an environment variable named by api_key_env");
  if (auto sc = j.find("script"); sc != j.end())
    for (const auto& e : *sc) s.script.push_back(reply_from_json(e));
  if (auto sf = j.find("script_file"); sf != j.end()) {
    auto path = resolve(base, sf->get<std::string>());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open mock script file " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      s.script.push_back(reply_from_json(json::parse(line)));
    }
  }
  if (s.kind == BackendKind::Synthetic) s.profile = profile_from_json(j, id, default_seed);
  return s;
}

inline Setting setting_from_json(const json& j, const char* key, Setting def) {
  if (!j.contains(key)) return def;
  auto name = j.at(key).get<std::string>();
  auto s = parse_setting(name);
  if (!s) throw ConfigError(std::string("unknown setting '") + name + "'");
  return *s;
}

}  // namespace detail

inline RunConfig parse_config(const json& j, const std::filesystem::path& base = ".") {
  RunConfig c;
  try {
    if (j.contains("items")) c.items_path = detail::resolve(base, j.at("items").get<std::string>());
    if (j.contains("records")) c.records_path = detail::resolve(base, j.at("records").get<std::string>());
    if (j.contains("out")) c.out_dir = detail::resolve(base, j.at("out").get<std::string>());
    c.seed = j.value("seed", std::uint64_t{0});
    c.metrics.bins = j.value("bins", kDefaultBins);
    c.metrics.th.epsilon = j.value("epsilon", 0.1);
    c.metrics.th.include_low_interval = j.value("th_include_low", true);
    c.metrics.th.boundary_inclusive = j.value("th_inclusive", true);

    if (auto e = j.find("elicitation"); e != j.end()) {
      c.elicitation.mp_samples = e->value("mp_samples", std::size_t{10});
      c.elicitation.retry_on_parse_failure = e->value("retry_on_parse_failure", 1);
      c.elicitation.strict_json = e->value("strict_json", false);
      if (e->contains("sc_template")) c.elicitation.sc_template = load_template(detail::resolve(base, e->at("sc_template").get<std::string>()));
      if (e->contains("mp_template")) c.elicitation.mp_template = load_template(detail::resolve(base, e->at("mp_template").get<std::string>()));
      if (e->contains("logp_template"))
        c.elicitation.logp_template = load_template(detail::resolve(base, e->at("logp_template").get<std::string>()));
      if (auto lt = e->find("label_tokens"); lt != e->end()) {
        c.elicitation.label_tokens.a_tokens = lt->at("A").get<std::vector<std::string>>();
        c.elicitation.label_tokens.b_tokens = lt->at("B").get<std::vector<std::string>>();
      }
    }
    if (j.contains("fuser_template"))
      c.fuser_config.prompt_template = load_template(detail::resolve(base, j.at("fuser_template").get<std::string>()));

    std::uint64_t idx = 0;
    for (const auto& jj : j.value("judges", json::array())) {
      JudgeSpec js;
      js.id = jj.at("id").get<std::string>();
      js.setting = detail::setting_from_json(jj, "setting", Setting::SC);
      js.backend = detail::backend_from_json(jj.value("backend", json::object()), js.id, base,
                                             derive_seed(c.seed, idx++));
      if (js.backend.profile) js.backend.profile->setting = js.setting;
      c.judges.push_back(std::move(js));
    }
    auto fusers = j.value("fusers", json::array());
    if (j.contains("fuser")) fusers.push_back(j.at("fuser"));
    for (const auto& fj : fusers) {
      FuserSpec fs;
      fs.id = fj.at("id").get<std::string>();
      fs.backend = detail::backend_from_json(fj.value("backend", json::object()), fs.id, base, 0);
      fs.judges = fj.value("judges", std::vector<std::string>{});
      c.fusers.push_back(std::move(fs));
    }
    c.aggregate_setting = detail::setting_from_json(j, "aggregate_setting", Setting::SC);
    c.fuse_setting = detail::setting_from_json(j, "fuse_setting", Setting::SC);

    if (auto sim = j.find("simulate"); sim != j.end()) {
      c.simulate.n_items = sim->value("n_items", std::size_t{10000});
      std::uint64_t k = 0;
      for (const auto& pj : sim->value("profiles", json::array())) {
        auto id = pj.value("id", std::string("synthetic-") + std::to_string(k));
        c.simulate.profiles.push_back(detail::profile_from_json(pj, id, derive_seed(c.seed, 1000 + k)));
        ++k;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

inline json load_config_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

inline std::filesystem::path config_base(const std::filesystem::path& path) {
  return path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(load_config_json(path), config_base(path));
}

/// Builds a live backend. Synthetic specs have no chat interface and are
/// handled by the pipeline directly.
inline std::unique_ptr<Backend> make_backend(const std::string& id, const BackendSpec& spec) {
  switch (spec.kind) {
    case BackendKind::Http: {
      HttpOptions o;
      o.endpoint = spec.endpoint;
      o.model = spec.model_name;
      o.timeout_seconds = spec.timeout_seconds;
      o.max_concurrency = spec.max_concurrency;
      o.supports_logprobs = spec.supports_logprobs;
      o.top_logprobs = spec.top_logprobs;
      o.api_key_env = spec.api_key_env;
      return std::make_unique<HttpBackend>(id, std::move(o));
    }
    case BackendKind::Mock: return std::make_unique<MockBackend>(id, spec.script, spec.supports_logprobs);
    case BackendKind::Synthetic: break;
  }
  throw ConfigError("backend '" + id + "' is synthetic and has no chat interface");
}

}  // namespace judgecal
