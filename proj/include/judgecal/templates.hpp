#pragma once

// Placeholder substitution for prompt templates. Placeholders are
// {{name}} with optional inner spaces ({{ name }}). The fuser template
// additionally carries one loop line holding {{ loop.index }} and
// {{ output }}, optionally fenced by delimiter lines ("{" or "{% ... %}").

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "judgecal/core.hpp"
#include "judgecal/prompt_assets.hpp"

namespace judgecal {

using PlaceholderLookup = std::function<std::optional<std::string>(std::string_view)>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool has_placeholder(std::string_view tpl, std::string_view name) {
  std::size_t pos = 0;
  while ((pos = tpl.find("{{", pos)) != std::string_view::npos) {
    auto end = tpl.find("}}", pos + 2);
    if (end == std::string_view::npos) return false;
    if (trim(tpl.substr(pos + 2, end - pos - 2)) == name) return true;
    pos = end + 2;
  }
  return false;
}

/// Single left-to-right pass; substituted text is never rescanned. Unknown
/// placeholders are left verbatim.
inline std::string substitute(std::string_view tpl, const PlaceholderLookup& lookup) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    auto open = tpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tpl.substr(pos, open - pos));
    auto name = trim(tpl.substr(open + 2, close - open - 2));
    if (auto v = lookup(name))
      out.append(*v);
    else
      out.append(tpl.substr(open, close + 2 - open));
    pos = close + 2;
  }
  out.append(tpl.substr(pos));
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    auto nl = s.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(pos));
      break;
    }
    lines.push_back(s.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

inline bool is_loop_delimiter(std::string_view line) {
  auto t = trim(line);
  return t == "{" || (t.size() >= 4 && t.substr(0, 2) == "{%" && t.substr(t.size() - 2) == "%}");
}

inline PlaceholderLookup item_lookup(const PairwiseItem& item) {
  return [&item](std::string_view name) -> std::optional<std::string> {
    if (name == "question") return item.question;
    if (name == "answer_a") return item.answer_a;
    if (name == "answer_b") return item.answer_b;
    return std::nullopt;
  };
}

}  // namespace detail

/// Checks that a template names every item placeholder.
inline void require_item_placeholders(std::string_view tpl) {
  for (const char* name : {"question", "answer_a", "answer_b"})
    if (!detail::has_placeholder(tpl, name))
      throw TemplateError(std::string("template lacks {{") + name + "}} placeholder");
}

inline std::string render_item_prompt(std::string_view tpl, const PairwiseItem& item) {
  require_item_placeholders(tpl);
  return detail::substitute(tpl, detail::item_lookup(item));
}

/// Renders a template with an output loop: the loop line is repeated once per
/// entry of `outputs` (1-based {{ loop.index }}); its delimiter lines are dropped.
inline std::string render_loop_prompt(std::string_view tpl, const PairwiseItem& item,
                                      const std::vector<std::string>& outputs) {
  require_item_placeholders(tpl);
  auto lines = detail::split_lines(tpl);
  std::optional<std::size_t> body;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (detail::has_placeholder(lines[i], "loop.index")) {
      body = i;
      break;
    }
  if (!body) throw TemplateError("template lacks a {{ loop.index }} output loop line");
  if (!detail::has_placeholder(lines[*body], "output"))
    throw TemplateError("output loop line lacks {{ output }} placeholder");

  std::size_t first = *body;
  std::size_t last = *body;
  if (first > 0 && detail::is_loop_delimiter(lines[first - 1])) --first;
  if (last + 1 < lines.size() && detail::is_loop_delimiter(lines[last + 1])) ++last;

  auto item_lu = detail::item_lookup(item);
  std::vector<std::string> rendered;
  for (std::size_t i = 0; i < first; ++i) rendered.push_back(detail::substitute(lines[i], item_lu));
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    auto lu = [&, k](std::string_view name) -> std::optional<std::string> {
      if (name == "loop.index") return std::to_string(k + 1);
      if (name == "output") return outputs[k];
      return item_lu(name);
    };
    rendered.push_back(detail::substitute(lines[*body], lu));
  }
  for (std::size_t i = last + 1; i < lines.size(); ++i)
    rendered.push_back(detail::substitute(lines[i], item_lu));

  std::string out;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    if (i) out.push_back('\n');
    out += rendered[i];
  }
  return out;
}

/// Reads a template asset verbatim.
inline std::string load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace judgecal
