#pragma once

// Reliability diagrams, metric tables and disagreement charts.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "judgecal/format.hpp"
#include "judgecal/fuser.hpp"
#include "judgecal/metrics.hpp"

namespace judgecal {

enum class ConfidenceRegion { Low, High, Straddling };

inline std::string_view to_string(ConfidenceRegion r) noexcept {
  switch (r) {
    case ConfidenceRegion::Low: return "low";
    case ConfidenceRegion::High: return "high";
    case ConfidenceRegion::Straddling: return "straddling";
  }
  return "straddling";
}

struct GapRegion {
  std::size_t bin_index = 0;
  int sign = 0;  // +1 accuracy above confidence, -1 below (overconfident), 0 exact
  double magnitude = 0.0;
  ConfidenceRegion region = ConfidenceRegion::Straddling;
};

struct ReliabilityDiagram {
  std::vector<BinStats> bins;
  std::vector<GapRegion> gap_regions;  // one per occupied bin
  std::size_t n_total = 0;
  std::string judge_id;
  std::string setting;
  double region_split = 0.5;
};

inline ReliabilityDiagram reliability_data(std::span<const JudgmentRecord> records, std::size_t m = kDefaultBins,
                                           std::string judge_id = {}, std::string setting = {},
                                           double region_split = 0.5) {
  auto valid = valid_only(records);
  if (valid.empty()) throw EmptyInputError("reliability_data needs at least one valid record");
  ReliabilityDiagram d;
  d.bins = bin_fixed(valid, m);
  d.n_total = valid.size();
  d.judge_id = std::move(judge_id);
  d.setting = std::move(setting);
  d.region_split = region_split;
  for (std::size_t i = 0; i < d.bins.size(); ++i) {
    const auto& b = d.bins[i];
    if (!b.occupied()) continue;
    GapRegion g;
    g.bin_index = i;
    const double diff = b.accuracy - b.mean_confidence;
    g.sign = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
    g.magnitude = std::abs(diff);
    if (b.lower >= region_split)
      g.region = ConfidenceRegion::High;
    else if (b.upper <= region_split)
      g.region = ConfidenceRegion::Low;
    d.gap_regions.push_back(g);
  }
  return d;
}

inline json to_json(const ReliabilityDiagram& d) {
  json bins = json::array();
  for (const auto& b : d.bins)
    bins.push_back({{"lower", b.lower},
                    {"upper", b.upper},
                    {"count", b.count},
                    {"mean_confidence", b.mean_confidence},
                    {"accuracy", b.accuracy}});
  json gaps = json::array();
  for (const auto& g : d.gap_regions)
    gaps.push_back({{"bin", g.bin_index},
                    {"sign", g.sign},
                    {"magnitude", g.magnitude},
                    {"region", std::string(to_string(g.region))}});
  return json{{"judge_id", d.judge_id}, {"setting", d.setting}, {"n_total", d.n_total},
              {"region_split", d.region_split}, {"bins", bins}, {"gap_regions", gaps}};
}

struct TableRow {
  std::string label;
  std::map<std::string, double> metrics;  // keys: acc ece ace brier mce nll th
};

struct RenderedTable {
  std::string text;
  std::string csv;
};

struct TableColumn {
  const char* key;
  const char* title;
  double scale;
};

inline constexpr std::array<TableColumn, 7> kTableColumns{{{"acc", "Acc", 100.0},
                                                           {"ece", "ECE", 100.0},
                                                           {"ace", "ACE", 100.0},
                                                           {"brier", "Brier", 1.0},
                                                           {"mce", "MCE", 100.0},
                                                           {"nll", "NLL", 1.0},
                                                           {"th", "TH", 1.0}}};

inline constexpr std::string_view kMissingCell = "—";

/// Rows sorted by accuracy, highest first. Acc/ECE/ACE/MCE are shown in
/// percent; every value is printed with two decimals; missing values as an em dash.
inline RenderedTable render_table(std::vector<TableRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
    auto ia = a.metrics.find("acc");
    auto ib = b.metrics.find("acc");
    const bool ha = ia != a.metrics.end();
    const bool hb = ib != b.metrics.end();
    if (ha != hb) return ha;
    return ha && ia->second > ib->second;
  });

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"Model"};
  for (const auto& c : kTableColumns) header.emplace_back(c.title);
  cells.push_back(header);
  for (const auto& r : rows) {
    std::vector<std::string> line{r.label};
    for (const auto& c : kTableColumns) {
      auto it = r.metrics.find(c.key);
      line.push_back(it == r.metrics.end() ? std::string(kMissingCell) : fmt::fixed(it->second * c.scale, 2));
    }
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], fmt::display_width(line[i]));

  RenderedTable out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const auto& line = cells[r];
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out.text += "  ";
      out.text += i == 0 ? fmt::pad_right(line[i], width[i]) : fmt::pad_left(line[i], width[i]);
    }
    while (!out.text.empty() && out.text.back() == ' ') out.text.pop_back();
    out.text += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out.text += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    }
  }

  for (std::size_t r = 0; r < cells.size(); ++r) {
    const auto& line = cells[r];
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out.csv += ',';
      out.csv += r == 0 ? line[i] : fmt::csv_field(line[i] == kMissingCell ? std::string() : line[i]);
    }
    out.csv += '\n';
  }
  return out;
}

/// Standalone SVG: identity diagonal, one bar per occupied bin (height = accuracy)
/// and a shaded overlay between accuracy and mean confidence.
inline std::string render_reliability_svg(const ReliabilityDiagram& d) {
  constexpr double kSize = 480.0;
  constexpr double kMargin = 60.0;
  constexpr double kPlot = kSize - 2 * kMargin;
  auto px = [](double c) { return fmt::fixed(kMargin + c * kPlot, 2); };
  auto py = [](double a) { return fmt::fixed(kSize - kMargin - a * kPlot, 2); };
  auto len = [](double v) { return fmt::fixed(v * kPlot, 2); };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n"
    << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"480\" height=\"480\" fill=\"#ffffff\"/>\n"
    << "<rect class=\"frame\" x=\"" << px(0) << "\" y=\"" << py(1) << "\" width=\"" << len(1) << "\" height=\""
    << len(1) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (double t : {0.0, 0.5, 1.0}) {
    const auto label = fmt::fixed(t, 1);
    s << "<text class=\"tick\" x=\"" << px(t) << "\" y=\"" << fmt::fixed(kSize - kMargin + 18, 2)
      << "\" font-size=\"12\" text-anchor=\"middle\">" << label << "</text>\n";
    s << "<text class=\"tick\" x=\"" << fmt::fixed(kMargin - 8, 2) << "\" y=\"" << py(t)
      << "\" font-size=\"12\" text-anchor=\"end\">" << label << "</text>\n";
  }
  s << "<text class=\"axis\" x=\"240.00\" y=\"460.00\" font-size=\"13\" text-anchor=\"middle\">Confidence</text>\n"
    << "<text class=\"axis\" x=\"18.00\" y=\"240.00\" font-size=\"13\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 18 240)\">Accuracy</text>\n";
  std::string title = d.judge_id.empty() ? "Reliability" : d.judge_id;
  if (!d.setting.empty()) title += " (" + d.setting + ")";
  title += " N=" + std::to_string(d.n_total);
  s << "<text class=\"title\" x=\"240.00\" y=\"36.00\" font-size=\"15\" text-anchor=\"middle\">" << title
    << "</text>\n";

  for (const auto& b : d.bins) {
    if (!b.occupied()) continue;
    s << "<rect class=\"bar\" x=\"" << px(b.lower) << "\" y=\"" << py(b.accuracy) << "\" width=\""
      << len(b.upper - b.lower) << "\" height=\"" << len(b.accuracy)
      << "\" fill=\"#4c72b0\" stroke=\"#ffffff\"/>\n";
  }
  for (const auto& g : d.gap_regions) {
    const auto& b = d.bins[g.bin_index];
    const double top = std::max(b.accuracy, b.mean_confidence);
    const char* fill = g.region == ConfidenceRegion::High  ? "#d62728"
                       : g.region == ConfidenceRegion::Low ? "#2ca02c"
                                                           : "#7f7f7f";
    s << "<rect class=\"gap\" x=\"" << px(b.lower) << "\" y=\"" << py(top) << "\" width=\""
      << len(b.upper - b.lower) << "\" height=\"" << len(g.magnitude) << "\" fill=\"" << fill
      << "\" fill-opacity=\"0.35\"/>\n";
  }
  s << "<line class=\"diagonal\" x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
    << py(1) << "\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n";
  s << "</svg>\n";
  return s.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

inline void render_reliability_svg(const ReliabilityDiagram& d, const std::filesystem::path& path) {
  write_text_file(path, render_reliability_svg(d));
}

struct DisagreementBar {
  std::string fuser_id;
  long long positive = 0;  // correct disagreements
  long long negative = 0;  // minus incorrect disagreements
};

/// One (+correct, -incorrect) pair per fuser, in lexicographic fuser order.
inline std::vector<DisagreementBar> disagreement_chart_data(const std::map<std::string, DisagreementStats>& stats) {
  std::vector<DisagreementBar> bars;
  for (const auto& [id, s] : stats)
    bars.push_back({id, static_cast<long long>(s.correct_disagreements),
                    -static_cast<long long>(s.incorrect_disagreements)});
  return bars;
}

inline json to_json(const std::vector<DisagreementBar>& bars) {
  json arr = json::array();
  for (const auto& b : bars) arr.push_back({{"fuser_id", b.fuser_id}, {"positive", b.positive}, {"negative", b.negative}});
  return arr;
}

inline std::string to_csv(const std::vector<DisagreementBar>& bars) {
  std::string out = "fuser_id,positive,negative\n";
  for (const auto& b : bars)
    out += fmt::csv_field(b.fuser_id) + "," + std::to_string(b.positive) + "," + std::to_string(b.negative) + "\n";
  return out;
}

}  // namespace judgecal
