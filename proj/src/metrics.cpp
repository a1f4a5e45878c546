#include "flsched/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "flsched/error.hpp"

namespace flsched {

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, end);
}

std::vector<MetricsRow> metrics_rows(std::span<const RunResult> runs) {
  std::vector<MetricsRow> rows;
  for (std::size_t id = 0; id < runs.size(); ++id) {
    const auto& run = runs[id];
    for (const auto& rec : run.records) {
      rows.push_back({id, to_string(run.policy.kind), run.seed, rec.round, rec.accuracy, rec.loss,
                      rec.v, rec.n_reliable, rec.selected.size(), rec.mean_aou, rec.max_aou});
    }
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.policy << ',' << r.seed << ',' << r.round << ','
        << format_double(r.accuracy) << ',' << format_double(r.loss) << ','
        << format_double(r.v) << ',' << r.n_reliable << ',' << r.n_selected << ','
        << format_double(r.mean_aou) << ',' << format_double(r.max_aou) << '\n';
  }
}

namespace {

template <typename T>
T parse_field(const std::string& text, std::size_t line, const char* name) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError("metrics CSV line " + std::to_string(line) + ": bad value '" + text +
                      "' in column " + name);
  }
  return value;
}

}  // namespace

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("metrics CSV line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) throw FormatError("metrics CSV line 1: unexpected header");
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 11) {
      throw FormatError("metrics CSV line " + std::to_string(line_no) + ": expected 11 columns, got " +
                        std::to_string(cells.size()));
    }
    MetricsRow r;
    r.run_id = parse_field<std::size_t>(cells[0], line_no, "run_id");
    r.policy = cells[1];
    if (r.policy.empty()) {
      throw FormatError("metrics CSV line " + std::to_string(line_no) + ": empty policy");
    }
    r.seed = parse_field<std::uint64_t>(cells[2], line_no, "seed");
    r.round = parse_field<std::size_t>(cells[3], line_no, "round");
    r.accuracy = parse_field<double>(cells[4], line_no, "accuracy");
    r.loss = parse_field<double>(cells[5], line_no, "loss");
    r.v = parse_field<double>(cells[6], line_no, "v");
    r.n_reliable = parse_field<std::size_t>(cells[7], line_no, "n_reliable");
    r.n_selected = parse_field<std::size_t>(cells[8], line_no, "n_selected");
    r.mean_aou = parse_field<double>(cells[9], line_no, "mean_aou");
    r.max_aou = parse_field<double>(cells[10], line_no, "max_aou");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_client_dump(std::ostream& out, std::span<const RunResult> runs) {
  out << "run_id,policy,seed,round,client,selected,aou,shapley_score\n";
  for (std::size_t id = 0; id < runs.size(); ++id) {
    const auto& run = runs[id];
    for (const auto& rec : run.records) {
      std::vector<char> chosen(rec.client_aou.size(), 0);
      for (std::size_t k : rec.selected) {
        if (k < chosen.size()) chosen[k] = 1;
      }
      for (std::size_t k = 0; k < rec.client_aou.size(); ++k) {
        out << id << ',' << to_string(run.policy.kind) << ',' << run.seed << ',' << rec.round
            << ',' << k << ',' << int{chosen[k]} << ',' << format_double(rec.client_aou[k]) << ','
            << format_double(rec.client_scores[k]) << '\n';
      }
    }
  }
}

namespace {

struct Curve {
  std::map<std::size_t, std::vector<double>> by_round;
};

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string render_convergence_svg(std::span<const MetricsRow> rows) {
  std::map<std::string, Curve> curves;
  std::size_t first_round = std::numeric_limits<std::size_t>::max();
  std::size_t last_round = 0;
  for (const auto& r : rows) {
    curves[r.policy].by_round[r.round].push_back(r.accuracy);
    first_round = std::min(first_round, r.round);
    last_round = std::max(last_round, r.round);
  }
  if (rows.empty()) first_round = last_round = 0;

  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 70, kRight = 170, kTop = 30, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double span = std::max<double>(1.0, static_cast<double>(last_round - first_round));
  auto x_of = [&](std::size_t round) {
    return kLeft + plot_w * static_cast<double>(round - first_round) / span;
  };
  auto y_of = [&](double acc) { return kTop + plot_h * (1.0 - std::clamp(acc, 0.0, 1.0)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" style=\"fill:#ffffff\"/>\n";
  for (int i = 0; i <= 10; ++i) {
    const double acc = i / 10.0;
    const std::string y = fixed3(y_of(acc));
    svg << "<line x1=\"" << fixed3(kLeft) << "\" y1=\"" << y << "\" x2=\"" << fixed3(kLeft + plot_w)
        << "\" y2=\"" << y << "\" style=\"stroke:#e0e0e0;stroke-width:1\"/>\n";
    svg << "<text x=\"" << fixed3(kLeft - 8) << "\" y=\"" << fixed3(y_of(acc) + 4)
        << "\" style=\"font-family:sans-serif;font-size:11px;text-anchor:end\">" << fixed3(acc).substr(0, 3)
        << "</text>\n";
  }
  const std::size_t ticks = std::min<std::size_t>(10, last_round - first_round);
  for (std::size_t i = 0; i <= ticks; ++i) {
    const std::size_t round =
        first_round + (ticks == 0 ? 0 : (last_round - first_round) * i / ticks);
    svg << "<text x=\"" << fixed3(x_of(round)) << "\" y=\"" << fixed3(kTop + plot_h + 18)
        << "\" style=\"font-family:sans-serif;font-size:11px;text-anchor:middle\">" << round
        << "</text>\n";
  }
  svg << "<rect x=\"" << fixed3(kLeft) << "\" y=\"" << fixed3(kTop) << "\" width=\"" << fixed3(plot_w)
      << "\" height=\"" << fixed3(plot_h) << "\" style=\"fill:none;stroke:#000000;stroke-width:1\"/>\n";
  svg << "<text x=\"" << fixed3(kLeft + plot_w / 2) << "\" y=\"" << fixed3(kHeight - 15)
      << "\" style=\"font-family:sans-serif;font-size:13px;text-anchor:middle\">communication round</text>\n";
  svg << "<text x=\"18\" y=\"" << fixed3(kTop + plot_h / 2) << "\" transform=\"rotate(-90 18 "
      << fixed3(kTop + plot_h / 2)
      << ")\" style=\"font-family:sans-serif;font-size:13px;text-anchor:middle\">test accuracy</text>\n";

  std::size_t color = 0;
  for (const auto& [policy, curve] : curves) {
    const char* stroke = kPalette[color % std::size(kPalette)];
    std::ostringstream mean_pts, upper, lower;
    std::vector<std::string> lower_pts;
    for (const auto& [round, values] : curve.by_round) {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      const std::string x = fixed3(x_of(round));
      mean_pts << x << ',' << fixed3(y_of(mean)) << ' ';
      upper << x << ',' << fixed3(y_of(*hi)) << ' ';
      lower_pts.push_back(x + ',' + fixed3(y_of(*lo)));
    }
    std::string band = upper.str();
    for (auto it = lower_pts.rbegin(); it != lower_pts.rend(); ++it) band += *it + ' ';
    if (!band.empty()) band.pop_back();
    std::string line = mean_pts.str();
    if (!line.empty()) line.pop_back();
    svg << "<polygon class=\"band\" points=\"" << band << "\" style=\"fill:" << stroke
        << ";fill-opacity:0.2;stroke:none\"/>\n";
    svg << "<polyline class=\"mean\" points=\"" << line << "\" style=\"fill:none;stroke:" << stroke
        << ";stroke-width:2\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(color);
    svg << "<line x1=\"" << fixed3(kWidth - kRight + 15) << "\" y1=\"" << fixed3(ly) << "\" x2=\""
        << fixed3(kWidth - kRight + 40) << "\" y2=\"" << fixed3(ly) << "\" style=\"stroke:" << stroke
        << ";stroke-width:2\"/>\n";
    svg << "<text x=\"" << fixed3(kWidth - kRight + 46) << "\" y=\"" << fixed3(ly + 4)
        << "\" style=\"font-family:sans-serif;font-size:12px\">" << xml_escape(policy) << "</text>\n";
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace flsched
