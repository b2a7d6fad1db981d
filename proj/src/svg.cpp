#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "duellab/error.hpp"
#include "duellab/runner.hpp"

namespace duellab {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 190, kTop = 40, kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Series {
  std::vector<std::pair<int, double>> points;
};

std::string render_one(const std::string& env, const std::map<std::string, Series>& series) {
  int x_max = 1;
  double y_max = 0.0;
  for (const auto& [_, s] : series)
    for (const auto& [x, y] : s.points) {
      x_max = std::max(x_max, x);
      if (std::isfinite(y)) y_max = std::max(y_max, y);
    }
  if (y_max <= 0.0) y_max = 1.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + pw * (x - 1.0) / std::max(1.0, x_max - 1.0); };
  auto sy = [&](double y) { return kTop + ph * (1.0 - y / y_max); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(env) +
         "</text>\n";
  // axes
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
         num(kTop + ph) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(kTop + ph) +
         "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = 1.0 + (x_max - 1.0) * i / 4.0;
    const double yv = y_max * i / 4.0;
    out += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(kTop + ph + 18) + "\" text-anchor=\"middle\">" +
           tick_label(std::round(xv)) + "</text>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(sy(yv) + 4) + "\" text-anchor=\"end\">" + tick_label(yv) +
           "</text>\n";
  }
  out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 18) +
         "\" text-anchor=\"middle\">round</text>\n";
  out += "<text x=\"18\" y=\"" + num(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num(kTop + ph / 2) + ")\">cumulative average regret</text>\n";

  std::size_t idx = 0;
  for (const auto& [agent, s] : series) {
    const char* color = kPalette[idx % std::size(kPalette)];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(y)) continue;
      if (!first) out += ' ';
      out += num(sx(x)) + "," + num(sy(y));
      first = false;
    }
    out += "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(idx);
    const double lx = kLeft + pw + 14;
    out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly + 4) + "\">" + escape(agent) + "</text>\n";
    ++idx;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

std::map<std::string, std::string> render_summary_svgs(const std::vector<SummaryRow>& rows) {
  if (rows.empty()) throw InvalidInput("plot: summary has no rows");
  std::map<std::string, std::map<std::string, Series>> by_env;
  for (const auto& r : rows) by_env[r.env][r.agent].points.emplace_back(r.round, r.mean);
  std::map<std::string, std::string> out;
  for (auto& [env, series] : by_env) {
    for (auto& [_, s] : series) std::sort(s.points.begin(), s.points.end());
    out[env] = render_one(env, series);
  }
  return out;
}

}  // namespace duellab
