#pragma once

// Static four-panel SVG: theta(t), u(t), update stems, Gamma(t).
// Output depends only on the recorded samples and event times.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "etes/sim.hpp"

namespace etes {

struct PlotSeries {
  std::string label;
  std::string color;
  const Trajectory* trajectory = nullptr;
  const EventLog* events = nullptr;
};

namespace detail {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

}  // namespace detail

/// Renders the panels. `reference_theta` and `reference_gamma` draw dashed
/// target lines when finite.
inline std::string render_svg(const std::vector<PlotSeries>& series, const std::string& title,
                              double reference_theta, double reference_gamma) {
  constexpr double kWidth = 900.0;
  constexpr double kPanel = 190.0;
  constexpr double kLeft = 80.0;
  constexpr double kRight = 20.0;
  constexpr double kTop = 40.0;
  constexpr double kGap = 30.0;
  constexpr std::size_t kMaxPoints = 2000;
  const char* names[4] = {"theta", "u", "updates (inter-event time)", "Gamma"};

  detail::Range tr;
  std::array<detail::Range, 4> yr;
  for (const auto& s : series) {
    for (const Sample& p : s.trajectory->samples) {
      tr.add(p.t);
      yr[0].add(p.theta);
      yr[1].add(p.u);
      yr[3].add(p.gamma);
    }
    yr[2].add(0.0);
    for (double v : s.events->intervals()) yr[2].add(v);
  }
  yr[0].add(reference_theta);
  yr[3].add(reference_gamma);
  tr.finish();
  for (auto& r : yr) r.finish();

  const double height = kTop + 4 * (kPanel + kGap) + 20.0;
  const double plot_w = kWidth - kLeft - kRight;
  auto px = [&](double t) { return kLeft + (t - tr.lo) / (tr.hi - tr.lo) * plot_w; };
  auto py = [&](int panel, double v) {
    const double top = kTop + panel * (kPanel + kGap);
    return top + kPanel - (v - yr[panel].lo) / (yr[panel].hi - yr[panel].lo) * kPanel;
  };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{:.1f}\" y=\"22\" font-size=\"15\">{}</text>\n",
      kWidth, height, kLeft, title);

  for (int p = 0; p < 4; ++p) {
    const double top = kTop + p * (kPanel + kGap);
    out += fmt::format(
        "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" "
        "stroke=\"#888\"/>\n",
        kLeft, top, plot_w, kPanel);
    out += fmt::format("<text x=\"6\" y=\"{:.1f}\">{}</text>\n", top + 14.0, names[p]);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n",
                       kLeft - 4.0, top + 10.0, yr[p].hi);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n",
                       kLeft - 4.0, top + kPanel, yr[p].lo);
  }
  const double bottom = kTop + 3 * (kPanel + kGap) + kPanel;
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">t = {:.4g} s</text>\n", kLeft,
                     bottom + 16.0, tr.lo);
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">t = {:.4g} s</text>\n",
                     kWidth - kRight, bottom + 16.0, tr.hi);

  auto dashed = [&](int panel, double v) {
    if (!std::isfinite(v)) return;
    out += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.2f}\" x2=\"{:.1f}\" y2=\"{:.2f}\" stroke=\"#444\" "
        "stroke-dasharray=\"5,4\"/>\n",
        kLeft, py(panel, v), kLeft + plot_w, py(panel, v));
  };
  dashed(0, reference_theta);
  dashed(3, reference_gamma);

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const auto& smp = s.trajectory->samples;
    const std::size_t stride = std::max<std::size_t>(1, smp.size() / kMaxPoints);
    for (int p : {0, 1, 3}) {
      std::string pts;
      for (std::size_t i = 0; i < smp.size(); i += stride) {
        const double v = p == 0 ? smp[i].theta : p == 1 ? smp[i].u : smp[i].gamma;
        pts += fmt::format("{:.2f},{:.2f} ", px(smp[i].t), py(p, v));
      }
      if (!smp.empty()) {
        const Sample& last = smp.back();
        const double v = p == 0 ? last.theta : p == 1 ? last.u : last.gamma;
        pts += fmt::format("{:.2f},{:.2f}", px(last.t), py(p, v));
      }
      out += fmt::format(
          "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n", s.color,
          pts);
    }
    const auto& times = s.events->times;
    for (std::size_t k = 1; k < times.size(); ++k) {
      const double x = px(times[k]);
      const double y = py(2, times[k] - times[k - 1]);
      out += fmt::format(
          "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\"/>"
          "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"{}\"/>\n",
          x, py(2, 0.0), x, y, s.color, x, y, s.color);
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"22\" fill=\"{}\">{} ({} updates)</text>\n",
                       kWidth - 260.0 + 130.0 * static_cast<double>(si % 2), s.color, s.label,
                       times.empty() ? 0 : times.size() - 1);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace etes
