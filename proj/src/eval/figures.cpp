#include "crumble/eval/figures.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "crumble/lob/io.hpp"

namespace crumble::eval {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Minimal SVG canvas with a single data-to-pixel transform.
class Svg {
 public:
  Svg(double width, double height) : w_(width), h_(height) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
             fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
    body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& color,
            double width = 1.0, const std::string& dash = "") {
    body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
             fmt(y2) + "\" stroke=\"" + color + "\" stroke-width=\"" + fmt(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double width = 1.5) {
    if (pts.empty()) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt(width) +
             "\" points=\"";
    for (const auto& [x, y] : pts) body_ += fmt(x) + "," + fmt(y) + " ";
    body_ += "\"/>\n";
  }
  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& color = "#333") {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" + fmt(size) +
             "\" font-family=\"sans-serif\" fill=\"" + color + "\">" + s + "</text>\n";
  }
  void triangle(double x, double y, double r, bool up, const std::string& color) {
    const double dy = up ? -r : r;
    body_ += "<polygon points=\"" + fmt(x - r) + "," + fmt(y) + " " + fmt(x + r) + "," + fmt(y) +
             " " + fmt(x) + "," + fmt(y + dy) + "\" fill=\"" + color + "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& color, double opacity) {
    body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) + "\" height=\"" +
             fmt(h) + "\" fill=\"" + color + "\" fill-opacity=\"" + fmt(opacity) + "\"/>\n";
  }
  void save(const std::string& path) {
    std::ofstream out(path);
    out << body_ << "</svg>\n";
  }
  double w() const { return w_; }
  double h() const { return h_; }

 private:
  double w_, h_;
  std::string body_;
};

struct Curve {
  std::string name;
  std::string color;
  const MethodMetrics* metrics;
};

void roc_panel(const std::string& path, const std::string& title,
               const std::vector<Curve>& curves) {
  const double W = 420, H = 420, L = 55, B = 45, T = 35, R = 15;
  Svg svg(W, H);
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double fpr) { return L + fpr * pw; };
  auto py = [&](double tpr) { return T + (1.0 - tpr) * ph; };
  svg.text(L, T - 12, title, 14.0, "#111");
  // Axes and diagonal.
  svg.line(L, T, L, T + ph, "#444");
  svg.line(L, T + ph, L + pw, T + ph, "#444");
  svg.line(px(0), py(0), px(1), py(1), "#bbb", 1.0, "4,4");
  for (double g = 0.0; g <= 1.001; g += 0.25) {
    svg.text(px(g) - 8, T + ph + 16, fmt(g), 10.0);
    svg.text(L - 30, py(g) + 4, fmt(g), 10.0);
  }
  svg.text(L + pw / 2 - 50, H - 8, "false positive rate", 11.0);
  svg.text(8, T - 8, "true positive rate", 11.0);
  double legend_y = T + 16;
  for (const auto& c : curves) {
    if (!c.metrics || !c.metrics->auc) continue;
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : c.metrics->roc) pts.emplace_back(px(p.fpr), py(p.tpr));
    svg.polyline(pts, c.color, 2.0);
    svg.text(L + 12, legend_y, c.name + "  AUC=" + fmt(*c.metrics->auc), 11.0, c.color);
    legend_y += 15;
  }
  svg.save(path);
}

const MethodMetrics* find_method(const ExperimentResult& r, const std::string& name) {
  const auto it = r.methods.find(name);
  return it == r.methods.end() ? nullptr : &it->second;
}

}  // namespace

void write_roc_figure(const std::string& path, const std::string& title,
                      const ExperimentResult& result) {
  roc_panel(path, title,
            {{"binary rule", "#e08214", find_method(result, "binary_rule")},
             {"rff logistic", "#2166ac", find_method(result, "rff")},
             {"mlp", "#1a9850", find_method(result, "mlp")},
             {"mlp + temporal", "#762a83", find_method(result, "mlp_temporal")}});
}

void write_temporal_ablation_figure(const std::string& path, const std::string& title,
                                    const ExperimentResult& result) {
  roc_panel(path, title,
            {{"binary rule", "#e08214", find_method(result, "binary_rule")},
             {"rff logistic", "#2166ac", find_method(result, "rff")},
             {"mlp", "#1a9850", find_method(result, "mlp")},
             {"mlp + temporal", "#762a83", find_method(result, "mlp_temporal")}});
}

void write_trace_figure(const std::string& path, const std::string& run_dir) {
  if (!std::filesystem::exists(run_dir + "/session_0/snapshots.csv")) return;
  const auto snaps = lob::read_snapshots_csv(run_dir + "/session_0/snapshots.csv");
  const auto events = read_scores_csv(run_dir + "/scores.csv");

  std::vector<std::pair<TimeNs, double>> mids;
  for (const auto& s : snaps) {
    if (s.bid && s.ask) mids.emplace_back(s.ts, 0.5 * static_cast<double>(*s.bid + *s.ask));
  }
  if (mids.empty()) return;
  const std::size_t stride = std::max<std::size_t>(1, mids.size() / 4000);

  const double W = 900, H = 460, L = 70, R = 20;
  const double top_t = 30, top_h = 240, bot_t = top_t + top_h + 40, bot_h = 120;
  Svg svg(W, H);
  const TimeNs t_lo = mids.front().first, t_hi = mids.back().first;
  double p_lo = mids.front().second, p_hi = p_lo;
  for (const auto& [t, m] : mids) {
    p_lo = std::min(p_lo, m);
    p_hi = std::max(p_hi, m);
  }
  if (p_hi == p_lo) p_hi = p_lo + 1;
  const double pw = W - L - R;
  auto px = [&](TimeNs t) {
    return L + pw * static_cast<double>(t - t_lo) / static_cast<double>(t_hi - t_lo);
  };
  auto py_mid = [&](double m) { return top_t + top_h * (1.0 - (m - p_lo) / (p_hi - p_lo)); };
  auto py_prob = [&](double p) { return bot_t + bot_h * (1.0 - p); };

  svg.text(L, 18, "midprice and crumbling detections (session 0)", 13.0, "#111");
  svg.line(L, top_t, L, top_t + top_h, "#444");
  svg.line(L, top_t + top_h, L + pw, top_t + top_h, "#444");
  svg.text(8, top_t + 8, fmt(p_hi / 100.0), 10.0);
  svg.text(8, top_t + top_h, fmt(p_lo / 100.0), 10.0);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < mids.size(); i += stride)
    pts.emplace_back(px(mids[i].first), py_mid(mids[i].second));
  svg.polyline(pts, "#2166ac", 1.0);

  // Detection markers: down-triangles for bid-side events, up for ask-side.
  for (const auto& e : events) {
    if (e.session != 0 || !e.label) continue;
    const double x = px(std::clamp(e.t0, t_lo, t_hi));
    svg.triangle(x, top_t + top_h + 10, 5.0, e.side == Side::Ask,
                 e.side == Side::Ask ? "#1a9850" : "#d73027");
  }

  svg.text(L, bot_t - 10, "gated crumbling probability", 12.0, "#111");
  svg.line(L, bot_t, L, bot_t + bot_h, "#444");
  svg.line(L, bot_t + bot_h, L + pw, bot_t + bot_h, "#444");
  svg.text(8, bot_t + 8, "1", 10.0);
  svg.text(8, bot_t + bot_h, "0", 10.0);
  for (const auto& e : events) {
    if (e.session != 0) continue;
    const double x0 = px(std::clamp(e.t0, t_lo, t_hi));
    const double x1 = std::max(x0 + 1.0, px(std::clamp(e.t1, t_lo, t_hi)));
    const double y = py_prob(e.p_mlp_temporal);
    svg.rect(x0, y, x1 - x0, bot_t + bot_h - y, "#762a83", 0.55);
  }
  svg.save(path);
}

}  // namespace crumble::eval
