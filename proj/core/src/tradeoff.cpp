#include "staleinfo/tradeoff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include "staleinfo/simulator.hpp"

namespace staleinfo {

namespace {

std::vector<TradeoffPoint> sorted_desc(std::span<const TradeoffPoint> points) {
  std::vector<TradeoffPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.lambda > b.lambda; });
  return sorted;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw StructuralError("log_spaced needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_lambda_grid() { return log_spaced(0.005, 5.0, 20); }

std::vector<TradeoffPoint> sweep(const PlantModel& model, const CostWeights& weights_base,
                                 std::span<const double> lambdas, const SweepOptions& options) {
  if (lambdas.empty()) throw StructuralError("sweep: no multipliers given");
  if (options.trajectories < 1) throw StructuralError("sweep: need at least one trajectory");
  for (double lambda : lambdas) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw StructuralError("sweep: multipliers must be positive, got " + num(lambda));
    }
  }

  std::vector<TradeoffPoint> points;
  points.reserve(lambdas.size());
  for (double lambda : lambdas) {
    const SimulationSetup setup =
        SimulationSetup::create(model, weights_base.with_lambda(lambda), options.noise_grid);
    const auto policy = make_policy(options.policy, setup);
    const auto summaries = run_batch_summaries(setup, *policy, options.master_seed,
                                               options.trajectories, options.workers);
    const Metrics metrics = empirical_metrics(summaries, setup.weights());

    TradeoffPoint p;
    p.lambda = lambda;
    p.A_hat = metrics.A_hat;
    p.se_A = metrics.se_A;
    p.J_hat = metrics.J_hat;
    p.se_J = metrics.se_J;
    p.trajectories = metrics.count;
    for (const auto& s : summaries) p.peak_age = std::max(p.peak_age, s.peak_age);
    points.push_back(p);
  }
  return sorted_desc(points);
}

void write_curve_csv(std::ostream& os, std::span<const TradeoffPoint> points) {
  os << "lambda,A_hat,se_A,J_hat,se_J,M\n";
  for (const auto& p : sorted_desc(points)) {
    os << num(p.lambda) << ',' << num(p.A_hat) << ',' << num(p.se_A) << ',' << num(p.J_hat)
       << ',' << num(p.se_J) << ',' << p.trajectories << '\n';
  }
}

void write_curve_svg(std::ostream& os, std::span<const TradeoffPoint> points) {
  constexpr double width = 640, height = 480;
  constexpr double left = 80, right = 30, top = 30, bottom = 70;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double j_lo = 0.0, j_hi = 1.0, a_lo = 0.0, a_hi = 1.0;
  if (!points.empty()) {
    j_lo = a_lo = std::numeric_limits<double>::infinity();
    j_hi = a_hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
      j_lo = std::min(j_lo, p.J_hat - p.se_J);
      j_hi = std::max(j_hi, p.J_hat + p.se_J);
      a_lo = std::min(a_lo, p.A_hat - p.se_A);
      a_hi = std::max(a_hi, p.A_hat + p.se_A);
    }
    a_lo = std::min(a_lo, 0.0);
    const double j_pad = std::max(1e-9, 0.05 * (j_hi - j_lo));
    const double a_pad = std::max(1e-9, 0.05 * (a_hi - a_lo));
    j_lo -= j_pad;
    j_hi += j_pad;
    a_hi += a_pad;
  }
  const auto sx = [&](double j) { return left + (j - j_lo) / (j_hi - j_lo) * plot_w; };
  const auto sy = [&](double a) { return top + plot_h - (a - a_lo) / (a_hi - a_lo) * plot_h; };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<g stroke=\"black\" stroke-width=\"1\">\n"
     << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
     << "\" y2=\"" << top + plot_h << "\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << top + plot_h << "\"/>\n</g>\n";

  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double j = j_lo + (j_hi - j_lo) * i / 4.0;
    const double a = a_lo + (a_hi - a_lo) * i / 4.0;
    os << "<line x1=\"" << coord(sx(j)) << "\" y1=\"" << top + plot_h << "\" x2=\""
       << coord(sx(j)) << "\" y2=\"" << top + plot_h + 5 << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << coord(sx(j)) << "\" y=\"" << top + plot_h + 18
       << "\" text-anchor=\"middle\">" << tick_label(j) << "</text>\n"
       << "<line x1=\"" << left - 5 << "\" y1=\"" << coord(sy(a)) << "\" x2=\"" << left
       << "\" y2=\"" << coord(sy(a)) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << left - 8 << "\" y=\"" << coord(sy(a) + 4)
       << "\" text-anchor=\"end\">" << tick_label(a) << "</text>\n";
  }
  os << "</g>\n"
     << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 20
     << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
     << "control performance J</text>\n"
     << "<text x=\"20\" y=\"" << top + plot_h / 2
     << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
     << top + plot_h / 2 << ")\">average age A</text>\n";

  std::vector<TradeoffPoint> by_j(points.begin(), points.end());
  std::sort(by_j.begin(), by_j.end(),
            [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.J_hat < b.J_hat; });
  if (by_j.size() > 1) {
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : by_j) os << coord(sx(p.J_hat)) << ',' << coord(sy(p.A_hat)) << ' ';
    os << "\"/>\n";
  }
  os << "<g stroke=\"steelblue\" fill=\"steelblue\">\n";
  for (const auto& p : by_j) {
    const std::string x = coord(sx(p.J_hat));
    const std::string y = coord(sy(p.A_hat));
    os << "<line x1=\"" << coord(sx(p.J_hat - p.se_J)) << "\" y1=\"" << y << "\" x2=\""
       << coord(sx(p.J_hat + p.se_J)) << "\" y2=\"" << y << "\"/>\n"
       << "<line x1=\"" << x << "\" y1=\"" << coord(sy(p.A_hat - p.se_A)) << "\" x2=\"" << x
       << "\" y2=\"" << coord(sy(p.A_hat + p.se_A)) << "\"/>\n"
       << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\"><title>lambda="
       << tick_label(p.lambda) << "</title></circle>\n";
  }
  os << "</g>\n</svg>\n";
}

void emit_curve(std::span<const TradeoffPoint> points, const std::filesystem::path& path,
                bool plot) {
  if (points.empty()) throw StructuralError("emit_curve: no points to write");
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_curve_csv(out, points);
    if (!out) throw std::runtime_error("failed writing " + path.string());
  }
  if (plot) {
    std::filesystem::path svg = path;
    svg.replace_extension(".svg");
    std::ofstream out(svg, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + svg.string());
    write_curve_svg(out, points);
  }
}

}  // namespace staleinfo
