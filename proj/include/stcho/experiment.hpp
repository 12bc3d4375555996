#ifndef STCHO_EXPERIMENT_HPP
#define STCHO_EXPERIMENT_HPP

// Parameter sweeps over a fixed trial plan, CSV rows, overlay rescaling of
// external series, and static SVG line plots.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stcho/config.hpp"
#include "stcho/error.hpp"
#include "stcho/parallel.hpp"
#include "stcho/trial.hpp"

namespace stcho {

struct ResultRow {
  double axis = 0.0;
  double mean_auc = 0.0;
  double auc_stddev = 0.0;
  std::size_t n_readers = 0;
  std::uint64_t seed = 0;
  std::string config_hash;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Pipeline configuration at one point of the sweep. The luminance axes move
/// one end of the display range: l_max keeps l_max / l_min, contrast_ratio
/// keeps l_max.
inline PipelineConfig at_axis_value(PipelineConfig cfg, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::slice_rate: cfg.slice_rate = v; break;
    case SweepAxis::ssr: cfg.ssr = v; break;
    case SweepAxis::l_max: {
      const double ratio = cfg.display.l_max / cfg.display.l_min;
      cfg.display.l_max = v;
      cfg.display.l_min = v / ratio;
      break;
    }
    case SweepAxis::contrast_ratio: cfg.display.l_min = cfg.display.l_max / v; break;
  }
  return cfg;
}

inline ExperimentConfig at_axis_value(ExperimentConfig cfg, double v) {
  cfg.pipeline = at_axis_value(cfg.pipeline, cfg.sweep.axis, v);
  cfg.sweep.values = {v};
  return cfg;
}

inline ResultRow make_row(double axis, const TrialResult& r, std::size_t n_readers, std::uint64_t seed,
                          std::string hash) {
  return {axis, r.mean_auc, std::sqrt(std::max(r.variance, 0.0)), n_readers, seed, std::move(hash)};
}

/// One trial per axis value, all with the same plan.
inline std::vector<ResultRow> run_sweep(const Dataset& ds, const TrialPlan& plan, const ExperimentConfig& cfg) {
  cfg.sweep.validate();
  const auto& values = cfg.sweep.values;
  std::vector<ResultRow> rows(values.size());
  auto point = [&](std::size_t i) {
    const ExperimentConfig at = at_axis_value(cfg, values[i]);
    try {
      rows[i] = make_row(values[i], run_trial(ds, plan, at.pipeline), plan.n_readers, plan.seed, config_hash(at));
    } catch (const Error& e) {
      throw InputError("sweep " + to_string(cfg.sweep.axis) + " = " + detail::fmt_double(values[i]) + ": " +
                       e.what());
    }
  };
  if (cfg.sweep.parallel) {
    parallel_for(values.size(), cfg.pipeline.threads, point);
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) point(i);
  }
  return rows;
}

inline constexpr const char* kCsvHeader = "axis,mean_auc,auc_stddev,n_readers,seed,config_hash";

inline std::string format_csv(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw InputError("emit_csv: no rows");
  std::string out = std::string(kCsvHeader) + "\n";
  for (const ResultRow& r : rows) {
    out += detail::fmt_double(r.axis) + "," + detail::fmt_double(r.mean_auc) + "," + detail::fmt_double(r.auc_stddev) +
           "," + std::to_string(r.n_readers) + "," + std::to_string(r.seed) + "," + r.config_hash + "\n";
  }
  return out;
}

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Non-empty lines after the header, each split on commas.
inline std::vector<std::vector<std::string>> csv_records(std::string_view text, std::string_view header) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != header) {
    throw InputError("csv: expected header '" + std::string(header) + "'");
  }
  std::vector<std::vector<std::string>> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(split_list(line));
  }
  return out;
}

}  // namespace detail

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  detail::write_text(path, format_csv(rows));
}

inline std::vector<ResultRow> parse_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  for (const auto& f : detail::csv_records(text, kCsvHeader)) {
    if (f.size() != 6) throw InputError("csv: expected 6 fields per row");
    rows.push_back({detail::parse_number<double>("axis", f[0]), detail::parse_number<double>("mean_auc", f[1]),
                    detail::parse_number<double>("auc_stddev", f[2]),
                    detail::parse_number<std::size_t>("n_readers", f[3]),
                    detail::parse_number<std::uint64_t>("seed", f[4]), f[5]});
  }
  return rows;
}

inline std::vector<ResultRow> read_csv(const std::string& path) { return parse_csv(detail::read_text(path)); }

struct SeriesPoint {
  double axis = 0.0;
  double value = 0.0;
  double tolerance = 0.0;

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct Series {
  std::string name;
  std::vector<SeriesPoint> points;
};

/// External series file: header `axis,value,tolerance`.
inline std::vector<SeriesPoint> parse_series_csv(std::string_view text) {
  std::vector<SeriesPoint> pts;
  for (const auto& f : detail::csv_records(text, "axis,value,tolerance")) {
    if (f.size() != 3) throw InputError("series csv: expected 3 fields per row");
    pts.push_back({detail::parse_number<double>("axis", f[0]), detail::parse_number<double>("value", f[1]),
                   detail::parse_number<double>("tolerance", f[2])});
  }
  return pts;
}

inline std::vector<SeriesPoint> read_series_csv(const std::string& path) {
  return parse_series_csv(detail::read_text(path));
}

struct AffineMap {
  double scale = 1.0;
  double offset = 0.0;
};

namespace detail {

inline double population_std(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Map x -> scale x + offset that gives the external values at the shared
/// axis points the anchor's mean and population std.
inline AffineMap overlay_map(const std::vector<SeriesPoint>& external, const std::vector<ResultRow>& anchor) {
  std::vector<double> ext;
  std::vector<double> anc;
  for (const SeriesPoint& p : external) {
    if (!(p.tolerance >= 0)) throw InputError("overlay: tolerances must be >= 0");
    for (const ResultRow& r : anchor) {
      if (std::abs(r.axis - p.axis) <= 1e-9 * std::max(1.0, std::abs(p.axis))) {
        ext.push_back(p.value);
        anc.push_back(r.mean_auc);
        break;
      }
    }
  }
  if (ext.size() < 2) throw InputError("overlay: need at least two axis points shared with the results");
  const double me = detail::mean_of(ext);
  const double ma = detail::mean_of(anc);
  const double se = detail::population_std(ext, me);
  const double sa = detail::population_std(anc, ma);
  if (se == 0.0) {
    if (sa != 0.0) throw InputError("overlay: external series is constant but the anchor is not");
    return {1.0, ma - me};
  }
  const double scale = sa / se;
  return {scale, ma - scale * me};
}

inline std::vector<SeriesPoint> overlay_rescale(const std::vector<SeriesPoint>& external,
                                                const std::vector<ResultRow>& anchor) {
  const AffineMap m = overlay_map(external, anchor);
  std::vector<SeriesPoint> out;
  for (const SeriesPoint& p : external) out.push_back({p.axis, m.scale * p.value + m.offset, m.scale * p.tolerance});
  return out;
}

inline std::string format_svg_plot(const std::vector<ResultRow>& rows, const std::vector<Series>& overlays,
                                   std::string_view x_label = "axis") {
  if (rows.empty()) throw InputError("emit_svg_plot: no rows");
  std::vector<Series> all;
  Series ours{"stcho", {}};
  for (const ResultRow& r : rows) ours.points.push_back({r.axis, r.mean_auc, r.auc_stddev});
  all.push_back(std::move(ours));
  all.insert(all.end(), overlays.begin(), overlays.end());

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : all) {
    for (const SeriesPoint& p : s.points) {
      x0 = std::min(x0, p.axis);
      x1 = std::max(x1, p.axis);
      y0 = std::min(y0, p.value - p.tolerance);
      y1 = std::max(y1, p.value + p.tolerance);
    }
  }
  if (x1 == x0) { x0 -= 1; x1 += 1; }
  if (y1 == y0) { y0 -= 0.05; y1 += 0.05; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  constexpr double kW = 640, kH = 400, kL = 70, kR = 20, kT = 20, kB = 50;
  auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
  auto py = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto escape = [](std::string_view s) {
    std::string o;
    for (char ch : s) {
      switch (ch) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += ch;
      }
    }
    return o;
  };
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<g stroke=\"black\" fill=\"none\"><line x1=\"" + num(kL) + "\" y1=\"" + num(kH - kB) + "\" x2=\"" +
         num(kW - kR) + "\" y2=\"" + num(kH - kB) + "\"/><line x1=\"" + num(kL) + "\" y1=\"" + num(kT) + "\" x2=\"" +
         num(kL) + "\" y2=\"" + num(kH - kB) + "\"/></g>\n";
  svg += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    svg += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(kH - kB + 16) + "\" text-anchor=\"middle\">" +
           detail::fmt_double(std::round(xv * 100) / 100) + "</text>\n";
    svg += "<text x=\"" + num(kL - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" + num(yv) +
           "</text>\n";
  }
  svg += "<text x=\"" + num((kL + kW - kR) / 2) + "\" y=\"" + num(kH - 10) + "\" text-anchor=\"middle\">" +
         escape(x_label) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + num((kT + kH - kB) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num((kT + kH - kB) / 2) + ")\">AUC</text>\n";
  svg += "</g>\n";

  for (std::size_t s = 0; s < all.size(); ++s) {
    const std::string color = kColors[s % std::size(kColors)];
    std::vector<SeriesPoint> pts = all[s].points;
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.axis < b.axis; });
    svg += "<g data-series=\"" + escape(all[s].name) + "\" stroke=\"" + color + "\">\n";
    std::string poly;
    for (const SeriesPoint& p : pts) {
      if (!poly.empty()) poly += " ";
      poly += num(px(p.axis)) + "," + num(py(p.value));
    }
    svg += "<polyline fill=\"none\" points=\"" + poly + "\"/>\n";
    for (const SeriesPoint& p : pts) {
      const std::string x = num(px(p.axis));
      svg += "<line x1=\"" + x + "\" y1=\"" + num(py(p.value - p.tolerance)) + "\" x2=\"" + x + "\" y2=\"" +
             num(py(p.value + p.tolerance)) + "\"/>\n";
    }
    svg += "</g>\n";
    svg += "<text x=\"" + num(kW - kR - 4) + "\" y=\"" + num(kT + 14 + 14 * static_cast<double>(s)) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + color + "\">" +
           escape(all[s].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

inline void emit_svg_plot(const std::vector<ResultRow>& rows, const std::vector<Series>& overlays,
                          const std::string& path, std::string_view x_label = "axis") {
  detail::write_text(path, format_svg_plot(rows, overlays, x_label));
}

}  // namespace stcho

#endif  // STCHO_EXPERIMENT_HPP
