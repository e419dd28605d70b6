#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "svidr/basis.hpp"
#include "svidr/errors.hpp"
#include "svidr/variational.hpp"

namespace svidr {

using nlohmann::json;

// ---- atomic file helpers ----------------------------------------------

// Write via a temp file in the same directory, then rename into place, so a
// crash mid-write never leaves a truncated artifact.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.flush()) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---- CSV ----------------------------------------------------------------

namespace detail {
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(cell);
  return out;
}
}  // namespace detail

// Numeric CSV with a header row; values use '.' as the decimal separator.
inline Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV: " + path.string());
  Dataset d;
  d.names = detail::split_csv_line(line);
  d.columns.resize(d.names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != d.names.size())
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(d.names.size()));
    for (std::size_t j = 0; j < cells.size(); ++j) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cells[j], &pos);
      } catch (const std::exception&) {
        throw DataError(path.string() + ": row " + std::to_string(row) +
                        ": not a number: '" + cells[j] + "'");
      }
      if (pos != cells[j].size())
        throw DataError(path.string() + ": row " + std::to_string(row) +
                        ": trailing characters in '" + cells[j] + "'");
      d.columns[j].push_back(v);
    }
  }
  d.n = d.columns.empty() ? 0 : d.columns[0].size();
  return d;
}

inline void write_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ostringstream out;
  for (std::size_t j = 0; j < d.names.size(); ++j)
    out << (j ? "," : "") << d.names[j];
  out << "\n";
  for (std::size_t i = 0; i < d.n; ++i) {
    for (std::size_t j = 0; j < d.columns.size(); ++j)
      out << (j ? "," : "") << detail::fmt_double(d.columns[j][i]);
    out << "\n";
  }
  atomic_write(path, out.str());
}

// Generic table writer for reports (mixed string/number cells pre-formatted).
inline void write_table_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << r[j];
    out << "\n";
  }
  atomic_write(path, out.str());
}

// ---- posterior artifact ---------------------------------------------------

struct PosteriorArtifact {
  GaussianPosterior posterior;
  std::vector<std::string> labels;
  Vec<double> tau_hat;                      // point estimate / location
  std::vector<std::string> tau_labels;
  TauVariational tau_variational;           // only when has_tau_variational
  bool has_tau_variational = false;
};

inline json posterior_to_json(const PosteriorArtifact& a) {
  json j;
  j["schema"] = "svidr-posterior-v1";
  j["dim"] = a.posterior.mean.size();
  j["labels"] = a.labels;
  j["mean"] = a.posterior.mean;
  j["precision_cholesky_packed"] = a.posterior.L.entries;  // row-major lower
  j["tau"]["labels"] = a.tau_labels;
  j["tau"]["estimate"] = a.tau_hat;
  if (a.has_tau_variational) {
    j["tau"]["variational"]["location"] = a.tau_variational.location;
    j["tau"]["variational"]["log_scale"] = a.tau_variational.log_scale;
  }
  return j;
}

inline PosteriorArtifact posterior_from_json(const json& j) {
  if (!j.contains("schema") || j.at("schema") != "svidr-posterior-v1")
    throw DataError("posterior artifact: missing or unknown schema tag");
  PosteriorArtifact a;
  a.posterior.mean = j.at("mean").get<Vec<double>>();
  const std::size_t q = j.at("dim").get<std::size_t>();
  if (a.posterior.mean.size() != q) throw DataError("posterior artifact: dim/mean mismatch");
  a.posterior.L.dim = q;
  a.posterior.L.entries = j.at("precision_cholesky_packed").get<Vec<double>>();
  if (a.posterior.L.entries.size() != packed_size(q))
    throw DataError("posterior artifact: packed Cholesky length");
  a.labels = j.at("labels").get<std::vector<std::string>>();
  if (a.labels.size() != q) throw DataError("posterior artifact: label count");
  const json& t = j.at("tau");
  a.tau_labels = t.at("labels").get<std::vector<std::string>>();
  a.tau_hat = t.at("estimate").get<Vec<double>>();
  if (t.contains("variational")) {
    a.has_tau_variational = true;
    a.tau_variational.location = t.at("variational").at("location").get<Vec<double>>();
    a.tau_variational.log_scale = t.at("variational").at("log_scale").get<Vec<double>>();
  }
  return a;
}

inline void write_posterior(const std::filesystem::path& path, const PosteriorArtifact& a) {
  atomic_write(path, posterior_to_json(a).dump(2) + "\n");
}

inline PosteriorArtifact read_posterior(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    return posterior_from_json(j);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---- SVG line plots ---------------------------------------------------

struct SvgSeries {
  std::string name;
  Vec<double> y;
  std::string color = "#1f6fb4";
};

struct SvgBand {
  Vec<double> lower, upper;
  std::string color = "#1f6fb4";
};

// Minimal SVG 1.1 line plot: axes, optional shaded band, one polyline per
// series. Enough to eyeball traces and effect curves without a plot library.
inline std::string svg_line_plot(const std::string& title, const Vec<double>& x,
                                 const std::vector<SvgSeries>& series,
                                 const SvgBand* band = nullptr) {
  if (x.empty()) throw DataError("svg_line_plot: empty x");
  const double W = 640, H = 420, ml = 60, mr = 20, mt = 40, mb = 40;
  double xmin = x.front(), xmax = x.front(), ymin = 0, ymax = 0;
  bool y_set = false;
  for (double v : x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
  auto take_y = [&](const Vec<double>& ys) {
    for (double v : ys) {
      if (!std::isfinite(v)) continue;
      if (!y_set) { ymin = ymax = v; y_set = true; }
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  };
  for (const auto& s : series) take_y(s.y);
  if (band != nullptr) { take_y(band->lower); take_y(band->upper); }
  if (!y_set) { ymin = 0; ymax = 1; }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };
  auto f = [](double v) { return detail::fmt_double(std::round(v * 100) / 100); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
    << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << title << "</text>\n";
  // axes
  s << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
    << H - mb << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + k * (xmax - xmin) / 4;
    const double yv = ymin + k * (ymax - ymin) / 4;
    s << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << f(xv)
      << "</text>\n";
    s << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << f(yv)
      << "</text>\n";
  }
  if (band != nullptr) {
    if (band->lower.size() != x.size() || band->upper.size() != x.size())
      throw DimensionMismatch("svg_line_plot: band length");
    s << "<polygon fill=\"" << band->color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i)
      s << px(x[i]) << "," << py(band->lower[i]) << " ";
    for (std::size_t i = x.size(); i-- > 0;)
      s << px(x[i]) << "," << py(band->upper[i]) << " ";
    s << "\"/>\n";
  }
  for (const auto& ser : series) {
    if (ser.y.size() != x.size()) throw DimensionMismatch("svg_line_plot: series length");
    s << "<polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) s << px(x[i]) << "," << py(ser.y[i]) << " ";
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline void write_svg(const std::filesystem::path& path, const std::string& title,
                      const Vec<double>& x, const std::vector<SvgSeries>& series,
                      const SvgBand* band = nullptr) {
  atomic_write(path, svg_line_plot(title, x, series, band));
}

}  // namespace svidr
