#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "airlift/config.hpp"
#include "airlift/errors.hpp"

namespace airlift::config {

namespace fs = std::filesystem;

namespace {

struct Table {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> columns;

  bool has(const std::string& c) const { return columns.count(c) > 0; }
  const std::vector<double>& at(const std::string& c) const { return columns.at(c); }
};

Table read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open log " + path.string());
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw IoError("log " + path.string() + " is empty");
  {
    std::istringstream hs(line);
    std::string name;
    while (std::getline(hs, name, ',')) {
      t.names.push_back(name);
      t.columns[name];
    }
  }
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t col = 0;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p || col >= t.names.size()) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
      }
      t.columns[t.names[col++]].push_back(v);
      if (*end == ',') {
        p = end + 1;
      } else if (*end == '\0' || *end == '\r') {
        break;
      } else {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
      }
    }
    if (col != t.names.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(t.names.size()) + " fields, found " + std::to_string(col));
    }
  }
  return t;
}

struct Series {
  std::string label;
  std::vector<double> values;
  std::string color;
  bool dashed = false;
};

struct Panel {
  std::string ylabel;
  std::vector<Series> series;
};

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Stacked panels sharing the time axis; event markers are vertical dashed
// lines across every panel.
void write_svg(const fs::path& path, const std::string& title, const std::vector<double>& t,
               const std::vector<Panel>& panels, const std::vector<double>& events) {
  const double width = 900, left = 70, right = 150, top = 40, panel_h = 180, gap = 30;
  const double plot_w = width - left - right;
  const double height = top + panels.size() * (panel_h + gap) + 20;
  const double t0 = t.empty() ? 0.0 : t.front();
  const double t1 = t.empty() ? 1.0 : std::max(t.back(), t0 + 1e-9);
  const std::size_t stride = std::max<std::size_t>(1, t.size() / 2000);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << title << "</text>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double y0 = top + p * (panel_h + gap);
    double lo = INFINITY, hi = -INFINITY;
    for (const Series& s : panels[p].series) {
      for (double v : s.values) {
        if (std::isfinite(v)) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto X = [&](double tt) { return left + plot_w * (tt - t0) / (t1 - t0); };
    auto Y = [&](double v) { return y0 + panel_h * (hi - v) / (hi - lo); };

    os << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << plot_w << "\" height=\""
       << panel_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">" << num(hi)
       << "</text>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << y0 + panel_h << "\" text-anchor=\"end\">"
       << num(lo) << "</text>\n";
    os << "<text x=\"14\" y=\"" << y0 + panel_h / 2 << "\" transform=\"rotate(-90 14 "
       << y0 + panel_h / 2 << ")\" text-anchor=\"middle\">" << panels[p].ylabel << "</text>\n";
    for (std::size_t s = 0; s < panels[p].series.size(); ++s) {
      const Series& se = panels[p].series[s];
      os << "<polyline fill=\"none\" stroke=\"" << se.color << "\" stroke-width=\"1.3\""
         << (se.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
      for (std::size_t i = 0; i < se.values.size() && i < t.size(); i += stride) {
        if (!std::isfinite(se.values[i])) continue;
        os << num(X(t[i])) << ',' << num(Y(se.values[i])) << ' ';
      }
      os << "\"/>\n";
      os << "<text x=\"" << left + plot_w + 10 << "\" y=\"" << y0 + 16 + 16 * s << "\" fill=\""
         << se.color << "\">" << se.label << "</text>\n";
    }
    for (double e : events) {
      os << "<line class=\"event-marker\" x1=\"" << num(X(e)) << "\" x2=\"" << num(X(e))
         << "\" y1=\"" << y0 << "\" y2=\"" << y0 + panel_h
         << "\" stroke=\"red\" stroke-dasharray=\"3,3\"/>\n";
    }
  }
  os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 6
     << "\" text-anchor=\"middle\">t (s) [" << num(t0) << ", " << num(t1) << "]</text>\n";
  os << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw IoError("cannot write plot " + path.string());
  out << os.str();
  if (!out) throw IoError("failed writing plot " + path.string());
}

std::vector<double> event_times(const Table& tab, std::size_t robots) {
  const auto& t = tab.at("t");
  std::vector<double> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    bool ev = tab.has("event") && tab.at("event")[i] != 0.0;
    for (std::size_t k = 1; k <= robots && i > 0; ++k) {
      const auto& f = tab.at("taut" + std::to_string(k));
      if (f[i] != f[i - 1]) ev = true;
    }
    if (ev && (out.empty() || t[i] > out.back())) out.push_back(t[i]);
  }
  return out;
}

void require(const Table& tab, std::initializer_list<std::string> cols, const fs::path& path) {
  for (const std::string& c : cols) {
    if (!tab.has(c)) throw IoError(path.string() + ": missing column '" + c + "'");
  }
}

}  // namespace

std::vector<fs::path> emit_plots(const fs::path& log_path, const fs::path& out_dir) {
  const Table tab = read_csv(log_path);
  require(tab, {"t", "xL_x", "xL_y", "xL_z", "vL_x", "vL_y", "vL_z", "xLd_x", "xLd_y", "xLd_z"},
          log_path);
  std::size_t robots = 0;
  while (tab.has("taut" + std::to_string(robots + 1))) ++robots;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create plot directory " + out_dir.string() + ": " + ec.message());

  const auto& t = tab.at("t");
  const std::vector<double> events = event_times(tab, robots);
  std::vector<fs::path> written;
  const char* axes[] = {"x", "y", "z"};

  {
    std::vector<Panel> panels;
    for (int a = 0; a < 3; ++a) {
      panels.push_back({std::string(axes[a]) + " (m)",
                        {{"actual", tab.at(std::string("xL_") + axes[a]), kColors[0]},
                         {"desired", tab.at(std::string("xLd_") + axes[a]), kColors[1], true}}});
    }
    written.push_back(out_dir / "position.svg");
    write_svg(written.back(), "Payload position", t, panels, events);
  }
  {
    std::vector<Panel> panels;
    for (int a = 0; a < 3; ++a) {
      panels.push_back({std::string("v") + axes[a] + " (m/s)",
                        {{"actual", tab.at(std::string("vL_") + axes[a]), kColors[0]}}});
    }
    written.push_back(out_dir / "velocity.svg");
    write_svg(written.back(), "Payload velocity", t, panels, events);
  }
  if (tab.has("qL_w") && tab.has("qLd_w")) {
    auto euler = [&](const std::string& prefix) {
      std::vector<std::vector<double>> out(3, std::vector<double>(t.size()));
      for (std::size_t i = 0; i < t.size(); ++i) {
        const Quat q(tab.at(prefix + "_w")[i], tab.at(prefix + "_x")[i], tab.at(prefix + "_y")[i],
                     tab.at(prefix + "_z")[i]);
        const Vec3 e = euler_zyx(q.normalized().toRotationMatrix()) * (180.0 / kPi);
        for (int a = 0; a < 3; ++a) out[a][i] = e[a];
      }
      return out;
    };
    const auto actual = euler("qL");
    const auto desired = euler("qLd");
    const char* names[] = {"roll (deg)", "pitch (deg)", "yaw (deg)"};
    std::vector<Panel> panels;
    for (int a = 0; a < 3; ++a) {
      panels.push_back({names[a], {{"actual", actual[a], kColors[0]},
                                   {"desired", desired[a], kColors[1], true}}});
    }
    written.push_back(out_dir / "orientation.svg");
    write_svg(written.back(), "Payload orientation", t, panels, events);
  }
  {
    Panel tension{"tension (N)", {}};
    Panel flags{"taut flag", {}};
    for (std::size_t k = 1; k <= robots; ++k) {
      const std::string i = std::to_string(k);
      const char* color = kColors[(k - 1) % 6];
      if (tab.has("T" + i)) tension.series.push_back({"T" + i, tab.at("T" + i), color});
      flags.series.push_back({"taut" + i, tab.at("taut" + i), color});
    }
    std::vector<Panel> panels;
    if (!tension.series.empty()) panels.push_back(tension);
    panels.push_back(flags);
    written.push_back(out_dir / "tension.svg");
    write_svg(written.back(), "Cable tension and taut flags", t, panels, events);
  }
  return written;
}

}  // namespace airlift::config
