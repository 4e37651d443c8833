#include "gradkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gradkit/errors.hpp"
#include "gradkit/probing.hpp"

namespace gradkit {

namespace {

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw error("write failed for " + path.string());
}

struct axis {
  double lo = 0, hi = 1;
  double px0 = 0, px1 = 1;  // pixel range; y axes run px0 > px1

  double at(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }

  std::vector<double> ticks() const {
    double range = hi - lo;
    double raw = range / 5;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double frac = raw / mag;
    double step = (frac < 1.5 ? 1 : frac < 3 ? 2 : frac < 7 ? 5 : 10) * mag;
    std::vector<double> out;
    for (double v = std::ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
      out.push_back(std::fabs(v) < step * 1e-9 ? 0.0 : v);
    }
    return out;
  }
};

axis make_axis(double lo, double hi, double px0, double px1) {
  if (lo == hi) {
    lo -= 1;
    hi += 1;
  }
  double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad, px0, px1};
}

const char* kSeriesPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#7f7f7f"};

std::string svg_open(int w, int h) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << ' ' << h << "\" font-family=\"monospace\">\n"
      << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
  return out.str();
}

void svg_axes(std::ostringstream& out, const axis& x, const axis& y, const std::string& x_label,
              const std::string& y_label) {
  out << "<line x1=\"" << x.px0 << "\" y1=\"" << y.px0 << "\" x2=\"" << x.px1 << "\" y2=\""
      << y.px0 << "\" stroke=\"#000\"/>\n";
  out << "<line x1=\"" << x.px0 << "\" y1=\"" << y.px0 << "\" x2=\"" << x.px0 << "\" y2=\""
      << y.px1 << "\" stroke=\"#000\"/>\n";
  for (double v : x.ticks()) {
    double px = x.at(v);
    out << "<line x1=\"" << fmt(px) << "\" y1=\"" << y.px0 << "\" x2=\"" << fmt(px) << "\" y2=\""
        << y.px0 + 4 << "\" stroke=\"#000\"/>\n";
    out << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(y.at(y.lo)) << "\" x2=\"" << fmt(px)
        << "\" y2=\"" << fmt(y.px1) << "\" stroke=\"#eee\"/>\n";
    out << "<text x=\"" << fmt(px) << "\" y=\"" << y.px0 + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(v, "%g") << "</text>\n";
  }
  for (double v : y.ticks()) {
    double py = y.at(v);
    out << "<line x1=\"" << x.px0 - 4 << "\" y1=\"" << fmt(py) << "\" x2=\"" << x.px0
        << "\" y2=\"" << fmt(py) << "\" stroke=\"#000\"/>\n";
    out << "<line x1=\"" << x.px0 << "\" y1=\"" << fmt(py) << "\" x2=\"" << x.px1 << "\" y2=\""
        << fmt(py) << "\" stroke=\"#eee\"/>\n";
    out << "<text x=\"" << x.px0 - 7 << "\" y=\"" << fmt(py + 3)
        << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(v, "%g") << "</text>\n";
  }
  double xmid = (x.px0 + x.px1) / 2;
  out << "<text x=\"" << fmt(xmid) << "\" y=\"" << y.px0 + 34
      << "\" font-size=\"12\" text-anchor=\"middle\">" << x_label << "</text>\n";
  double ymid = (y.px0 + y.px1) / 2;
  out << "<text x=\"14\" y=\"" << fmt(ymid) << "\" font-size=\"12\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 14 " << fmt(ymid) << ")\">" << y_label << "</text>\n";
}

struct site_reading {
  const inflection_example* ex;
  int site = 0;
  Eigen::VectorXf state;  // full trace column at the site
};

// probe-site activations for every usable example
std::vector<site_reading> read_sites(const model_state<float>& m,
                                     const std::vector<inflection_example>& examples) {
  std::vector<site_reading> out;
  std::vector<word> inputs;
  std::vector<int> sites;
  for (const auto& ex : examples) {
    if (!ex.note) throw std::invalid_argument("figure emission needs annotated examples");
    int site;
    try {
      site = select_site(ex);
    } catch (const excluded_site&) {
      continue;
    }
    out.push_back({&ex, site, {}});
    inputs.push_back(ex.nominative);
    sites.push_back(site);
  }
  if (out.empty()) throw empty_input("no examples with a probe site");
  std::vector<encoder_trace> traces = encode(m, inputs);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].state = traces[i].states.col(sites[i]);
  }
  return out;
}

std::string glyph_for(const annotation& note, const rule_table& table) {
  if (!note.gradating) return ".";
  const grade_pattern& pat = table.pattern(note.event->pattern_id);
  char c = static_cast<char>(pat.consonant);
  if (pat.direction == gradation_direction::inverse) c = static_cast<char>(c - 'a' + 'A');
  return std::string(1, c);
}

const char* glyph_color(const std::string& glyph) {
  switch (glyph[0]) {
    case 'p': case 'P': return "#1f77b4";
    case 't': case 'T': return "#d62728";
    case 'k': case 'K': return "#2ca02c";
    default: return "#999999";
  }
}

// diverging blue-white-red, v in [-1, 1]
std::string heat_color(double v) {
  v = std::clamp(v, -1.0, 1.0);
  int r, g, b;
  if (v < 0) {
    double t = -v;
    r = static_cast<int>(std::lround(255 + (49 - 255) * t));
    g = static_cast<int>(std::lround(255 + (54 - 255) * t));
    b = static_cast<int>(std::lround(255 + (149 - 255) * t));
  } else {
    r = static_cast<int>(std::lround(255 + (165 - 255) * v));
    g = static_cast<int>(std::lround(255 + (0 - 255) * v));
    b = static_cast<int>(std::lround(255 + (38 - 255) * v));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void emit_scatter(const model_state<float>& m, const std::vector<inflection_example>& examples,
                  int dim_x, int dim_y, const std::filesystem::path& out_prefix,
                  const rule_table& table) {
  for (int d : {dim_x, dim_y}) {
    if (d < 1 || d > m.config.trace_dim()) {
      throw std::invalid_argument("scatter dimension out of range");
    }
  }
  std::vector<site_reading> sites = read_sites(m, examples);

  std::ostringstream csv;
  csv << "word,glyph,x,y\n";
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : sites) {
    double x = s.state(dim_x - 1);
    double y = s.state(dim_y - 1);
    xmin = std::min(xmin, x); xmax = std::max(xmax, x);
    ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    csv << utf8_encode(s.ex->nominative) << ',' << glyph_for(*s.ex->note, table) << ','
        << fmt(x, "%.6f") << ',' << fmt(y, "%.6f") << '\n';
  }

  const int w = 640, h = 520;
  axis ax = make_axis(xmin, xmax, 60, w - 20);
  axis ay = make_axis(ymin, ymax, h - 50, 30);
  std::ostringstream svg;
  svg << svg_open(w, h);
  svg << "<text x=\"" << w / 2 << "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">"
      << "probe-site activations: dimension " << dim_x << " against dimension " << dim_y
      << "</text>\n";
  svg_axes(svg, ax, ay, "dimension " + std::to_string(dim_x),
           "dimension " + std::to_string(dim_y));
  for (const auto& s : sites) {
    std::string glyph = glyph_for(*s.ex->note, table);
    double px = ax.at(s.state(dim_x - 1));
    double py = ay.at(s.state(dim_y - 1));
    if (glyph == ".") {
      svg << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py)
          << "\" r=\"2\" fill=\"#999999\"/>\n";
    } else {
      svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(py + 4)
          << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"" << glyph_color(glyph) << "\">"
          << glyph << "</text>\n";
    }
  }
  svg << "<g id=\"legend\">\n";
  const char* legend[] = {"p/t/k  direct gradation", "P/T/K  inverse gradation",
                          "dot    no gradation"};
  for (int i = 0; i < 3; ++i) {
    svg << "<text x=\"" << w - 180 << "\" y=\"" << 40 + 14 * i << "\" font-size=\"11\">"
        << legend[i] << "</text>\n";
  }
  svg << "</g>\n";
  svg << "</svg>\n";

  write_text(out_prefix.string() + ".csv", csv.str());
  write_text(out_prefix.string() + ".svg", svg.str());
}

void emit_heatmap(const model_state<float>& m, const std::vector<inflection_example>& examples,
                  int dim, const std::filesystem::path& out_prefix, const rule_table& table) {
  if (dim < 1 || dim > m.config.trace_dim()) {
    throw std::invalid_argument("heatmap dimension out of range");
  }
  if (examples.empty()) throw empty_input("emit_heatmap: no examples");
  for (const auto& ex : examples) {
    if (!ex.note) throw std::invalid_argument("figure emission needs annotated examples");
  }

  std::vector<word> inputs;
  for (const auto& ex : examples) inputs.push_back(ex.nominative);
  std::vector<encoder_trace> traces = encode(m, inputs);
  std::vector<word> decoded = decode_greedy(m, traces);

  struct row {
    const inflection_example* ex;
    const encoder_trace* trace;
    bool correct;
  };
  std::vector<std::pair<std::string, std::vector<row>>> blocks = {
      {"quantitative", {}}, {"qualitative", {}}, {"no gradation", {}}};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& note = *examples[i].note;
    row rw{&examples[i], &traces[i], decoded[i] == examples[i].genitive};
    if (!note.gradating) {
      blocks[2].second.push_back(rw);
    } else if (table.pattern(note.event->pattern_id).kind == grade_kind::quantitative) {
      blocks[0].second.push_back(rw);
    } else {
      blocks[1].second.push_back(rw);
    }
  }

  std::size_t max_len = 0;
  double max_abs = 0;
  for (const auto& tr : traces) {
    max_len = std::max(max_len, tr.input.size());
    max_abs = std::max(max_abs, static_cast<double>(tr.states.row(dim - 1).cwiseAbs().maxCoeff()));
  }
  if (max_abs == 0) max_abs = 1;

  std::ostringstream csv;
  csv << "group,word,correct,position,char,activation\n";

  const int cell = 22, label_w = 120, top = 28;
  const int wpx = label_w + cell * static_cast<int>(max_len) + 30;
  int rows_total = 0;
  for (const auto& b : blocks) {
    if (!b.second.empty()) rows_total += 1 + static_cast<int>(b.second.size());
  }
  const int hpx = top + rows_total * cell + 20;

  std::ostringstream svg;
  svg << svg_open(wpx, hpx);
  svg << "<text x=\"" << wpx / 2 << "\" y=\"16\" font-size=\"13\" text-anchor=\"middle\">"
      << "dimension " << dim << " along each word</text>\n";

  int y = top;
  for (const auto& [group, rows] : blocks) {
    if (rows.empty()) continue;
    svg << "<text x=\"4\" y=\"" << y + cell - 7 << "\" font-size=\"12\" font-weight=\"bold\">"
        << group << "</text>\n";
    y += cell;
    for (const auto& rw : rows) {
      std::string w8 = utf8_encode(rw.ex->nominative);
      svg << "<text x=\"" << label_w - 8 << "\" y=\"" << y + cell - 7
          << "\" font-size=\"11\" text-anchor=\"end\">" << w8 << "</text>\n";
      if (!rw.correct) {
        svg << "<line x1=\"" << label_w - 8 - 7 * static_cast<int>(rw.ex->nominative.size())
            << "\" y1=\"" << y + cell - 11 << "\" x2=\"" << label_w - 8 << "\" y2=\""
            << y + cell - 11 << "\" stroke=\"#000\"/>\n";
      }
      for (std::size_t t = 0; t < rw.ex->nominative.size(); ++t) {
        double a = rw.trace->states(dim - 1, t);
        double v = a / max_abs;
        svg << "<rect x=\"" << label_w + cell * static_cast<int>(t) << "\" y=\"" << y
            << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << heat_color(v)
            << "\" stroke=\"#ccc\"/>\n";
        svg << "<text x=\"" << label_w + cell * static_cast<int>(t) + cell / 2 << "\" y=\""
            << y + cell - 7 << "\" font-size=\"11\" text-anchor=\"middle\" fill=\""
            << (std::fabs(v) > 0.6 ? "#fff" : "#000") << "\">"
            << utf8_encode(word(1, rw.ex->nominative[t])) << "</text>\n";
        csv << group << ',' << w8 << ',' << (rw.correct ? "true" : "false") << ',' << t << ','
            << utf8_encode(word(1, rw.ex->nominative[t])) << ',' << fmt(a, "%.6f") << '\n';
      }
      y += cell;
    }
  }
  svg << "</svg>\n";

  write_text(out_prefix.string() + ".csv", csv.str());
  write_text(out_prefix.string() + ".svg", svg.str());
}

void emit_curves(const std::string& title, const std::string& x_label,
                 const std::string& y_label, const std::vector<curve_series>& series,
                 const std::filesystem::path& out_prefix) {
  if (series.empty()) throw empty_input("emit_curves: no series");

  std::ostringstream csv;
  csv << "series,x,y\n";
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    if (s.points.empty()) throw empty_input("emit_curves: series " + s.name + " is empty");
    for (const auto& [x, yv] : s.points) {
      xmin = std::min(xmin, x); xmax = std::max(xmax, x);
      ymin = std::min(ymin, yv); ymax = std::max(ymax, yv);
      csv << s.name << ',' << fmt(x, "%g") << ',' << fmt(yv, "%.6f") << '\n';
    }
  }

  const int w = 640, h = 480;
  axis ax = make_axis(xmin, xmax, 60, w - 20);
  axis ay = make_axis(ymin, ymax, h - 50, 30);
  std::ostringstream svg;
  svg << svg_open(w, h);
  svg << "<text x=\"" << w / 2 << "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">" << title
      << "</text>\n";
  svg_axes(svg, ax, ay, x_label, y_label);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kSeriesPalette[si % (sizeof(kSeriesPalette) / sizeof(char*))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, yv] : series[si].points) {
      svg << fmt(ax.at(x)) << ',' << fmt(ay.at(yv)) << ' ';
    }
    svg << "\"/>\n";
    for (const auto& [x, yv] : series[si].points) {
      svg << "<circle cx=\"" << fmt(ax.at(x)) << "\" cy=\"" << fmt(ay.at(yv))
          << "\" r=\"2.3\" fill=\"" << color << "\"/>\n";
    }
    double ly = 34 + 14 * static_cast<double>(si);
    svg << "<rect x=\"" << w - 150 << "\" y=\"" << fmt(ly - 8) << "\" width=\"10\" height=\"4\" fill=\""
        << color << "\"/>\n";
    svg << "<text x=\"" << w - 135 << "\" y=\"" << fmt(ly) << "\" font-size=\"11\">"
        << series[si].name << "</text>\n";
  }
  svg << "</svg>\n";

  write_text(out_prefix.string() + ".csv", csv.str());
  write_text(out_prefix.string() + ".svg", svg.str());
}

std::vector<curve_series> sweep_series(const sweep_curve& curve) {
  curve_series gold{"gold", {}}, alt{"alternate", {}}, nonce{"nonce", {}};
  for (const auto& pt : curve.points) {
    gold.points.push_back({pt.factor, pt.gold_pct});
    alt.points.push_back({pt.factor, pt.alternate_pct});
    nonce.points.push_back({pt.factor, pt.nonce_pct});
  }
  return {gold, alt, nonce};
}

std::vector<curve_series> accuracy_series(const std::vector<train_curve_point>& curve) {
  curve_series s{"dev_accuracy", {}};
  for (const auto& pt : curve) s.points.push_back({static_cast<double>(pt.step), pt.dev_accuracy});
  return {s};
}

}  // namespace gradkit
