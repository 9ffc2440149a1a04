#include "lvad/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lvad/config.hpp"

namespace lvad {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  return format_double(v);
}

}  // namespace

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
  os << "t,Plv,Pla,Pao,Vlv,Qpump,speed,activation,lvedp_true\n";
  for (const auto& r : rows)
    os << num(r.t) << ',' << num(r.Plv) << ',' << num(r.Pla) << ',' << num(r.Pao) << ',' << num(r.Vlv) << ','
       << num(r.Qpump) << ',' << num(r.speed) << ',' << num(r.activation) << ',' << num(r.lvedp_true) << '\n';
}

void write_events_csv(std::ostream& os, std::span<const LvedpEvent> events) {
  os << "cycle,detection_t,actual_t,value\n";
  for (const auto& e : events)
    os << e.cycle_index << ',' << num(e.detection_time) << ',' << num(e.actual_time) << ',' << num(e.value) << '\n';
}

void write_sensitivity_csv(std::ostream& os, const SensitivityReport& rep) {
  os << "parameter,S_plus,S_minus,significant\n";
  for (const auto& r : rep.rows)
    os << r.parameter << ',' << num(r.S_plus) << ',' << num(r.S_minus) << ',' << (r.significant ? 1 : 0) << '\n';
}

void write_runs_header(std::ostream& os) {
  os << "scenario,patient,seed,controller,status,setpoint,sae,congestion,congestion_s,suction,suction_s,"
        "min_lvedp,max_lvedp,min_plv,speed_min,speed_max,latency_ms,accuracy,message\n";
}

void write_runs_rows(std::ostream& os, std::span<const RunResult> runs) {
  for (const auto& r : runs)
    os << scenario_name(r.scenario) << ',' << r.patient_index << ',' << r.seed << ',' << controller_name(r.controller)
       << ',' << status_name(r.status) << ',' << num(r.setpoint) << ',' << num(r.sae) << ','
       << (r.safety.congestion ? 1 : 0) << ',' << num(r.safety.congestion_s) << ',' << (r.safety.suction ? 1 : 0)
       << ',' << num(r.safety.suction_s) << ',' << num(r.min_lvedp) << ',' << num(r.max_lvedp) << ','
       << num(r.min_plv) << ',' << num(r.speed_min) << ',' << num(r.speed_max) << ','
       << num(r.detection.latency_mae_ms) << ',' << num(r.detection.accuracy_mean) << ',' << csv_field(r.message)
       << '\n';
}

ScenarioSummary summarize_scenario(CohortResult cohort) {
  ScenarioSummary s;
  s.rows = summarize(cohort);
  const auto [mfac, pid] = paired_sae(cohort, ControllerKind::Mfac, ControllerKind::Pid);
  try {
    s.wilcoxon = wilcoxon_paired(mfac, pid);
  } catch (const std::invalid_argument& e) {
    s.wilcoxon_note = e.what();
  }
  s.cohort = std::move(cohort);
  return s;
}

void write_summary_header(std::ostream& os) {
  os << "scenario,controller,n,failed,excluded,mean,std,median,q1,q3,whisker_low,whisker_high,outliers,"
        "congestion_runs,suction_runs,wilcoxon_p\n";
}

void write_summary_rows(std::ostream& os, const ScenarioSummary& s) {
  const double p = s.wilcoxon ? s.wilcoxon->p : NAN;
  for (const auto& r : s.rows) {
    const auto& b = r.stats;
    os << scenario_name(r.scenario) << ',' << controller_name(r.controller) << ',' << b.n << ',' << r.failed << ','
       << s.cohort.excluded << ',';
    if (b.n == 0) {
      os << "absent,,,,,,,,,,\n";
      continue;
    }
    os << num(b.mean) << ',' << num(b.std) << ',' << num(b.median) << ',' << num(b.q1) << ',' << num(b.q3) << ','
       << num(b.whisker_low) << ',' << num(b.whisker_high) << ',' << b.outliers.size() << ',' << r.congestion_runs
       << ',' << r.suction_runs << ',' << num(p) << '\n';
  }
}

void write_boxplot_header(std::ostream& os) { os << "scenario,controller,kind,value\n"; }

void write_boxplot_rows(std::ostream& os, const ScenarioSummary& s) {
  for (const auto& r : s.rows) {
    const auto& b = r.stats;
    if (b.n == 0) continue;
    const auto head = std::string(scenario_name(r.scenario)) + ',' + std::string(controller_name(r.controller)) + ',';
    os << head << "n," << b.n << '\n';
    os << head << "mean," << num(b.mean) << '\n';
    os << head << "whisker_low," << num(b.whisker_low) << '\n';
    os << head << "q1," << num(b.q1) << '\n';
    os << head << "median," << num(b.median) << '\n';
    os << head << "q3," << num(b.q3) << '\n';
    os << head << "whisker_high," << num(b.whisker_high) << '\n';
    for (double o : b.outliers) os << head << "outlier," << num(o) << '\n';
  }
}

void write_detect_eval_csv(std::ostream& os, std::span<const DetectEvalRow> rows) {
  os << "scenario,variance,runs,failed,beats,accuracy_mean,accuracy_std,latency_mean_ms,latency_std_ms,snr_db\n";
  for (const auto& r : rows)
    os << scenario_name(r.scenario) << ',' << num(r.variance) << ',' << r.runs << ',' << r.failed << ',' << r.beats
       << ',' << num(r.accuracy_mean) << ',' << num(r.accuracy_std) << ',' << num(r.latency_mean) << ','
       << num(r.latency_std) << ',' << num(r.snr_db) << '\n';
}

// --- SVG ------------------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Round tick step: 1, 2 or 5 times a power of ten.
double nice_step(double span, int target = 5) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace

std::string render_boxplot_svg(std::span<const PlotPanel> panels, std::string_view y_label) {
  const double panel_w = 320, panel_h = 300, margin_l = 70, margin_t = 40, margin_b = 60;
  const double width = margin_l + panels.size() * (panel_w + 20);
  const double height = margin_t + panel_h + margin_b;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const char* colors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52"};

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double x0 = margin_l + p * (panel_w + 20);
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& b : panel.boxes) {
      if (b.stats.n == 0) continue;
      lo = std::min({lo, b.stats.whisker_low, b.stats.q1});
      hi = std::max({hi, b.stats.whisker_high, b.stats.q3});
      for (double o : b.stats.outliers) {
        lo = std::min(lo, o);
        hi = std::max(hi, o);
      }
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi <= lo) hi = lo + 1.0;
    const double step = nice_step(hi - lo);
    lo = std::floor(lo / step) * step;
    hi = std::ceil(hi / step) * step;
    const auto y = [&](double v) { return margin_t + panel_h - (v - lo) / (hi - lo) * panel_h; };

    os << "<g>\n<text x=\"" << fmt(x0 + panel_w / 2) << "\" y=\"" << fmt(margin_t - 15)
       << "\" text-anchor=\"middle\" font-size=\"13\">" << escape_xml(panel.title) << "</text>\n";
    os << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(margin_t) << "\" width=\"" << fmt(panel_w) << "\" height=\""
       << fmt(panel_h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (double v = lo; v <= hi + step / 2; v += step) {
      os << "<line x1=\"" << fmt(x0 - 4) << "\" x2=\"" << fmt(x0) << "\" y1=\"" << fmt(y(v)) << "\" y2=\""
         << fmt(y(v)) << "\" stroke=\"#444\"/>";
      os << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(y(v) + 4) << "\" text-anchor=\"end\">"
         << format_double(std::round(v * 1e6) / 1e6) << "</text>\n";
    }
    if (p == 0)
      os << "<text transform=\"translate(14," << fmt(margin_t + panel_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
         << escape_xml(y_label) << "</text>\n";

    const double slot = panel_w / std::max<std::size_t>(1, panel.boxes.size());
    for (std::size_t i = 0; i < panel.boxes.size(); ++i) {
      const auto& box = panel.boxes[i];
      const double cx = x0 + slot * (i + 0.5);
      const double bw = std::min(50.0, slot * 0.5);
      os << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(margin_t + panel_h + 16) << "\" text-anchor=\"middle\">"
         << escape_xml(box.label) << "</text>\n";
      const auto& s = box.stats;
      if (s.n == 0) {
        os << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(margin_t + panel_h / 2) << "\" text-anchor=\"middle\">absent</text>\n";
        continue;
      }
      const char* color = colors[i % 4];
      os << "<line x1=\"" << fmt(cx) << "\" x2=\"" << fmt(cx) << "\" y1=\"" << fmt(y(s.whisker_low)) << "\" y2=\""
         << fmt(y(s.q1)) << "\" stroke=\"#222\" stroke-dasharray=\"4 2\"/>\n";
      os << "<line x1=\"" << fmt(cx) << "\" x2=\"" << fmt(cx) << "\" y1=\"" << fmt(y(s.q3)) << "\" y2=\""
         << fmt(y(s.whisker_high)) << "\" stroke=\"#222\" stroke-dasharray=\"4 2\"/>\n";
      for (double w : {s.whisker_low, s.whisker_high})
        os << "<line x1=\"" << fmt(cx - bw / 4) << "\" x2=\"" << fmt(cx + bw / 4) << "\" y1=\"" << fmt(y(w))
           << "\" y2=\"" << fmt(y(w)) << "\" stroke=\"#222\"/>\n";
      os << "<rect x=\"" << fmt(cx - bw / 2) << "\" y=\"" << fmt(y(s.q3)) << "\" width=\"" << fmt(bw)
         << "\" height=\"" << fmt(std::max(1.0, y(s.q1) - y(s.q3))) << "\" fill=\"" << color
         << "\" fill-opacity=\"0.35\" stroke=\"" << color << "\"/>\n";
      os << "<line x1=\"" << fmt(cx - bw / 2) << "\" x2=\"" << fmt(cx + bw / 2) << "\" y1=\"" << fmt(y(s.median))
         << "\" y2=\"" << fmt(y(s.median)) << "\" stroke=\"#c00\" stroke-width=\"2\"/>\n";
      for (double o : s.outliers)
        os << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(y(o) + 4) << "\" text-anchor=\"middle\" fill=\"#c00\">+</text>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::map<std::pair<std::string, std::string>, BoxStats> read_boxplot_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"scenario", "controller", "kind", "value"})
    throw std::runtime_error(path.string() + ": unexpected boxplot header");
  std::map<std::pair<std::string, std::string>, BoxStats> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw std::runtime_error(path.string() + ": malformed row " + std::to_string(i + 1));
    auto& b = out[{r[0], r[1]}];
    const double v = std::stod(r[3]);
    if (r[2] == "n") b.n = static_cast<std::size_t>(v);
    else if (r[2] == "mean") b.mean = v;
    else if (r[2] == "whisker_low") b.whisker_low = v;
    else if (r[2] == "q1") b.q1 = v;
    else if (r[2] == "median") b.median = v;
    else if (r[2] == "q3") b.q3 = v;
    else if (r[2] == "whisker_high") b.whisker_high = v;
    else if (r[2] == "outlier") b.outliers.push_back(v);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace lvad
