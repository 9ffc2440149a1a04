#pragma once

/**
 * @file io.hpp
 * @brief CSV and SVG output for traces, events, cohorts and reports.
 */

#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lvad/evaluation.hpp"
#include "lvad/experiment.hpp"
#include "lvad/scenario.hpp"

namespace lvad {

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

/// t,Plv,Pla,Pao,Vlv,Qpump,speed,activation,lvedp_true
void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows);
/// cycle,detection_t,actual_t,value
void write_events_csv(std::ostream& os, std::span<const LvedpEvent> events);
/// parameter,S_plus,S_minus,significant
void write_sensitivity_csv(std::ostream& os, const SensitivityReport& rep);

void write_runs_header(std::ostream& os);
void write_runs_rows(std::ostream& os, std::span<const RunResult> runs);

struct ScenarioSummary {
  CohortResult cohort;
  std::vector<SummaryRow> rows;
  std::optional<WilcoxonResult> wilcoxon;  ///< MFAC vs PID on paired SAE
  std::string wilcoxon_note;
};

ScenarioSummary summarize_scenario(CohortResult cohort);

void write_summary_header(std::ostream& os);
void write_summary_rows(std::ostream& os, const ScenarioSummary& s);
void write_boxplot_header(std::ostream& os);
void write_boxplot_rows(std::ostream& os, const ScenarioSummary& s);

void write_detect_eval_csv(std::ostream& os, std::span<const DetectEvalRow> rows);

/// A labelled box for plotting.
struct PlotBox {
  std::string label;
  BoxStats stats;
};

struct PlotPanel {
  std::string title;
  std::vector<PlotBox> boxes;
};

/// Side-by-side box-plot panels on a shared SAE axis per panel.
std::string render_boxplot_svg(std::span<const PlotPanel> panels, std::string_view y_label = "SAE (mmHg)");

/// Parses boxplot.csv back into per (scenario, controller) box statistics.
std::map<std::pair<std::string, std::string>, BoxStats> read_boxplot_csv(const std::filesystem::path& path);

/// Rows of a CSV file as string fields (no quoting support needed for our own numeric files).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace lvad
