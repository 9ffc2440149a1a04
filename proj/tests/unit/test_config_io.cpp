#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lvad/config.hpp"
#include "lvad/io.hpp"

using namespace lvad;

namespace {

std::string replace_line(const std::string& text, const std::string& key, const std::string& line) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string l;
  while (std::getline(in, l)) {
    if (l.rfind(key + " =", 0) == 0) {
      if (!line.empty()) out << line << '\n';
      continue;
    }
    out << l << '\n';
  }
  return out.str();
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults round-trip exactly") {
    const RunConfiguration c;
    const std::string text = to_config_text(c);
    CHECK(parse_config_text(text) == c);
    CHECK(to_config_text(parse_config_text(text)) == text);
  }

  TEST_CASE("perturbed values round-trip bit for bit") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> f(0.8, 1.2);
    RunConfiguration c;
    c.cvs.Vtotal *= f(rng);
    c.cvs.Esa *= f(rng);
    c.mfac.input_scale = 1.0 / 3.0;
    c.pid.kp *= f(rng);
    c.protocol.noise_variance = 2.0;
    c.controller = ControllerKind::Pid;
    c.scenario = ScenarioKind::RsaDown;
    c.seed = 123456789012345ULL;
    CHECK(parse_config_text(to_config_text(c)) == c);
    for (double v : {0.1, 1e-17, 123456.789, 1.0 / 7.0, -0.0})
      CHECK(std::stod(format_double(v)) == v);
  }

  TEST_CASE("every key is emitted once") {
    const std::string text = to_config_text(RunConfiguration{});
    for (const auto& k : config_keys()) CHECK(text.find("\n" + k + " =") != std::string::npos);
  }

  TEST_CASE("malformed files are rejected") {
    const std::string text = to_config_text(RunConfiguration{});
    CHECK_THROWS_AS(parse_config_text(text + "cvs.Bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(text + "cvs.Esa = 0.4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(replace_line(text, "cvs.Esa", "")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(replace_line(text, "cvs.Esa", "cvs.Esa = abc")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(replace_line(text, "cvs.Esa", "cvs.Esa")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(replace_line(text, "protocol.scenario", "protocol.scenario = sideways")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text(replace_line(text, "controller.mfac.eta", "controller.mfac.eta = 2")),
                    ConfigError);
  }

  TEST_CASE("single-key overrides") {
    RunConfiguration c;
    set_config_value(c, "cvs.Vtotal", "4800");
    CHECK(c.cvs.Vtotal == 4800.0);
    set_config_value(c, "controller.mfac.input_scale", "10");
    CHECK(c.mfac.input_scale == 10.0);
    CHECK_THROWS_AS(set_config_value(c, "nope", "1"), ConfigError);
  }

  TEST_CASE("file load and save") {
    const auto path = std::filesystem::temp_directory_path() / "lvad_test_config.txt";
    RunConfiguration c;
    c.cvs.Rsv = 0.15;
    save_config(c, path);
    CHECK(load_config(path) == c);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_config(path), ConfigError);
  }
}

TEST_SUITE("io") {
  TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  }

  TEST_CASE("box plot csv round trip and svg") {
    CohortResult cohort;
    cohort.scenario = ScenarioKind::RpaUp;
    for (std::uint64_t i = 0; i < 6; ++i)
      for (auto c : {ControllerKind::Pid, ControllerKind::Mfac}) {
        RunResult r;
        r.scenario = ScenarioKind::RpaUp;
        r.controller = c;
        r.patient_index = i;
        r.sae = (c == ControllerKind::Pid ? 100.0 : 10.0) * static_cast<double>(i + 1);
        cohort.runs.push_back(r);
      }
    const ScenarioSummary s = summarize_scenario(cohort);
    REQUIRE(s.wilcoxon.has_value());
    CHECK(s.wilcoxon->p == doctest::Approx(2.0 / 64.0));

    const auto path = std::filesystem::temp_directory_path() / "lvad_test_boxplot.csv";
    {
      std::ofstream os(path);
      write_boxplot_header(os);
      write_boxplot_rows(os, s);
    }
    const auto boxes = read_boxplot_csv(path);
    std::filesystem::remove(path);
    const auto& pid = boxes.at({"rpa-up", "pid"});
    CHECK(pid.n == 6);
    CHECK(pid.median == doctest::Approx(350.0));
    CHECK(boxes.at({"rpa-up", "mfac"}).mean == doctest::Approx(35.0));

    const std::vector<PlotPanel> panels{{"Pulmonary resistance", {{"PID", pid}, {"MFAC", boxes.at({"rpa-up", "mfac"})}}}};
    const std::string svg = render_boxplot_svg(panels);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("Pulmonary resistance") != std::string::npos);
  }

  TEST_CASE("events and runs writers") {
    std::ostringstream ev;
    const std::vector<LvedpEvent> events{{1.02, 1.0, 6.5, 0}};
    write_events_csv(ev, events);
    CHECK(ev.str().find("6.5") != std::string::npos);
    std::ostringstream runs;
    write_runs_header(runs);
    RunResult r;
    r.message = "note, with comma";
    write_runs_rows(runs, std::span<const RunResult>(&r, 1));
    CHECK(runs.str().find("\"note, with comma\"") != std::string::npos);
  }
}
