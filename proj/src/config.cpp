#include "lvad/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace lvad {

namespace {

using Getter = std::function<std::string(const RunConfiguration&)>;
using Setter = std::function<void(RunConfiguration&, std::string_view)>;

struct Key {
  std::string name;
  Getter get;
  Setter set;
};

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("invalid number for key " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("invalid integer for key " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

template <typename Member>
Key number(std::string name, Member member) {
  return {name, [member](const RunConfiguration& c) { auto copy = c; return format_double(member(copy)); },
          [member, name](RunConfiguration& c, std::string_view v) { member(c) = parse_double(name, v); }};
}

template <typename Int, typename Member>
Key integer(std::string name, Member member) {
  return {name, [member](const RunConfiguration& c) { auto copy = c; return std::to_string(member(copy)); },
          [member, name](RunConfiguration& c, std::string_view v) { member(c) = parse_int<Int>(name, v); }};
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = [] {
    std::vector<Key> t;
    for (const auto& info : cvs_parameter_table()) {
      const auto field = info.field;
      t.push_back(number("cvs." + std::string(info.name),
                         [field](RunConfiguration& c) -> double& { return c.cvs.*field; }));
    }
#define PUMP(f) t.push_back(number("pump." #f, [](RunConfiguration& c) -> double& { return c.pump.f; }))
    PUMP(Rin); PUMP(Rout); PUMP(Lin); PUMP(Lout); PUMP(a2); PUMP(a1); PUMP(a0);
    PUMP(Rlsuc_gain); PUMP(P_suc_threshold); PUMP(speed_min); PUMP(speed_max);
#undef PUMP
#define DET(f) t.push_back(number("detector." #f, [](RunConfiguration& c) -> double& { return c.detector.f; }))
    DET(fs); DET(pass_freq); DET(stop_freq);
    t.push_back(integer<int>("detector.window", [](RunConfiguration& c) -> int& { return c.detector.window; }));
    t.push_back(integer<int>("detector.top_k", [](RunConfiguration& c) -> int& { return c.detector.top_k; }));
    DET(alpha); DET(beta);
    t.push_back({"detector.candidate",
                 [](const RunConfiguration& c) {
                   return std::string(c.detector.candidate == CandidateSignal::Slope ? "slope" : "pressure");
                 },
                 [](RunConfiguration& c, std::string_view v) {
                   if (v == "slope") c.detector.candidate = CandidateSignal::Slope;
                   else if (v == "pressure") c.detector.candidate = CandidateSignal::Pressure;
                   else throw ConfigError("detector.candidate must be slope or pressure, got '" + std::string(v) + "'");
                 }});
    DET(peak_fraction); DET(peak_refractory); DET(rearm_fraction);
#undef DET
    t.push_back({"controller.kind", [](const RunConfiguration& c) { return std::string(controller_name(c.controller)); },
                 [](RunConfiguration& c, std::string_view v) {
                   const auto k = parse_controller(v);
                   if (!k) throw ConfigError("controller.kind must be none, pid or mfac, got '" + std::string(v) + "'");
                   c.controller = *k;
                 }});
#define MFAC(f) t.push_back(number("controller.mfac." #f, [](RunConfiguration& c) -> double& { return c.mfac.f; }))
    MFAC(rho); MFAC(lambda); MFAC(eta); MFAC(mu); MFAC(phi1); MFAC(epsilon);
    MFAC(output_sign); MFAC(input_scale); MFAC(u_min); MFAC(u_max);
#undef MFAC
#define PID(f) t.push_back(number("controller.pid." #f, [](RunConfiguration& c) -> double& { return c.pid.f; }))
    PID(kp); PID(ki); PID(kd); PID(bias); PID(u_min); PID(u_max);
#undef PID
#define PROTO(f) t.push_back(number("protocol." #f, [](RunConfiguration& c) -> double& { return c.protocol.f; }))
    PROTO(warmup_end); PROTO(controller_on); PROTO(setpoint_offset); PROTO(scenario_onset);
    PROTO(run_end); PROTO(lvedp_low); PROTO(lvedp_high); PROTO(warmup_speed);
    PROTO(noise_variance); PROTO(dt); PROTO(eval_start);
#undef PROTO
    t.push_back({"protocol.scenario", [](const RunConfiguration& c) { return std::string(scenario_name(c.scenario)); },
                 [](RunConfiguration& c, std::string_view v) {
                   const auto k = parse_scenario(v);
                   if (!k) throw ConfigError("protocol.scenario is not a known scenario: '" + std::string(v) + "'");
                   c.scenario = *k;
                 }});
    t.push_back(integer<std::uint64_t>("protocol.seed", [](RunConfiguration& c) -> std::uint64_t& { return c.seed; }));
    t.push_back(
        integer<std::uint64_t>("protocol.patients", [](RunConfiguration& c) -> std::uint64_t& { return c.patients; }));
    t.push_back({"protocol.output_dir", [](const RunConfiguration& c) { return c.output_dir; },
                 [](RunConfiguration& c, std::string_view v) {
                   if (v.empty()) throw ConfigError("protocol.output_dir must not be empty");
                   c.output_dir = std::string(v);
                 }});
    return t;
  }();
  return table;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string section_of(std::string_view key) {
  const auto dot = key.find('.');
  if (key.starts_with("controller.")) {
    const auto second = key.find('.', dot + 1);
    if (second != std::string_view::npos) return std::string(key.substr(0, second));
  }
  return std::string(key.substr(0, dot));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw ConfigError("cannot format number");
  return std::string(buf, ptr);
}

void RunConfiguration::validate() const {
  try {
    cvs.validate();
    pump.validate();
    detector.validate();
    mfac.validate();
    pid.validate();
    protocol.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const double steps = 1.0 / (protocol.dt * detector.fs);
  if (std::abs(steps - std::round(steps)) > 1e-6)
    throw ConfigError("protocol.dt must divide the detector sample period");
  if (patients == 0) throw ConfigError("protocol.patients must be >= 1");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

void set_config_value(RunConfiguration& c, std::string_view key, std::string_view value) {
  for (const auto& k : key_table()) {
    if (k.name == key) {
      k.set(c, value);
      return;
    }
  }
  throw ConfigError("unknown key: " + std::string(key));
}

std::string to_config_text(const RunConfiguration& c) {
  std::ostringstream os;
  std::string section;
  for (const auto& k : key_table()) {
    const auto s = section_of(k.name);
    if (s != section) {
      if (!section.empty()) os << '\n';
      os << "# " << s << '\n';
      section = s;
    }
    os << k.name << " = " << k.get(c) << '\n';
  }
  return os.str();
}

RunConfiguration parse_config_text(std::string_view text) {
  RunConfiguration c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("duplicate key: " + key);
    set_config_value(c, key, value);
  }
  for (const auto& k : key_table())
    if (!seen.contains(k.name)) throw ConfigError("missing required key: " + k.name);
  c.validate();
  return c;
}

RunConfiguration load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void save_config(const RunConfiguration& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config file: " + path.string());
  out << to_config_text(c);
}

}  // namespace lvad
