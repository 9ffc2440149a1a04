#include "lvad/lvedp_detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lvad {

void DetectorConfig::validate() const {
  if (!(fs > 0.0)) throw std::invalid_argument("detector.fs must be > 0");
  if (!(pass_freq > 0.0 && pass_freq < stop_freq && stop_freq < fs / 2.0))
    throw std::invalid_argument("detector requires 0 < pass_freq < stop_freq < fs/2");
  if (window < 1) throw std::invalid_argument("detector.window must be >= 1");
  if (top_k < 1) throw std::invalid_argument("detector.top_k must be >= 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("detector alpha and beta must be > 0");
  if (!(peak_fraction > 0.0 && peak_fraction < 1.0))
    throw std::invalid_argument("detector.peak_fraction must be in (0, 1)");
  if (!(peak_refractory > 0.0)) throw std::invalid_argument("detector.peak_refractory must be > 0");
  if (!(rearm_fraction > 0.0 && rearm_fraction < 1.0))
    throw std::invalid_argument("detector.rearm_fraction must be in (0, 1)");
}

// --- BeatTracker -------------------------------------------------------------

BeatTracker::BeatTracker(double fs, double peak_fraction, double refractory_s)
    : fs_(fs),
      fraction_(peak_fraction),
      refractory_(refractory_s),
      max_window_(static_cast<std::size_t>(std::lround(3.0 * fs))) {}

void BeatTracker::push(double t, double slope) {
  ++n_;
  while (!max_queue_.empty() && max_queue_.back().second <= slope) max_queue_.pop_back();
  max_queue_.emplace_back(n_, slope);
  while (max_queue_.front().first + static_cast<std::int64_t>(max_window_) <= n_) max_queue_.pop_front();

  if (n_ >= 2 && s1_ > s2_ && s1_ >= slope && s1_ > 0.0) {
    const double running_max = max_queue_.front().second;
    const bool tall = s1_ >= fraction_ * running_max;
    const bool clear = !last_peak_t_ || (t1_ - *last_peak_t_) >= refractory_;
    if (tall && clear) {
      if (last_peak_t_) period_ = t1_ - *last_peak_t_;
      last_peak_t_ = t1_;
      ++peaks_;
    }
  }
  s2_ = s1_;
  s1_ = slope;
  t1_ = t;
}

double BeatTracker::beat_period() const {
  if (!period_) throw NoBeatError();
  return *period_;
}

// --- LvedpDetector -----------------------------------------------------------

LvedpDetector::LvedpDetector(DetectorConfig config)
    : config_(config),
      design_((config.validate(),
               design_butterworth_lowpass(config.fs, config.pass_freq, config.stop_freq))),
      filter_(design_.sections),
      beats_(config.fs, config.peak_fraction, config.peak_refractory),
      cap_(static_cast<std::int64_t>(std::ceil(4.0 * config.fs))),
      hist_t_(static_cast<std::size_t>(cap_)),
      hist_flvp_(static_cast<std::size_t>(cap_)),
      hist_sflvp_(static_cast<std::size_t>(cap_)) {
  top_.reserve(static_cast<std::size_t>(config_.top_k) + 1);
}

DetectorStatus LvedpDetector::status() const {
  return beats_.has_period() ? DetectorStatus::Tracking : DetectorStatus::NoBeat;
}

void LvedpDetector::insert_top(double v) {
  const auto k = static_cast<std::size_t>(config_.top_k);
  if (top_.size() == k) {
    if (v <= top_.front()) return;
    top_.erase(top_.begin());
  }
  top_.insert(std::upper_bound(top_.begin(), top_.end(), v), v);
}

void LvedpDetector::rebuild_top(std::int64_t from) {
  top_.clear();
  from = std::max<std::int64_t>({from, 0, n_ - cap_ + 1});
  for (std::int64_t i = from; i <= n_; ++i) insert_top(history_sflvp(i));
}

std::int64_t LvedpDetector::find_actual(std::int64_t detection) const {
  const auto lookback = static_cast<std::int64_t>(std::lround(0.5 * beats_.beat_period() * config_.fs));
  const std::int64_t oldest = std::max<std::int64_t>({detection - lookback, 1, n_ - cap_ + 2});
  for (std::int64_t i = detection - 1; i >= oldest; --i) {
    const double s = history_sflvp(i);
    if (s <= history_sflvp(i - 1) && s <= history_sflvp(i + 1)) return i;
  }
  std::int64_t best = detection;
  for (std::int64_t i = oldest; i <= detection; ++i)
    if (history_sflvp(i) < history_sflvp(best)) best = i;
  return best;
}

std::optional<LvedpEvent> LvedpDetector::push(double t, double lvp) {
  if (!std::isfinite(lvp) || !std::isfinite(t))
    throw std::invalid_argument("LVEDP detector received a non-finite sample");
  ++n_;
  if (n_ == 0) filter_.settle(lvp);
  const double prev = flvp_;
  flvp_ = filter_.process(lvp);
  sflvp_ = n_ == 0 ? 0.0 : (flvp_ - prev) * config_.fs;

  const auto slot = static_cast<std::size_t>(n_ % cap_);
  hist_t_[slot] = t;
  hist_flvp_[slot] = flvp_;
  hist_sflvp_[slot] = sflvp_;

  beats_.push(t, sflvp_);
  if (!beats_.has_period()) return std::nullopt;
  const double period = beats_.beat_period();
  const auto period_samples = static_cast<std::int64_t>(std::lround(period * config_.fs));

  const std::int64_t first = std::max<std::int64_t>(0, n_ - config_.window + 1);
  double sum = 0.0;
  for (std::int64_t i = first; i <= n_; ++i) sum += history_sflvp(i);
  const double msflvp = sum / static_cast<double>(n_ - first + 1);

  const bool lost = !cycle_start_ || (n_ - *cycle_start_) > 5 * period_samples / 2;
  if (lost)
    rebuild_top(n_ - 3 * period_samples / 2);
  else
    insert_top(sflvp_);
  threshold_ = config_.beta * std::accumulate(top_.begin(), top_.end(), 0.0) /
               static_cast<double>(top_.size());

  const bool armed = !last_detection_t_ || (t - *last_detection_t_) >= config_.rearm_fraction * period;
  const double lhs = config_.candidate == CandidateSignal::Slope ? sflvp_ : flvp_;
  if (!armed || sflvp_ <= 0.0 || lhs < config_.alpha * msflvp || sflvp_ < threshold_)
    return std::nullopt;

  const std::int64_t actual = find_actual(n_);
  LvedpEvent ev{t, history_t(actual), history_flvp(actual), cycle_index_++};
  last_detection_t_ = t;
  cycle_start_ = actual;
  rebuild_top(actual);
  return ev;
}

// --- batch helpers -------------------------------------------------------------

std::vector<double> lowpass(std::span<const double> x, const LowpassDesign& design) {
  std::vector<double> y;
  y.reserve(x.size());
  SosFilter f(design.sections);
  if (!x.empty()) f.settle(x.front());
  for (double v : x) y.push_back(f.process(v));
  return y;
}

std::vector<double> slope(std::span<const double> x, double fs) {
  std::vector<double> s(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) s[i] = (x[i] - x[i - 1]) * fs;
  return s;
}

std::vector<LvedpEvent> detect(std::span<const double> t, std::span<const double> lvp,
                               const DetectorConfig& config) {
  if (t.size() != lvp.size()) throw std::invalid_argument("detect: series lengths differ");
  LvedpDetector det(config);
  std::vector<LvedpEvent> events;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (auto ev = det.push(t[i], lvp[i])) events.push_back(*ev);
  return events;
}

// --- evaluation ------------------------------------------------------------------

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {NAN, NAN};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

}  // namespace

DetectionMetrics evaluate(std::span<const LvedpEvent> events, std::span<const TrueLvedp> truth,
                          double start_time) {
  std::vector<TrueLvedp> beats;
  for (const auto& tr : truth)
    if (tr.time >= start_time) beats.push_back(tr);
  double first_lo = -1e300;
  if (beats.size() > 1) first_lo = beats[0].time - 0.25 * (beats[1].time - beats[0].time);
  else if (!beats.empty()) first_lo = beats[0].time - 0.25;
  std::vector<LvedpEvent> evs;
  for (const auto& ev : events)
    if (ev.actual_time >= first_lo) evs.push_back(ev);

  const double n_truth = static_cast<double>(beats.size());
  const double n_events = static_cast<double>(evs.size());
  if (std::abs(n_truth - n_events) > 0.05 * std::max(n_truth, 1.0))
    throw DetectionMismatch("event count " + std::to_string(evs.size()) +
                            " differs from true beat count " + std::to_string(beats.size()) +
                            " by more than 5%");

  std::vector<double> latency_ms, error;
  std::vector<bool> used(evs.size(), false);
  DetectionMetrics m;
  std::size_t cursor = 0;
  for (std::size_t b = 0; b < beats.size(); ++b) {
    double period = 1.0;
    if (b + 1 < beats.size())
      period = beats[b + 1].time - beats[b].time;
    else if (b > 0)
      period = beats[b].time - beats[b - 1].time;
    const double lo = beats[b].time - 0.25 * period;
    const double hi = beats[b].time + 0.5 * period;
    while (cursor < evs.size() && evs[cursor].actual_time < lo) ++cursor;
    if (cursor < evs.size() && evs[cursor].actual_time < hi) {
      used[cursor] = true;
      latency_ms.push_back(std::abs(evs[cursor].detection_time - evs[cursor].actual_time) * 1000.0);
      error.push_back(std::abs(evs[cursor].value - beats[b].value));
      ++cursor;
    } else {
      ++m.dropped;
    }
  }
  m.spurious = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  m.matched = error.size();
  std::tie(m.latency_mae_ms, m.latency_std_ms) = mean_std(latency_ms);
  std::tie(m.accuracy_mean, m.accuracy_std) = mean_std(error);
  if (!error.empty()) m.accuracy_max = *std::max_element(error.begin(), error.end());
  return m;
}

}  // namespace lvad
