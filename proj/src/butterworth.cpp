#include "lvad/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lvad {

namespace {

constexpr double kPi = std::numbers::pi;

std::complex<double> section_response(const BiquadSection& s, std::complex<double> z_inv) {
  const auto num = s.b0 + z_inv * (s.b1 + z_inv * s.b2);
  const auto den = 1.0 + z_inv * (s.a1 + z_inv * s.a2);
  return num / den;
}

}  // namespace

std::complex<double> LowpassDesign::response(double f_hz) const {
  const std::complex<double> z_inv = std::polar(1.0, -2.0 * kPi * f_hz / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= section_response(s, z_inv);
  return h;
}

double LowpassDesign::group_delay(double f_hz) const {
  const double df = 1e-4;
  const double lo = std::max(0.0, f_hz - df);
  const double hi = f_hz + df;
  const double dphi = std::arg(response(hi) / response(lo));
  return -dphi / (2.0 * kPi * (hi - lo));
}

LowpassDesign butterworth_lowpass(int order, double cutoff_hz, double fs) {
  if (order < 1) throw std::invalid_argument("butterworth order must be >= 1");
  if (!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0))
    throw std::invalid_argument("butterworth cutoff must lie in (0, fs/2)");
  LowpassDesign d;
  d.order = order;
  d.cutoff_hz = cutoff_hz;
  d.fs = fs;
  const double K = std::tan(kPi * cutoff_hz / fs);
  const double K2 = K * K;
  for (int k = 1; k <= order / 2; ++k) {
    const double theta = kPi * (2.0 * k + order - 1.0) / (2.0 * order);
    const double q = 1.0 / (-2.0 * std::cos(theta));
    const double norm = 1.0 / (1.0 + K / q + K2);
    BiquadSection s;
    s.b0 = K2 * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (K2 - 1.0) * norm;
    s.a2 = (1.0 - K / q + K2) * norm;
    d.sections.push_back(s);
  }
  if (order % 2 == 1) {
    const double norm = 1.0 / (1.0 + K);
    BiquadSection s;
    s.b0 = K * norm;
    s.b1 = s.b0;
    s.a1 = (K - 1.0) * norm;
    d.sections.push_back(s);
  }
  return d;
}

LowpassDesign design_butterworth_lowpass(double fs, double pass_hz, double stop_hz,
                                         double pass_atten_db, double stop_atten_db) {
  if (!(pass_hz > 0.0 && pass_hz < stop_hz && stop_hz < fs / 2.0))
    throw std::invalid_argument("need 0 < pass < stop < fs/2");
  if (!(pass_atten_db > 0.0 && stop_atten_db > pass_atten_db))
    throw std::invalid_argument("need 0 < pass attenuation < stop attenuation");
  const double wp = std::tan(kPi * pass_hz / fs);
  const double ws = std::tan(kPi * stop_hz / fs);
  const double es = std::pow(10.0, stop_atten_db / 10.0) - 1.0;
  const double ep = std::pow(10.0, pass_atten_db / 10.0) - 1.0;
  const int order =
      static_cast<int>(std::ceil(std::log10(es / ep) / (2.0 * std::log10(ws / wp)) - 1e-12));
  const double wc = ws / std::pow(es, 1.0 / (2.0 * order));
  const double fc = fs / kPi * std::atan(wc);
  return butterworth_lowpass(order, fc, fs);
}

SosFilter::SosFilter(std::vector<BiquadSection> sections)
    : sections_(std::move(sections)), z1_(sections_.size(), 0.0), z2_(sections_.size(), 0.0) {}

double SosFilter::process(double x) {
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const auto& s = sections_[i];
    const double y = s.b0 * x + z1_[i];
    z1_[i] = s.b1 * x - s.a1 * y + z2_[i];
    z2_[i] = s.b2 * x - s.a2 * y;
    x = y;
  }
  return x;
}

void SosFilter::settle(double x) {
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const auto& s = sections_[i];
    const double y = x * (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    z2_[i] = s.b2 * x - s.a2 * y;
    z1_[i] = s.b1 * x - s.a1 * y + z2_[i];
    x = y;
  }
}

void SosFilter::reset() {
  std::fill(z1_.begin(), z1_.end(), 0.0);
  std::fill(z2_.begin(), z2_.end(), 0.0);
}

}  // namespace lvad
