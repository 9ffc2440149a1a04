#pragma once

/**
 * @file butterworth.hpp
 * @brief Digital Butterworth low-pass design (bilinear transform) as second-order sections.
 */

#include <complex>
#include <vector>

namespace lvad {

/// y = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2) x
struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct LowpassDesign {
  int order = 0;
  double cutoff_hz = 0.0;  ///< -3 dB frequency of the designed filter
  double fs = 0.0;
  std::vector<BiquadSection> sections;

  std::complex<double> response(double f_hz) const;
  double magnitude(double f_hz) const { return std::abs(response(f_hz)); }
  /// Phase-derivative group delay at f, in seconds.
  double group_delay(double f_hz) const;
};

/**
 * @brief Minimum-order Butterworth meeting the band edges.
 *
 * Attenuation at pass_hz is at most pass_atten_db and at stop_hz at least
 * stop_atten_db. The cutoff is placed so the stopband edge is met exactly,
 * which leaves the surplus margin in the passband.
 */
LowpassDesign design_butterworth_lowpass(double fs, double pass_hz, double stop_hz,
                                         double pass_atten_db = 3.0, double stop_atten_db = 20.0);

/// Fixed-order design with an explicit -3 dB cutoff.
LowpassDesign butterworth_lowpass(int order, double cutoff_hz, double fs);

/// Streaming cascade of biquads in transposed direct form II.
class SosFilter {
 public:
  SosFilter() = default;
  explicit SosFilter(std::vector<BiquadSection> sections);

  double process(double x);
  /// Set internal state to the steady state for a constant input x.
  void settle(double x);
  void reset();

 private:
  std::vector<BiquadSection> sections_;
  std::vector<double> z1_, z2_;
};

}  // namespace lvad
