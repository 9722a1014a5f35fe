#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mslab/grid.hpp"

namespace mslab {

// Uniform frequency sampling, endpoints inclusive. f_min stays above zero
// because the Drude imaginary part has a pole at omega = 0.
struct FrequencyGrid {
  int count = 1024;
  double f_min_thz = 0.002;
  double f_max_thz = 2.0;

  void validate() const;
  double point(int i) const {
    return f_min_thz + (f_max_thz - f_min_thz) * i / (count - 1);
  }
  std::vector<double> points() const;
  // Band boundary; low band is f <= mid, high band is f > mid. On the
  // default grid this splits 1024 samples into exactly 512/512.
  double band_mid() const { return 0.5 * (f_min_thz + f_max_thz); }
  int low_count() const;
};

// Drude metal parameters, angular frequencies in rad/ps (1 THz = 2*pi rad/ps).
// Defaults approximate aluminum: omega_p ~ 2.24e16 rad/s, gamma ~ 1.22e14 rad/s.
struct DrudeParams {
  double omega_p = 22400.0;
  double gamma = 122.0;

  void validate() const;
};

// eps(omega) = 1 - omega_p^2/(omega^2 + gamma^2)
//              + i * omega_p^2 * gamma / (omega * (omega^2 + gamma^2))
std::complex<double> drude_permittivity(double omega, const DrudeParams& params);

struct Resonator {
  double f0_thz = 1.0;        // center, in (0, 2]
  double q_factor = 20.0;     // f0 / FWHM
  double strength = 0.5;      // in [0, 1]
  double cross_pol_fraction = 0.0;  // in [0, 1]
};

struct SpectralResponse {
  std::vector<double> amp_x;  // in [0, 1]
  std::vector<double> amp_y;  // in [0, 1]
  std::vector<double> phase;  // wrapped to [-pi, pi]
};

enum class Band { low, high };

const char* band_name(Band b);
Band band_from_name(const std::string& name);
Band opposite_band(Band b);

// Fixed constants of the analytic oracle. alpha and eta0 realize the
// frequency-information asymmetry (signal damping and noise floor growing
// with f); both can be zeroed to switch the mechanism off.
struct SurrogateConstants {
  double t0 = 0.7;      // bare-substrate transmission
  double alpha = 0.5;   // information-damping envelope exponent
  double eta0 = 0.01;   // noise floor at f_max
  double tau_ps = 4.0;  // group delay; ~8 phase cycles over 0-2 THz
};

// Deterministic resonance synthesis. The grid's stable hash seeds the draws;
// the distributions are conditioned on pattern features so the map stays
// learnable: resonance positions follow the strongest columns, strength
// scales with fill fraction, cross-polarization with mirror asymmetry.
// Hash-drawn per-grid global factors (strength/linewidth scale) are shared
// across resonators, so one band's realized spectrum carries information
// about the other band's.
std::vector<Resonator> derive_resonators(const PatternFeatures& features,
                                         const PixelGrid& grid);

SpectralResponse simulate(const PixelGrid& grid, const FrequencyGrid& freq,
                          const DrudeParams& drude,
                          const SurrogateConstants& constants = {});

// Contiguous sub-arrays of the response whose frequencies fall in the band.
SpectralResponse band_slice(const SpectralResponse& resp, const FrequencyGrid& freq,
                            Band band);
// [first, last) sample range of a band.
std::pair<int, int> band_range(const FrequencyGrid& freq, Band band);

double wrap_angle(double a);  // to [-pi, pi]

// CSV export: header f_thz,amp_x,amp_y,phase, full precision.
std::string response_to_csv(const SpectralResponse& resp, const FrequencyGrid& freq);

}  // namespace mslab
