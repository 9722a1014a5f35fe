#include "mslab/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "mslab/rng.hpp"

namespace mslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Resonance placement span and the frequency that splits it into bands of
// equal expected resonance mass (the default grid's band midpoint). Keeping
// the mass symmetric means the flat oracle (alpha = eta0 = 0) has no built-in
// band asymmetry.
constexpr double kF0Lo = 0.2;
constexpr double kF0Split = 1.001;
constexpr double kF0Hi = 1.9;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// u in [0,1] -> f0 in (kF0Lo, kF0Hi), piecewise linear so that u = 0.5 lands
// on the band split.
double warp_to_f0(double u) {
  u = std::clamp(u, 0.0, 1.0);
  if (u < 0.5) return kF0Lo + (kF0Split - kF0Lo) * (u / 0.5);
  return kF0Split + (kF0Hi - kF0Split) * ((u - 0.5) / 0.5);
}

// Share of the screening response carried by conduction currents,
// Im eps / |eps| in (0, 1). Close to 1 for a good THz metal and slowly
// decreasing with frequency; scales each resonance's effective strength.
double conduction_quality(double f_thz, const DrudeParams& drude) {
  const std::complex<double> eps = drude_permittivity(kTwoPi * f_thz, drude);
  return eps.imag() / std::abs(eps);
}

}  // namespace

void FrequencyGrid::validate() const {
  if (count < 2) throw std::invalid_argument("FrequencyGrid: count must be >= 2");
  if (!(f_min_thz > 0.0))
    throw std::invalid_argument("FrequencyGrid: f_min must be > 0");
  if (!(f_min_thz < f_max_thz))
    throw std::invalid_argument("FrequencyGrid: f_min must be < f_max");
}

std::vector<double> FrequencyGrid::points() const {
  validate();
  std::vector<double> p(count);
  for (int i = 0; i < count; ++i) p[i] = point(i);
  return p;
}

int FrequencyGrid::low_count() const {
  const double mid = band_mid();
  int n = 0;
  while (n < count && point(n) <= mid) ++n;
  return n;
}

void DrudeParams::validate() const {
  if (!(omega_p > 0.0)) throw std::invalid_argument("DrudeParams: omega_p must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("DrudeParams: gamma must be > 0");
}

std::complex<double> drude_permittivity(double omega, const DrudeParams& params) {
  params.validate();
  if (!(omega > 0.0))
    throw std::domain_error("drude_permittivity: omega must be > 0 (pole at 0)");
  const double wp2 = params.omega_p * params.omega_p;
  const double denom = omega * omega + params.gamma * params.gamma;
  return {1.0 - wp2 / denom, wp2 * params.gamma / (omega * denom)};
}

const char* band_name(Band b) { return b == Band::low ? "low" : "high"; }

Band band_from_name(const std::string& name) {
  if (name == "low") return Band::low;
  if (name == "high") return Band::high;
  throw std::invalid_argument("unknown band '" + name + "' (expected low|high)");
}

Band opposite_band(Band b) { return b == Band::low ? Band::high : Band::low; }

std::vector<Resonator> derive_resonators(const PatternFeatures& features,
                                         const PixelGrid& grid) {
  std::vector<Resonator> out;
  if (features.fill_fraction <= 0.0) return out;

  Rng rng(mix_seed(grid.stable_hash(), 0x5e50ull));

  // Per-grid global factors, shared by every resonator. They make one band's
  // realized dip depths and widths informative about the other band's.
  const double g_strength = 0.65 + 0.35 * rng.next_unit();
  const double g_width = 0.8 + 0.4 * rng.next_unit();
  const double g_cross = 0.6 + 0.4 * rng.next_unit();

  // Resonance count tracks fill fraction with one unit of stochastic rounding.
  const double count_f = 1.0 + 5.0 * features.fill_fraction;
  int count = static_cast<int>(std::floor(count_f + rng.next_unit()));
  count = std::clamp(count, 1, 6);

  // Strongest columns host the resonances; a small jitter breaks ties.
  std::array<int, kGridSide> order{};
  std::array<double, kGridSide> score{};
  for (int c = 0; c < kGridSide; ++c) {
    order[c] = c;
    score[c] = features.column_fill[c] + 0.02 * rng.next_unit();
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] > score[b]; });

  for (int k = 0; k < count; ++k) {
    const int col = order[k];
    const double u_col = (col + 0.5 + 0.3 * (rng.next_unit() - 0.5)) / kGridSide;
    Resonator r;
    r.f0_thz = warp_to_f0(u_col);
    r.q_factor = (14.0 + 10.0 * rng.next_unit()) / g_width;
    r.strength = clamp01(features.fill_fraction * g_strength *
                         (0.8 + 0.2 * rng.next_unit()));
    r.cross_pol_fraction = clamp01(features.mirror_asymmetry * g_cross *
                                   (0.8 + 0.2 * rng.next_unit()));
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(),
            [](const Resonator& a, const Resonator& b) { return a.f0_thz < b.f0_thz; });
  return out;
}

double wrap_angle(double a) { return std::remainder(a, kTwoPi); }

SpectralResponse simulate(const PixelGrid& grid, const FrequencyGrid& freq,
                          const DrudeParams& drude,
                          const SurrogateConstants& constants) {
  freq.validate();
  drude.validate();
  const auto features = extract_features(grid);
  const auto resonators = derive_resonators(features, grid);

  std::vector<double> s_eff(resonators.size()), width(resonators.size());
  for (std::size_t k = 0; k < resonators.size(); ++k) {
    s_eff[k] = resonators[k].strength * conduction_quality(resonators[k].f0_thz, drude);
    width[k] = resonators[k].f0_thz / resonators[k].q_factor;
  }

  SpectralResponse resp;
  resp.amp_x.resize(freq.count);
  resp.amp_y.resize(freq.count);
  resp.phase.resize(freq.count);

  for (int i = 0; i < freq.count; ++i) {
    const double f = freq.point(i);
    const double damp = std::exp(-constants.alpha * f / freq.f_max_thz);
    double prod = 1.0;
    double sum_y = 0.0;
    double phase = -kTwoPi * f * constants.tau_ps;
    for (std::size_t k = 0; k < resonators.size(); ++k) {
      const Resonator& r = resonators[k];
      const double hw = 0.5 * width[k];
      const double df = f - r.f0_thz;
      const double lorentz = hw * hw / (df * df + hw * hw);
      prod *= 1.0 - s_eff[k] * (1.0 - r.cross_pol_fraction) * lorentz;
      sum_y += s_eff[k] * r.cross_pol_fraction * lorentz;
      // driven-oscillator phase, 0 below resonance, pi above
      phase += s_eff[k] * std::atan2(f * width[k], r.f0_thz * r.f0_thz - f * f);
    }
    resp.amp_x[i] = clamp01(constants.t0 * prod * damp);
    resp.amp_y[i] = clamp01(sum_y * damp);
    resp.phase[i] = wrap_angle(phase);
  }

  // Frequency-proportional noise floor, deterministic per grid.
  Rng noise(mix_seed(grid.stable_hash(), 0x401Eull));
  for (int i = 0; i < freq.count; ++i) {
    const double eta = constants.eta0 * freq.point(i) / freq.f_max_thz;
    resp.amp_x[i] = clamp01(resp.amp_x[i] + eta * (2.0 * noise.next_unit() - 1.0));
    resp.amp_y[i] = clamp01(resp.amp_y[i] + eta * (2.0 * noise.next_unit() - 1.0));
    resp.phase[i] = wrap_angle(resp.phase[i] + eta * (2.0 * noise.next_unit() - 1.0));
  }
  return resp;
}

std::pair<int, int> band_range(const FrequencyGrid& freq, Band band) {
  freq.validate();
  const int n_low = freq.low_count();
  const int first = band == Band::low ? 0 : n_low;
  const int last = band == Band::low ? n_low : freq.count;
  if (first >= last)
    throw std::domain_error(std::string("band_slice: band '") + band_name(band) +
                            "' spans no samples");
  return {first, last};
}

SpectralResponse band_slice(const SpectralResponse& resp, const FrequencyGrid& freq,
                            Band band) {
  if (static_cast<int>(resp.amp_x.size()) != freq.count ||
      static_cast<int>(resp.amp_y.size()) != freq.count ||
      static_cast<int>(resp.phase.size()) != freq.count)
    throw std::invalid_argument("band_slice: response length does not match grid");
  const auto [first, last] = band_range(freq, band);
  SpectralResponse out;
  out.amp_x.assign(resp.amp_x.begin() + first, resp.amp_x.begin() + last);
  out.amp_y.assign(resp.amp_y.begin() + first, resp.amp_y.begin() + last);
  out.phase.assign(resp.phase.begin() + first, resp.phase.begin() + last);
  return out;
}

std::string response_to_csv(const SpectralResponse& resp, const FrequencyGrid& freq) {
  if (static_cast<int>(resp.amp_x.size()) != freq.count)
    throw std::invalid_argument("response_to_csv: response length does not match grid");
  std::string out = "f_thz,amp_x,amp_y,phase\n";
  char buf[160];
  for (int i = 0; i < freq.count; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", freq.point(i),
                  resp.amp_x[i], resp.amp_y[i], resp.phase[i]);
    out += buf;
  }
  return out;
}

}  // namespace mslab
