#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mslab/grid.hpp"
#include "mslab/surrogate.hpp"

namespace mslab {

// Oracle configuration a dataset was generated under; stored in the file
// header so every record can be regenerated bit-exactly.
struct OracleConfig {
  FrequencyGrid freq;
  DrudeParams drude;
  SurrogateConstants constants;
};

struct Dataset {
  OracleConfig oracle;
  std::uint64_t generation_seed = 0;
  std::vector<PixelGrid> grids;
  std::vector<SpectralResponse> responses;

  int size() const { return static_cast<int>(grids.size()); }
};

// n grids with per-sample fill probabilities uniform in [fill_lo, fill_hi],
// each simulated by the surrogate oracle. Deterministic in seed.
Dataset generate_dataset(int n, std::uint64_t seed, double fill_lo, double fill_hi,
                         const OracleConfig& oracle = {});

// Re-simulates every record from its stored grid; true when all spectra
// match bit-exactly.
bool verify_regeneration(const Dataset& ds);

// Same grids, new oracle constants, responses regenerated. Used by the
// asymmetry experiment to compare damped and flat oracles on one sample set.
Dataset resimulate(const Dataset& ds, const SurrogateConstants& constants);

// Binary container: magic "MSLABDAT", u32 version, u64 n, u32 freq count,
// f64 f_min/f_max, f64 omega_p/gamma, f64 t0/alpha/eta0/tau, u64 seed, then
// per record 79 packed grid bytes + three f64 arrays.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace mslab
