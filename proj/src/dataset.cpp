#include "mslab/dataset.hpp"

#include <stdexcept>

#include "mslab/io_util.hpp"
#include "mslab/rng.hpp"

namespace mslab {

namespace {
constexpr char kMagic[] = "MSLABDAT";
constexpr std::uint32_t kVersion = 1;
}  // namespace

Dataset generate_dataset(int n, std::uint64_t seed, double fill_lo, double fill_hi,
                         const OracleConfig& oracle) {
  if (n < 10) throw std::invalid_argument("generate_dataset: n must be >= 10");
  if (!(0.0 <= fill_lo && fill_lo <= fill_hi && fill_hi <= 1.0))
    throw std::invalid_argument("generate_dataset: fill range [" +
                                std::to_string(fill_lo) + "," + std::to_string(fill_hi) +
                                "] invalid");
  oracle.freq.validate();
  oracle.drude.validate();

  Dataset ds;
  ds.oracle = oracle;
  ds.generation_seed = seed;
  ds.grids.reserve(n);
  ds.responses.reserve(n);
  Rng fill_rng(mix_seed(seed, 0xF111ull));
  for (int i = 0; i < n; ++i) {
    const double p = fill_rng.uniform(fill_lo, fill_hi);
    PixelGrid g = random_pattern(mix_seed(seed, 0x6e1dull + i), p);
    ds.responses.push_back(simulate(g, oracle.freq, oracle.drude, oracle.constants));
    ds.grids.push_back(std::move(g));
  }
  return ds;
}

bool verify_regeneration(const Dataset& ds) {
  for (int i = 0; i < ds.size(); ++i) {
    const SpectralResponse fresh =
        simulate(ds.grids[i], ds.oracle.freq, ds.oracle.drude, ds.oracle.constants);
    if (fresh.amp_x != ds.responses[i].amp_x || fresh.amp_y != ds.responses[i].amp_y ||
        fresh.phase != ds.responses[i].phase)
      return false;
  }
  return true;
}

Dataset resimulate(const Dataset& ds, const SurrogateConstants& constants) {
  Dataset out;
  out.oracle = ds.oracle;
  out.oracle.constants = constants;
  out.generation_seed = ds.generation_seed;
  out.grids = ds.grids;
  out.responses.reserve(ds.grids.size());
  for (const auto& g : out.grids)
    out.responses.push_back(simulate(g, out.oracle.freq, out.oracle.drude, constants));
  return out;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  ByteWriter w;
  w.raw(kMagic, 8);
  w.u32(kVersion);
  w.u64(static_cast<std::uint64_t>(ds.size()));
  w.u32(static_cast<std::uint32_t>(ds.oracle.freq.count));
  w.f64(ds.oracle.freq.f_min_thz);
  w.f64(ds.oracle.freq.f_max_thz);
  w.f64(ds.oracle.drude.omega_p);
  w.f64(ds.oracle.drude.gamma);
  w.f64(ds.oracle.constants.t0);
  w.f64(ds.oracle.constants.alpha);
  w.f64(ds.oracle.constants.eta0);
  w.f64(ds.oracle.constants.tau_ps);
  w.u64(ds.generation_seed);
  for (int i = 0; i < ds.size(); ++i) {
    const auto packed = ds.grids[i].packed();
    w.raw(packed.data(), packed.size());
    for (double v : ds.responses[i].amp_x) w.f64(v);
    for (double v : ds.responses[i].amp_y) w.f64(v);
    for (double v : ds.responses[i].phase) w.f64(v);
  }
  atomic_write_file(path, w.bytes.data(), w.bytes.size());
}

Dataset load_dataset(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r{bytes};
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("'" + path + "' is not a dataset file");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("dataset version " + std::to_string(version) + " unsupported");
  Dataset ds;
  const std::uint64_t n = r.u64();
  ds.oracle.freq.count = static_cast<int>(r.u32());
  ds.oracle.freq.f_min_thz = r.f64();
  ds.oracle.freq.f_max_thz = r.f64();
  ds.oracle.drude.omega_p = r.f64();
  ds.oracle.drude.gamma = r.f64();
  ds.oracle.constants.t0 = r.f64();
  ds.oracle.constants.alpha = r.f64();
  ds.oracle.constants.eta0 = r.f64();
  ds.oracle.constants.tau_ps = r.f64();
  ds.generation_seed = r.u64();
  ds.oracle.freq.validate();
  ds.grids.reserve(n);
  ds.responses.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::array<std::uint8_t, (kGridCells + 7) / 8> packed;
    r.raw(packed.data(), packed.size());
    ds.grids.push_back(PixelGrid::from_packed(packed));
    SpectralResponse resp;
    resp.amp_x.resize(ds.oracle.freq.count);
    resp.amp_y.resize(ds.oracle.freq.count);
    resp.phase.resize(ds.oracle.freq.count);
    for (auto& v : resp.amp_x) v = r.f64();
    for (auto& v : resp.amp_y) v = r.f64();
    for (auto& v : resp.phase) v = r.f64();
    ds.responses.push_back(std::move(resp));
  }
  return ds;
}

}  // namespace mslab
