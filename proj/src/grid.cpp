#include "mslab/grid.hpp"

#include <sstream>
#include <stdexcept>

#include "mslab/hash.hpp"
#include "mslab/rng.hpp"

namespace mslab {

int PixelGrid::idx(int row, int col) {
  if (row < 0 || row >= kGridSide || col < 0 || col >= kGridSide)
    throw std::out_of_range("PixelGrid cell (" + std::to_string(row) + "," +
                            std::to_string(col) + ") outside 25x25");
  return row * kGridSide + col;
}

void PixelGrid::set_cell(int row, int col, std::uint8_t v) {
  if (v > 1) throw std::invalid_argument("PixelGrid cell value must be 0 or 1");
  cells_[idx(row, col)] = v;
}

std::array<std::uint8_t, (kGridCells + 7) / 8> PixelGrid::packed() const {
  std::array<std::uint8_t, (kGridCells + 7) / 8> bytes{};
  for (int i = 0; i < kGridCells; ++i)
    if (cells_[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return bytes;
}

PixelGrid PixelGrid::from_packed(const std::array<std::uint8_t, (kGridCells + 7) / 8>& bytes) {
  PixelGrid g;
  for (int i = 0; i < kGridCells; ++i)
    g.cells_[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return g;
}

std::uint64_t PixelGrid::stable_hash() const {
  auto bytes = packed();
  return fnv1a64(bytes.data(), bytes.size());
}

void UnitGeometry::validate() const {
  if (period_um <= 0 || pixel_side_um <= 0 || metal_thickness_nm <= 0 ||
      substrate_thickness_um <= 0)
    throw std::invalid_argument("UnitGeometry lengths must be strictly positive");
  if (pixel_side_um * kGridSide > period_um)
    throw std::invalid_argument("UnitGeometry: pixel_side * 25 exceeds period");
}

PixelGrid random_pattern(std::uint64_t seed, double fill_prob) {
  if (!(fill_prob >= 0.0 && fill_prob <= 1.0))
    throw std::invalid_argument("random_pattern: fill_prob must lie in [0,1]");
  Rng rng(mix_seed(seed, 0x9d1dull));
  PixelGrid g;
  for (int r = 0; r < kGridSide; ++r)
    for (int c = 0; c < kGridSide; ++c)
      g.set_cell(r, c, rng.next_unit() < fill_prob ? 1 : 0);
  return g;
}

TokenSequence to_tokens(const PixelGrid& grid) {
  TokenSequence seq;
  for (int c = 0; c < kGridSide; ++c) {
    std::uint32_t t = 0;
    for (int r = 0; r < kGridSide; ++r)
      if (grid.cell(r, c)) t |= 1u << r;
    seq.tokens[c] = t;
  }
  return seq;
}

PixelGrid from_tokens(const TokenSequence& seq) {
  PixelGrid g;
  for (int c = 0; c < kGridSide; ++c) {
    const std::uint32_t t = seq.tokens[c];
    if (t >= kTokenLimit)
      throw std::invalid_argument("from_tokens: token " + std::to_string(c) +
                                  " = " + std::to_string(t) + " >= 2^25");
    for (int r = 0; r < kGridSide; ++r)
      g.set_cell(r, c, (t >> r) & 1u);
  }
  return g;
}

PixelGrid mirror_horizontal(const PixelGrid& grid) {
  PixelGrid m;
  for (int r = 0; r < kGridSide; ++r)
    for (int c = 0; c < kGridSide; ++c)
      m.set_cell(r, c, grid.cell(r, kGridSide - 1 - c));
  return m;
}

namespace {

int count_components(const PixelGrid& g) {
  std::array<bool, kGridCells> seen{};
  int count = 0;
  std::vector<int> stack;
  for (int start = 0; start < kGridCells; ++start) {
    if (seen[start] || !g.cells()[start]) continue;
    ++count;
    stack.push_back(start);
    seen[start] = true;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const int r = cur / kGridSide, c = cur % kGridSide;
      const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[0] >= kGridSide || n[1] < 0 || n[1] >= kGridSide) continue;
        const int ni = n[0] * kGridSide + n[1];
        if (!seen[ni] && g.cells()[ni]) {
          seen[ni] = true;
          stack.push_back(ni);
        }
      }
    }
  }
  return count;
}

}  // namespace

PatternFeatures extract_features(const PixelGrid& grid) {
  PatternFeatures f;
  int total = 0;
  std::array<int, kGridSide> col_sum{}, row_sum{};
  for (int r = 0; r < kGridSide; ++r)
    for (int c = 0; c < kGridSide; ++c) {
      const int v = grid.cell(r, c);
      total += v;
      col_sum[c] += v;
      row_sum[r] += v;
    }
  f.fill_fraction = static_cast<double>(total) / kGridCells;
  for (int i = 0; i < kGridSide; ++i) {
    f.column_fill[i] = static_cast<double>(col_sum[i]) / kGridSide;
    f.row_fill[i] = static_cast<double>(row_sum[i]) / kGridSide;
  }
  int diff = 0;
  for (int r = 0; r < kGridSide; ++r)
    for (int c = 0; c < kGridSide; ++c)
      if (grid.cell(r, c) != grid.cell(r, kGridSide - 1 - c)) ++diff;
  f.mirror_asymmetry = static_cast<double>(diff) / kGridCells;
  f.component_count = count_components(grid);
  return f;
}

std::string grid_to_text(const PixelGrid& grid) {
  std::string out;
  out.reserve(kGridSide * (kGridSide + 1));
  for (int r = 0; r < kGridSide; ++r) {
    for (int c = 0; c < kGridSide; ++c) out.push_back(grid.cell(r, c) ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

PixelGrid grid_from_text(const std::string& text) {
  std::istringstream in(text);
  PixelGrid g;
  std::string line;
  for (int r = 0; r < kGridSide; ++r) {
    if (!std::getline(in, line))
      throw std::invalid_argument("pattern text: line " + std::to_string(r + 1) +
                                  ": missing (expected 25 lines)");
    if (line.size() != kGridSide)
      throw std::invalid_argument("pattern text: line " + std::to_string(r + 1) +
                                  ": expected 25 characters, got " +
                                  std::to_string(line.size()));
    for (int c = 0; c < kGridSide; ++c) {
      if (line[c] != '0' && line[c] != '1')
        throw std::invalid_argument("pattern text: line " + std::to_string(r + 1) +
                                    ": invalid character '" + std::string(1, line[c]) +
                                    "'");
      g.set_cell(r, c, line[c] == '1' ? 1 : 0);
    }
  }
  while (std::getline(in, line))
    if (!line.empty())
      throw std::invalid_argument("pattern text: line 26: trailing content");
  return g;
}

}  // namespace mslab
