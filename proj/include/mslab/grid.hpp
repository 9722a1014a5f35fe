#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mslab {

inline constexpr int kGridSide = 25;
inline constexpr int kGridCells = kGridSide * kGridSide;
inline constexpr std::uint32_t kTokenLimit = 1u << kGridSide;  // 2^25

// 25x25 binary metasurface pattern. cell(r, c) == 1 means a metal patch at
// row r, column c; 0 means bare substrate.
class PixelGrid {
 public:
  PixelGrid() { cells_.fill(0); }

  std::uint8_t cell(int row, int col) const { return cells_[idx(row, col)]; }
  void set_cell(int row, int col, std::uint8_t v);

  const std::array<std::uint8_t, kGridCells>& cells() const { return cells_; }

  // Row-major LSB-first bit packing, 79 bytes. Wire format for dataset files
  // and the input to the stable grid hash.
  std::array<std::uint8_t, (kGridCells + 7) / 8> packed() const;
  static PixelGrid from_packed(const std::array<std::uint8_t, (kGridCells + 7) / 8>& bytes);

  std::uint64_t stable_hash() const;

  bool operator==(const PixelGrid&) const = default;

 private:
  static int idx(int row, int col);
  std::array<std::uint8_t, kGridCells> cells_;
};

// Fixed fabrication geometry of one unit cell. Metadata only; the surrogate
// never reads these fields.
struct UnitGeometry {
  double period_um = 200.0;
  double pixel_side_um = 8.0;
  double metal_thickness_nm = 200.0;
  double substrate_thickness_um = 500.0;
  std::string substrate_material = "high-resistance silicon";

  void validate() const;
};

// One token per grid column; row 0 is the least significant bit.
struct TokenSequence {
  std::array<std::uint32_t, kGridSide> tokens{};
};

struct PatternFeatures {
  double fill_fraction = 0.0;
  std::array<double, kGridSide> column_fill{};
  std::array<double, kGridSide> row_fill{};
  // Normalized Hamming distance between the grid and its mirror about the
  // vertical centerline. Zero iff the grid is mirror-symmetric.
  double mirror_asymmetry = 0.0;
  // 4-connected regions of metal cells.
  int component_count = 0;
};

// Each cell independently 1 with probability fill_prob; pure function of
// (seed, fill_prob).
PixelGrid random_pattern(std::uint64_t seed, double fill_prob);

TokenSequence to_tokens(const PixelGrid& grid);
PixelGrid from_tokens(const TokenSequence& seq);

PatternFeatures extract_features(const PixelGrid& grid);

// Mirror about the vertical centerline (column c -> 24 - c).
PixelGrid mirror_horizontal(const PixelGrid& grid);

// Text wire format: 25 lines of 25 characters '0'/'1', newline-terminated.
std::string grid_to_text(const PixelGrid& grid);
// Throws std::invalid_argument naming the offending 1-based line.
PixelGrid grid_from_text(const std::string& text);

}  // namespace mslab
