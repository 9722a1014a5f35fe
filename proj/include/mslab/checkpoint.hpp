#pragma once

#include <string>

#include "mslab/models.hpp"

namespace mslab {

// Versioned binary container, little-endian:
//   magic "MSLABCKP", u32 version, u32 config block size, config text,
//   u32 parameter count, then per parameter: u32 name length, name bytes,
//   u32 rank, u32 dims[rank], f64 payload.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace mslab
