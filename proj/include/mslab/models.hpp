#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mslab/ops.hpp"
#include "mslab/surrogate.hpp"
#include "mslab/tensor.hpp"

namespace mslab {

enum class Family { cnn, lstm, gru, transformer };
// band_to_band is the spectrum-to-spectrum configuration used by the
// frequency-asymmetry experiment.
enum class Direction { forward, inverse, band_to_band };
enum class InputMode { image, tokens };
enum class Channel { amp_x, amp_y, phase };
enum class SupplementBand { none, low, high };

const char* family_name(Family f);
Family family_from_name(const std::string& s);
const char* direction_name(Direction d);
Direction direction_from_name(const std::string& s);
const char* input_mode_name(InputMode m);
InputMode input_mode_from_name(const std::string& s);
const char* channel_name(Channel c);
Channel channel_from_name(const std::string& s);
const char* supplement_name(SupplementBand b);
SupplementBand supplement_from_name(const std::string& s);

// Width of a channel's numeric representation: amplitudes are one value per
// sample, phase is carried as (sin, cos) pairs.
int channel_width(Channel c);

struct ModelConfig {
  Family family = Family::cnn;
  Direction direction = Direction::forward;
  InputMode input_mode = InputMode::image;
  int hidden_size = 128;
  int depth = 2;
  int attention_heads = 4;
  SupplementBand supplement_band = SupplementBand::none;
  Channel target_channel = Channel::amp_x;
  Band target_band = Band::low;  // for inverse: the input band
  std::uint64_t seed = 0;
  // Samples per band; set from the frequency grid (default grid: 512).
  int band_samples = 512;

  void validate() const;
  // Key=value text block, one field per line; the checkpoint config format.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
};

// Batch layouts; all tensors are gradient-free constants built by the
// training pipeline.
struct ForwardBatch {
  Tensor pattern_image;   // [B,1,25,25] (input_mode image)
  Tensor pattern_tokens;  // [B,25,25] bit vectors per column (input_mode tokens)
  Tensor supplement;      // [B,nb,Cs], present iff supplement_band != none
  Tensor target;          // [B,nb*Ct]
};

struct InverseBatch {
  Tensor spectrum;       // [B,nb,4]: amp_x, amp_y, sin(phase), cos(phase)
  Tensor target_pixels;  // [B,625] binary
};

struct BandBatch {
  Tensor input_band;   // [B,nb,2]: amp_x, amp_y
  Tensor target_band;  // [B,nb*2]
};

// Recurrent cell weights, gates stacked along the output dim
// (LSTM: input, forget, cell, output; GRU: reset, update, candidate).
struct RecurrentWeights {
  Tensor wx;  // [in, 4h] (LSTM) or [in, 3h] (GRU)
  Tensor wh;  // [h, 4h] or [h, 3h]
  Tensor b;   // [4h] or [3h]
};

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                                    const RecurrentWeights& w);
Tensor gru_cell(const Tensor& x, const Tensor& h, const RecurrentWeights& w);

// Multi-head scaled dot-product self-attention with Q = K = V = hidden,
// heads concatenated and linearly projected by (wo, bo).
// hidden: [T,d] or [B,T,d].
Tensor self_attention(const Tensor& hidden, int heads, const Tensor& wo,
                      const Tensor& bo);

class Model {
 public:
  const ModelConfig& config() const { return config_; }
  const std::vector<std::string>& param_names() const { return names_; }
  const Tensor& param(const std::string& name) const;
  std::vector<Tensor> parameters() const;
  int total_param_count() const;
  void set_param_values(const std::string& name, const std::vector<double>& values);

 private:
  friend Model build_model(const ModelConfig&);
  friend struct ModelForward;
  ModelConfig config_;
  std::vector<std::string> names_;
  std::map<std::string, Tensor> params_;
};

Model build_model(const ModelConfig& config);

Tensor predict(const Model& model, const ForwardBatch& batch);
Tensor predict(const Model& model, const InverseBatch& batch);
Tensor predict(const Model& model, const BandBatch& batch);

}  // namespace mslab
