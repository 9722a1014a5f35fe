#include "mslab/models.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mslab/hash.hpp"
#include "mslab/rng.hpp"

namespace mslab {

namespace {

constexpr int kSuppPatchDim = 16;
constexpr int kSuppEmbedDim = 32;
constexpr int kCnnBaseChannels = 8;
constexpr int kBandConvKernel = 8;
constexpr int kBandConvStride = 4;

// Largest power-of-two patch length <= 16 dividing the band sample count.
int patch_len_for(int band_samples) {
  for (int p = 16; p > 1; p /= 2)
    if (band_samples % p == 0) return p;
  return 1;
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::cnn: return "cnn";
    case Family::lstm: return "lstm";
    case Family::gru: return "gru";
    case Family::transformer: return "transformer";
  }
  return "?";
}

Family family_from_name(const std::string& s) {
  if (s == "cnn") return Family::cnn;
  if (s == "lstm") return Family::lstm;
  if (s == "gru") return Family::gru;
  if (s == "transformer") return Family::transformer;
  throw std::invalid_argument("unknown model family '" + s + "'");
}

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::forward: return "forward";
    case Direction::inverse: return "inverse";
    case Direction::band_to_band: return "band_to_band";
  }
  return "?";
}

Direction direction_from_name(const std::string& s) {
  if (s == "forward") return Direction::forward;
  if (s == "inverse") return Direction::inverse;
  if (s == "band_to_band") return Direction::band_to_band;
  throw std::invalid_argument("unknown direction '" + s + "'");
}

const char* input_mode_name(InputMode m) {
  return m == InputMode::image ? "image" : "tokens";
}

InputMode input_mode_from_name(const std::string& s) {
  if (s == "image") return InputMode::image;
  if (s == "tokens") return InputMode::tokens;
  throw std::invalid_argument("unknown input mode '" + s + "'");
}

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::amp_x: return "amp_x";
    case Channel::amp_y: return "amp_y";
    case Channel::phase: return "phase";
  }
  return "?";
}

Channel channel_from_name(const std::string& s) {
  if (s == "amp_x") return Channel::amp_x;
  if (s == "amp_y") return Channel::amp_y;
  if (s == "phase") return Channel::phase;
  throw std::invalid_argument("unknown channel '" + s + "'");
}

const char* supplement_name(SupplementBand b) {
  switch (b) {
    case SupplementBand::none: return "none";
    case SupplementBand::low: return "low";
    case SupplementBand::high: return "high";
  }
  return "?";
}

SupplementBand supplement_from_name(const std::string& s) {
  if (s == "none") return SupplementBand::none;
  if (s == "low") return SupplementBand::low;
  if (s == "high") return SupplementBand::high;
  throw std::invalid_argument("unknown supplement band '" + s + "'");
}

int channel_width(Channel c) { return c == Channel::phase ? 2 : 1; }

void ModelConfig::validate() const {
  if (hidden_size < 1 || depth < 1 || attention_heads < 1 || band_samples < 1)
    throw std::invalid_argument("ModelConfig: sizes must be positive");
  if (family == Family::transformer && hidden_size % attention_heads != 0)
    throw std::invalid_argument("ModelConfig: hidden_size " + std::to_string(hidden_size) +
                                " not divisible by attention_heads " +
                                std::to_string(attention_heads));
  if (direction == Direction::forward) {
    if (input_mode == InputMode::image && family != Family::cnn)
      throw std::invalid_argument("ModelConfig: image input requires the cnn family");
    if (input_mode == InputMode::tokens && family == Family::cnn)
      throw std::invalid_argument("ModelConfig: token input requires lstm, gru or transformer");
  }
  if (supplement_band != SupplementBand::none) {
    if (direction != Direction::forward)
      throw std::invalid_argument("ModelConfig: supplement input applies to forward models only");
    const Band supp = supplement_band == SupplementBand::low ? Band::low : Band::high;
    if (supp == target_band)
      throw std::invalid_argument("ModelConfig: supplement band must differ from the target band");
  }
  if (family == Family::cnn && direction == Direction::forward) {
    int spatial = kGridSide;
    for (int i = 0; i < depth; ++i) spatial /= 2;
    if (spatial < 1)
      throw std::invalid_argument("ModelConfig: depth " + std::to_string(depth) +
                                  " collapses the 25x25 image");
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << "family=" << family_name(family) << "\n"
      << "direction=" << direction_name(direction) << "\n"
      << "input_mode=" << input_mode_name(input_mode) << "\n"
      << "hidden_size=" << hidden_size << "\n"
      << "depth=" << depth << "\n"
      << "attention_heads=" << attention_heads << "\n"
      << "supplement_band=" << supplement_name(supplement_band) << "\n"
      << "target_channel=" << channel_name(target_channel) << "\n"
      << "target_band=" << band_name(target_band) << "\n"
      << "seed=" << seed << "\n"
      << "band_samples=" << band_samples << "\n";
  return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("ModelConfig: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "family") cfg.family = family_from_name(val);
    else if (key == "direction") cfg.direction = direction_from_name(val);
    else if (key == "input_mode") cfg.input_mode = input_mode_from_name(val);
    else if (key == "hidden_size") cfg.hidden_size = std::stoi(val);
    else if (key == "depth") cfg.depth = std::stoi(val);
    else if (key == "attention_heads") cfg.attention_heads = std::stoi(val);
    else if (key == "supplement_band") cfg.supplement_band = supplement_from_name(val);
    else if (key == "target_channel") cfg.target_channel = channel_from_name(val);
    else if (key == "target_band") cfg.target_band = band_from_name(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "band_samples") cfg.band_samples = std::stoi(val);
    else throw std::invalid_argument("ModelConfig: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                                    const RecurrentWeights& w) {
  const int batch = x.shape()[0];
  const int hd = h.shape()[1];
  if (w.wx.shape()[1] != 4 * hd || w.wh.shape()[0] != hd || w.wh.shape()[1] != 4 * hd)
    throw std::invalid_argument("lstm_cell: weight shapes " + shape_str(w.wx.shape()) +
                                "/" + shape_str(w.wh.shape()) + " do not match hidden " +
                                std::to_string(hd));
  Tensor gates = add(add(matmul(x, w.wx), matmul(h, w.wh)), w.b);
  auto gate = [&](int i) {
    return slice(gates, {{0, batch}, {i * hd, (i + 1) * hd}});
  };
  Tensor in_g = sigmoid(gate(0));
  Tensor forget_g = sigmoid(gate(1));
  Tensor cand = tanh(gate(2));
  Tensor out_g = sigmoid(gate(3));
  Tensor c_next = add(mul(forget_g, c), mul(in_g, cand));
  Tensor h_next = mul(out_g, tanh(c_next));
  return {h_next, c_next};
}

Tensor gru_cell(const Tensor& x, const Tensor& h, const RecurrentWeights& w) {
  const int batch = x.shape()[0];
  const int hd = h.shape()[1];
  if (w.wx.shape()[1] != 3 * hd || w.wh.shape()[0] != hd || w.wh.shape()[1] != 3 * hd)
    throw std::invalid_argument("gru_cell: weight shapes " + shape_str(w.wx.shape()) +
                                "/" + shape_str(w.wh.shape()) + " do not match hidden " +
                                std::to_string(hd));
  Tensor gx = add(matmul(x, w.wx), w.b);
  Tensor gh = matmul(h, w.wh);
  auto part = [&](const Tensor& t, int i) {
    return slice(t, {{0, batch}, {i * hd, (i + 1) * hd}});
  };
  Tensor reset_g = sigmoid(add(part(gx, 0), part(gh, 0)));
  Tensor update_g = sigmoid(add(part(gx, 1), part(gh, 1)));
  Tensor cand = tanh(add(part(gx, 2), mul(reset_g, part(gh, 2))));
  Tensor keep = add(Tensor::from({1}, {1.0}), scale(update_g, -1.0));  // 1 - z
  return add(mul(update_g, h), mul(keep, cand));
}

Tensor self_attention(const Tensor& hidden, int heads, const Tensor& wo,
                      const Tensor& bo) {
  const bool batched = hidden.shape().size() == 3;
  if (!batched && hidden.shape().size() != 2)
    throw std::invalid_argument("self_attention: expected [T,d] or [B,T,d], got " +
                                shape_str(hidden.shape()));
  Tensor x = batched ? hidden
                     : reshape(hidden, {1, hidden.shape()[0], hidden.shape()[1]});
  const int batch = x.shape()[0], seq = x.shape()[1], dim = x.shape()[2];
  if (dim % heads != 0)
    throw std::invalid_argument("self_attention: dim " + std::to_string(dim) +
                                " not divisible by " + std::to_string(heads) + " heads");
  const int head_dim = dim / heads;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<Tensor> rows;
  rows.reserve(batch);
  for (int b = 0; b < batch; ++b) {
    std::vector<Tensor> head_outs;
    head_outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
      Tensor qkv = reshape(
          slice(x, {{b, b + 1}, {0, seq}, {h * head_dim, (h + 1) * head_dim}}),
          {seq, head_dim});
      Tensor scores = scale(matmul(qkv, transpose(qkv)), inv_sqrt_d);
      Tensor weights = softmax(scores, 1);
      head_outs.push_back(matmul(weights, qkv));
    }
    rows.push_back(reshape(concat(head_outs, 1), {1, seq, dim}));
  }
  Tensor merged = batch == 1 ? rows[0] : concat(rows, 0);
  Tensor flat = reshape(merged, {batch * seq, dim});
  Tensor projected = add(matmul(flat, wo), bo);
  return batched ? reshape(projected, {batch, seq, dim})
                 : reshape(projected, {seq, dim});
}

const Tensor& Model::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::invalid_argument("model has no parameter '" + name + "'");
  return it->second;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  out.reserve(names_.size());
  for (const auto& n : names_) out.push_back(params_.at(n));
  return out;
}

int Model::total_param_count() const {
  int n = 0;
  for (const auto& name : names_) n += params_.at(name).size();
  return n;
}

void Model::set_param_values(const std::string& name, const std::vector<double>& values) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::invalid_argument("model has no parameter '" + name + "'");
  if (it->second.size() != static_cast<int>(values.size()))
    throw std::invalid_argument("parameter '" + name + "' expects " +
                                std::to_string(it->second.size()) + " values, got " +
                                std::to_string(values.size()));
  it->second.values_mut() = values;
}

namespace {

// Registers named parameters. Initialization is keyed by (seed, name), so a
// parameter's initial values do not depend on creation order and models
// sharing a seed initialize identically-named layers identically.
struct ParamBuilder {
  std::vector<std::string>& names;
  std::map<std::string, Tensor>& params;
  std::uint64_t seed;

  Tensor put(const std::string& name, Tensor t) {
    names.push_back(name);
    params.emplace(name, t);
    return t;
  }

  Tensor uniform(const std::string& name, std::vector<int> shape, double bound) {
    Rng rng(mix_seed(seed, fnv1a64(name)));
    std::vector<double> v(static_cast<std::size_t>(numel(shape)));
    for (auto& x : v) x = rng.uniform(-bound, bound);
    return put(name, Tensor::from(std::move(shape), std::move(v), true));
  }

  Tensor dense(const std::string& name, int fan_in, int fan_out) {
    return uniform(name, {fan_in, fan_out}, std::sqrt(6.0 / (fan_in + fan_out)));
  }

  Tensor conv(const std::string& name, int out_ch, int in_ch, int kh, int kw) {
    const double bound = std::sqrt(6.0 / (in_ch * kh * kw + out_ch * kh * kw));
    return uniform(name, {out_ch, in_ch, kh, kw}, bound);
  }

  Tensor recurrent(const std::string& name, int rows, int cols, int hidden) {
    return uniform(name, {rows, cols}, 1.0 / std::sqrt(static_cast<double>(hidden)));
  }

  Tensor zeros(const std::string& name, std::vector<int> shape) {
    return put(name, Tensor::zeros(std::move(shape), true));
  }

  Tensor ones(const std::string& name, std::vector<int> shape) {
    std::vector<double> v(static_cast<std::size_t>(numel(shape)), 1.0);
    return put(name, Tensor::from(std::move(shape), std::move(v), true));
  }
};

struct EncoderSpec {
  int seq_len = 0;  // sequence encoders
  int token_dim = 0;
  bool image = false;  // 25x25 image encoder
  int band_channels = 0;
};

EncoderSpec encoder_spec(const ModelConfig& cfg) {
  EncoderSpec spec;
  if (cfg.direction == Direction::forward) {
    if (cfg.input_mode == InputMode::image) {
      spec.image = true;
    } else {
      spec.seq_len = kGridSide;
      spec.token_dim = kGridSide;
    }
    return spec;
  }
  const int channels = cfg.direction == Direction::inverse ? 4 : 2;
  spec.band_channels = channels;
  if (cfg.family != Family::cnn) {
    const int pl = patch_len_for(cfg.band_samples);
    spec.seq_len = cfg.band_samples / pl;
    spec.token_dim = pl * channels;
  }
  return spec;
}

void build_encoder(ParamBuilder& pb, const ModelConfig& cfg, const EncoderSpec& spec) {
  const int h = cfg.hidden_size;
  if (spec.image) {
    int ch = 1, spatial = kGridSide;
    for (int i = 0; i < cfg.depth; ++i) {
      const int out_ch = kCnnBaseChannels << i;
      pb.conv("cnn.b" + std::to_string(i) + ".w", out_ch, ch, 3, 3);
      pb.zeros("cnn.b" + std::to_string(i) + ".b", {out_ch, 1, 1});
      ch = out_ch;
      spatial /= 2;
    }
    pb.dense("cnn.fc.w", ch * spatial * spatial, h);
    pb.zeros("cnn.fc.b", {h});
    return;
  }
  if (spec.band_channels > 0 && cfg.family == Family::cnn) {
    int ch = spec.band_channels;
    int len = cfg.band_samples;
    for (int i = 0; i < cfg.depth; ++i) {
      len = (len - kBandConvKernel) / kBandConvStride + 1;
      if (len < 1)
        throw std::invalid_argument("ModelConfig: band cnn depth " +
                                    std::to_string(cfg.depth) + " collapses " +
                                    std::to_string(cfg.band_samples) + " samples");
      const int out_ch = kCnnBaseChannels << i;
      pb.conv("cnn.b" + std::to_string(i) + ".w", out_ch, ch, 1, kBandConvKernel);
      pb.zeros("cnn.b" + std::to_string(i) + ".b", {out_ch, 1, 1});
      ch = out_ch;
    }
    pb.dense("cnn.fc.w", ch * len, h);
    pb.zeros("cnn.fc.b", {h});
    return;
  }
  // sequence encoders share the token/patch embedding
  pb.dense("embed.w", spec.token_dim, h);
  pb.zeros("embed.b", {h});
  if (cfg.family == Family::lstm || cfg.family == Family::gru) {
    const int gates = cfg.family == Family::lstm ? 4 : 3;
    for (int i = 0; i < cfg.depth; ++i) {
      const std::string base = "rnn.l" + std::to_string(i) + ".";
      pb.dense(base + "wx", h, gates * h);
      pb.recurrent(base + "wh", h, gates * h, h);
      pb.zeros(base + "b", {gates * h});
    }
    return;
  }
  for (int i = 0; i < cfg.depth; ++i) {
    const std::string base = "tf.b" + std::to_string(i) + ".";
    pb.ones(base + "ln1.g", {h});
    pb.zeros(base + "ln1.b", {h});
    pb.dense(base + "qkv.w", h, h);
    pb.zeros(base + "qkv.b", {h});
    pb.dense(base + "attn.wo", h, h);
    pb.zeros(base + "attn.bo", {h});
    pb.ones(base + "ln2.g", {h});
    pb.zeros(base + "ln2.b", {h});
    pb.dense(base + "ffn.w1", h, 2 * h);
    pb.zeros(base + "ffn.b1", {2 * h});
    pb.dense(base + "ffn.w2", 2 * h, h);
    pb.zeros(base + "ffn.b2", {h});
  }
}

int head_output_dim(const ModelConfig& cfg) {
  switch (cfg.direction) {
    case Direction::forward:
      return cfg.band_samples * channel_width(cfg.target_channel);
    case Direction::inverse:
      return kGridCells;
    case Direction::band_to_band:
      return cfg.band_samples * 2;
  }
  return 0;
}

}  // namespace

Model build_model(const ModelConfig& config) {
  config.validate();
  Model m;
  m.config_ = config;
  ParamBuilder pb{m.names_, m.params_, config.seed};

  build_encoder(pb, config, encoder_spec(config));

  int enc_dim = config.hidden_size;
  if (config.supplement_band != SupplementBand::none) {
    const int cs = channel_width(config.target_channel);
    const int pl = patch_len_for(config.band_samples);
    const int np = config.band_samples / pl;
    pb.dense("supp.l0.w", pl * cs, kSuppPatchDim);
    pb.zeros("supp.l0.b", {kSuppPatchDim});
    pb.dense("supp.l1.w", np * kSuppPatchDim, kSuppEmbedDim);
    pb.zeros("supp.l1.b", {kSuppEmbedDim});
    enc_dim += kSuppEmbedDim;
  }

  pb.dense("head.w", enc_dim, head_output_dim(config));
  pb.zeros("head.b", {head_output_dim(config)});
  return m;
}

// ---------------------------------------------------------------------------
// forward passes

struct ModelForward {
  const Model& m;
  const ModelConfig& cfg;

  explicit ModelForward(const Model& model) : m(model), cfg(model.config()) {}

  const Tensor& P(const std::string& name) const { return m.param(name); }

  static Tensor dense2d(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add(matmul(x, w), b);
  }

  // dense over the last axis of [B,T,d]
  Tensor dense3d(const Tensor& x, const Tensor& w, const Tensor& b) const {
    const int batch = x.shape()[0], seq = x.shape()[1], dim = x.shape()[2];
    Tensor flat = reshape(x, {batch * seq, dim});
    Tensor y = dense2d(flat, w, b);
    return reshape(y, {batch, seq, y.shape()[1]});
  }

  static Tensor positional_encoding(int seq, int dim) {
    std::vector<double> v(static_cast<std::size_t>(seq) * dim);
    for (int t = 0; t < seq; ++t)
      for (int i = 0; i < dim; ++i) {
        const double rate = std::pow(10000.0, -2.0 * (i / 2) / dim);
        v[static_cast<std::size_t>(t) * dim + i] =
            (i % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
      }
    return Tensor::from({seq, dim}, std::move(v));
  }

  Tensor cnn_image_encode(const Tensor& image) const {
    Tensor x = image;
    int spatial = kGridSide, ch = 1;
    for (int i = 0; i < cfg.depth; ++i) {
      const std::string base = "cnn.b" + std::to_string(i) + ".";
      x = relu(add(conv2d(x, P(base + "w"), 1, 1), P(base + "b")));
      x = max_pool2d(x, 2);
      spatial /= 2;
      ch = kCnnBaseChannels << i;
    }
    Tensor flat = reshape(x, {x.shape()[0], ch * spatial * spatial});
    return relu(dense2d(flat, P("cnn.fc.w"), P("cnn.fc.b")));
  }

  // [B,nb,C] -> [B,C,1,nb]
  static Tensor to_band_image(const Tensor& band) {
    const int batch = band.shape()[0], nb = band.shape()[1], ch = band.shape()[2];
    std::vector<Tensor> planes;
    planes.reserve(ch);
    for (int c = 0; c < ch; ++c)
      planes.push_back(
          reshape(slice(band, {{0, batch}, {0, nb}, {c, c + 1}}), {batch, 1, 1, nb}));
    return ch == 1 ? planes[0] : concat(planes, 1);
  }

  Tensor cnn_band_encode(const Tensor& band) const {
    Tensor x = to_band_image(band);
    int len = cfg.band_samples, ch = band.shape()[2];
    for (int i = 0; i < cfg.depth; ++i) {
      const std::string base = "cnn.b" + std::to_string(i) + ".";
      x = relu(add(conv2d(x, P(base + "w"), kBandConvStride, 0), P(base + "b")));
      len = (len - kBandConvKernel) / kBandConvStride + 1;
      ch = kCnnBaseChannels << i;
    }
    Tensor flat = reshape(x, {x.shape()[0], ch * len});
    return relu(dense2d(flat, P("cnn.fc.w"), P("cnn.fc.b")));
  }

  // [B,T,token_dim] -> [B,T,h]
  Tensor embed(const Tensor& seq_in) const {
    return dense3d(seq_in, P("embed.w"), P("embed.b"));
  }

  Tensor recurrent_encode(const Tensor& seq_in) const {
    const int batch = seq_in.shape()[0], seq = seq_in.shape()[1];
    const int h = cfg.hidden_size;
    const bool is_lstm = cfg.family == Family::lstm;
    Tensor layer_in = embed(seq_in);
    Tensor last_h;
    for (int l = 0; l < cfg.depth; ++l) {
      const std::string base = "rnn.l" + std::to_string(l) + ".";
      RecurrentWeights w{P(base + "wx"), P(base + "wh"), P(base + "b")};
      Tensor hs = Tensor::zeros({batch, h});
      Tensor cs = Tensor::zeros({batch, h});
      std::vector<Tensor> outputs;
      outputs.reserve(seq);
      for (int t = 0; t < seq; ++t) {
        Tensor xt = reshape(slice(layer_in, {{0, batch}, {t, t + 1}, {0, h}}), {batch, h});
        if (is_lstm) {
          auto [hn, cn] = lstm_cell(xt, hs, cs, w);
          hs = hn;
          cs = cn;
        } else {
          hs = gru_cell(xt, hs, w);
        }
        if (l + 1 < cfg.depth) outputs.push_back(reshape(hs, {batch, 1, h}));
      }
      last_h = hs;
      if (l + 1 < cfg.depth) layer_in = seq == 1 ? outputs[0] : concat(outputs, 1);
    }
    return last_h;
  }

  Tensor transformer_encode(const Tensor& seq_in) const {
    const int seq = seq_in.shape()[1];
    Tensor x = add(embed(seq_in), positional_encoding(seq, cfg.hidden_size));
    for (int l = 0; l < cfg.depth; ++l) {
      const std::string base = "tf.b" + std::to_string(l) + ".";
      Tensor y = add(mul(layer_norm(x, 2), P(base + "ln1.g")), P(base + "ln1.b"));
      Tensor hidden = dense3d(y, P(base + "qkv.w"), P(base + "qkv.b"));
      Tensor att = self_attention(hidden, cfg.attention_heads, P(base + "attn.wo"),
                                  P(base + "attn.bo"));
      x = add(x, att);
      Tensor z = add(mul(layer_norm(x, 2), P(base + "ln2.g")), P(base + "ln2.b"));
      Tensor f = dense3d(z, P(base + "ffn.w1"), P(base + "ffn.b1"));
      f = dense3d(relu(f), P(base + "ffn.w2"), P(base + "ffn.b2"));
      x = add(x, f);
    }
    return reduce_mean(x, 1);
  }

  // [B,nb,C] -> patch sequence [B,np,pl*C] (a pure reshape in row-major)
  Tensor to_patches(const Tensor& band) const {
    const int batch = band.shape()[0], nb = band.shape()[1], ch = band.shape()[2];
    const int pl = patch_len_for(cfg.band_samples);
    return reshape(band, {batch, nb / pl, pl * ch});
  }

  Tensor band_encode(const Tensor& band) const {
    if (cfg.family == Family::cnn) return cnn_band_encode(band);
    Tensor patches = to_patches(band);
    if (cfg.family == Family::transformer) return transformer_encode(patches);
    return recurrent_encode(patches);
  }

  Tensor supplement_encode(const Tensor& supp) const {
    const int batch = supp.shape()[0];
    Tensor patches = to_patches(supp);
    const int np = patches.shape()[1], pd = patches.shape()[2];
    Tensor flat = reshape(patches, {batch * np, pd});
    Tensor e = relu(dense2d(flat, P("supp.l0.w"), P("supp.l0.b")));
    e = reshape(e, {batch, np * kSuppPatchDim});
    return relu(dense2d(e, P("supp.l1.w"), P("supp.l1.b")));
  }

  Tensor head(const Tensor& encoding) const {
    return dense2d(encoding, P("head.w"), P("head.b"));
  }
};

namespace {

void require_shape(const Tensor& t, const std::vector<int>& expect, const char* what) {
  if (!t.defined())
    throw std::domain_error(std::string("predict: missing ") + what);
  if (t.shape().size() != expect.size())
    throw std::domain_error(std::string("predict: ") + what + " has shape " +
                            shape_str(t.shape()) + ", expected rank " +
                            std::to_string(expect.size()));
  for (std::size_t d = 1; d < expect.size(); ++d)  // dim 0 is the batch
    if (expect[d] > 0 && t.shape()[d] != expect[d])
      throw std::domain_error(std::string("predict: ") + what + " has shape " +
                              shape_str(t.shape()) + ", expected " + shape_str(expect));
}

}  // namespace

Tensor predict(const Model& model, const ForwardBatch& batch) {
  const auto& cfg = model.config();
  if (cfg.direction != Direction::forward)
    throw std::domain_error("predict: ForwardBatch given to a " +
                            std::string(direction_name(cfg.direction)) + " model");
  ModelForward f(model);
  Tensor enc;
  if (cfg.input_mode == InputMode::image) {
    require_shape(batch.pattern_image, {0, 1, kGridSide, kGridSide}, "pattern_image");
    enc = f.cnn_image_encode(batch.pattern_image);
  } else {
    require_shape(batch.pattern_tokens, {0, kGridSide, kGridSide}, "pattern_tokens");
    enc = cfg.family == Family::transformer ? f.transformer_encode(batch.pattern_tokens)
                                            : f.recurrent_encode(batch.pattern_tokens);
  }
  if (cfg.supplement_band != SupplementBand::none) {
    require_shape(batch.supplement,
                  {0, cfg.band_samples, channel_width(cfg.target_channel)}, "supplement");
    enc = concat({enc, f.supplement_encode(batch.supplement)}, 1);
  } else if (batch.supplement.defined()) {
    throw std::domain_error("predict: supplement given to a model without a supplement branch");
  }
  return f.head(enc);
}

Tensor predict(const Model& model, const InverseBatch& batch) {
  const auto& cfg = model.config();
  if (cfg.direction != Direction::inverse)
    throw std::domain_error("predict: InverseBatch given to a " +
                            std::string(direction_name(cfg.direction)) + " model");
  require_shape(batch.spectrum, {0, cfg.band_samples, 4}, "spectrum");
  ModelForward f(model);
  return sigmoid(f.head(f.band_encode(batch.spectrum)));
}

Tensor predict(const Model& model, const BandBatch& batch) {
  const auto& cfg = model.config();
  if (cfg.direction != Direction::band_to_band)
    throw std::domain_error("predict: BandBatch given to a " +
                            std::string(direction_name(cfg.direction)) + " model");
  require_shape(batch.input_band, {0, cfg.band_samples, 2}, "input_band");
  ModelForward f(model);
  return f.head(f.band_encode(batch.input_band));
}

}  // namespace mslab
