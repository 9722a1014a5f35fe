#include "mslab/checkpoint.hpp"

#include <fstream>

#include "mslab/io_util.hpp"

namespace mslab {

namespace {
constexpr char kMagic[] = "MSLABCKP";
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void atomic_write_file(const std::string& path, const void* data, std::size_t n) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
}

void atomic_write_file(const std::string& path, const std::string& text) {
  atomic_write_file(path, text.data(), text.size());
}

void save_checkpoint(const Model& model, const std::string& path) {
  ByteWriter w;
  w.raw(kMagic, 8);
  w.u32(kVersion);
  w.str(model.config().to_text());
  w.u32(static_cast<std::uint32_t>(model.param_names().size()));
  for (const auto& name : model.param_names()) {
    const Tensor& t = model.param(name);
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.shape().size()));
    for (int d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.f64(v);
  }
  atomic_write_file(path, w.bytes.data(), w.bytes.size());
}

Model load_checkpoint(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r{bytes};
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("'" + path + "' is not a checkpoint file");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("checkpoint version " + std::to_string(version) +
                             " unsupported");
  Model model = build_model(ModelConfig::from_text(r.str()));
  const std::uint32_t count = r.u32();
  if (count != model.param_names().size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    if (shape != model.param(name).shape())
      throw std::runtime_error("checkpoint parameter '" + name + "' has shape " +
                               shape_str(shape) + ", model expects " +
                               shape_str(model.param(name).shape()));
    std::vector<double> values(static_cast<std::size_t>(numel(shape)));
    for (auto& v : values) v = r.f64();
    model.set_param_values(name, values);
  }
  return model;
}

}  // namespace mslab
