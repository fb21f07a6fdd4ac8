#include "n2i/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "n2i/errors.hpp"
#include "n2i/image_io.hpp"

namespace n2i {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[9] = "N2ICKPT1";

void put_u32(std::string& out, uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}

uint32_t get_u32(const std::string& bytes, size_t& pos) {
  if (pos + 4 > bytes.size()) throw CheckpointError("checkpoint: truncated");
  uint32_t v;
  std::memcpy(&v, bytes.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& entries) {
  std::string out(kMagic, 8);
  put_u32(out, static_cast<uint32_t>(entries.size()));
  for (const auto& nt : entries) {
    put_u32(out, static_cast<uint32_t>(nt.name.size()));
    out.append(nt.name);
    put_u32(out, static_cast<uint32_t>(nt.t.shape.size()));
    for (int d : nt.t.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double v : nt.t.v) {
      float f = static_cast<float>(v);
      out.append(reinterpret_cast<const char*>(&f), 4);
    }
  }
  atomic_write_bytes(path, out);
}

std::vector<NamedTensor> load_checkpoint_tensors(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const IoError&) {
    throw CheckpointError("cannot read checkpoint: " + path.string());
  }
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw CheckpointError("checkpoint: bad magic in " + path.string());
  size_t pos = 8;
  uint32_t count = get_u32(bytes, pos);
  std::vector<NamedTensor> entries;
  entries.reserve(count);
  for (uint32_t e = 0; e < count; ++e) {
    uint32_t name_len = get_u32(bytes, pos);
    if (pos + name_len > bytes.size()) throw CheckpointError("checkpoint: truncated");
    std::string name = bytes.substr(pos, name_len);
    pos += name_len;
    uint32_t rank = get_u32(bytes, pos);
    if (rank == 0 || rank > 8) throw CheckpointError("checkpoint: bad tensor rank");
    std::vector<int> shape(rank);
    size_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<int>(get_u32(bytes, pos));
      if (shape[i] <= 0) throw CheckpointError("checkpoint: bad dimension");
      n *= static_cast<size_t>(shape[i]);
    }
    if (pos + 4 * n > bytes.size()) throw CheckpointError("checkpoint: truncated payload");
    Tensor t(shape);
    for (size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, bytes.data() + pos, 4);
      pos += 4;
      t.v[i] = static_cast<double>(f);
    }
    entries.push_back({std::move(name), std::move(t)});
  }
  return entries;
}

void save_params(const std::filesystem::path& path, const NetParams& params) {
  save_checkpoint(path, params.tensors);
}

NetParams load_params(const std::filesystem::path& path) {
  std::vector<NamedTensor> entries = load_checkpoint_tensors(path);
  UNetConfig cfg = config_from_tensors(entries);
  NetParams params;
  params.config = cfg;
  for (auto& nt : entries) params.add(nt.name, std::move(nt.t));
  // sanity: plan tensors must all be present with matching shapes
  for (const auto& spec : conv_plan(cfg)) {
    const Tensor& w = params.at(spec.name + ".w");
    if (w.shape != std::vector<int>{spec.out_ch, spec.in_ch, spec.kernel, spec.kernel})
      throw CheckpointError("checkpoint: tensor shape mismatch for " + spec.name);
    const Tensor& b = params.at(spec.name + ".b");
    if (b.shape != std::vector<int>{spec.out_ch})
      throw CheckpointError("checkpoint: bias shape mismatch for " + spec.name);
  }
  return params;
}

}  // namespace n2i
