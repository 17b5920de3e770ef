#include "rvla/gradcore/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rvla/common/errors.hpp"

namespace rvla {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xffu));
  out.push_back(static_cast<char>(v >> 8));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

const Tensor& Checkpoint::at(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw LookupError("checkpoint has no tensor named " + name);
}

std::filesystem::path manifest_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".manifest");
}
std::filesystem::path payload_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".bin");
}

std::uint64_t checksum(const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : tensors) {
    for (double v : t.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt) {
  std::ostringstream manifest;
  manifest << "rvla-checkpoint 1\n";
  if (!ckpt.meta.empty()) {
    manifest << "meta";
    for (const auto& [k, v] : ckpt.meta) manifest << ' ' << k << '=' << v;
    manifest << '\n';
  }
  std::string payload;
  for (const auto& [name, t] : ckpt.tensors) {
    manifest << "tensor " << name << ' ';
    for (std::size_t i = 0; i < t.rank(); ++i) manifest << (i ? "x" : "") << t.dim(i);
    if (t.rank() == 0) manifest << "scalar";
    manifest << ' ' << payload.size() << '\n';
    for (double v : t.data()) put_f64(payload, v);
  }
  std::ofstream mf(manifest_path(stem), std::ios::binary);
  if (!mf) throw IoError("cannot write checkpoint manifest", manifest_path(stem).string());
  mf << manifest.str();
  std::ofstream pf(payload_path(stem), std::ios::binary);
  if (!pf) throw IoError("cannot write checkpoint payload", payload_path(stem).string());
  pf.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!mf || !pf) throw IoError("checkpoint write failed", stem.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream mf(manifest_path(stem));
  if (!mf) throw IoError("cannot read checkpoint manifest", manifest_path(stem).string());
  std::ifstream pf(payload_path(stem), std::ios::binary);
  if (!pf) throw IoError("cannot read checkpoint payload", payload_path(stem).string());
  const std::string payload((std::istreambuf_iterator<char>(pf)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());

  Checkpoint ckpt;
  std::string line;
  if (!std::getline(mf, line) || line != "rvla-checkpoint 1")
    throw FormatError("not an rvla checkpoint manifest: " + manifest_path(stem).string());
  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string kind;
    is >> kind;
    if (kind == "meta") {
      std::string kv;
      while (is >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw FormatError("bad meta entry: " + kv);
        ckpt.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    } else if (kind == "tensor") {
      std::string name, dims;
      std::size_t offset = 0;
      if (!(is >> name >> dims >> offset)) throw FormatError("bad tensor record: " + line);
      Shape shape;
      if (dims != "scalar") {
        std::istringstream ds(dims);
        std::string d;
        while (std::getline(ds, d, 'x')) shape.push_back(std::stoul(d));
      }
      const std::size_t n = shape_numel(shape);
      if (offset + 8 * n > payload.size())
        throw FormatError("tensor " + name + " runs past the end of the payload");
      std::vector<double> data(n);
      for (std::size_t i = 0; i < n; ++i) data[i] = get_f64(bytes + offset + 8 * i);
      ckpt.tensors.emplace_back(name, Tensor(std::move(shape), std::move(data)));
    } else {
      throw FormatError("unknown manifest record: " + line);
    }
  }
  return ckpt;
}

}  // namespace rvla
