#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rvla/gradcore/tensor.hpp"

namespace rvla {

/// Named tensors plus free-form key=value metadata.
///
/// On disk a checkpoint is two files sharing a stem: `<stem>.manifest`, a
/// UTF-8 text file with one record per line, and `<stem>.bin`, the raw
/// little-endian IEEE-754 binary64 payload. Manifest layout:
///
///     rvla-checkpoint 1
///     meta <key>=<value> ...
///     tensor <name> <d0>x<d1>x... <byte offset>
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& at(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::filesystem::path manifest_path(const std::filesystem::path& stem);
std::filesystem::path payload_path(const std::filesystem::path& stem);

// FNV-1a over the little-endian bytes of every tensor, in order.
std::uint64_t checksum(const std::vector<std::pair<std::string, Tensor>>& tensors);

// Little-endian scalar codecs shared by the binary formats.
void put_f64(std::string& out, double v);
void put_u64(std::string& out, std::uint64_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u16(std::string& out, std::uint16_t v);
double get_f64(const unsigned char* p);
std::uint64_t get_u64(const unsigned char* p);
std::uint32_t get_u32(const unsigned char* p);
std::uint16_t get_u16(const unsigned char* p);

}  // namespace rvla
