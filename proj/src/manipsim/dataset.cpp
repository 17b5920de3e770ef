#include "rvla/manipsim/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "rvla/common/errors.hpp"
#include "rvla/common/random.hpp"
#include "rvla/gradcore/checkpoint.hpp"

namespace rvla::sim {

namespace {
constexpr char kMagic[4] = {'R', 'V', 'L', 'A'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kSampleBytes = kImageBytes + 3 * 8 + kTokenSlots * 2 + kChunkSize * 8;
}  // namespace

Observation observe(const WorldState& s, const LightingState& light) {
  Observation o;
  o.image = render(s, light);
  o.proprio = {s.gripper.x, s.gripper.y, s.holding >= 0 ? 1.0 : 0.0};
  o.tokens = instruction_for_task(s);
  return o;
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode) {
  return derive_seed(seed, {hash_tag("episode"), episode});
}

Dataset generate_dataset(int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ContractError("episodes must be at least 1");
  Dataset data;
  for (int ep = 0; ep < episodes; ++ep) {
    WorldState s = reset(episode_seed(seed, static_cast<std::uint64_t>(ep)));
    bool done = false;
    while (!done) {
      Sample sample;
      sample.obs = observe(s);
      data.states.push_back(s);
      Action last{};
      for (int h = 0; h < kHorizon; ++h) {
        if (!done) {
          last = expert_action(s);
          done = step(s, last).done;
        }
        for (int d = 0; d < kActionDim; ++d) sample.actions[static_cast<std::size_t>(h * kActionDim + d)] = last[static_cast<std::size_t>(d)];
      }
      data.samples.push_back(sample);
    }
  }
  return data;
}

std::string encode_dataset(const Dataset& data) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, data.samples.size());
  out.reserve(out.size() + data.samples.size() * kSampleBytes);
  for (const Sample& s : data.samples) {
    out.append(reinterpret_cast<const char*>(s.obs.image.px.data()), s.obs.image.px.size());
    for (double v : s.obs.proprio) put_f64(out, v);
    for (int t : s.obs.tokens) put_u16(out, static_cast<std::uint16_t>(t));
    for (double v : s.actions) put_f64(out, v);
  }
  return out;
}

Dataset decode_dataset(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != std::string_view(kMagic, 4))
    throw FormatError("dataset: bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (get_u32(p + 4) != kVersion) throw FormatError("dataset: unsupported version");
  const std::uint64_t count = get_u64(p + 8);
  if ((bytes.size() - 16) / kSampleBytes != count || (bytes.size() - 16) % kSampleBytes != 0)
    throw FormatError("dataset: size does not match sample count");
  p += 16;
  Dataset data;
  data.samples.resize(count);
  for (Sample& s : data.samples) {
    std::copy_n(p, kImageBytes, s.obs.image.px.begin());
    p += kImageBytes;
    for (double& v : s.obs.proprio) {
      v = get_f64(p);
      p += 8;
    }
    for (int& t : s.obs.tokens) {
      t = get_u16(p);
      p += 2;
      if (t >= vocab_size()) throw FormatError("dataset: token id outside vocabulary");
    }
    for (double& v : s.actions) {
      v = get_f64(p);
      p += 8;
    }
  }
  return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  const auto bytes = encode_dataset(data);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing", path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed", path);
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading", path);
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_dataset(bytes);
}

}  // namespace rvla::sim
