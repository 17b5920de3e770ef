#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rvla/manipsim/language.hpp"
#include "rvla/manipsim/render.hpp"
#include "rvla/manipsim/world.hpp"

namespace rvla::sim {

struct Observation {
  Image image;
  std::array<double, 3> proprio{};  // gripper x, gripper y, holding flag
  Tokens tokens{};
  friend bool operator==(const Observation&, const Observation&) = default;
};

Observation observe(const WorldState& s, const LightingState& light = {});

struct Sample {
  Observation obs;
  ActionChunk actions{};
};

struct Dataset {
  std::vector<Sample> samples;
  // State each sample was recorded in. Only kept in memory; the file
  // format carries observations and actions only.
  std::vector<WorldState> states;
};

// Rolls the expert on episodes seeded derive_seed(seed, {episode}) and
// records one sample every kHorizon steps.
Dataset generate_dataset(int episodes, std::uint64_t seed);

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode);

void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);
std::string encode_dataset(const Dataset& data);
Dataset decode_dataset(std::string_view bytes);

}  // namespace rvla::sim
