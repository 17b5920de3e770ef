#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "rvla/manipsim/world.hpp"

namespace rvla::sim {

inline constexpr int kTokenSlots = 12;
inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;

// Padded with kPad; pad only appears as a suffix.
using Tokens = std::array<int, kTokenSlots>;

const std::vector<std::string>& vocabulary();
int vocab_size();
// kUnk for words outside the vocabulary.
int token_id(std::string_view word);
const std::string& token_word(int id);

// Filler words an adversarial rewrite may insert.
const std::vector<int>& distractor_ids();

// Lower-cases, drops punctuation and the articles "the"/"a", and maps each
// remaining word. Words beyond the slot count are truncated.
Tokens tokenize(std::string_view sentence);
std::string detokenize(const Tokens& tokens);
int token_count(const Tokens& tokens);

std::string canonical_instruction(Color color, ShapeKind shape);
Tokens instruction_for_task(const WorldState& s);

}  // namespace rvla::sim
