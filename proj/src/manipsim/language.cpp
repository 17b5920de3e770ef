#include "rvla/manipsim/language.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "rvla/common/errors.hpp"

namespace rvla::sim {

namespace {

const std::vector<std::string> kWords = {
    "<pad>", "<unk>", "pick",  "up",      "red",   "green",     "blue",  "square",
    "circle", "and",  "place", "it",      "on",    "goal",      "grab",  "lift",
    "put",   "set",   "target", "pad",    "could", "you",       "please", "then",
    "with",  "care",  "now",   "maybe",   "ok",    "i",         "think", "just",
    "quickly", "hmm", "well",  "so",      "do",    "this",      "task",  "carefully"};

const std::vector<std::string> kDistractors = {"maybe", "ok", "i", "think", "just", "quickly",
                                               "hmm",   "well", "so", "now", "carefully"};

const std::unordered_map<std::string_view, int>& index() {
  static const auto table = [] {
    std::unordered_map<std::string_view, int> m;
    for (std::size_t i = 0; i < kWords.size(); ++i) m.emplace(kWords[i], static_cast<int>(i));
    return m;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& vocabulary() { return kWords; }
int vocab_size() { return static_cast<int>(kWords.size()); }

int token_id(std::string_view word) {
  const auto it = index().find(word);
  return it == index().end() || it->second == kPad ? kUnk : it->second;
}

const std::string& token_word(int id) {
  if (id < 0 || id >= vocab_size()) throw LookupError("token id " + std::to_string(id) + " outside vocabulary");
  return kWords[static_cast<std::size_t>(id)];
}

const std::vector<int>& distractor_ids() {
  static const std::vector<int> ids = [] {
    std::vector<int> v;
    for (const auto& w : kDistractors) v.push_back(token_id(w));
    return v;
  }();
  return ids;
}

Tokens tokenize(std::string_view sentence) {
  Tokens out{};
  int n = 0;
  std::string word;
  auto flush = [&] {
    if (!word.empty() && word != "the" && word != "a" && n < kTokenSlots) out[static_cast<std::size_t>(n++)] = token_id(word);
    word.clear();
  };
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || ch == '<' || ch == '>' || ch == '\'')
      word.push_back(static_cast<char>(std::tolower(c)));
    else
      flush();
  }
  flush();
  return out;
}

std::string detokenize(const Tokens& tokens) {
  std::string s;
  for (int id : tokens) {
    if (id == kPad) break;
    if (!s.empty()) s.push_back(' ');
    s += token_word(id);
  }
  return s;
}

int token_count(const Tokens& tokens) {
  return static_cast<int>(std::find(tokens.begin(), tokens.end(), kPad) - tokens.begin());
}

std::string canonical_instruction(Color color, ShapeKind shape) {
  return std::string("pick up the ") + color_name(color) + " " + shape_name(shape) +
         " and place it on the goal";
}

Tokens instruction_for_task(const WorldState& s) {
  const Object& t = s.target();
  return tokenize(canonical_instruction(t.color, t.shape));
}

}  // namespace rvla::sim
