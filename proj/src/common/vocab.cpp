#include "common/vocab.hpp"

#include <sstream>

namespace s2g {

Vocabulary::Vocabulary() {
  for (auto r : kReserved) add(std::string(r));
}

int Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<int> Vocabulary::find(const std::string& token) const {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  return std::nullopt;
}

int Vocabulary::id(const std::string& token) const {
  if (auto found = find(token)) return *found;
  throw TokenizationError("token '" + escape_token(token) + "' is not in the vocabulary");
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw TokenizationError("token id " + std::to_string(id) + " is not in the vocabulary");
  }
  return tokens_[id];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += escape_token(t);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  Vocabulary v;
  std::size_t line = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string token = unescape_token(std::string(text.substr(start, end - start)));
    if (line < kReserved.size()) {
      if (token != kReserved[line]) throw TokenizationError("vocabulary: reserved token mismatch at line " + std::to_string(line));
    } else if (v.add(token) != static_cast<int>(line)) {
      throw TokenizationError("vocabulary: duplicate token '" + escape_token(token) + "'");
    }
    ++line;
    start = end + 1;
  }
  return v;
}

std::string escape_token(const std::string& token) {
  if (token == " ") return "<sp>";
  if (token == "\n") return "<nl>";
  if (token == "\t") return "<tab>";
  return token;
}

std::string unescape_token(const std::string& text) {
  if (text == "<sp>") return " ";
  if (text == "<nl>") return "\n";
  if (text == "<tab>") return "\t";
  return text;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

std::vector<std::string> char_tokens(std::string_view text) {
  std::vector<std::string> out;
  out.reserve(text.size());
  for (char c : text) out.emplace_back(1, c);
  return out;
}

}  // namespace s2g
