#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace s2g {

class TokenizationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bijection token <-> index. Ids 0..4 are reserved: <pad>, <empty> (the
/// empty symbol), $ (end of sequence), <cls>, <sep>.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kEmpty = 1;
  static constexpr int kEos = 2;
  static constexpr int kCls = 3;
  static constexpr int kSep = 4;
  static constexpr std::array<std::string_view, 5> kReserved = {"<pad>", "<empty>", "$", "<cls>", "<sep>"};

  Vocabulary();

  /// Adds `token` if absent; returns its id either way.
  int add(const std::string& token);
  std::optional<int> find(const std::string& token) const;
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  /// One escaped token per line, in id order.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// File-safe spelling: " " -> "<sp>", "\n" -> "<nl>", "\t" -> "<tab>".
std::string escape_token(const std::string& token);
std::string unescape_token(const std::string& text);

std::string join_tokens(std::span<const std::string> tokens);

/// Splits into single-character tokens; a trailing "$" becomes the EOS token.
std::vector<std::string> char_tokens(std::string_view text);

}  // namespace s2g
