#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace s2g::task {

/// Malformed generation or split configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file or snippet.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task { NumberSequence, ToyAddition, AddSub, Program, Babi };

Task parse_task(const std::string& name);
std::string task_name(Task t);
bool is_sequence_task(Task t);

/// Names of the difficulty parameters, in the order they are stored.
std::vector<std::string> difficulty_names(Task t);

/// Inclusive integer interval.
struct Range {
  int lo = 0;
  int hi = 0;
  bool contains(int v) const { return v >= lo && v <= hi; }
  bool intersects(const Range& o) const { return lo <= o.hi && o.lo <= hi; }
};

/// One range per difficulty parameter.
using RangeSet = std::vector<Range>;

bool contains(const RangeSet& ranges, const std::vector<int>& params);
bool intersects(const RangeSet& a, const RangeSet& b);

enum class Split { Train, IdTest, OodTest, Discard };

std::string split_name(Split s);
Split parse_split(const std::string& name);

struct SplitRanges {
  RangeSet train, id, ood;

  const RangeSet& of(Split s) const;

  /// "train=1-3:4-5;id=1-3:4-5;ood=4:6-7" (":" separates parameters).
  static SplitRanges parse(const std::string& text, std::size_t params);
  std::string str() const;

  /// Throws ConfigError on inverted ranges, wrong arity, or OOD ranges
  /// overlapping the training ranges.
  void validate(std::size_t params) const;
};

SplitRanges default_ranges(Task t);

struct Example {
  std::vector<std::string> input;   // ends with "$" for the sequence tasks
  std::vector<std::string> target;  // ends with "$"; empty for classification
  std::string label;                // classification answer
  std::vector<int> difficulty;

  bool operator==(const Example&) const = default;
};

/// Input tokens concatenated; the canonical string that is hashed.
std::string canonical_input(const Example& ex);

}  // namespace s2g::task
