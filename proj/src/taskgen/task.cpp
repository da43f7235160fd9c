#include "taskgen/task.hpp"

#include <charconv>
#include <sstream>

namespace s2g::task {

Task parse_task(const std::string& name) {
  if (name == "sequence") return Task::NumberSequence;
  if (name == "toy_addition") return Task::ToyAddition;
  if (name == "addsub") return Task::AddSub;
  if (name == "program") return Task::Program;
  if (name == "babi") return Task::Babi;
  throw ConfigError("unknown task '" + name + "' (expected sequence, toy_addition, addsub, program, babi)");
}

std::string task_name(Task t) {
  switch (t) {
    case Task::NumberSequence: return "sequence";
    case Task::ToyAddition: return "toy_addition";
    case Task::AddSub: return "addsub";
    case Task::Program: return "program";
    case Task::Babi: return "babi";
  }
  return "?";
}

bool is_sequence_task(Task t) { return t != Task::Babi; }

std::vector<std::string> difficulty_names(Task t) {
  switch (t) {
    case Task::NumberSequence: return {"length", "terms"};
    case Task::ToyAddition: return {"digits"};
    case Task::AddSub: return {"entropy"};
    case Task::Program: return {"nesting", "length"};
    case Task::Babi: return {"task"};
  }
  return {};
}

bool contains(const RangeSet& ranges, const std::vector<int>& params) {
  if (ranges.empty() || ranges.size() != params.size()) return false;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (!ranges[i].contains(params[i])) return false;
  }
  return true;
}

bool intersects(const RangeSet& a, const RangeSet& b) {
  if (a.empty() || b.empty() || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].intersects(b[i])) return false;
  }
  return true;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::IdTest: return "id_test";
    case Split::OodTest: return "ood_test";
    case Split::Discard: return "discard";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "id_test" || name == "id") return Split::IdTest;
  if (name == "ood_test" || name == "ood") return Split::OodTest;
  throw ConfigError("unknown split '" + name + "'");
}

const RangeSet& SplitRanges::of(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::IdTest: return id;
    case Split::OodTest: return ood;
    case Split::Discard: break;
  }
  throw ConfigError("no ranges for the discard partition");
}

namespace {

int parse_int(std::string_view s, const std::string& context) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("bad integer '" + std::string(s) + "' in " + context);
  return v;
}

Range parse_range(std::string_view s, const std::string& context) {
  auto dash = s.find('-', 1);
  if (dash == std::string_view::npos) {
    int v = parse_int(s, context);
    return {v, v};
  }
  return {parse_int(s.substr(0, dash), context), parse_int(s.substr(dash + 1), context)};
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::string range_str(const RangeSet& rs) {
  std::string out;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) out += ':';
    out += std::to_string(rs[i].lo);
    if (rs[i].hi != rs[i].lo) out += "-" + std::to_string(rs[i].hi);
  }
  return out;
}

}  // namespace

SplitRanges SplitRanges::parse(const std::string& text, std::size_t params) {
  SplitRanges out;
  bool seen_train = false, seen_id = false;
  for (const auto& part : split_on(text, ';')) {
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("split ranges: expected name=ranges, got '" + part + "'");
    const std::string name = part.substr(0, eq);
    RangeSet rs;
    for (const auto& r : split_on(part.substr(eq + 1), ':')) rs.push_back(parse_range(r, "split ranges"));
    if (name == "train") {
      out.train = rs;
      seen_train = true;
    } else if (name == "id") {
      out.id = rs;
      seen_id = true;
    } else if (name == "ood") {
      out.ood = rs;
    } else {
      throw ConfigError("split ranges: unknown split '" + name + "'");
    }
  }
  if (!seen_train || !seen_id) throw ConfigError("split ranges: train and id are required");
  out.validate(params);
  return out;
}

std::string SplitRanges::str() const {
  std::string out = "train=" + range_str(train) + ";id=" + range_str(id);
  if (!ood.empty()) out += ";ood=" + range_str(ood);
  return out;
}

void SplitRanges::validate(std::size_t params) const {
  for (const RangeSet* rs : {&train, &id, &ood}) {
    if (rs == &ood && rs->empty()) continue;
    if (rs->size() != params) {
      throw ConfigError("split ranges: expected " + std::to_string(params) + " parameter range(s), got " +
                        std::to_string(rs->size()));
    }
    for (const auto& r : *rs) {
      if (r.lo > r.hi) throw ConfigError("split ranges: inverted range " + std::to_string(r.lo) + "-" + std::to_string(r.hi));
      if (r.lo < 0) throw ConfigError("split ranges: negative bound");
    }
  }
  if (intersects(train, ood)) throw ConfigError("split ranges: ood ranges overlap the training ranges");
}

SplitRanges default_ranges(Task t) {
  switch (t) {
    case Task::NumberSequence: return {{{1, 4}, {4, 6}}, {{4, 4}, {4, 6}}, {{6, 6}, {10, 12}}};
    case Task::ToyAddition: return {{{1, 3}}, {{1, 3}}, {{4, 5}}};
    case Task::AddSub: return {{{16, 20}}, {{16, 20}}, {{32, 40}}};
    case Task::Program: return {{{1, 2}, {1, 5}}, {{1, 2}, {1, 5}}, {{1, 2}, {6, 7}}};
    case Task::Babi: return {{{1, 20}}, {{1, 20}}, {}};
  }
  return {};
}

std::string canonical_input(const Example& ex) {
  std::string out;
  for (const auto& t : ex.input) out += t;
  return out;
}

}  // namespace s2g::task
