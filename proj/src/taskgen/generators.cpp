#include "taskgen/generators.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cctype>

#include "common/vocab.hpp"
#include "taskgen/program.hpp"

namespace s2g::task {

using boost::multiprecision::cpp_int;

namespace {

std::vector<std::string> with_eos(const std::string& text) {
  auto toks = char_tokens(text);
  toks.push_back("$");
  return toks;
}

// Decimal string with exactly `digits` digits (a lone digit may be 0).
std::string random_digits(int digits, ad::Rng& rng) {
  std::string s;
  s.reserve(static_cast<std::size_t>(digits));
  for (int i = 0; i < digits; ++i) {
    const int lo = (i == 0 && digits > 1) ? 1 : 0;
    s.push_back(static_cast<char>('0' + rng.uniform_int(lo, 9)));
  }
  return s;
}

std::string random_signed(int digits, ad::Rng& rng) {
  std::string s = random_digits(digits, rng);
  if (rng.bernoulli(0.5) && s != "0") s.insert(s.begin(), '-');
  return s;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

Example number_sequence_from(const std::vector<long long>& initial, int terms) {
  if (initial.size() != 3) throw ConfigError("number sequence: need exactly three initial terms");
  if (terms < 1) throw ConfigError("number sequence: terms must be positive");
  std::vector<cpp_int> a(initial.begin(), initial.end());
  while (a.size() < static_cast<std::size_t>(terms) + 1) {
    const auto k = a.size();
    a.push_back(2 * a[k - 1] - a[k - 2] + a[k - 3]);
  }
  std::string in;
  for (int i = 0; i < terms; ++i) {
    if (i) in += ' ';
    in += a[static_cast<std::size_t>(i)].str();
  }
  int length = 1;
  for (long long v : initial) length = std::max(length, static_cast<int>(std::to_string(v < 0 ? -v : v).size()));
  Example ex;
  ex.input = with_eos(in);
  ex.target = with_eos(a[static_cast<std::size_t>(terms)].str());
  ex.difficulty = {length, terms};
  return ex;
}

Example gen_number_sequence(const std::vector<int>& params, ad::Rng& rng) {
  if (params.size() != 2 || params[0] < 1 || params[0] > 17 || params[1] < 1) {
    throw ConfigError("number sequence: params are {length 1..17, terms >= 1}");
  }
  const int length = params[0];
  long long bound = 1;
  for (int i = 0; i < length; ++i) bound *= 10;
  std::vector<long long> init(3);
  for (;;) {
    int widest = 0;
    for (auto& v : init) {
      v = static_cast<long long>(rng.uniform_int(0, bound - 1));
      widest = std::max(widest, static_cast<int>(std::to_string(v).size()));
      if (rng.bernoulli(0.5)) v = -v;
    }
    if (widest == length) break;
  }
  return number_sequence_from(init, params[1]);
}

ToyLayout parse_toy_layout(const std::string& name) {
  if (name == "sequential") return ToyLayout::Sequential;
  if (name == "aligned_grid") return ToyLayout::AlignedGrid;
  throw ConfigError("unknown toy layout '" + name + "' (expected sequential or aligned_grid)");
}

std::string toy_layout_name(ToyLayout layout) { return layout == ToyLayout::Sequential ? "sequential" : "aligned_grid"; }

std::vector<std::vector<std::string>> aligned_rows(const std::string& a, const std::string& b) {
  if (a.size() > kAlignedWidth || b.size() > kAlignedWidth) throw ConfigError("aligned layout: operand wider than the grid");
  std::vector<std::vector<std::string>> rows(3, std::vector<std::string>(kAlignedWidth));
  for (std::size_t i = 0; i < a.size(); ++i) rows[0][kAlignedWidth - a.size() + i] = std::string(1, a[i]);
  for (std::size_t i = 0; i < b.size(); ++i) rows[1][kAlignedWidth - b.size() + i] = std::string(1, b[i]);
  return rows;
}

Example toy_addition_from(const std::string& a, const std::string& b, ToyLayout layout) {
  auto digits_only = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  if (!digits_only(a) || !digits_only(b)) throw ConfigError("toy addition: operands must be nonnegative decimals");
  const cpp_int sum = cpp_int(a) + cpp_int(b);
  Example ex;
  if (layout == ToyLayout::Sequential) {
    ex.input = with_eos(a + "+" + b);
  } else {
    for (const auto& row : aligned_rows(a, b)) {
      for (const auto& cell : row) ex.input.push_back(cell.empty() ? std::string(Vocabulary::kReserved[Vocabulary::kEmpty]) : cell);
    }
  }
  ex.target = with_eos(sum.str());
  ex.difficulty = {static_cast<int>(std::max(a.size(), b.size()))};
  return ex;
}

Example gen_toy_addition(const std::vector<int>& params, ad::Rng& rng, ToyLayout layout) {
  if (params.size() != 1 || params[0] < 1) throw ConfigError("toy addition: params are {digits >= 1}");
  const int k = params[0];
  int da = static_cast<int>(rng.uniform_int(1, k));
  int db = static_cast<int>(rng.uniform_int(1, k));
  if (rng.bernoulli(0.5)) da = k; else db = k;
  const std::string a = random_digits(da, rng);
  const std::string b = random_digits(db, rng);
  return toy_addition_from(a, b, layout);
}

const std::vector<AddSubTemplate>& addsub_templates() {
  static const std::vector<AddSubTemplate> templates = {
      {"What is {A} take away {B}?", true}, {"Add {A} and {B}.", false},    {"What is {A} plus {B}?", false},
      {"Subtract {B} from {A}.", true},     {"Sum of {A} and {B}?", false}, {"{A} minus {B}?", true},
      {"What is {A} - {B}?", true},         {"What is {A} + {B}?", false},
  };
  return templates;
}

int count_digits(const std::string& text) {
  return static_cast<int>(std::count_if(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); }));
}

Example addsub_from(std::size_t template_index, const std::string& a, const std::string& b) {
  const auto& templates = addsub_templates();
  if (template_index >= templates.size()) throw ConfigError("addsub: template index out of range");
  const auto& tpl = templates[template_index];
  const cpp_int x(a), y(b);
  const cpp_int result = tpl.subtract ? cpp_int(x - y) : cpp_int(x + y);
  std::string text = tpl.pattern;
  text = replace_all(text, "{A}", a);
  text = replace_all(text, "{B}", b);
  Example ex;
  ex.input = with_eos(text);
  ex.target = with_eos(result.str());
  ex.difficulty = {count_digits(a) + count_digits(b)};
  return ex;
}

Example gen_addsub_word(const std::vector<int>& params, ad::Rng& rng, bool long_operands) {
  if (params.size() != 1 || params[0] < 2) throw ConfigError("addsub: params are {entropy >= 2}");
  const int entropy = params[0];
  const int lo = long_operands ? 17 : 1;
  const int hi = long_operands ? entropy - 17 : 16;
  // first operand gets da digits, the second the rest
  const int da_lo = std::max(lo, entropy - hi);
  const int da_hi = std::min(hi, entropy - lo);
  if (da_lo > da_hi) throw ConfigError("addsub: entropy " + std::to_string(entropy) + " is infeasible");
  const int da = static_cast<int>(rng.uniform_int(da_lo, da_hi));
  const auto idx = static_cast<std::size_t>(rng.uniform_int(0, addsub_templates().size() - 1));
  const std::string a = random_signed(da, rng);
  const std::string b = random_signed(entropy - da, rng);
  return addsub_from(idx, a, b);
}

std::vector<int> sample_params(const RangeSet& ranges, ad::Rng& rng) {
  std::vector<int> out;
  for (const auto& r : ranges) {
    out.push_back(static_cast<int>(rng.uniform_int(r.lo, r.hi)));
  }
  return out;
}

Example generate(Task task, const std::vector<int>& params, ad::Rng& rng, bool ood, ToyLayout layout) {
  switch (task) {
    case Task::NumberSequence: return gen_number_sequence(params, rng);
    case Task::ToyAddition: return gen_toy_addition(params, rng, layout);
    case Task::AddSub: return gen_addsub_word(params, rng, ood);
    case Task::Program: return gen_program(params, rng);
    case Task::Babi: break;
  }
  throw ConfigError("task '" + task_name(task) + "' is loaded from files, not generated");
}

}  // namespace s2g::task
