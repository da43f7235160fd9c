#pragma once

#include <string>
#include <vector>

#include "autodiff/rng.hpp"
#include "taskgen/task.hpp"

namespace s2g::task {

/// a_n = 2 a_{n-1} - a_{n-2} + a_{n-3}. `params` = {length, terms}: three
/// initial terms below 10^length (at least one with exactly `length` digits,
/// sign flipped with probability 0.5), `terms` of them shown.
Example gen_number_sequence(const std::vector<int>& params, ad::Rng& rng);
Example number_sequence_from(const std::vector<long long>& initial, int terms);

enum class ToyLayout { Sequential, AlignedGrid };

ToyLayout parse_toy_layout(const std::string& name);
std::string toy_layout_name(ToyLayout layout);

/// `params` = {digits}: each operand has a digit count drawn from
/// [1, digits] with one of them forced to exactly `digits`.
Example gen_toy_addition(const std::vector<int>& params, ad::Rng& rng, ToyLayout layout = ToyLayout::Sequential);
Example toy_addition_from(const std::string& a, const std::string& b, ToyLayout layout = ToyLayout::Sequential);

/// Width of the aligned layout rows and the max operand width it admits.
inline constexpr std::size_t kAlignedWidth = 8;

/// The 3 x kAlignedWidth digit grid of the aligned layout: row 0 the first
/// operand, row 1 the second, both right-aligned; row 2 empty. Blank cells
/// are "".
std::vector<std::vector<std::string>> aligned_rows(const std::string& a, const std::string& b);

/// Add-or-subtract phrasings. "{A}" and "{B}" mark the operands.
struct AddSubTemplate {
  std::string pattern;
  bool subtract;
};
const std::vector<AddSubTemplate>& addsub_templates();

/// `params` = {entropy}, the total digit count of both operands. Operand
/// lengths are capped at 16 digits unless `long_operands` is set, in which
/// case each has at least 17.
Example gen_addsub_word(const std::vector<int>& params, ad::Rng& rng, bool long_operands);
Example addsub_from(std::size_t template_index, const std::string& a, const std::string& b);

/// Digit count of every maximal digit run in `text`.
int count_digits(const std::string& text);

/// Draws one instance of `task` for difficulty `params`. `ood` selects the
/// OOD-only generation constraints (long operands for addsub).
Example generate(Task task, const std::vector<int>& params, ad::Rng& rng, bool ood, ToyLayout layout);

/// Draws difficulty parameters uniformly inside `ranges`.
std::vector<int> sample_params(const RangeSet& ranges, ad::Rng& rng);

}  // namespace s2g::task
