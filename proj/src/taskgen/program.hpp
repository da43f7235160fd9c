#pragma once

#include <string>
#include <vector>

#include "autodiff/rng.hpp"
#include "taskgen/task.hpp"

namespace s2g::task {

/// Random snippet over a small closed grammar: assignments, single-line
/// for-range loops with an augmented update, conditional expressions with
/// a comparison, + - * on literals and variables, and a final print.
/// `params` = {nesting, length}; literals have at most `length` digits and
/// at least one has exactly `length`. Lines are separated by "\n".
std::string gen_program_text(const std::vector<int>& params, ad::Rng& rng);
Example gen_program(const std::vector<int>& params, ad::Rng& rng);
Example program_from(const std::string& snippet, const std::vector<int>& difficulty);

/// Interprets a snippet of the generator grammar with arbitrary precision.
/// Returns the printed values, one per line. Throws ParseError otherwise.
std::string eval_program(const std::string& snippet);
std::string eval_program(const std::vector<std::string>& tokens);

/// Instruction buckets for the per-type report: "if-else", "for", "*".
std::vector<std::string> instruction_types(const std::string& snippet);
inline const std::vector<std::string> kInstructionTypes = {"if-else", "for", "*"};

}  // namespace s2g::task
