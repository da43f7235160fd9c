#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "autodiff/checkpoint.hpp"
#include "training/trainer.hpp"

namespace s2g::train {

/// Raw input line -> model tokens for the session's task. Sequence tasks
/// split into characters and gain a trailing "$" when it is missing; in a
/// program line the two characters "\n" stand for a line break. The aligned
/// toy layout takes "a+b". bAbI takes "question<TAB>story" in plain words.
std::vector<std::string> tokenize_line(const RunConfig& config, const std::string& line);

/// Encoded grid of one input plus per-slot summaries.
struct GridView {
  std::size_t rows = 0, cols = 0, dim = 0;
  std::vector<double> slots;       // [rows x cols x dim]
  std::vector<double> norms;       // [rows x cols]
  std::vector<int> nearest;        // vocabulary id of the closest embedding row
  std::vector<std::string> tokens; // input tokens
};

GridView encode_view(const Session& session, const std::vector<std::string>& tokens);

/// Nearest-token table; slots nearest to the empty symbol print as "∅".
std::string format_grid_table(const GridView& view, const Vocabulary& vocab);
/// Binary PPM (P6) heatmap of slot norms, `cell` pixels per slot.
std::string grid_ppm(const GridView& view, std::size_t cell = 24);
/// Grid dump in the checkpoint container: "grid", "norms", "nearest".
ad::Checkpoint grid_dump(const GridView& view);

}  // namespace s2g::train
