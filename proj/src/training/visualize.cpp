#include "training/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "taskgen/generators.hpp"

namespace s2g::train {

std::vector<std::string> tokenize_line(const RunConfig& config, const std::string& line) {
  if (config.task == task::Task::Babi) {
    const auto tab = line.find('\t');
    std::vector<std::string> out{std::string(Vocabulary::kReserved[Vocabulary::kCls])};
    for (auto& w : task::babi_words(line.substr(0, tab))) out.push_back(std::move(w));
    if (tab != std::string::npos) {
      out.emplace_back(Vocabulary::kReserved[Vocabulary::kSep]);
      for (auto& w : task::babi_words(line.substr(tab + 1))) out.push_back(std::move(w));
    }
    return out;
  }
  if (config.task == task::Task::ToyAddition && config.layout == task::ToyLayout::AlignedGrid) {
    std::string body = line;
    if (!body.empty() && body.back() == '$') body.pop_back();
    const auto plus = body.find('+');
    if (plus == std::string::npos) throw TokenizationError("aligned toy input must look like a+b");
    return task::toy_addition_from(body.substr(0, plus), body.substr(plus + 1), task::ToyLayout::AlignedGrid).input;
  }
  std::string text = line;
  if (config.task == task::Task::Program) {
    std::string t;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '\\' && i + 1 < text.size() && text[i + 1] == 'n') {
        t += '\n';
        ++i;
      } else {
        t += text[i];
      }
    }
    text = t;
  }
  if (text.empty() || text.back() != '$') text += '$';
  return char_tokens(text);
}

GridView encode_view(const Session& session, const std::vector<std::string>& tokens) {
  ad::NoGradGuard no_grad;
  const auto ids = session.vocab().encode(tokens);
  const auto& model = session.model();
  const grid::Grid g = model.encode({ids}).grid;
  GridView v;
  v.rows = g.rows();
  v.cols = g.cols();
  v.dim = g.slot_dim();
  v.tokens = tokens;
  v.slots.assign(g.slots.data().begin(), g.slots.data().end());
  const auto table = model.encoder().embedding.matrix.data();
  const std::size_t vocab = session.vocab().size();
  for (std::size_t cell = 0; cell < v.rows * v.cols; ++cell) {
    const double* s = v.slots.data() + cell * v.dim;
    double sq = 0.0;
    for (std::size_t k = 0; k < v.dim; ++k) sq += s[k] * s[k];
    v.norms.push_back(std::sqrt(sq));
    int best = Vocabulary::kEmpty;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < vocab; ++t) {
      if (static_cast<int>(t) == Vocabulary::kPad) continue;
      double d = 0.0;
      for (std::size_t k = 0; k < v.dim; ++k) {
        const double diff = s[k] - table[t * v.dim + k];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(t);
      }
    }
    v.nearest.push_back(best);
  }
  return v;
}

namespace {

std::string label_of(int id, const Vocabulary& vocab) {
  if (id == Vocabulary::kEmpty) return "∅";
  const std::string& t = vocab.token(id);
  return t == " " ? "␣" : escape_token(t);
}

// display width; "∅" and "␣" are one column but three bytes
std::size_t columns(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

std::string format_grid_table(const GridView& view, const Vocabulary& vocab) {
  std::vector<std::string> labels;
  std::size_t width = 1;
  for (int id : view.nearest) {
    labels.push_back(label_of(id, vocab));
    width = std::max(width, columns(labels.back()));
  }
  std::ostringstream out;
  auto rule = [&] {
    out << '+';
    for (std::size_t j = 0; j < view.cols; ++j) out << std::string(width + 2, '-') << '+';
    out << '\n';
  };
  rule();
  for (std::size_t i = 0; i < view.rows; ++i) {
    out << '|';
    for (std::size_t j = 0; j < view.cols; ++j) {
      const auto& l = labels[i * view.cols + j];
      out << ' ' << l << std::string(width - columns(l) + 1, ' ') << '|';
    }
    out << '\n';
    rule();
  }
  return out.str();
}

std::string grid_ppm(const GridView& view, std::size_t cell) {
  const std::size_t w = view.cols * cell, h = view.rows * cell;
  double top = 0.0;
  for (double n : view.norms) top = std::max(top, n);
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + w * h * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y / cell, j = x / cell;
      const bool border = y % cell == 0 || x % cell == 0;
      const double t = top > 0.0 ? view.norms[i * view.cols + j] / top : 0.0;
      // white (empty) to dark blue (largest norm)
      unsigned char r = static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)));
      unsigned char g = static_cast<unsigned char>(std::lround(255.0 * (1.0 - 0.8 * t)));
      unsigned char b = static_cast<unsigned char>(std::lround(255.0 - 100.0 * t));
      if (border) r = g = b = 160;
      out.push_back(static_cast<char>(r));
      out.push_back(static_cast<char>(g));
      out.push_back(static_cast<char>(b));
    }
  }
  return out;
}

ad::Checkpoint grid_dump(const GridView& view) {
  ad::Checkpoint c;
  std::ostringstream meta;
  meta << "rows=" << view.rows << "\ncols=" << view.cols << "\ndim=" << view.dim << "\ntokens=";
  for (std::size_t i = 0; i < view.tokens.size(); ++i) meta << (i ? " " : "") << escape_token(view.tokens[i]);
  meta << '\n';
  c.metadata = meta.str();
  c.put("grid", {view.rows, view.cols, view.dim}, view.slots);
  c.put("norms", {view.rows, view.cols}, view.norms);
  c.put("nearest", {view.rows, view.cols}, std::vector<double>(view.nearest.begin(), view.nearest.end()));
  return c;
}

}  // namespace s2g::train
