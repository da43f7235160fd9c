#include "training/run_config.hpp"

#include <charconv>
#include <sstream>

#include "common/fnv.hpp"

namespace s2g::train {

using task::ConfigError;

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config: " + key + " expects a nonnegative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  auto x = text.find('x');
  if (x == std::string::npos) throw ConfigError("grid must look like HxW, got '" + text + "'");
  return {to_u64("grid", text.substr(0, x)), to_u64("grid", text.substr(x + 1))};
}

void RunConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "task") task = task::parse_task(value);
    else if (key == "head") {
      if (value == "cnn") head = HeadKind::Cnn;
      else if (value == "textcnn") head = HeadKind::TextCnn;
      else throw ConfigError("config: head must be cnn or textcnn");
    } else if (key == "layout") layout = task::parse_toy_layout(value);
    else if (key == "grid") std::tie(rows, cols) = parse_grid(value);
    else if (key == "embed") embed = to_u64(key, value);
    else if (key == "hidden") hidden = to_u64(key, value);
    else if (key == "layers") layers = to_u64(key, value);
    else if (key == "channels") channels = to_u64(key, value);
    else if (key == "bottleneck") bottleneck = to_u64(key, value);
    else if (key == "blocks_per_stack") blocks_per_stack = to_u64(key, value);
    else if (key == "kernel_channels") kernel_channels = to_u64(key, value);
    else if (key == "dropout") dropout = to_double(key, value);
    else if (key == "steps") steps = to_u64(key, value);
    else if (key == "batch") batch = to_u64(key, value);
    else if (key == "lr") lr = to_double(key, value);
    else if (key == "schedule") schedule = parse_schedule(value);
    else if (key == "warmup") warmup = to_u64(key, value);
    else if (key == "clip") clip = to_double(key, value);
    else if (key == "seed") seed = to_u64(key, value);
    else if (key == "eval_every") eval_every = to_u64(key, value);
    else if (key == "checkpoint_every") checkpoint_every = to_u64(key, value);
    else if (key == "eval_limit") eval_limit = to_u64(key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "task=" << task::task_name(task) << '\n'
      << "head=" << (head == HeadKind::Cnn ? "cnn" : "textcnn") << '\n'
      << "layout=" << task::toy_layout_name(layout) << '\n'
      << "grid=" << rows << 'x' << cols << '\n'
      << "embed=" << embed << '\n'
      << "hidden=" << hidden << '\n'
      << "layers=" << layers << '\n'
      << "channels=" << channels << '\n'
      << "bottleneck=" << bottleneck << '\n'
      << "blocks_per_stack=" << blocks_per_stack << '\n'
      << "kernel_channels=" << kernel_channels << '\n'
      << "dropout=" << fmt(dropout) << '\n'
      << "steps=" << steps << '\n'
      << "batch=" << batch << '\n'
      << "lr=" << fmt(lr) << '\n'
      << "schedule=" << schedule_name(schedule) << '\n'
      << "warmup=" << warmup << '\n'
      << "clip=" << fmt(clip) << '\n'
      << "seed=" << seed << '\n'
      << "eval_every=" << eval_every << '\n'
      << "checkpoint_every=" << checkpoint_every << '\n'
      << "eval_limit=" << eval_limit << '\n';
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    c.set(line.substr(0, eq), line.substr(eq + 1));
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (rows == 0 || cols == 0) throw ConfigError("config: grid dimensions must be positive");
  if (embed == 0 || hidden == 0 || layers == 0) throw ConfigError("config: embed, hidden and layers must be positive");
  if (batch == 0) throw ConfigError("config: batch must be at least 1");
  if (channels == 0 || bottleneck == 0 || blocks_per_stack == 0 || kernel_channels == 0) {
    throw ConfigError("config: channel widths and block counts must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("config: dropout must be in [0, 1)");
  if (!(lr >= 0.0)) throw ConfigError("config: lr must be nonnegative");
  const bool seq = task::is_sequence_task(task);
  if (seq && head != HeadKind::Cnn) throw ConfigError("config: sequence tasks need the cnn head");
  if (!seq && head != HeadKind::TextCnn) throw ConfigError("config: babi needs the textcnn head");
  if (layout == task::ToyLayout::AlignedGrid) {
    if (task != task::Task::ToyAddition) throw ConfigError("config: the aligned_grid layout is only defined for toy_addition");
    if (rows != 3 || cols != task::kAlignedWidth) {
      throw ConfigError("config: the aligned_grid layout needs grid 3x" + std::to_string(task::kAlignedWidth));
    }
  }
}

std::uint64_t RunConfig::architecture_hash() const {
  std::ostringstream s;
  s << (head == HeadKind::Cnn ? "cnn" : "textcnn") << '|' << task::toy_layout_name(layout) << '|' << rows << 'x' << cols
    << '|' << embed << '|' << hidden << '|' << layers << '|' << channels << '|' << bottleneck << '|' << blocks_per_stack
    << '|' << kernel_channels;
  return fnv1a64(s.str());
}

ModelSpec RunConfig::model_spec(std::size_t vocab_size, std::size_t labels) const {
  ModelSpec spec;
  spec.head = head;
  spec.rows = rows;
  spec.cols = cols;
  spec.direct_input = layout == task::ToyLayout::AlignedGrid;
  spec.encoder.vocab_size = vocab_size;
  spec.encoder.embed_dim = embed;
  spec.encoder.hidden = hidden;
  spec.encoder.layers = layers;
  spec.cnn.channels = channels;
  spec.cnn.stacks = {bottleneck, bottleneck, bottleneck};
  spec.cnn.blocks_per_stack = blocks_per_stack;
  spec.cnn.vocab_out = vocab_size;
  spec.textcnn.channels = kernel_channels;
  spec.textcnn.dropout = dropout;
  spec.textcnn.labels = labels;
  return spec;
}

RunConfig default_config(task::Task t) {
  RunConfig c;
  c.task = t;
  if (t == task::Task::Babi) {
    c.head = HeadKind::TextCnn;
    c.rows = 4;
    c.cols = 8;
    c.layers = 2;
    c.schedule = Schedule::WarmupDecay;
  }
  return c;
}

}  // namespace s2g::train
