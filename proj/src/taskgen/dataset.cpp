#include "taskgen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "taskgen/split.hpp"

namespace s2g::task {

namespace fs = std::filesystem;

std::vector<Example> generate_split(const GenerateOptions& opts, Split split, std::size_t count) {
  if (split == Split::Discard) throw ConfigError("cannot generate the discard partition");
  opts.ranges.validate(difficulty_names(opts.task).size());
  const RangeSet& ranges = opts.ranges.of(split);
  std::vector<Example> out;
  if (count == 0) return out;
  if (ranges.empty()) throw ConfigError("no ranges configured for split " + split_name(split));
  ad::Rng rng = ad::Rng(opts.seed).split(static_cast<std::uint64_t>(split) + 1);
  const std::size_t max_attempts = 1000 * count + 100000;
  out.reserve(count);
  for (std::size_t attempt = 0; out.size() < count; ++attempt) {
    if (attempt >= max_attempts) {
      throw ConfigError("split " + split_name(split) + ": ranges admit too few instances (" + std::to_string(out.size()) +
                        " of " + std::to_string(count) + " after " + std::to_string(attempt) + " draws)");
    }
    const auto params = sample_params(ranges, rng);
    Example ex;
    try {
      ex = generate(opts.task, params, rng, split == Split::OodTest, opts.layout);
    } catch (const ConfigError&) {
      if (opts.task == Task::AddSub) continue;  // infeasible entropy, draw again
      throw;
    }
    if (ex.target.size() - 1 > opts.width) continue;
    if (hash_split(ex, opts.ranges) != split) continue;
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

std::string join_escaped(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += escape_token(tokens[i]);
  }
  return out;
}

std::vector<std::string> split_escaped(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(unescape_token(tok));
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

void write_dataset(const fs::path& path, const std::vector<Example>& examples, bool classification) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& ex : examples) {
    out << join_escaped(ex.input) << '\t' << (classification ? escape_token(ex.label) : join_escaped(ex.target)) << '\t';
    for (std::size_t i = 0; i < ex.difficulty.size(); ++i) out << (i ? "," : "") << ex.difficulty[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<Example> read_dataset(const fs::path& path, bool classification) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset " + path.string());
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto cols = split_tabs(line);
    if (cols.size() < 2 || cols.size() > 3) throw ParseError(where + ": expected 2 or 3 tab-separated fields");
    Example ex;
    ex.input = split_escaped(cols[0]);
    if (ex.input.empty()) throw ParseError(where + ": empty input");
    if (classification) {
      ex.label = unescape_token(cols[1]);
    } else {
      ex.target = split_escaped(cols[1]);
      if (ex.target.empty() || ex.target.back() != "$") throw ParseError(where + ": target must end with $");
    }
    if (cols.size() == 3 && !cols[2].empty()) {
      std::istringstream ds(cols[2]);
      std::string v;
      while (std::getline(ds, v, ',')) {
        try {
          ex.difficulty.push_back(std::stoi(v));
        } catch (const std::exception&) {
          throw ParseError(where + ": bad difficulty '" + cols[2] + "'");
        }
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::string split_file(Split s) { return split_name(s) + ".tsv"; }

std::string DatasetMeta::serialize() const {
  std::ostringstream out;
  out << "task=" << task_name(task) << '\n'
      << "ranges=" << ranges.str() << '\n'
      << "seed=" << seed << '\n'
      << "layout=" << toy_layout_name(layout) << '\n'
      << "width=" << width << '\n'
      << "train_count=" << train_count << '\n'
      << "id_count=" << id_count << '\n'
      << "ood_count=" << ood_count << '\n';
  return out.str();
}

DatasetMeta DatasetMeta::parse(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("dataset meta: bad line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw ParseError("dataset meta: missing key '" + k + "'");
    return it->second;
  };
  DatasetMeta m;
  try {
    m.task = parse_task(get("task"));
    m.ranges = SplitRanges::parse(get("ranges"), difficulty_names(m.task).size());
    m.seed = std::stoull(get("seed"));
    m.layout = parse_toy_layout(get("layout"));
    m.width = std::stoul(get("width"));
    m.train_count = std::stoul(get("train_count"));
    m.id_count = std::stoul(get("id_count"));
    m.ood_count = std::stoul(get("ood_count"));
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("dataset meta: ") + e.what());
  }
  return m;
}

void write_meta(const fs::path& dir, const DatasetMeta& meta) {
  std::ofstream out(dir / kMetaFile, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / kMetaFile).string());
  out << meta.serialize();
}

DatasetMeta read_meta(const fs::path& dir) {
  std::ifstream in(dir / kMetaFile, std::ios::binary);
  if (!in) throw ParseError("cannot open " + (dir / kMetaFile).string());
  std::stringstream ss;
  ss << in.rdbuf();
  return DatasetMeta::parse(ss.str());
}

Vocabulary build_vocab(const std::vector<Example>& examples) {
  if (examples.empty()) throw ConfigError("build_vocab: empty corpus");
  Vocabulary v;
  for (const auto& ex : examples) {
    for (const auto& t : ex.input) v.add(t);
    for (const auto& t : ex.target) v.add(t);
  }
  return v;
}

std::vector<std::string> build_labels(const std::vector<Example>& examples) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& ex : examples) {
    if (seen.insert(ex.label).second) out.push_back(ex.label);
  }
  return out;
}

std::vector<std::string> babi_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      flush();
    } else if (std::ispunct(u) && c != '\'' && c != '-') {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  flush();
  return out;
}

std::vector<Example> load_babi(const fs::path& dir, const std::string& split, int task) {
  if (split != "train" && split != "test") throw ConfigError("babi: split must be train or test");
  if (!fs::is_directory(dir)) throw ParseError("babi: no such directory " + dir.string());
  const std::regex name_re(R"(qa(\d+)_.*_(train|test)\.txt)");
  std::map<int, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, name_re) || m[2] != split) continue;
    const int id = std::stoi(m[1]);
    if (task == 0 || id == task) files[id] = entry.path();
  }
  if (files.empty()) throw ParseError("babi: no " + split + " files in " + dir.string());
  std::vector<Example> out;
  for (const auto& [id, path] : files) {
    std::ifstream in(path);
    if (!in) throw ParseError("babi: cannot open " + path.string());
    std::vector<std::string> story;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(lineno);
      const auto space = line.find(' ');
      int num = 0;
      try {
        if (space == std::string::npos) throw std::invalid_argument("no index");
        std::size_t used = 0;
        num = std::stoi(line.substr(0, space), &used);
        if (used != space || num < 1) throw std::invalid_argument("bad index");
      } catch (const std::exception&) {
        throw ParseError(where + ": expected a line number");
      }
      if (num == 1) story.clear();
      const std::string body = line.substr(space + 1);
      const auto tab = body.find('\t');
      if (tab == std::string::npos) {
        for (auto& w : babi_words(body)) story.push_back(std::move(w));
        continue;
      }
      const auto tab2 = body.find('\t', tab + 1);
      const std::string answer = body.substr(tab + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab - 1);
      if (answer.empty()) throw ParseError(where + ": question without an answer");
      Example ex;
      ex.input.emplace_back(Vocabulary::kReserved[Vocabulary::kCls]);
      for (auto& w : babi_words(body.substr(0, tab))) ex.input.push_back(std::move(w));
      ex.input.emplace_back(Vocabulary::kReserved[Vocabulary::kSep]);
      ex.input.insert(ex.input.end(), story.begin(), story.end());
      ex.label = answer;
      ex.difficulty = {id};
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace s2g::task
