#include "s2g/s2g.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <streambuf>
#include <string>
#include <utility>
#include <vector>

#include "autodiff/checkpoint.hpp"
#include "decoders/readout.hpp"
#include "taskgen/dataset.hpp"
#include "training/gradcheck_suite.hpp"
#include "training/trainer.hpp"
#include "training/visualize.hpp"

namespace fs = std::filesystem;
using namespace s2g;

struct s2g_config {
  std::vector<std::pair<std::string, std::string>> entries;
};

struct s2g_report {
  std::string text;
  std::map<std::string, double> values;
};

struct s2g_session {
  explicit s2g_session(train::Session s) : session(std::move(s)) {}
  train::Session session;
};

namespace {

thread_local std::string t_error;
s2g_log_fn g_log = nullptr;
void* g_log_user = nullptr;

// I/O and data-layout failures raised by this layer.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
s2g_status guarded(F&& body) {
  try {
    return body();
  } catch (const TokenizationError& e) {
    t_error = std::string("tokenization error: ") + e.what();
    return S2G_ERR_DATA;
  } catch (const task::ParseError& e) {
    t_error = e.what();
    return S2G_ERR_DATA;
  } catch (const ad::CheckpointError& e) {
    t_error = std::string("checkpoint error: ") + e.what();
    return S2G_ERR_DATA;
  } catch (const dec::CapacityError& e) {
    t_error = e.what();
    return S2G_ERR_DATA;
  } catch (const fs::filesystem_error& e) {
    t_error = e.what();
    return S2G_ERR_DATA;
  } catch (const DataError& e) {
    t_error = e.what();
    return S2G_ERR_DATA;
  } catch (const ad::NumericError& e) {
    t_error = std::string("numeric failure: ") + e.what();
    return S2G_ERR_NUMERIC;
  } catch (const std::invalid_argument& e) {
    t_error = e.what();
    return S2G_ERR_USAGE;
  } catch (const std::bad_alloc&) {
    t_error = "out of memory";
    return S2G_ERR_INTERNAL;
  } catch (const std::runtime_error& e) {
    t_error = e.what();
    return S2G_ERR_DATA;
  } catch (const std::exception& e) {
    t_error = std::string("internal error: ") + e.what();
    return S2G_ERR_INTERNAL;
  } catch (...) {
    t_error = "internal error";
    return S2G_ERR_INTERNAL;
  }
}

s2g_status fail(s2g_status s, std::string message) {
  t_error = std::move(message);
  return s;
}

const std::string* lookup(const s2g_config* c, const std::string& key) {
  if (!c) return nullptr;
  for (const auto& [k, v] : c->entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

void check_keys(const s2g_config* c, const std::set<std::string>& allowed, const char* command) {
  if (!c) return;
  for (const auto& [k, v] : c->entries) {
    if (!allowed.count(k)) throw task::ConfigError(std::string(command) + ": unknown setting '" + k + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw task::ConfigError(key + " expects a nonnegative integer, got '" + v + "'");
  return x;
}

std::uint64_t get_u64(const s2g_config* c, const std::string& key, std::uint64_t fallback) {
  const auto* v = lookup(c, key);
  return v ? to_u64(key, *v) : fallback;
}

bool get_flag(const s2g_config* c, const std::string& key) {
  const auto* v = lookup(c, key);
  if (!v) return false;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  throw task::ConfigError(key + " expects 0 or 1, got '" + *v + "'");
}

bool nonempty_dir(const fs::path& p) { return fs::exists(p) && (!fs::is_directory(p) || !fs::is_empty(p)); }

void refuse_existing(const fs::path& p, bool force) {
  if (!force && nonempty_dir(p)) throw DataError("output '" + p.string() + "' already exists (use --force to overwrite)");
}

void emit(s2g_report** report, s2g_report r) {
  if (report) *report = new s2g_report(std::move(r));
}

// Forwards complete lines to the log callback.
class LogBuf : public std::streambuf {
 protected:
  int overflow(int ch) override {
    if (ch == traits_type::eof()) return 0;
    if (ch == '\n') {
      flush_line();
    } else {
      line_.push_back(static_cast<char>(ch));
    }
    return ch;
  }
  int sync() override { return 0; }

 public:
  ~LogBuf() override {
    if (!line_.empty()) flush_line();
  }

 private:
  void flush_line() {
    if (g_log) g_log(line_.c_str(), g_log_user);
    line_.clear();
  }
  std::string line_;
};

const std::set<std::string> kGenerateKeys{"task",     "split_ranges", "seed",     "layout",   "width",
                                          "train_count", "id_count", "ood_count", "babi_dir", "babi_task"};

bool inside(const task::SplitRanges& r, task::Split s, const task::Example& e) {
  const auto& set = r.of(s);
  return !set.empty() && task::contains(set, e.difficulty);
}

s2g_report do_generate(const s2g_config* c, const fs::path& out, bool force) {
  check_keys(c, kGenerateKeys, "generate");
  const auto* task_name = lookup(c, "task");
  if (!task_name) throw task::ConfigError("generate: task is required");
  task::GenerateOptions opts;
  opts.task = task::parse_task(*task_name);
  const auto nparams = task::difficulty_names(opts.task).size();
  opts.ranges = lookup(c, "split_ranges") ? task::SplitRanges::parse(*lookup(c, "split_ranges"), nparams)
                                          : task::default_ranges(opts.task);
  opts.ranges.validate(nparams);
  opts.seed = get_u64(c, "seed", 1);
  if (const auto* l = lookup(c, "layout")) opts.layout = task::parse_toy_layout(*l);
  if (opts.layout == task::ToyLayout::AlignedGrid && opts.task != task::Task::ToyAddition) {
    throw task::ConfigError("generate: the aligned_grid layout is only defined for toy_addition");
  }
  opts.width = get_u64(c, "width", opts.layout == task::ToyLayout::AlignedGrid ? task::kAlignedWidth : 25);
  if (opts.width == 0) throw task::ConfigError("generate: width must be positive");
  refuse_existing(out, force);

  std::vector<task::Example> train, id, ood;
  if (opts.task == task::Task::Babi) {
    const auto* dir = lookup(c, "babi_dir");
    if (!dir) throw task::ConfigError("generate: babi needs babi_dir (--babi-dir)");
    const int which = static_cast<int>(get_u64(c, "babi_task", 0));
    if (which > 20) throw task::ConfigError("generate: babi_task must be 0..20");
    auto keep = [&](std::vector<task::Example> all, task::Split s, std::uint64_t limit) {
      std::vector<task::Example> kept;
      for (auto& e : all) {
        if (inside(opts.ranges, s, e)) kept.push_back(std::move(e));
      }
      if (limit && kept.size() > limit) kept.resize(limit);
      return kept;
    };
    train = keep(task::load_babi(*dir, "train", which), task::Split::Train, get_u64(c, "train_count", 0));
    id = keep(task::load_babi(*dir, "test", which), task::Split::IdTest, get_u64(c, "id_count", 0));
  } else {
    train = task::generate_split(opts, task::Split::Train, get_u64(c, "train_count", 50000));
    id = task::generate_split(opts, task::Split::IdTest, get_u64(c, "id_count", 2000));
    if (!opts.ranges.ood.empty()) ood = task::generate_split(opts, task::Split::OodTest, get_u64(c, "ood_count", 2000));
  }
  if (train.empty()) throw DataError("generate: no training examples");

  fs::create_directories(out);
  const bool cls = !task::is_sequence_task(opts.task);
  task::write_dataset(out / task::split_file(task::Split::Train), train, cls);
  task::write_dataset(out / task::split_file(task::Split::IdTest), id, cls);
  task::write_dataset(out / task::split_file(task::Split::OodTest), ood, cls);
  task::DatasetMeta meta;
  meta.task = opts.task;
  meta.ranges = opts.ranges;
  meta.seed = opts.seed;
  meta.layout = opts.layout;
  meta.width = opts.width;
  meta.train_count = train.size();
  meta.id_count = id.size();
  meta.ood_count = ood.size();
  task::write_meta(out, meta);

  s2g_report r;
  std::ostringstream text;
  text << "task " << task::task_name(opts.task) << "  ranges " << opts.ranges.str() << "  seed " << opts.seed << '\n'
       << "wrote " << train.size() << " train, " << id.size() << " id_test, " << ood.size() << " ood_test examples to "
       << out.string() << '\n';
  r.text = text.str();
  r.values = {{"train", static_cast<double>(train.size())},
              {"id", static_cast<double>(id.size())},
              {"ood", static_cast<double>(ood.size())}};
  return r;
}

const std::set<std::string> kCommandKeys{"seeds", "resume"};

void apply_training_keys(const s2g_config* c, train::RunConfig& cfg) {
  if (!c) return;
  for (const auto& [k, v] : c->entries) {
    if (kCommandKeys.count(k)) continue;
    if (k == "task") {
      if (task::parse_task(v) != cfg.task) {
        throw task::ConfigError("train: task " + v + " does not match the dataset (" + task::task_name(cfg.task) + ")");
      }
      continue;
    }
    cfg.set(k, v);
  }
}

std::string run_report(const train::TrainResult& r) {
  std::ostringstream out;
  out << "step " << r.steps << (r.stopped_early ? " (stopped early)" : "") << '\n' << r.id.format();
  if (r.has_ood) out << r.ood.format();
  out << "checkpoint " << r.checkpoint.string() << '\n';
  return out.str();
}

s2g_report do_train(const s2g_config* c, const fs::path& data_dir, const fs::path& out, bool force) {
  const auto data = train::load_dataset_dir(data_dir);
  const auto meta = task::read_meta(data_dir);
  const std::uint64_t seeds = get_u64(c, "seeds", 1);
  const bool resume = get_flag(c, "resume");
  if (seeds == 0) throw task::ConfigError("train: seeds must be at least 1");
  if (resume && seeds > 1) throw task::ConfigError("train: resume works on single-seed runs");

  train::RunConfig cfg = train::default_config(data.task);
  cfg.task = data.task;
  cfg.layout = meta.layout;
  if (meta.layout == task::ToyLayout::AlignedGrid) cfg.cols = task::kAlignedWidth;
  apply_training_keys(c, cfg);
  cfg.validate();

  LogBuf buf;
  std::ostream progress(&buf);
  train::TrainOptions opts;
  opts.out_dir = out;
  opts.progress = &progress;

  s2g_report r;
  if (resume) {
    const fs::path ckpt = out / train::kCheckpointFile;
    if (!fs::exists(ckpt)) throw DataError("train: nothing to resume, " + ckpt.string() + " is missing");
    train::Session session = train::Session::load(ckpt);
    train::RunConfig merged = session.config();
    apply_training_keys(c, merged);
    merged.validate();
    if (merged.architecture_hash() != session.config().architecture_hash()) {
      throw task::ConfigError("train: settings change the architecture of the checkpoint being resumed");
    }
    session.mutable_config() = merged;
    const auto res = train::train_loop(session, data, opts);
    r.text = run_report(res);
    r.values = {{"steps", static_cast<double>(res.steps)},
                {"final_loss", res.final_loss},
                {"id_accuracy", res.id.accuracy()}};
    if (res.has_ood) r.values["ood_accuracy"] = res.ood.accuracy();
    return r;
  }

  refuse_existing(out, force);
  if (seeds == 1) {
    train::Session session(cfg, data.vocab, data.labels);
    const auto res = train::train_loop(session, data, opts);
    r.text = run_report(res);
    r.values = {{"steps", static_cast<double>(res.steps)},
                {"final_loss", res.final_loss},
                {"id_accuracy", res.id.accuracy()}};
    if (res.has_ood) r.values["ood_accuracy"] = res.ood.accuracy();
    if (res.id.classification) r.values["failed"] = static_cast<double>(res.id.failed_tasks());
    return r;
  }
  const auto multi = train::train_seeds(cfg, data, seeds, opts);
  r.text = multi.format();
  r.values = {{"runs", static_cast<double>(multi.runs.size())},
              {"id_best", multi.id.best()},
              {"id_mean", multi.id.mean()},
              {"id_std", multi.id.stddev()}};
  if (!multi.ood.values.empty()) {
    r.values["ood_best"] = multi.ood.best();
    r.values["ood_mean"] = multi.ood.mean();
    r.values["ood_std"] = multi.ood.stddev();
  }
  return r;
}

void check_vocab(const train::Session& s, const train::TrainData& data) {
  auto check = [&](const std::vector<task::Example>& split) {
    for (const auto& e : split) {
      for (const auto& t : e.input) {
        if (!s.vocab().find(t)) throw task::ConfigError("eval: dataset token '" + escape_token(t) + "' is not in the checkpoint vocabulary");
      }
      for (const auto& t : e.target) {
        if (!s.vocab().find(t)) throw task::ConfigError("eval: dataset token '" + escape_token(t) + "' is not in the checkpoint vocabulary");
      }
    }
  };
  check(data.id);
  check(data.ood);
}

s2g_report do_eval(const fs::path& checkpoint, const fs::path& data_dir, const char* out_file) {
  if (!fs::exists(checkpoint)) throw DataError("eval: checkpoint " + checkpoint.string() + " does not exist");
  const train::Session session = train::Session::load(checkpoint);
  const auto data = train::load_dataset_dir(data_dir);
  if (data.task != session.config().task) {
    throw task::ConfigError("eval: checkpoint was trained on " + task::task_name(session.config().task) +
                            ", dataset is " + task::task_name(data.task));
  }
  check_vocab(session, data);
  s2g_report r;
  const auto id = session.evaluate(data.task, "id_test", data.id);
  r.text = "step " + std::to_string(session.step()) + '\n' + id.format();
  r.values["id_accuracy"] = id.accuracy();
  if (id.classification) r.values["failed"] = static_cast<double>(id.failed_tasks());
  if (!data.ood.empty()) {
    const auto ood = session.evaluate(data.task, "ood_test", data.ood);
    r.text += ood.format();
    r.values["ood_accuracy"] = ood.accuracy();
  }
  if (out_file) {
    std::ofstream f(out_file);
    if (!f) throw DataError(std::string("eval: cannot write ") + out_file);
    f << r.text;
  }
  return r;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  f << bytes;
}

}  // namespace

extern "C" {

const char* s2g_version(void) { return "1.0.0"; }

const char* s2g_last_error(void) { return t_error.c_str(); }

const char* s2g_status_name(s2g_status status) {
  switch (status) {
    case S2G_OK: return "ok";
    case S2G_ERR_USAGE: return "usage error";
    case S2G_ERR_DATA: return "data error";
    case S2G_ERR_NUMERIC: return "numeric failure";
    case S2G_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

s2g_status s2g_config_new(s2g_config** out) {
  if (!out) return fail(S2G_ERR_USAGE, "s2g_config_new: null output");
  return guarded([&] {
    *out = new s2g_config();
    return S2G_OK;
  });
}

void s2g_config_free(s2g_config* config) { delete config; }

s2g_status s2g_config_set(s2g_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return fail(S2G_ERR_USAGE, "s2g_config_set: null argument");
  return guarded([&] {
    std::string k(key);
    if (k.empty()) return fail(S2G_ERR_USAGE, "s2g_config_set: empty key");
    for (auto& [ek, ev] : config->entries) {
      if (ek == k) {
        ev = value;
        return S2G_OK;
      }
    }
    config->entries.emplace_back(std::move(k), value);
    return S2G_OK;
  });
}

s2g_status s2g_config_load(s2g_config* config, const char* path) {
  if (!config || !path) return fail(S2G_ERR_USAGE, "s2g_config_load: null argument");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw DataError(std::string("cannot read config ") + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw task::ConfigError(std::string(path) + ":" + std::to_string(lineno) + ": expected key=value");
      }
      const auto st = s2g_config_set(config, line.substr(0, eq).c_str(), line.substr(eq + 1).c_str());
      if (st != S2G_OK) return st;
    }
    return S2G_OK;
  });
}

const char* s2g_config_get(const s2g_config* config, const char* key) {
  if (!key) return nullptr;
  const auto* v = lookup(config, key);
  return v ? v->c_str() : nullptr;
}

const char* s2g_report_text(const s2g_report* report) { return report ? report->text.c_str() : ""; }

s2g_status s2g_report_value(const s2g_report* report, const char* name, double* out) {
  if (!report || !name || !out) return fail(S2G_ERR_USAGE, "s2g_report_value: null argument");
  const auto it = report->values.find(name);
  if (it == report->values.end()) return fail(S2G_ERR_USAGE, std::string("report has no value '") + name + "'");
  *out = it->second;
  return S2G_OK;
}

void s2g_report_free(s2g_report* report) { delete report; }

void s2g_set_log(s2g_log_fn fn, void* user) {
  g_log = fn;
  g_log_user = user;
}

s2g_status s2g_generate(const s2g_config* config, const char* out_dir, int force, s2g_report** report) {
  if (!out_dir) return fail(S2G_ERR_USAGE, "generate: output directory is required");
  return guarded([&] {
    emit(report, do_generate(config, out_dir, force != 0));
    return S2G_OK;
  });
}

s2g_status s2g_train(const s2g_config* config, const char* data_dir, const char* out_dir, int force,
                     s2g_report** report) {
  if (!data_dir || !out_dir) return fail(S2G_ERR_USAGE, "train: dataset and output directories are required");
  return guarded([&] {
    emit(report, do_train(config, data_dir, out_dir, force != 0));
    return S2G_OK;
  });
}

s2g_status s2g_eval(const char* checkpoint, const char* data_dir, const char* out_file, s2g_report** report) {
  if (!checkpoint || !data_dir) return fail(S2G_ERR_USAGE, "eval: checkpoint and dataset are required");
  return guarded([&] {
    emit(report, do_eval(checkpoint, data_dir, out_file));
    return S2G_OK;
  });
}

s2g_status s2g_gradcheck(const s2g_config* config, s2g_report** report) {
  return guarded([&] {
    check_keys(config, {"instances", "seed", "only", "faulty"}, "gradcheck");
    train::GradSuiteOptions opts;
    opts.instances = get_u64(config, "instances", 100);
    opts.seed = get_u64(config, "seed", 1);
    opts.include_faulty = get_flag(config, "faulty");
    if (const auto* only = lookup(config, "only")) opts.only = split_list(*only);
    if (opts.instances == 0) throw task::ConfigError("gradcheck: instances must be at least 1");
    const auto rows = train::run_gradcheck_suite(opts);
    s2g_report r;
    r.text = train::format_gradcheck(rows);
    double failed = 0.0, worst = 0.0;
    for (const auto& row : rows) {
      if (!row.pass) failed += 1.0;
      worst = std::max(worst, row.max_relative_error);
    }
    r.values = {{"failed", failed}, {"max_relative_error", worst}, {"cases", static_cast<double>(rows.size())}};
    emit(report, std::move(r));
    if (failed > 0.0) {
      t_error = "gradcheck: " + std::to_string(static_cast<int>(failed)) + " case(s) failed";
      return S2G_ERR_NUMERIC;
    }
    return S2G_OK;
  });
}

s2g_status s2g_visualize(const char* checkpoint, const char* input_line, const char* out_prefix,
                         s2g_report** report) {
  if (!checkpoint || !input_line) return fail(S2G_ERR_USAGE, "visualize: checkpoint and input are required");
  return guarded([&] {
    if (!fs::exists(checkpoint)) throw DataError(std::string("visualize: checkpoint ") + checkpoint + " does not exist");
    const train::Session session = train::Session::load(checkpoint);
    const auto tokens = train::tokenize_line(session.config(), input_line);
    const auto view = train::encode_view(session, tokens);
    s2g_report r;
    r.text = train::format_grid_table(view, session.vocab());
    if (out_prefix) {
      const std::string p(out_prefix);
      write_file(p + ".txt", r.text);
      write_file(p + ".ppm", train::grid_ppm(view));
      ad::write_checkpoint(p + ".grid", train::grid_dump(view));
    }
    double top = 0.0;
    for (double n : view.norms) top = std::max(top, n);
    r.values = {{"rows", static_cast<double>(view.rows)},
                {"cols", static_cast<double>(view.cols)},
                {"max_norm", top}};
    emit(report, std::move(r));
    return S2G_OK;
  });
}

s2g_status s2g_session_load(const char* checkpoint, s2g_session** out) {
  if (!checkpoint || !out) return fail(S2G_ERR_USAGE, "s2g_session_load: null argument");
  return guarded([&] {
    if (!fs::exists(checkpoint)) throw DataError(std::string("checkpoint ") + checkpoint + " does not exist");
    *out = new s2g_session(train::Session::load(checkpoint));
    return S2G_OK;
  });
}

void s2g_session_free(s2g_session* session) { delete session; }

uint64_t s2g_session_step(const s2g_session* session) { return session ? session->session.step() : 0; }

s2g_status s2g_session_predict(const s2g_session* session, const char* input_line, s2g_report** report) {
  if (!session || !input_line) return fail(S2G_ERR_USAGE, "s2g_session_predict: null argument");
  return guarded([&] {
    const auto& s = session->session;
    task::Example e;
    e.input = train::tokenize_line(s.config(), input_line);
    s2g_report r;
    if (task::is_sequence_task(s.config().task)) {
      const auto out = s.predict_sequences({e}).at(0);
      r.text = join_tokens(out);
    } else {
      r.text = s.predict_labels({e}).at(0);
    }
    emit(report, std::move(r));
    return S2G_OK;
  });
}

}  // extern "C"
