// s2g: command-line front end over the C API.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "s2g/s2g.h"

namespace {

struct Config {
  s2g_config* handle = nullptr;
  Config() { s2g_config_new(&handle); }
  ~Config() { s2g_config_free(handle); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
};

struct Report {
  s2g_report* handle = nullptr;
  ~Report() { s2g_report_free(handle); }
};

int report_error(s2g_status st) {
  std::fprintf(stderr, "s2g: %s: %s\n", s2g_status_name(st), s2g_last_error());
  return static_cast<int>(st);
}

void print_log(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

// flag values that were given on the command line, in CLI11 option order
struct Settings {
  std::optional<std::string> config_file;
  std::vector<std::string> overrides;  // key=value from --set
  std::vector<std::pair<std::string, std::string>> flags;

  s2g_status build(Config& cfg) const {
    if (config_file) {
      const auto st = s2g_config_load(cfg.handle, config_file->c_str());
      if (st != S2G_OK) return st;
    }
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::fprintf(stderr, "s2g: --set expects key=value, got '%s'\n", kv.c_str());
        return S2G_ERR_USAGE;
      }
      const auto st = s2g_config_set(cfg.handle, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
      if (st != S2G_OK) return st;
    }
    for (const auto& [k, v] : flags) {
      const auto st = s2g_config_set(cfg.handle, k.c_str(), v.c_str());
      if (st != S2G_OK) return st;
    }
    return S2G_OK;
  }
};

// Registers "--name" storing into settings under `key`.
void keyed(CLI::App* app, Settings& s, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&s, key](const std::string& v) { s.flags.emplace_back(key, v); }, help);
}

void common(CLI::App* app, Settings& s) {
  app->add_option_function<std::string>(
      "--config", [&s](const std::string& v) { s.config_file = v; }, "key=value settings file (flags override it)");
  app->add_option("--set", s.overrides, "extra key=value setting, repeatable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seq2grid: sequence-input grid-output networks for symbolic reasoning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(s2g_version()));

  Settings settings;
  std::string out, data, checkpoint, input;
  bool force = false;

  auto* gen = app.add_subcommand("generate", "write train / id_test / ood_test splits and dataset.meta");
  common(gen, settings);
  keyed(gen, settings, "--task", "task", "sequence | toy_addition | addsub | program | babi");
  keyed(gen, settings, "--split-ranges", "split_ranges", "e.g. 'train=1-3:4-5;id=1-3:4-5;ood=4:6-7'");
  keyed(gen, settings, "--seed", "seed", "generator seed");
  keyed(gen, settings, "--layout", "layout", "toy addition layout: sequential | aligned_grid");
  keyed(gen, settings, "--width", "width", "maximum target length");
  keyed(gen, settings, "--train-count", "train_count", "training examples (default 50000)");
  keyed(gen, settings, "--id-count", "id_count", "ID test examples (default 2000)");
  keyed(gen, settings, "--ood-count", "ood_count", "OOD test examples (default 2000)");
  keyed(gen, settings, "--babi-dir", "babi_dir", "directory with the qaN_*_train.txt / _test.txt files");
  keyed(gen, settings, "--babi-task", "babi_task", "single bAbI task 1..20 (0 = all)");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_flag("--force", force, "overwrite an existing output directory");

  auto* tr = app.add_subcommand("train", "train a model on a generated dataset");
  common(tr, settings);
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out, "run directory")->required();
  tr->add_flag("--force", force, "overwrite an existing run directory");
  keyed(tr, settings, "--task", "task", "must match the dataset");
  keyed(tr, settings, "--grid", "grid", "grid size HxW");
  keyed(tr, settings, "--hidden", "hidden", "GRU hidden size");
  keyed(tr, settings, "--layers", "layers", "GRU layers");
  keyed(tr, settings, "--steps", "steps", "total optimizer steps");
  keyed(tr, settings, "--batch", "batch", "batch size");
  keyed(tr, settings, "--lr", "lr", "base learning rate");
  keyed(tr, settings, "--schedule", "schedule", "constant | warmup_decay");
  keyed(tr, settings, "--seed", "seed", "run seed");
  keyed(tr, settings, "--seeds", "seeds", "number of runs with seeds seed, seed+1, ...");
  tr->add_flag_function("--resume", [&settings](std::int64_t) { settings.flags.emplace_back("resume", "1"); },
                        "continue from <out>/checkpoint.s2g");

  std::string eval_out;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--data", data, "dataset directory")->required();
  ev->add_option("--out", eval_out, "report file (default: eval_report.txt next to the checkpoint)");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  common(gc, settings);
  keyed(gc, settings, "--instances", "instances", "random instances per case (default 100)");
  keyed(gc, settings, "--seed", "seed", "suite seed");
  keyed(gc, settings, "--only", "only", "comma-separated case names");
  gc->add_flag_function("--faulty", [&settings](std::int64_t) { settings.flags.emplace_back("faulty", "1"); },
                        "add the negative-control case with a wrong backward");

  std::string vis_out = "grid";
  auto* vis = app.add_subcommand("visualize", "render the grid a checkpoint builds for one input");
  vis->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  vis->add_option("--input", input, "raw input line, e.g. '12 34 56$'")->required();
  vis->add_option("--out", vis_out, "output prefix for .txt, .ppm and .grid (default: grid)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return S2G_ERR_USAGE;
  }

  Config cfg;
  Report rep;
  s2g_status st = settings.build(cfg);
  if (st != S2G_OK) return report_error(st);

  if (gen->parsed()) {
    st = s2g_generate(cfg.handle, out.c_str(), force, &rep.handle);
  } else if (tr->parsed()) {
    s2g_set_log(print_log, nullptr);
    st = s2g_train(cfg.handle, data.c_str(), out.c_str(), force, &rep.handle);
  } else if (ev->parsed()) {
    if (eval_out.empty()) eval_out = (std::filesystem::path(checkpoint).parent_path() / "eval_report.txt").string();
    st = s2g_eval(checkpoint.c_str(), data.c_str(), eval_out.c_str(), &rep.handle);
  } else if (gc->parsed()) {
    st = s2g_gradcheck(cfg.handle, &rep.handle);
  } else if (vis->parsed()) {
    st = s2g_visualize(checkpoint.c_str(), input.c_str(), vis_out.empty() ? nullptr : vis_out.c_str(), &rep.handle);
  }
  if (rep.handle) std::cout << s2g_report_text(rep.handle) << std::flush;
  if (st != S2G_OK) return report_error(st);
  return 0;
}
