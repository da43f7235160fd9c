#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autodiff/checkpoint.hpp"
#include "common/vocab.hpp"
#include "taskgen/dataset.hpp"
#include "training/evaluate.hpp"
#include "training/model.hpp"
#include "training/optimizer.hpp"
#include "training/run_config.hpp"

namespace s2g::train {

/// Dataset splits plus the vocabulary and label set derived from them.
struct TrainData {
  task::Task task = task::Task::ToyAddition;
  Vocabulary vocab;
  std::vector<std::string> labels;
  std::vector<task::Example> train, id, ood;
};

TrainData make_train_data(task::Task t, std::vector<task::Example> train, std::vector<task::Example> id,
                          std::vector<task::Example> ood);
/// Reads dataset.meta and the split files of a generated directory.
TrainData load_dataset_dir(const std::filesystem::path& dir);

/// Model, optimizer state, vocabulary and config of one run.
class Session {
 public:
  Session(RunConfig config, Vocabulary vocab, std::vector<std::string> labels);

  static Session load(const std::filesystem::path& checkpoint);
  static Session from_checkpoint(const ad::Checkpoint& ckpt);
  ad::Checkpoint to_checkpoint() const;
  void save(const std::filesystem::path& checkpoint) const;

  const RunConfig& config() const { return config_; }
  RunConfig& mutable_config() { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& labels() const { return labels_; }
  Seq2GridModel& model() { return *model_; }
  const Seq2GridModel& model() const { return *model_; }
  Adam& optimizer() { return *adam_; }
  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  /// Token ids for the model; throws TokenizationError on unknown tokens.
  std::vector<std::vector<int>> encode_inputs(const std::vector<task::Example>& batch) const;

  /// Mean cross-entropy of a batch.
  ad::Tensor loss(const std::vector<task::Example>& batch, bool training, ad::Rng& rng) const;

  std::vector<std::vector<std::string>> predict_sequences(const std::vector<task::Example>& batch) const;
  std::vector<std::string> predict_labels(const std::vector<task::Example>& batch) const;

  EvalReport evaluate(task::Task t, const std::string& split, const std::vector<task::Example>& examples) const;

 private:
  RunConfig config_;
  Vocabulary vocab_;
  std::vector<std::string> labels_;
  std::unique_ptr<Seq2GridModel> model_;
  std::unique_ptr<Adam> adam_;
  std::uint64_t step_ = 0;
};

struct TrainResult {
  std::uint64_t steps = 0;
  double final_loss = 0.0;
  EvalReport id, ood;
  bool has_ood = false;
  bool stopped_early = false;
  std::filesystem::path checkpoint;
};

/// Called after each in-training evaluation; returning true stops training.
using StopRule = std::function<bool(std::uint64_t step, const EvalReport& id, const EvalReport* ood)>;

struct TrainOptions {
  std::filesystem::path out_dir;
  std::ostream* progress = nullptr;
  StopRule stop;
};

inline constexpr const char* kCheckpointFile = "checkpoint.s2g";
inline constexpr const char* kMetricsFile = "metrics.tsv";
inline constexpr const char* kConfigFile = "config.txt";
inline constexpr const char* kReportFile = "report.txt";

/// Runs steps session.step()+1 .. config.steps. Writes the effective config,
/// the metrics log (appended when resuming), periodic checkpoints, and a
/// final report into options.out_dir. Throws ad::NumericError when the loss
/// stops being finite.
TrainResult train_loop(Session& session, const TrainData& data, const TrainOptions& options);

/// Final ID/OOD evaluation of a session on full splits.
TrainResult final_report(const Session& session, const TrainData& data);

/// Trains `seeds` runs with seeds config.seed, config.seed+1, ... into
/// out_dir/seed_<n>. `enough` (optional) ends the sweep early once a run
/// satisfies it. Writes out_dir/summary.txt.
struct MultiSeedResult {
  std::vector<std::uint64_t> seeds;
  std::vector<TrainResult> runs;
  SeedSummary id, ood;
  std::string format() const;
};
MultiSeedResult train_seeds(const RunConfig& base, const TrainData& data, std::size_t seeds, const TrainOptions& options,
                            const std::function<bool(const TrainResult&)>& enough = {});

}  // namespace s2g::train
