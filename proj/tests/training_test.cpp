#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "autodiff/ops.hpp"
#include "taskgen/dataset.hpp"
#include "taskgen/generators.hpp"
#include "taskgen/program.hpp"
#include "training/evaluate.hpp"
#include "training/optimizer.hpp"
#include "training/run_config.hpp"
#include "training/trainer.hpp"

using namespace s2g;
using namespace s2g::train;
using ad::Tensor;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / (std::string("s2g_training_") +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name() + "_" +
                                        std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig tiny_config() {
  RunConfig c = default_config(task::Task::ToyAddition);
  c.rows = 3;
  c.cols = 4;
  c.embed = 8;
  c.hidden = 12;
  c.layers = 1;
  c.channels = 8;
  c.bottleneck = 4;
  c.batch = 8;
  c.lr = 5e-3;
  c.steps = 20;
  c.eval_every = 10;
  c.checkpoint_every = 0;
  c.seed = 3;
  return c;
}

TrainData toy_data(std::size_t n, std::uint64_t seed) {
  ad::Rng rng(seed);
  std::vector<task::Example> tr, id, ood;
  for (std::size_t i = 0; i < n; ++i) tr.push_back(task::gen_toy_addition({2}, rng));
  for (int i = 0; i < 16; ++i) id.push_back(task::gen_toy_addition({2}, rng));
  for (int i = 0; i < 16; ++i) ood.push_back(task::gen_toy_addition({3}, rng));
  return make_train_data(task::Task::ToyAddition, tr, id, ood);
}

Session new_session(const RunConfig& c, const TrainData& d) { return Session(c, d.vocab, d.labels); }

}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
  ad::ParameterStore s;
  s.add("x", Tensor::from({3}, {1, -2, 3}, true));
  Adam adam(s, {});
  s.zero_grad();
  s.get("x").node()->grad_buffer();
  const auto before = s.checksum();
  adam.step(s, 0.1);
  EXPECT_EQ(s.checksum(), before);
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  ad::ParameterStore s;
  auto x = s.add("x", Tensor::from({3}, {1, -2, 3}, true));
  Adam adam(s, {});
  ad::sum(ad::mul(x, Tensor::from({3}, {0.5, -4.0, 1e-3}))).backward();
  adam.step(s, 0.01);
  // bias-corrected m/sqrt(v) = g/|g| at t = 1
  EXPECT_NEAR(x.data()[0], 1 - 0.01, 1e-9);
  EXPECT_NEAR(x.data()[1], -2 + 0.01, 1e-9);
  EXPECT_NEAR(x.data()[2], 3 - 0.01 * 1e-3 / (1e-3 + 1e-8), 1e-12);
}

TEST(Adam, MatchesReferenceRecurrence) {
  ad::ParameterStore s;
  auto x = s.add("x", Tensor::from({1}, {0.8}, true));
  Adam adam(s, {});
  double p = 0.8, m = 0, v = 0;
  for (int t = 1; t <= 25; ++t) {
    s.zero_grad();
    ad::sum(ad::mul(ad::mul(x, x), x)).backward();  // d/dx x^3
    const double g = 3 * p * p;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    p -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    adam.step(s, 0.05);
    ASSERT_NEAR(x.data()[0], p, 1e-13) << "t=" << t;
  }
  EXPECT_EQ(adam.steps(), 25u);
}

TEST(Adam, DescendsQuadratic) {
  ad::ParameterStore s;
  auto x = s.add("x", Tensor::from({2}, {3.0, -1.5}, true));
  Adam adam(s, {});
  for (int t = 0; t < 2000; ++t) {
    s.zero_grad();
    ad::sum(ad::mul(x, x)).backward();
    adam.step(s, 0.05);
  }
  EXPECT_LT(std::abs(x.data()[0]), 1e-2);
  EXPECT_LT(std::abs(x.data()[1]), 1e-2);
}

TEST(Adam, MissingGradientIsStateError) {
  ad::ParameterStore s;
  s.add("x", Tensor::from({1}, {1.0}, true));
  Adam adam(s, {});
  EXPECT_THROW(adam.step(s, 0.1), StateError);
}

TEST(Adam, StateSurvivesCheckpoint) {
  ad::ParameterStore s;
  auto x = s.add("x", Tensor::from({2}, {1.0, 2.0}, true));
  Adam a(s, {});
  for (int t = 0; t < 3; ++t) {
    s.zero_grad();
    ad::sum(ad::mul(x, x)).backward();
    a.step(s, 0.1);
  }
  ad::Checkpoint c;
  a.save(c, s);
  Adam b(s, {});
  b.load(c, s);
  EXPECT_EQ(b.steps(), 3u);
  EXPECT_EQ(b.first_moments(), a.first_moments());
  EXPECT_EQ(b.second_moments(), a.second_moments());
}

TEST(Schedule, ConstantAndWarmupDecay) {
  EXPECT_EQ(lr_schedule(1, Schedule::Constant, 1e-3), 1e-3);
  EXPECT_EQ(lr_schedule(99999, Schedule::Constant, 1e-3), 1e-3);
  EXPECT_DOUBLE_EQ(lr_schedule(4000, Schedule::WarmupDecay, 1e-3, 4000), 1e-3);
  EXPECT_DOUBLE_EQ(lr_schedule(2000, Schedule::WarmupDecay, 1e-3, 4000), 0.5e-3);
  EXPECT_DOUBLE_EQ(lr_schedule(16000, Schedule::WarmupDecay, 1e-3, 4000), 0.5e-3);
  double peak = 0;
  std::uint64_t at = 0;
  for (std::uint64_t s = 1; s <= 20000; ++s)
    if (const double lr = lr_schedule(s, Schedule::WarmupDecay, 1.0, 4000); lr > peak) {
      peak = lr;
      at = s;
    }
  EXPECT_EQ(at, 4000u);
  EXPECT_EQ(parse_schedule("warmup_decay"), Schedule::WarmupDecay);
  EXPECT_THROW(parse_schedule("cosine"), std::invalid_argument);
}

TEST(ClipGlobalNorm, ScalesToMaxNorm) {
  ad::ParameterStore s;
  auto a = s.add("a", Tensor::from({2}, {0, 0}, true));
  auto b = s.add("b", Tensor::from({1}, {0}, true));
  a.mutable_grad()[0] = 3;
  a.mutable_grad()[1] = 0;
  b.mutable_grad()[0] = 4;
  EXPECT_DOUBLE_EQ(clip_global_norm(s, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(a.grad()[0], 0.6);
  EXPECT_DOUBLE_EQ(b.grad()[0], 0.8);
  EXPECT_DOUBLE_EQ(clip_global_norm(s, 10.0), 1.0);
  EXPECT_DOUBLE_EQ(b.grad()[0], 0.8);
}

TEST(RunConfig, SerializeParseAndHash) {
  auto c = tiny_config();
  c.set("grid", "2x7");
  c.set("schedule", "warmup_decay");
  EXPECT_EQ(c.rows, 2u);
  EXPECT_EQ(c.cols, 7u);
  auto back = RunConfig::parse(c.serialize());
  EXPECT_EQ(back.serialize(), c.serialize());
  EXPECT_EQ(back.architecture_hash(), c.architecture_hash());
  auto d = c;
  d.set("lr", "0.5");
  d.set("steps", "7");
  EXPECT_EQ(d.architecture_hash(), c.architecture_hash());
  d.set("hidden", "13");
  EXPECT_NE(d.architecture_hash(), c.architecture_hash());
  EXPECT_THROW(c.set("nonsense", "1"), task::ConfigError);
  EXPECT_THROW(c.set("steps", "-3"), task::ConfigError);
  EXPECT_THROW(c.set("grid", "3by4"), task::ConfigError);
  EXPECT_EQ(parse_grid("3x25"), (std::pair<std::size_t, std::size_t>{3, 25}));
  EXPECT_EQ(default_config(task::Task::Babi).head, HeadKind::TextCnn);
  EXPECT_EQ(default_config(task::Task::Babi).rows, 4u);
  EXPECT_EQ(default_config(task::Task::Babi).cols, 8u);
  EXPECT_EQ(default_config(task::Task::AddSub).cols, 25u);
}

TEST(Session, BatchLossIsMeanOfInstanceLosses) {
  auto d = toy_data(16, 61);
  auto s = new_session(tiny_config(), d);
  ad::Rng rng(1);
  std::vector<task::Example> batch(d.train.begin(), d.train.begin() + 6);
  const double whole = s.loss(batch, false, rng).item();
  double sum = 0;
  for (const auto& ex : batch) sum += s.loss({ex}, false, rng).item();
  EXPECT_NEAR(whole, sum / 6.0, 1e-10);
}

TEST(Session, EvaluationHasNoSideEffects) {
  auto d = toy_data(16, 62);
  auto s = new_session(tiny_config(), d);
  const auto before = s.model().parameters().checksum();
  auto p1 = s.predict_sequences(d.id);
  auto r = s.evaluate(task::Task::ToyAddition, "id_test", d.id);
  auto p2 = s.predict_sequences(d.id);
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(s.model().parameters().checksum(), before);
  EXPECT_EQ(r.overall.count, d.id.size());
  for (const auto& p : p1) EXPECT_EQ(p.back(), "$");
}

TEST(Session, CheckpointRoundTripPreservesPredictions) {
  TempDir tmp;
  auto d = toy_data(16, 63);
  auto s = new_session(tiny_config(), d);
  s.set_step(11);
  s.save(tmp.path / "c.s2g");
  auto t = Session::load(tmp.path / "c.s2g");
  EXPECT_EQ(t.step(), 11u);
  EXPECT_EQ(t.vocab(), s.vocab());
  EXPECT_EQ(t.config().serialize(), s.config().serialize());
  EXPECT_EQ(t.model().parameters().checksum(), s.model().parameters().checksum());
  EXPECT_EQ(t.predict_sequences(d.ood), s.predict_sequences(d.ood));
}

TEST(Session, UnknownTokenIsTokenizationError) {
  auto d = toy_data(16, 64);
  auto s = new_session(tiny_config(), d);
  task::Example e;
  e.input = {"1", "?", "$"};
  EXPECT_THROW(s.encode_inputs({e}), TokenizationError);
}

TEST(TrainLoop, ZeroLearningRateLeavesParameters) {
  TempDir tmp;
  auto d = toy_data(32, 65);
  auto c = tiny_config();
  c.lr = 0.0;
  c.steps = 5;
  auto s = new_session(c, d);
  const auto before = s.model().parameters().checksum();
  train_loop(s, d, {tmp.path, nullptr, {}});
  EXPECT_EQ(s.model().parameters().checksum(), before);
  EXPECT_EQ(s.step(), 5u);
}

TEST(TrainLoop, OverfitsEightInstances) {
  TempDir tmp;
  auto d = toy_data(8, 66);
  auto c = tiny_config();
  c.rows = 3;
  c.cols = 4;
  c.embed = 16;
  c.hidden = 32;
  c.channels = 16;
  c.bottleneck = 8;
  c.lr = 1e-2;
  c.steps = 2000;
  c.eval_every = 100;
  double loss = 1e9;
  std::uint64_t at = 0;
  auto s = new_session(c, d);
  TrainOptions o{tmp.path, nullptr, [&](std::uint64_t step, const EvalReport&, const EvalReport*) {
                   ad::Rng rng(0);
                   loss = s.loss(d.train, false, rng).item();
                   at = step;
                   return loss < 0.01;
                 }};
  train_loop(s, d, o);
  EXPECT_LT(loss, 0.01) << "after " << at << " steps";
  EXPECT_LE(at, 2000u);
  auto pred = s.predict_sequences(d.train);
  for (std::size_t i = 0; i < d.train.size(); ++i) EXPECT_EQ(pred[i], d.train[i].target);
}

TEST(TrainLoop, DeterministicMetricLogs) {
  TempDir a, b;
  auto d = toy_data(64, 67);
  auto c = tiny_config();
  {
    auto s = new_session(c, d);
    train_loop(s, d, {a.path / "r", nullptr, {}});
  }
  {
    auto s = new_session(c, d);
    train_loop(s, d, {b.path / "r", nullptr, {}});
  }
  const auto la = slurp(a.path / "r" / kMetricsFile);
  EXPECT_FALSE(la.empty());
  EXPECT_EQ(la, slurp(b.path / "r" / kMetricsFile));
  EXPECT_EQ(slurp(a.path / "r" / kCheckpointFile), slurp(b.path / "r" / kCheckpointFile));
  // header plus one row per step
  EXPECT_EQ(std::count(la.begin(), la.end(), '\n'), 1 + 20);
  EXPECT_EQ(la.substr(0, la.find('\n')), "step\tlr\tloss\tid_acc\tood_acc");
}

TEST(TrainLoop, ZeroStepsWritesUntrainedCheckpoint) {
  TempDir tmp;
  auto d = toy_data(16, 68);
  auto c = tiny_config();
  c.steps = 0;
  auto s = new_session(c, d);
  const auto sum = s.model().parameters().checksum();
  auto r = train_loop(s, d, {tmp.path, nullptr, {}});
  EXPECT_EQ(r.steps, 0u);
  auto t = Session::load(tmp.path / kCheckpointFile);
  EXPECT_EQ(t.step(), 0u);
  EXPECT_EQ(t.model().parameters().checksum(), sum);
}

TEST(TrainLoop, ResumeContinuesStepCounter) {
  TempDir tmp;
  auto d = toy_data(32, 69);
  auto c = tiny_config();
  c.steps = 6;
  {
    auto s = new_session(c, d);
    train_loop(s, d, {tmp.path, nullptr, {}});
  }
  auto s = Session::load(tmp.path / kCheckpointFile);
  EXPECT_EQ(s.step(), 6u);
  s.mutable_config().steps = 10;
  auto r = train_loop(s, d, {tmp.path, nullptr, {}});
  EXPECT_EQ(r.steps, 10u);
  EXPECT_EQ(s.optimizer().steps(), 10u);
  const auto log = slurp(tmp.path / kMetricsFile);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 1 + 10);
  EXPECT_NE(log.find("\n10\t"), std::string::npos);

  // an uninterrupted 10-step run ends in the same state
  TempDir ref;
  auto c10 = c;
  c10.steps = 10;
  auto u = new_session(c10, d);
  train_loop(u, d, {ref.path, nullptr, {}});
  EXPECT_EQ(u.model().parameters().checksum(), s.model().parameters().checksum());
}

TEST(TrainLoop, VocabularyMismatchIsConfigError) {
  TempDir tmp;
  auto d = toy_data(16, 70);
  auto s = new_session(tiny_config(), d);
  auto other = d;
  other.vocab.add("z");
  EXPECT_THROW(train_loop(s, other, {tmp.path, nullptr, {}}), task::ConfigError);
}

TEST(TrainSeeds, SummaryOverRuns) {
  TempDir tmp;
  auto d = toy_data(32, 71);
  auto c = tiny_config();
  c.steps = 4;
  auto m = train_seeds(c, d, 2, {tmp.path, nullptr, {}});
  ASSERT_EQ(m.runs.size(), 2u);
  EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(m.id.values.size(), 2u);
  EXPECT_TRUE(fs::exists(tmp.path / "seed_3" / kCheckpointFile));
  EXPECT_TRUE(fs::exists(tmp.path / "seed_4" / kMetricsFile));
  EXPECT_TRUE(fs::exists(tmp.path / "summary.txt"));
  EXPECT_DOUBLE_EQ(m.id.best(), std::max(m.runs[0].id.accuracy(), m.runs[1].id.accuracy()));

  TempDir early;
  auto e = train_seeds(c, d, 3, {early.path, nullptr, {}}, [](const TrainResult&) { return true; });
  EXPECT_EQ(e.runs.size(), 1u);
}

TEST(SeedSummary, BestMeanSampleStd) {
  SeedSummary s{{0.5, 0.7, 0.9}};
  EXPECT_DOUBLE_EQ(s.best(), 0.9);
  EXPECT_DOUBLE_EQ(s.mean(), 0.7);
  EXPECT_NEAR(s.stddev(), 0.2, 1e-15);
  EXPECT_EQ(SeedSummary{{0.4}}.stddev(), 0.0);
}

TEST(EvalReport, PerfectPredictorAndProgramBuckets) {
  std::vector<task::Example> ex{
      task::program_from("j=891\nfor x in range(11):j-=878\nprint((368 if 821<874 else j))", {2, 3}),
      task::program_from("print((11*7288719))", {1, 7}), task::program_from("a=5\nprint(a)", {1, 1})};
  auto perfect = [](const std::vector<task::Example>& b) {
    std::vector<std::vector<std::string>> out;
    for (const auto& e : b) out.push_back(e.target);
    return out;
  };
  auto r = evaluate_sequences(task::Task::Program, "id_test", ex, perfect, 2);
  EXPECT_EQ(r.accuracy(), 1.0);
  EXPECT_EQ(r.overall.count, 3u);
  EXPECT_EQ(r.instructions.at("for").count, 1u);
  EXPECT_EQ(r.instructions.at("if-else").count, 1u);
  EXPECT_EQ(r.instructions.at("*").count, 1u);

  auto wrong_first = [](const std::vector<task::Example>& b) {
    std::vector<std::vector<std::string>> out;
    for (const auto& e : b) out.push_back(e.target);
    if (!out.empty() && b[0].target[0] == "3") out[0] = {"0", "$"};
    return out;
  };
  auto w = evaluate_sequences(task::Task::Program, "id_test", ex, wrong_first);
  EXPECT_NEAR(w.accuracy(), 2.0 / 3.0, 1e-15);
  // a snippet with both constructs counts in both buckets
  EXPECT_EQ(w.instructions.at("for").correct, 0u);
  EXPECT_EQ(w.instructions.at("if-else").correct, 0u);
  EXPECT_EQ(w.instructions.at("*").correct, 1u);
}

TEST(EvalReport, BabiFailedTaskThresholdIsStrict) {
  std::vector<task::Example> ex;
  for (int t = 1; t <= 20; ++t)
    for (int k = 0; k < 20; ++k) {
      task::Example e;
      e.input = {"<cls>", "q", "<sep>", std::to_string(t), std::to_string(k)};
      e.label = "yes";
      e.difficulty = {t};
      ex.push_back(e);
    }
  // task 1: exactly 5% error (not failed); task 2: 10% (failed)
  auto pred = [](const std::vector<task::Example>& b) {
    std::vector<std::string> out;
    for (const auto& e : b) {
      const int t = e.difficulty[0], k = std::stoi(e.input[4]);
      out.push_back((t == 1 && k < 1) || (t == 2 && k < 2) ? "no" : "yes");
    }
    return out;
  };
  auto r = evaluate_labels("id_test", ex, pred, 64);
  ASSERT_EQ(r.tasks.size(), 20u);
  EXPECT_NEAR(r.tasks.at(1).error(), 0.05, 1e-15);
  EXPECT_EQ(r.failed_tasks(), 1u);
  EXPECT_NE(r.format().find("failed tasks"), std::string::npos);
  EXPECT_NEAR(r.accuracy(), 397.0 / 400.0, 1e-15);
}

TEST(TrainData, LoadsGeneratedDirectory) {
  TempDir tmp;
  task::GenerateOptions o;
  o.task = task::Task::ToyAddition;
  o.ranges = task::default_ranges(o.task);
  task::DatasetMeta meta;
  meta.task = o.task;
  meta.ranges = o.ranges;
  for (auto s : {task::Split::Train, task::Split::IdTest, task::Split::OodTest})
    task::write_dataset(tmp.path / task::split_file(s), task::generate_split(o, s, 40), false);
  meta.train_count = meta.id_count = meta.ood_count = 40;
  task::write_meta(tmp.path, meta);
  auto d = load_dataset_dir(tmp.path);
  EXPECT_EQ(d.train.size(), 40u);
  EXPECT_EQ(d.ood.size(), 40u);
  EXPECT_EQ(d.vocab.token(0), "<pad>");
  EXPECT_THROW(load_dataset_dir(tmp.path / "nope"), task::ParseError);
}
