#include "training/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "autodiff/ops.hpp"
#include "decoders/readout.hpp"

namespace s2g::train {

namespace fs = std::filesystem;
using ad::Tensor;

TrainData make_train_data(task::Task t, std::vector<task::Example> train, std::vector<task::Example> id,
                          std::vector<task::Example> ood) {
  if (train.empty()) throw task::ConfigError("training split is empty");
  TrainData d;
  d.task = t;
  std::vector<task::Example> all;
  all.reserve(train.size() + id.size() + ood.size());
  for (const auto* split : {&train, &id, &ood}) all.insert(all.end(), split->begin(), split->end());
  d.vocab = task::build_vocab(all);
  if (!task::is_sequence_task(t)) d.labels = task::build_labels(all);
  d.train = std::move(train);
  d.id = std::move(id);
  d.ood = std::move(ood);
  return d;
}

TrainData load_dataset_dir(const fs::path& dir) {
  const auto meta = task::read_meta(dir);
  const bool cls = !task::is_sequence_task(meta.task);
  auto read = [&](task::Split s) {
    const fs::path p = dir / task::split_file(s);
    return fs::exists(p) ? task::read_dataset(p, cls) : std::vector<task::Example>{};
  };
  return make_train_data(meta.task, read(task::Split::Train), read(task::Split::IdTest), read(task::Split::OodTest));
}

Session::Session(RunConfig config, Vocabulary vocab, std::vector<std::string> labels)
    : config_(std::move(config)), vocab_(std::move(vocab)), labels_(std::move(labels)) {
  config_.validate();
  if (config_.head == HeadKind::TextCnn && labels_.empty()) throw task::ConfigError("classification needs at least one label");
  model_ = std::make_unique<Seq2GridModel>(config_.model_spec(vocab_.size(), labels_.size()), config_.seed);
  adam_ = std::make_unique<Adam>(model_->parameters(), AdamConfig{config_.lr, 0.9, 0.999, 1e-8});
}

namespace {

constexpr const char* kConfigSection = "@@config";
constexpr const char* kVocabSection = "@@vocab";
constexpr const char* kLabelsSection = "@@labels";

}  // namespace

ad::Checkpoint Session::to_checkpoint() const {
  ad::Checkpoint ckpt;
  ckpt.config_hash = config_.architecture_hash();
  ckpt.step = step_;
  std::string labels;
  for (const auto& l : labels_) labels += escape_token(l) + "\n";
  ckpt.metadata = std::string(kConfigSection) + "\n" + config_.serialize() + kVocabSection + "\n" + vocab_.serialize() +
                  kLabelsSection + "\n" + labels;
  model_->parameters().save(ckpt);
  adam_->save(ckpt, model_->parameters());
  return ckpt;
}

Session Session::from_checkpoint(const ad::Checkpoint& ckpt) {
  std::istringstream in(ckpt.metadata);
  std::string line, section, config_text, vocab_text;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    if (line == kConfigSection || line == kVocabSection || line == kLabelsSection) {
      section = line;
      continue;
    }
    if (section == kConfigSection) config_text += line + "\n";
    else if (section == kVocabSection) vocab_text += line + "\n";
    else if (section == kLabelsSection && !line.empty()) labels.push_back(unescape_token(line));
    else throw ad::CheckpointError("checkpoint metadata: text outside a section");
  }
  if (config_text.empty() || vocab_text.empty()) throw ad::CheckpointError("checkpoint metadata: missing config or vocabulary");
  RunConfig config = RunConfig::parse(config_text);
  if (config.architecture_hash() != ckpt.config_hash) throw ad::CheckpointError("checkpoint: config hash does not match its metadata");
  Session s(config, Vocabulary::parse(vocab_text), std::move(labels));
  s.model_->parameters().load(ckpt);
  if (ckpt.find("adam.steps")) s.adam_->load(ckpt, s.model_->parameters());
  s.step_ = ckpt.step;
  return s;
}

Session Session::load(const fs::path& checkpoint) { return from_checkpoint(ad::read_checkpoint(checkpoint)); }

void Session::save(const fs::path& checkpoint) const {
  const fs::path tmp = checkpoint.string() + ".tmp";
  ad::write_checkpoint(tmp, to_checkpoint());
  fs::rename(tmp, checkpoint);
}

std::vector<std::vector<int>> Session::encode_inputs(const std::vector<task::Example>& batch) const {
  std::vector<std::vector<int>> ids;
  ids.reserve(batch.size());
  for (const auto& ex : batch) ids.push_back(vocab_.encode(ex.input));
  return ids;
}

namespace {

std::vector<int> label_ids(const std::vector<task::Example>& batch, const std::vector<std::string>& labels) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index.emplace(labels[i], static_cast<int>(i));
  std::vector<int> out;
  for (const auto& ex : batch) {
    auto it = index.find(ex.label);
    if (it == index.end()) throw TokenizationError("label '" + ex.label + "' is not in the label set");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

Tensor Session::loss(const std::vector<task::Example>& batch, bool training, ad::Rng& rng) const {
  const auto ids = encode_inputs(batch);
  if (config_.head == HeadKind::Cnn) {
    std::vector<int> targets;
    targets.reserve(batch.size() * config_.cols);
    for (const auto& ex : batch) {
      const auto t = dec::prepare_target(ex.target, config_.cols, vocab_);
      targets.insert(targets.end(), t.begin(), t.end());
    }
    const Tensor logits = model_->sequence_logits(ids);
    return ad::cross_entropy(ad::reshape(logits, {batch.size() * config_.cols, vocab_.size()}), targets);
  }
  const Tensor logits = model_->class_logits(ids, training, rng);
  return ad::cross_entropy(logits, label_ids(batch, labels_));
}

std::vector<std::vector<std::string>> Session::predict_sequences(const std::vector<task::Example>& batch) const {
  ad::NoGradGuard guard;
  const Tensor logits = model_->sequence_logits(encode_inputs(batch));
  const std::size_t w = config_.cols, v = vocab_.size();
  std::vector<std::vector<std::string>> out;
  out.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto cols = dec::column_argmax(logits.data().subspan(b * w * v, w * v), w, v);
    out.push_back(dec::decode_readout_ids(cols, vocab_));
  }
  return out;
}

std::vector<std::string> Session::predict_labels(const std::vector<task::Example>& batch) const {
  ad::NoGradGuard guard;
  ad::Rng unused(0);
  const Tensor logits = model_->class_logits(encode_inputs(batch), false, unused);
  const std::size_t n = labels_.size();
  std::vector<std::string> out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto ids = dec::column_argmax(logits.data().subspan(b * n, n), 1, n);
    out.push_back(labels_[static_cast<std::size_t>(ids[0])]);
  }
  return out;
}

EvalReport Session::evaluate(task::Task t, const std::string& split, const std::vector<task::Example>& examples) const {
  if (config_.head == HeadKind::Cnn) {
    return evaluate_sequences(t, split, examples, [this](const auto& b) { return predict_sequences(b); });
  }
  return evaluate_labels(split, examples, [this](const auto& b) { return predict_labels(b); });
}

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<task::Example> head_of(const std::vector<task::Example>& xs, std::size_t limit) {
  if (limit == 0 || limit >= xs.size()) return xs;
  return {xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(limit)};
}

// Deterministic epoch permutations, so a resumed run sees the same batches.
class BatchOrder {
 public:
  BatchOrder(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

  std::size_t at(std::uint64_t k) {
    const std::uint64_t epoch = k / n_;
    if (epoch != epoch_ || perm_.empty()) {
      perm_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
      ad::Rng rng = ad::Rng::derive(seed_, 0x5348554646ULL + epoch);
      for (std::size_t i = n_ - 1; i > 0; --i) {
        std::swap(perm_[i], perm_[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
      }
      epoch_ = epoch;
    }
    return perm_[k % n_];
  }

 private:
  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> perm_;
};

}  // namespace

TrainResult final_report(const Session& session, const TrainData& data) {
  TrainResult r;
  r.steps = session.step();
  r.id = session.evaluate(data.task, "id_test", data.id);
  r.has_ood = !data.ood.empty();
  if (r.has_ood) r.ood = session.evaluate(data.task, "ood_test", data.ood);
  return r;
}

TrainResult train_loop(Session& session, const TrainData& data, const TrainOptions& options) {
  const RunConfig& cfg = session.config();
  if (data.train.empty()) throw task::ConfigError("training split is empty");
  if (!(session.vocab() == data.vocab)) throw task::ConfigError("dataset vocabulary does not match the checkpoint");
  fs::create_directories(options.out_dir);
  {
    std::ofstream c(options.out_dir / kConfigFile);
    c << cfg.serialize();
  }
  const bool resuming = session.step() > 0;
  std::ofstream log(options.out_dir / kMetricsFile, resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (options.out_dir / kMetricsFile).string());
  if (!resuming) log << "step\tlr\tloss\tid_acc\tood_acc\n";

  const fs::path ckpt_path = options.out_dir / kCheckpointFile;
  const auto id_probe = head_of(data.id, cfg.eval_limit);
  const auto ood_probe = head_of(data.ood, cfg.eval_limit);
  BatchOrder order(data.train.size(), cfg.seed);
  auto& params = session.model().parameters();

  TrainResult result;
  double last_loss = std::nan("");
  for (std::uint64_t step = session.step() + 1; step <= cfg.steps; ++step) {
    std::vector<task::Example> batch;
    batch.reserve(cfg.batch);
    for (std::size_t j = 0; j < cfg.batch; ++j) batch.push_back(data.train[order.at((step - 1) * cfg.batch + j)]);
    const double lr = lr_schedule(step, cfg.schedule, cfg.lr, cfg.warmup);
    ad::Rng dropout_rng = ad::Rng::derive(cfg.seed, 0x44524f50ULL + step);

    params.zero_grad();
    const Tensor loss = session.loss(batch, true, dropout_rng);
    last_loss = loss.item();
    if (!std::isfinite(last_loss)) {
      throw ad::NumericError("training diverged at step " + std::to_string(step) + ": loss is " + fmt_g(last_loss));
    }
    loss.backward();
    if (cfg.clip > 0.0) clip_global_norm(params, cfg.clip);
    session.optimizer().step(params, lr);
    session.set_step(step);

    log << step << '\t' << fmt_g(lr) << '\t' << fmt_g(last_loss);
    const bool eval_now = (cfg.eval_every && step % cfg.eval_every == 0) || step == cfg.steps;
    bool stop = false;
    if (eval_now) {
      const EvalReport id = session.evaluate(data.task, "id_test", id_probe);
      EvalReport ood;
      if (!ood_probe.empty()) ood = session.evaluate(data.task, "ood_test", ood_probe);
      log << '\t' << fmt_g(id.accuracy()) << '\t' << (ood_probe.empty() ? "-" : fmt_g(ood.accuracy())) << '\n';
      if (options.progress) {
        char buf[200];
        char ood_buf[32] = "-";
        if (!ood_probe.empty()) std::snprintf(ood_buf, sizeof ood_buf, "%.4f", ood.accuracy());
        std::snprintf(buf, sizeof buf, "step %llu  lr %.3g  loss %.4f  id %.4f  ood %s\n",
                      static_cast<unsigned long long>(step), lr, last_loss, id.accuracy(), ood_buf);
        *options.progress << buf << std::flush;
      }
      if (options.stop) stop = options.stop(step, id, ood_probe.empty() ? nullptr : &ood);
    } else {
      log << "\t-\t-\n";
    }
    log.flush();
    if ((cfg.checkpoint_every && step % cfg.checkpoint_every == 0) || step == cfg.steps || stop) session.save(ckpt_path);
    if (stop) {
      result.stopped_early = true;
      break;
    }
  }
  if (session.step() == 0 || !fs::exists(ckpt_path)) session.save(ckpt_path);

  TrainResult fin = final_report(session, data);
  fin.final_loss = last_loss;
  fin.stopped_early = result.stopped_early;
  fin.checkpoint = ckpt_path;
  std::ofstream rep(options.out_dir / kReportFile);
  rep << "step " << fin.steps << '\n' << fin.id.format();
  if (fin.has_ood) rep << fin.ood.format();
  return fin;
}

std::string MultiSeedResult::format() const {
  std::ostringstream out;
  char buf[200];
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "seed %llu  steps %llu  id %.4f  ood %s\n", static_cast<unsigned long long>(seeds[i]),
                  static_cast<unsigned long long>(runs[i].steps), runs[i].id.accuracy(),
                  runs[i].has_ood ? std::to_string(runs[i].ood.accuracy()).c_str() : "-");
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "id   best %.4f  mean %.4f +- %.4f\n", id.best(), id.mean(), id.stddev());
  out << buf;
  if (!ood.values.empty()) {
    std::snprintf(buf, sizeof buf, "ood  best %.4f  mean %.4f +- %.4f\n", ood.best(), ood.mean(), ood.stddev());
    out << buf;
  }
  return out.str();
}

MultiSeedResult train_seeds(const RunConfig& base, const TrainData& data, std::size_t seeds, const TrainOptions& options,
                            const std::function<bool(const TrainResult&)>& enough) {
  if (seeds == 0) throw task::ConfigError("--seeds must be at least 1");
  MultiSeedResult out;
  for (std::size_t i = 0; i < seeds; ++i) {
    RunConfig cfg = base;
    cfg.seed = base.seed + i;
    Session session(cfg, data.vocab, data.labels);
    TrainOptions opt = options;
    opt.out_dir = options.out_dir / ("seed_" + std::to_string(cfg.seed));
    if (options.progress) *options.progress << "== seed " << cfg.seed << '\n';
    TrainResult r = train_loop(session, data, opt);
    out.seeds.push_back(cfg.seed);
    out.id.values.push_back(r.id.accuracy());
    if (r.has_ood) out.ood.values.push_back(r.ood.accuracy());
    out.runs.push_back(std::move(r));
    if (enough && enough(out.runs.back())) break;
  }
  fs::create_directories(options.out_dir);
  std::ofstream(options.out_dir / "summary.txt") << out.format();
  return out;
}

}  // namespace s2g::train
