#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "common/vocab.hpp"
#include "taskgen/generators.hpp"
#include "taskgen/task.hpp"

namespace s2g::task {

struct GenerateOptions {
  Task task = Task::ToyAddition;
  SplitRanges ranges;
  std::uint64_t seed = 1;
  ToyLayout layout = ToyLayout::Sequential;
  std::size_t width = 25;  // max target length without "$"
};

/// Draws `count` instances that hash_split assigns to `split`. Each split
/// uses its own child stream of `seed`.
std::vector<Example> generate_split(const GenerateOptions& opts, Split split, std::size_t count);

/// One example per line: input tokens, a tab, target tokens (or the label),
/// a tab, and the comma-separated difficulty. Tokens are space-separated
/// and escaped.
void write_dataset(const std::filesystem::path& path, const std::vector<Example>& examples, bool classification);
std::vector<Example> read_dataset(const std::filesystem::path& path, bool classification);

/// Sidecar "key=value" file describing a generated dataset directory.
struct DatasetMeta {
  Task task = Task::ToyAddition;
  SplitRanges ranges;
  std::uint64_t seed = 0;
  ToyLayout layout = ToyLayout::Sequential;
  std::size_t width = 25;
  std::size_t train_count = 0, id_count = 0, ood_count = 0;

  std::string serialize() const;
  static DatasetMeta parse(const std::string& text);
};

inline constexpr const char* kMetaFile = "dataset.meta";
std::string split_file(Split s);

void write_meta(const std::filesystem::path& dir, const DatasetMeta& meta);
DatasetMeta read_meta(const std::filesystem::path& dir);

/// Reserved tokens, then input and target tokens in order of first
/// appearance.
Vocabulary build_vocab(const std::vector<Example>& examples);
/// Distinct classification labels in order of first appearance.
std::vector<std::string> build_labels(const std::vector<Example>& examples);

/// bAbI question answering files (qaN_*_train.txt / qaN_*_test.txt). Each
/// question becomes <cls> question <sep> story-so-far with a word label.
/// `task` 0 loads all twenty tasks.
std::vector<Example> load_babi(const std::filesystem::path& dir, const std::string& split, int task = 0);
std::vector<std::string> babi_words(const std::string& text);

}  // namespace s2g::task
