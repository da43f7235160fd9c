#pragma once

#include <cstdint>

#include "taskgen/task.hpp"

namespace s2g::task {

/// One in ten hash values marks the ID-test band.
inline constexpr std::uint64_t kIdBandModulus = 10;

std::uint64_t input_hash(const Example& ex);

/// OOD-range instances go to ood_test. Everything else is split by the
/// FNV-1a hash of the input: the ID band goes to id_test (if inside the ID
/// ranges), the rest to train (if inside the training ranges). Anything
/// left over is discarded.
Split hash_split(const Example& ex, const SplitRanges& ranges);

}  // namespace s2g::task
