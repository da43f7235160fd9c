#include "taskgen/split.hpp"

#include "common/fnv.hpp"

namespace s2g::task {

std::uint64_t input_hash(const Example& ex) { return fnv1a64(canonical_input(ex)); }

Split hash_split(const Example& ex, const SplitRanges& ranges) {
  if (contains(ranges.ood, ex.difficulty)) return Split::OodTest;
  const bool id_band = input_hash(ex) % kIdBandModulus == 0;
  if (id_band) return contains(ranges.id, ex.difficulty) ? Split::IdTest : Split::Discard;
  return contains(ranges.train, ex.difficulty) ? Split::Train : Split::Discard;
}

}  // namespace s2g::task
