#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vulngraph/error.hpp"
#include "vulngraph/records.hpp"
#include "vulngraph/rng.hpp"

namespace vulngraph {

struct SplitSizes {
  std::size_t populate, train, test;
};

// 50 : 30 : 20 with round-half-up on the first two parts; the test part takes the rest.
inline SplitSizes split_sizes(std::size_t n) {
  const auto populate = static_cast<std::size_t>(std::floor(0.5 * static_cast<double>(n) + 0.5));
  const auto train = static_cast<std::size_t>(std::floor(0.3 * static_cast<double>(n) + 0.5));
  return {populate, train, n - populate - train};
}

// Records are ordered by publication date, shuffled with the seed, then cut into parts.
// Each part is returned in chronological order.
inline DatasetSplit split_dataset(std::vector<CveRecord> records, std::uint64_t seed) {
  if (records.size() < 3) throw DataError("at least 3 records are required to split");
  std::sort(records.begin(), records.end(), published_before);
  Rng rng(seed);
  rng.shuffle(records);
  const SplitSizes sizes = split_sizes(records.size());

  DatasetSplit out;
  auto first = std::make_move_iterator(records.begin());
  out.populate.assign(first, first + sizes.populate);
  out.train.assign(first + sizes.populate, first + sizes.populate + sizes.train);
  out.test.assign(first + sizes.populate + sizes.train, std::make_move_iterator(records.end()));
  for (auto* part : {&out.populate, &out.train, &out.test})
    std::sort(part->begin(), part->end(), published_before);
  return out;
}

}  // namespace vulngraph
