#include "mprs/dataio/imbalance.h"

#include <algorithm>
#include <cmath>

#include "mprs/errors.h"
#include "mprs/rng.h"

namespace mprs {

LabeledDataset ImbalanceDownsample(const LabeledDataset& ds, const std::vector<int>& tail_classes,
                                   double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ContractError("imbalance fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  auto is_tail = [&](int label) {
    return std::find(tail_classes.begin(), tail_classes.end(), label) != tail_classes.end();
  };
  for (int c : tail_classes) {
    if (ds.CountLabel(c) == 0) {
      throw ContractError("tail class " + std::to_string(c) + " is absent from the dataset");
    }
  }
  std::size_t head = 0;
  for (int c : ds.Classes())
    if (!is_tail(c)) head = std::max(head, ds.CountLabel(c));
  if (head == 0) throw ContractError("imbalance downsampling needs at least one head class");
  const auto target = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(head)));

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!is_tail(ds.labels[i])) keep.push_back(i);
  std::vector<int> tails = tail_classes;
  std::sort(tails.begin(), tails.end());
  tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
  Rng rng(seed, "imbalance");
  for (int c : tails) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.labels[i] == c) members.push_back(i);
    rng.Shuffle(members);
    members.resize(std::min(members.size(), target));
    std::sort(members.begin(), members.end());
    keep.insert(keep.end(), members.begin(), members.end());
  }
  LabeledDataset out = ds.Subset(keep);
  out.notes.push_back("tail classes downsampled to " + std::to_string(target) + " per class");
  return out;
}

}  // namespace mprs
