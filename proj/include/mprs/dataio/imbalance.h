#ifndef MPRS_DATAIO_IMBALANCE_H_
#define MPRS_DATAIO_IMBALANCE_H_

#include <cstdint>
#include <vector>

#include "mprs/dataio/dataset.h"

namespace mprs {

// Samples each tail class without replacement down to
// ceil(fraction * head count), where the head count is the size of the
// largest non-tail class. Head-class images keep their relative order and
// come first; tail samples follow in class order. Throws ContractError for a
// fraction outside (0, 1], a missing tail class, or no head class.
LabeledDataset ImbalanceDownsample(const LabeledDataset& ds, const std::vector<int>& tail_classes,
                                   double fraction, uint64_t seed);

}  // namespace mprs

#endif  // MPRS_DATAIO_IMBALANCE_H_
