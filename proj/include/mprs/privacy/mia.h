#ifndef MPRS_PRIVACY_MIA_H_
#define MPRS_PRIVACY_MIA_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mprs/dataio/dataset.h"
#include "mprs/privacy/classifier.h"

namespace mprs {

struct MiaOptions {
  // Attack model on the full softmax vector instead of the scalar loss.
  bool softmax_mlp = false;
  std::size_t mlp_epochs = 200;
  double mlp_learning_rate = 1e-2;
  uint64_t seed = 0;
};

struct MiaSample {
  bool member = false;
  std::size_t index = 0;  // position in its own population
  double score = 0.0;     // attack probability of membership
  bool predicted_member = false;
};

struct MiaReport {
  double accuracy = 0.0;
  std::size_t members_used = 0;     // per population, after balancing
  std::size_t train_per_class = 0;  // attack-train samples per population
  std::size_t eval_per_class = 0;   // attack-eval samples per population
  std::vector<MiaSample> eval;      // attack-eval split, members first
};

// Loss-based attack. Per-sample features are the classifier's losses (or its
// softmax rows when options.softmax_mlp). The larger population is
// downsampled at random to the smaller one's size, each population is split
// in half into attack-train / attack-eval, and a logistic model is fitted on
// attack-train. Throws ContractError when a population has fewer than two
// samples.
MiaReport MiaAttack(const Classifier& classifier, const LabeledDataset& members,
                    const LabeledDataset& nonmembers, const MiaOptions& options);

// The same protocol on precomputed scalar losses.
MiaReport MiaAttackOnLosses(const std::vector<double>& member_losses,
                            const std::vector<double>& nonmember_losses,
                            const MiaOptions& options);

// Attack-eval members with a per-sample success flag: a member counts as
// vulnerable when its score exceeds the median score of the attack-eval
// non-members.
struct MemberOutcomes {
  std::vector<std::size_t> index;  // position in the member population
  std::vector<double> score;
  std::vector<bool> vulnerable;
};
MemberOutcomes VulnerableMembers(const MiaReport& report);

struct LogisticModel {
  double weight = 0.0;
  double bias = 0.0;
  double mean = 0.0;  // feature standardization
  double scale = 1.0;
  double Probability(double x) const;
};

// Newton iterations on the L2-regularized log-likelihood of a scalar
// feature; the small ridge keeps separable data finite.
LogisticModel FitLogistic(const std::vector<double>& x, const std::vector<int>& y,
                          double ridge = 1e-4);

}  // namespace mprs

#endif  // MPRS_PRIVACY_MIA_H_
