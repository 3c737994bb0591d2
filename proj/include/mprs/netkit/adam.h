#ifndef MPRS_NETKIT_ADAM_H_
#define MPRS_NETKIT_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "mprs/diffcore/autodiff.h"
#include "mprs/netkit/mlp.h"

namespace mprs {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update on raw buffers. `step` is the 1-based step
// index after increment.
void AdamUpdate(std::span<double> param, std::span<const double> grad, std::span<double> m,
                std::span<double> v, uint64_t step, const AdamOptions& options);

class Adam {
 public:
  struct Slot {
    NamedParam param;
    std::vector<double> m;
    std::vector<double> v;
  };

  Adam() = default;
  Adam(ParamList params, AdamOptions options);

  // Updates every managed parameter in place. Parameters absent from `grads`
  // see a zero gradient. Throws TrainingError naming the first parameter with
  // a non-finite gradient, before anything is modified.
  void Step(const Gradients& grads);

  uint64_t step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  const std::vector<Slot>& slots() const { return slots_; }

  // Moment buffers and step count, for checkpoints.
  std::vector<double> ExportState() const;
  void ImportState(std::span<const double> state);

 private:
  AdamOptions options_;
  uint64_t step_ = 0;
  std::vector<Slot> slots_;
};

// Deep copies of parameter values, for byte-level comparisons.
std::vector<std::vector<double>> SnapshotValues(const ParamList& params);

}  // namespace mprs

#endif  // MPRS_NETKIT_ADAM_H_
