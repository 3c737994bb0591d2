#include "mprs/netkit/adam.h"

#include <cmath>
#include <utility>

#include "mprs/errors.h"

namespace mprs {

void AdamUpdate(std::span<double> param, std::span<const double> grad, std::span<double> m,
                std::span<double> v, uint64_t step, const AdamOptions& o) {
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.empty() ? 0.0 : grad[i];
    m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
    v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
  }
}

Adam::Adam(ParamList params, AdamOptions options) : options_(options) {
  for (auto& p : params) {
    const std::size_t n = p.value.size();
    slots_.push_back(Slot{std::move(p), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
  }
}

void Adam::Step(const Gradients& grads) {
  for (const auto& slot : slots_) {
    for (double g : grads.Raw(slot.param.value)) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient for parameter " + slot.param.name);
      }
    }
  }
  ++step_;
  for (auto& slot : slots_) {
    AdamUpdate(slot.param.value.MutableLeafData(), grads.Raw(slot.param.value), slot.m, slot.v,
               step_, options_);
  }
}

std::vector<double> Adam::ExportState() const {
  std::vector<double> out;
  out.push_back(static_cast<double>(step_));
  for (const auto& slot : slots_) {
    out.insert(out.end(), slot.m.begin(), slot.m.end());
    out.insert(out.end(), slot.v.begin(), slot.v.end());
  }
  return out;
}

void Adam::ImportState(std::span<const double> state) {
  std::size_t expected = 1;
  for (const auto& slot : slots_) expected += 2 * slot.m.size();
  if (state.size() != expected) {
    throw FormatError("optimizer state has " + std::to_string(state.size()) +
                      " values, expected " + std::to_string(expected));
  }
  step_ = static_cast<uint64_t>(state[0]);
  std::size_t pos = 1;
  for (auto& slot : slots_) {
    for (auto& x : slot.m) x = state[pos++];
    for (auto& x : slot.v) x = state[pos++];
  }
}

std::vector<std::vector<double>> SnapshotValues(const ParamList& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.value.ToVector());
  return out;
}

}  // namespace mprs
