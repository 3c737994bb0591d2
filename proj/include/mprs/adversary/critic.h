#ifndef MPRS_ADVERSARY_CRITIC_H_
#define MPRS_ADVERSARY_CRITIC_H_

#include <cstddef>
#include <vector>

#include "mprs/netkit/mlp.h"
#include "mprs/rng.h"

namespace mprs {

struct CriticOptions {
  std::vector<std::size_t> hidden = {64, 64};
  double lambda_gp = 10.0;
  uint64_t seed = 0;
};

// Wasserstein critic: an MLP from flattened images to one score per row.
class Critic {
 public:
  Critic() = default;
  Critic(std::size_t data_dim, const CriticOptions& options);
  Critic(Mlp body, double lambda_gp);

  Tensor Score(const Tensor& x) const { return body_.Forward(x); }
  const Mlp& body() const { return body_; }
  double lambda_gp() const { return lambda_gp_; }
  ParamList Parameters() const { return body_.Parameters(); }

 private:
  Mlp body_;
  double lambda_gp_ = 10.0;
};

// mean((|grad D(u x_real + (1 - u) x_fake)| - 1)^2) with one u per pair
// (B x 1). Double-differentiable with respect to the critic parameters.
Tensor GradientPenalty(const Critic& critic, const Tensor& real, const Tensor& fake,
                       const Tensor& u);
Tensor GradientPenalty(const Critic& critic, const Tensor& real, const Tensor& fake, Rng& rng);

// E[D(fake)] - E[D(real)] + lambda_gp * GP. Throws TrainingError if the
// result is not finite.
Tensor LossD(const Critic& critic, const Tensor& real, const Tensor& fake, const Tensor& u);
Tensor LossD(const Critic& critic, const Tensor& real, const Tensor& fake, Rng& rng);

// -E[D(fake)].
Tensor LossG(const Critic& critic, const Tensor& fake);

}  // namespace mprs

#endif  // MPRS_ADVERSARY_CRITIC_H_
