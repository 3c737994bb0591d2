#include "mprs/adversary/critic.h"

#include <cmath>

#include "mprs/errors.h"

namespace mprs {

Critic::Critic(std::size_t data_dim, const CriticOptions& options) : lambda_gp_(options.lambda_gp) {
  Rng rng(options.seed, "critic.init");
  std::vector<std::size_t> widths{data_dim};
  widths.insert(widths.end(), options.hidden.begin(), options.hidden.end());
  widths.push_back(1);
  std::vector<Activation> acts(options.hidden.size(), Activation::kTanh);
  acts.push_back(Activation::kIdentity);
  body_ = Mlp("critic", widths, acts, rng);
}

Critic::Critic(Mlp body, double lambda_gp) : body_(std::move(body)), lambda_gp_(lambda_gp) {
  if (body_.out_dim() != 1) throw ContractError("critic must produce one score per sample");
}

Tensor GradientPenalty(const Critic& critic, const Tensor& real, const Tensor& fake,
                       const Tensor& u) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols()) {
    throw DimensionError("gradient penalty: real " + real.ShapeString() + " vs fake " +
                         fake.ShapeString());
  }
  if (u.rows() != real.rows() || u.cols() != 1) {
    throw DimensionError("gradient penalty: mixing weights must be B x 1");
  }
  Tensor mixed = Add(Mul(real, u), Mul(fake, AddScalar(Neg(u), 1.0)));
  Tensor grad = critic.body().InputGradient(mixed);
  Tensor norm = Sqrt(SumCols(Square(grad)));
  return Mean(Square(AddScalar(norm, -1.0)));
}

Tensor GradientPenalty(const Critic& critic, const Tensor& real, const Tensor& fake, Rng& rng) {
  std::vector<double> u(real.rows());
  for (double& x : u) x = rng.Uniform();
  return GradientPenalty(critic, real, fake, Tensor(real.rows(), 1, std::move(u)));
}

Tensor LossD(const Critic& critic, const Tensor& real, const Tensor& fake, const Tensor& u) {
  Tensor loss = Add(Sub(Mean(critic.Score(fake)), Mean(critic.Score(real))),
                    Scale(GradientPenalty(critic, real, fake, u), critic.lambda_gp()));
  if (!std::isfinite(loss.item())) throw TrainingError("critic loss is not finite");
  return loss;
}

Tensor LossD(const Critic& critic, const Tensor& real, const Tensor& fake, Rng& rng) {
  std::vector<double> u(real.rows());
  for (double& x : u) x = rng.Uniform();
  return LossD(critic, real, fake, Tensor(real.rows(), 1, std::move(u)));
}

Tensor LossG(const Critic& critic, const Tensor& fake) { return Neg(Mean(critic.Score(fake))); }

}  // namespace mprs
