#include "mprs/privacy/mia.h"

#include <algorithm>
#include <cmath>

#include "mprs/diffcore/autodiff.h"
#include "mprs/errors.h"
#include "mprs/netkit/adam.h"

namespace mprs {
namespace {

struct Split {
  std::vector<std::size_t> member_train, member_eval, non_train, non_eval;
};

Split BalancedSplit(std::size_t n_members, std::size_t n_non, Rng& rng) {
  if (n_members < 2 || n_non < 2) {
    throw ContractError("membership attack needs at least two members and two non-members, got " +
                        std::to_string(n_members) + " and " + std::to_string(n_non));
  }
  const std::size_t n = std::min(n_members, n_non);
  std::vector<std::size_t> m = rng.Permutation(n_members);
  std::vector<std::size_t> o = rng.Permutation(n_non);
  m.resize(n);
  o.resize(n);
  const std::size_t train = n / 2;
  const std::size_t eval = n - train;
  Split s;
  s.member_train.assign(m.begin(), m.begin() + train);
  s.member_eval.assign(m.begin() + train, m.begin() + train + eval);
  s.non_train.assign(o.begin(), o.begin() + train);
  s.non_eval.assign(o.begin() + train, o.begin() + train + eval);
  return s;
}

double Sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

MiaReport Finish(const Split& s, const std::vector<double>& member_scores,
                 const std::vector<double>& non_scores, std::size_t n) {
  MiaReport r;
  r.members_used = n;
  r.train_per_class = s.member_train.size();
  r.eval_per_class = s.member_eval.size();
  std::size_t hits = 0;
  for (int member = 1; member >= 0; --member) {
    const auto& idx = member ? s.member_eval : s.non_eval;
    const auto& scores = member ? member_scores : non_scores;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      MiaSample e;
      e.member = member == 1;
      e.index = idx[k];
      e.score = scores[k];
      e.predicted_member = e.score > 0.5;
      hits += e.predicted_member == e.member;
      r.eval.push_back(e);
    }
  }
  r.accuracy = r.eval.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(r.eval.size());
  return r;
}

}  // namespace

double LogisticModel::Probability(double x) const {
  return Sigmoid(weight * (x - mean) / scale + bias);
}

LogisticModel FitLogistic(const std::vector<double>& x, const std::vector<int>& y, double ridge) {
  LogisticModel m;
  const std::size_t n = x.size();
  if (n == 0) return m;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  m.mean = mean;
  m.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  double w = 0.0, b = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    // Gradient and Hessian of the mean negative log-likelihood plus ridge.
    double gw = ridge * w, gb = 0.0, hww = ridge, hwb = 0.0, hbb = 1e-12;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (x[i] - mean) / m.scale;
      const double p = Sigmoid(w * t + b);
      const double r = (p - y[i]) / static_cast<double>(n);
      const double s = p * (1.0 - p) / static_cast<double>(n);
      gw += r * t;
      gb += r;
      hww += s * t * t;
      hwb += s * t;
      hbb += s;
    }
    const double det = hww * hbb - hwb * hwb;
    if (!(det > 0.0)) break;
    const double dw = (hbb * gw - hwb * gb) / det;
    const double db = (hww * gb - hwb * gw) / det;
    w -= dw;
    b -= db;
    if (std::abs(dw) + std::abs(db) < 1e-12) break;
  }
  m.weight = w;
  m.bias = b;
  return m;
}

MiaReport MiaAttackOnLosses(const std::vector<double>& member_losses,
                            const std::vector<double>& nonmember_losses,
                            const MiaOptions& options) {
  Rng rng(options.seed, "mia.split");
  Split s = BalancedSplit(member_losses.size(), nonmember_losses.size(), rng);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i : s.member_train) {
    x.push_back(member_losses[i]);
    y.push_back(1);
  }
  for (std::size_t i : s.non_train) {
    x.push_back(nonmember_losses[i]);
    y.push_back(0);
  }
  LogisticModel model = FitLogistic(x, y);
  std::vector<double> ms, ns;
  for (std::size_t i : s.member_eval) ms.push_back(model.Probability(member_losses[i]));
  for (std::size_t i : s.non_eval) ns.push_back(model.Probability(nonmember_losses[i]));
  return Finish(s, ms, ns, s.member_train.size() + s.member_eval.size());
}

MiaReport MiaAttack(const Classifier& classifier, const LabeledDataset& members,
                    const LabeledDataset& nonmembers, const MiaOptions& options) {
  if (members.size() == 0 || nonmembers.size() == 0) {
    throw ContractError("membership attack needs nonempty member and non-member sets");
  }
  if (!options.softmax_mlp) {
    return MiaAttackOnLosses(classifier.Losses(members), classifier.Losses(nonmembers), options);
  }
  Rng rng(options.seed, "mia.split");
  Split s = BalancedSplit(members.size(), nonmembers.size(), rng);
  Tensor pm = classifier.Probabilities(members.Images());
  Tensor pn = classifier.Probabilities(nonmembers.Images());
  auto rows = [](const Tensor& p, const std::vector<std::size_t>& idx) {
    std::vector<Tensor> out;
    for (std::size_t i : idx) out.push_back(SliceRows(p, i, i + 1));
    return ConcatRows(out);
  };
  // Sorted probabilities make the attack label-agnostic.
  auto sorted = [](Tensor t) {
    std::vector<double> v = t.ToVector();
    for (std::size_t r = 0; r < t.rows(); ++r)
      std::sort(v.begin() + r * t.cols(), v.begin() + (r + 1) * t.cols(), std::greater<>());
    return Tensor(t.rows(), t.cols(), std::move(v));
  };
  Tensor x = sorted(ConcatRows({rows(pm, s.member_train), rows(pn, s.non_train)}));
  const std::size_t half = s.member_train.size();
  std::vector<double> sign(2 * half);
  for (std::size_t i = 0; i < sign.size(); ++i) sign[i] = i < half ? -1.0 : 1.0;
  Tensor signs(2 * half, 1, std::move(sign));
  Rng init(options.seed, "mia.mlp");
  Mlp attack("attack", {x.cols(), 16, 1}, {Activation::kTanh, Activation::kIdentity}, init);
  AdamOptions ao;
  ao.learning_rate = options.mlp_learning_rate;
  Adam opt(attack.Parameters(), ao);
  for (std::size_t epoch = 0; epoch < options.mlp_epochs; ++epoch) {
    // Binary cross-entropy: softplus(-s) for members, softplus(s) otherwise.
    Tensor loss = Mean(Softplus(Mul(attack.Forward(x), signs)));
    opt.Step(Backward(loss));
  }
  NoGradGuard no_grad;
  auto score = [&](const Tensor& p) {
    const Tensor logits = attack.Forward(sorted(p));
    std::vector<double> out;
    for (double v : logits.data()) out.push_back(Sigmoid(v));
    return out;
  };
  return Finish(s, score(rows(pm, s.member_eval)), score(rows(pn, s.non_eval)),
                s.member_train.size() + s.member_eval.size());
}

MemberOutcomes VulnerableMembers(const MiaReport& report) {
  std::vector<double> non;
  for (const MiaSample& s : report.eval)
    if (!s.member) non.push_back(s.score);
  if (non.empty()) throw ContractError("vulnerability needs attack-eval non-members");
  std::sort(non.begin(), non.end());
  const std::size_t h = non.size() / 2;
  const double median = non.size() % 2 ? non[h] : 0.5 * (non[h - 1] + non[h]);
  MemberOutcomes out;
  for (const MiaSample& s : report.eval) {
    if (!s.member) continue;
    out.index.push_back(s.index);
    out.score.push_back(s.score);
    out.vulnerable.push_back(s.score > median);
  }
  return out;
}

}  // namespace mprs
