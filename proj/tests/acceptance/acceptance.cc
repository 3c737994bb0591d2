// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 125).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mprs/adversary/critic.h"
#include "mprs/baselines/baselines.h"
#include "mprs/cli/run_config.h"
#include "mprs/cli/verbs.h"
#include "mprs/dataio/manifest.h"
#include "mprs/dataio/synth.h"
#include "mprs/diffcore/autodiff.h"
#include "mprs/errors.h"
#include "mprs/geometry/decoder.h"
#include "mprs/geometry/geodesic.h"
#include "mprs/geometry/metric.h"
#include "mprs/obfuscator/obfuscator.h"
#include "mprs/privacy/classifier.h"
#include "mprs/privacy/metrics.h"
#include "mprs/rvae/rvae.h"

namespace mprs {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

Tensor Uniform(std::size_t rows, std::size_t cols, Rng& rng, double lo, double hi) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.Uniform(lo, hi);
  return Tensor(rows, cols, std::move(v));
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<double> LoadF64(const std::string& name) {
  const std::string bytes = Slurp(fs::path(MPRS_TEST_DATA_DIR) / name);
  if (bytes.empty()) throw DataError("missing fixture " + name);
  std::vector<double> v(bytes.size() / 8);
  std::memcpy(v.data(), bytes.data(), v.size() * 8);
  return v;
}

bool SameBytes(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// 1 ------------------------------------------------------------------------

Outcome GeometryOracles() {
  const auto t0 = Clock::now();
  Rng rng(1, "acceptance.geometry");
  double worst_flat = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    AffineDecoder dec(Uniform(2, 5, rng, -1, 1), Uniform(1, 5, rng, -1, 1));
    for (double k : CurvatureFdBatch(dec, Uniform(100, 2, rng, -3, 3))) worst_flat = std::max(worst_flat, k);
  }
  const double a = 0.7;
  ParaboloidDecoder para(a);
  double worst_metric = 0.0;
  for (const std::vector<double>& z :
       std::vector<std::vector<double>>{{0, 0}, {1, 0}, {-0.5, 0.25}, {2, -1}, {0.1, 0.9}}) {
    MetricTensor m = PullbackMetric(para, Tensor::Row(z));
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        const double hand = (i == j ? 1.0 : 0.0) + 4 * a * a * z[i] * z[j];
        worst_metric = std::max(worst_metric, std::abs(m.g[i * 2 + j] - hand));
      }
  }
  double worst_jac = 0.0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    RvaeOptions o;
    o.data_dim = 6;
    o.decoder_hidden = {8, 8};
    o.seed = seed;
    RvaeModel model(o);
    Rng zr(seed, "acceptance.jacobian");
    Tensor z = Uniform(1, 2, zr, -1.5, 1.5);
    Tensor jac = Jacobian([&](const Dual& x) { return model.Mean(x); }, z);
    const double h = 1e-5;
    for (std::size_t c = 0; c < 2; ++c) {
      std::vector<double> e(2, 0.0);
      e[c] = h;
      Tensor up = model.Mean(Add(z, Tensor::Row(e)));
      Tensor down = model.Mean(Sub(z, Tensor::Row(e)));
      for (std::size_t r = 0; r < 6; ++r) {
        const double fd = (up.data()[r] - down.data()[r]) / (2 * h);
        const double rel =
            std::abs(jac.at(r, c) - fd) / std::max({std::abs(fd), std::abs(jac.at(r, c)), 1e-6});
        worst_jac = std::max(worst_jac, rel);
      }
    }
  }
  const double secs = Seconds(t0);
  return {worst_flat < 1e-8 && worst_metric < 1e-8 && worst_jac < 1e-4 && secs < 10.0,
          "max flat K " + Fmt("%.2e", worst_flat) + ", metric err " + Fmt("%.2e", worst_metric) +
              ", Jacobian rel err " + Fmt("%.2e", worst_jac) + ", " + Fmt("%.2f", secs) + " s"};
}

// 2 ------------------------------------------------------------------------

Outcome KlCorrectness() {
  RvaeOptions o;
  o.data_dim = 6;
  o.encoder_hidden = {8};
  o.decoder_hidden = {8};
  o.rbf.centers = 5;
  o.seed = 4;
  RvaeModel model(o);
  Rng rng(4, "acceptance.kl");
  model.decoder_sigma().FitCenters(Uniform(40, 2, rng, -2, 2), 4);
  Tensor prior = model.prior_mean();
  for (double& x : prior.MutableLeafData()) x = 0.3;
  Tensor z = Uniform(100, 2, rng, -2, 2);
  Posterior q{Add(Tensor(100, 2, 0.0), prior.Detach()), Tensor(100, 1, 0.0)};
  const Tensor kl = KlBm(model, z, q, prior, ModelSquaredDistance(model));
  double worst_zero = 0.0;
  for (double v : kl.data()) worst_zero = std::max(worst_zero, std::abs(v));

  // Identity decoder: G = I, so the KL reduces to Gaussian log-ratios.
  auto dec = AffineDecoder::Identity(2);
  auto dist = [&](const Tensor& x, const Tensor& y) { return LinearizedSquaredDistance(*dec, x, y); };
  Tensor p = Tensor::Row({0.5, -1.0});
  double worst_closed = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> mu{rng.Uniform(-2, 2), rng.Uniform(-2, 2)};
    const std::vector<double> zz{rng.Uniform(-2, 2), rng.Uniform(-2, 2)};
    const double log_s = rng.Uniform(-1, 0.5);
    Posterior qc{Tensor::Row(mu), Tensor(1, 1, log_s)};
    const double s2 = std::exp(2 * log_s);
    const double dq = std::pow(zz[0] - mu[0], 2) + std::pow(zz[1] - mu[1], 2);
    const double dp = std::pow(zz[0] - 0.5, 2) + std::pow(zz[1] + 1.0, 2);
    const double closed = -2.0 * log_s - dq / (2 * s2) + dp / 2;
    worst_closed = std::max(worst_closed, std::abs(KlBm(*dec, Tensor::Row(zz), qc, p, dist).item() - closed));
  }
  return {worst_zero < 1e-9 && worst_closed < 1e-9,
          "max |KL| at prior " + Fmt("%.2e", worst_zero) + ", closed-form err " + Fmt("%.2e", worst_closed)};
}

// 3 ------------------------------------------------------------------------

Outcome Geodesics() {
  ParaboloidDecoder para(1.0);
  GeodesicPath bent = Geodesic(para, Tensor::Row({-1, 0}), Tensor::Row({1, 0}));
  std::vector<double> line;
  for (std::size_t i = 0; i < 20; ++i) {
    line.push_back(-1.0 + 2.0 * static_cast<double>(i) / 19.0);
    line.push_back(0.0);
  }
  const double straight = CurveEnergy(para, Tensor(20, 2, line)).item();

  Rng rng(5, "acceptance.geodesic");
  AffineDecoder flat(Uniform(2, 4, rng, -1, 1), Tensor(1, 4, 0.0));
  Tensor s = Tensor::Row({-1, 0.5}), e = Tensor::Row({2, -1});
  GeodesicPath fp = Geodesic(flat, s, e);
  double deviation = 0.0;
  const std::size_t n = fp.samples.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < 2; ++j)
      deviation = std::max(deviation,
                           std::abs(fp.samples.at(i, j) - (s.data()[j] + t * (e.data()[j] - s.data()[j]))));
  }

  RvaeOptions o;
  o.data_dim = 5;
  o.decoder_hidden = {8};
  o.rbf.centers = 8;
  o.seed = 9;
  RvaeModel curved(o);
  curved.decoder_sigma().FitCenters(Uniform(30, 2, rng, -2, 2), 9);
  std::size_t increases = 0;
  for (const GeodesicPath& p : GeodesicBatch(curved, Uniform(50, 2, rng, -2, 2), Uniform(50, 2, rng, -2, 2)))
    if (p.energy > p.initial_energy) ++increases;
  return {bent.energy < straight && deviation < 1e-3 && increases == 0,
          "paraboloid energy " + Fmt("%.4f", bent.energy) + " < straight " + Fmt("%.4f", straight) +
              ", flat deviation " + Fmt("%.2e", deviation) + ", increases " +
              std::to_string(increases) + "/50"};
}

// 4 ------------------------------------------------------------------------

Critic LinearCritic(std::vector<double> w, double bias, double lambda) {
  const std::size_t m = w.size();
  Mlp::Layer layer{Tensor::Variable(m, 1, std::move(w)), Tensor::Variable(1, 1, {bias}),
                   Activation::kIdentity};
  return Critic(Mlp("critic", {layer}), lambda);
}

Outcome WganGpIdentities() {
  Rng rng(4, "acceptance.wgan");
  double worst_ld = 0.0, worst_gp = 0.0;
  for (double lambda : {1.0, 10.0}) {
    Critic constant = LinearCritic(std::vector<double>(4, 0.0), -2.0, lambda);
    const double ld = LossD(constant, Uniform(6, 4, rng, 0, 1), Uniform(6, 4, rng, 0, 1), rng).item();
    worst_ld = std::max(worst_ld, std::abs(ld - lambda));
  }
  for (const std::vector<double>& w :
       std::vector<std::vector<double>>{{0.6, 0.0, -0.8}, {0.0, 1.0, 0.0}, {0.48, 0.6, 0.64}}) {
    Critic unit = LinearCritic(w, 0.3, 10.0);
    worst_gp = std::max(worst_gp, GradientPenalty(unit, Uniform(8, 3, rng, 0, 1), Uniform(8, 3, rng, 0, 1), rng).item());
  }
  return {worst_ld < 1e-9 && worst_gp < 1e-9,
          "|L_D - lambda| " + Fmt("%.2e", worst_ld) + ", unit-gradient GP " + Fmt("%.2e", worst_gp)};
}

// 5 ------------------------------------------------------------------------

Outcome PerturbationRule(const std::vector<fs::path>& manifests) {
  Rng rng(7, "acceptance.prefix");
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.UniformIndex(30);
    std::vector<double> k(n);
    // Half the sequences draw from a small integer range so ties occur.
    for (double& x : k) x = trial % 2 ? static_cast<double>(rng.UniformIndex(5)) : rng.Uniform(0, 10);
    std::size_t i_max = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (k[i] > k[i_max]) i_max = i;
    std::size_t i_star = 0;
    for (std::size_t i = 1; i <= i_max; ++i)
      if (k[i] < k[i_star]) i_star = i;
    PrefixChoice c = ChoosePerturbationIndex(k);
    if (c.i_max != i_max || c.i_star != i_star) ++mismatches;
  }
  std::size_t records = 0, violations = 0;
  for (const fs::path& path : manifests) {
    for (const ManifestRecord& m : ReadManifest(path)) {
      ++records;
      bool ok = m.i_star <= m.i_max && m.i_max < m.curvature.size();
      for (std::size_t i = 0; ok && i <= m.i_max; ++i) ok = m.curvature[m.i_star] <= m.curvature[i];
      if (!ok) ++violations;
    }
  }
  return {mismatches == 0 && records > 0 && violations == 0,
          "oracle mismatches " + std::to_string(mismatches) + "/1000, manifest violations " +
              std::to_string(violations) + "/" + std::to_string(records)};
}

// 6, 7 ---------------------------------------------------------------------

std::vector<std::string> DataArgs(const fs::path& data) {
  return {"--data.train_images", (data / "train-images.idx").string(),
          "--data.train_labels", (data / "train-labels.idx").string(),
          "--data.test_images",  (data / "test-images.idx").string(),
          "--data.test_labels",  (data / "test-labels.idx").string()};
}

RunConfig ToyConfig(const fs::path& root, uint64_t seed, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"--seed", std::to_string(seed), "--output", (root / "out").string()};
  for (const std::string& a : DataArgs(root / "data")) args.push_back(a);
  args.insert(args.end(), extra.begin(), extra.end());
  return LoadRunConfig(fs::path(MPRS_SOURCE_DIR) / "configs" / "toy.ini", args);
}

struct SeedRun {
  uint64_t seed = 0;
  AttackResult attack;
  std::size_t train_size = 0;
  double seconds = 0.0;
  fs::path manifest;
};

SeedRun RunToySeed(const fs::path& root, uint64_t seed) {
  std::ostringstream log;
  const auto t0 = Clock::now();
  RunConfig c = ToyConfig(root, seed);
  SeedRun r;
  r.seed = seed;
  ToySplit split = CmdSynth(c, log);
  r.train_size = split.train.size() + split.test.size();
  CmdTrain(c, log);
  CmdPublish(c, log);
  r.attack = CmdAttack(c, log);
  r.seconds = Seconds(t0);
  r.manifest = c.PublishedDir() / "manifest.jsonl";
  return r;
}

Outcome EndToEnd(const std::vector<SeedRun>& runs, double total_seconds) {
  std::vector<double> mia, reduction, gap;
  std::string detail;
  for (const SeedRun& r : runs) {
    const AttackResult& a = r.attack;
    mia.push_back(a.original.accuracy);
    reduction.push_back(a.original.accuracy - a.published.accuracy);
    gap.push_back(std::abs(a.original_test_accuracy - a.published_test_accuracy));
    detail += "seed " + std::to_string(r.seed) + " [n=" + std::to_string(r.train_size) + " attack " +
              Fmt("%.3f", a.original.accuracy) + "->" + Fmt("%.3f", a.published.accuracy) + " acc " +
              Fmt("%.3f", a.original_test_accuracy) + "->" + Fmt("%.3f", a.published_test_accuracy) + " " +
              Fmt("%.0f", r.seconds) + "s]; ";
  }
  const double m = Median(mia), red = Median(reduction), g = Median(gap);
  detail += "median attack " + Fmt("%.3f", m) + ", reduction " + Fmt("%.3f", red) + ", accuracy gap " +
            Fmt("%.3f", g) + ", total " + Fmt("%.0f", total_seconds) + " s";
  return {m >= 0.55 && red >= 0.03 && g <= 0.10 && total_seconds < 600.0, detail};
}

Outcome VulnerabilityDirection(const std::vector<SeedRun>& runs) {
  std::size_t agree = 0;
  std::string detail;
  for (const SeedRun& r : runs) {
    const VulnerabilityReport& v = r.attack.vulnerability;
    const bool ok = v.vulnerable > 0 && v.invulnerable > 0 && v.mean_vulnerable >= v.mean_invulnerable;
    agree += ok ? 1 : 0;
    detail += "seed " + std::to_string(r.seed) + " " + Fmt("%.4f", v.mean_vulnerable) + " vs " +
              Fmt("%.4f", v.mean_invulnerable) + " (" + std::to_string(v.vulnerable) + "/" +
              std::to_string(v.invulnerable) + "); ";
  }
  detail += std::to_string(agree) + " of " + std::to_string(runs.size()) + " seeds";
  return {agree >= 2, detail};
}

// 8 ------------------------------------------------------------------------

Outcome ProbeDirection() {
  SynthManifold m = MakeSynthManifold("paraboloid", 200, 0.0, 8);
  const std::vector<double> k = CurvatureFdBatch(*m.decoder, m.latents);
  Tensor origin = m.decoder->Mean(Tensor(1, 2, 0.0));
  ProbeLoss loss = QuadraticProbeLoss({origin.data().begin(), origin.data().end()});
  std::vector<double> means;
  std::optional<double> rho;
  std::string detail;
  for (double eps : {1e-3, 2e-3, 4e-3}) {
    ProbeOptions o;
    o.epsilon = eps;
    ProbeResult r = LossSensitivityProbe(*m.decoder, loss, k, m.latents, o);
    if (eps == 1e-3) rho = r.rank_correlation;
    means.push_back(std::accumulate(r.mean_delta.begin(), r.mean_delta.end(), 0.0) /
                    static_cast<double>(r.mean_delta.size()));
    detail += "eps " + Fmt("%.0e", eps) + " rho " +
              (r.rank_correlation ? Fmt("%.3f", *r.rank_correlation) : r.status) + " mean dL " +
              Fmt("%.3e", means.back()) + "; ";
  }
  const bool monotone = means[0] < means[1] && means[1] < means[2];
  detail += monotone ? "monotone" : "not monotone";
  return {rho && *rho > 0.2 && monotone, detail};
}

// 9 ------------------------------------------------------------------------

LabeledDataset ThreeClusters(uint64_t seed) {
  Rng rng(seed, "acceptance.clusters");
  LabeledDataset ds;
  ds.height = 1;
  ds.width = 2;
  const double cx[3] = {0.1, 0.5, 0.9};
  const std::size_t sizes[3] = {12, 10, 9};
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      ds.pixels.push_back(cx[c] + 0.02 * rng.Uniform(-1, 1));
      ds.pixels.push_back(0.5 + 0.02 * rng.Uniform(-1, 1));
      ds.labels.push_back(c);
    }
  return ds;
}

Outcome BaselinesBitExact() {
  const std::vector<double> img = LoadF64("baseline_input_11x7.f64");
  std::string detail;
  bool exact = SameBytes(Pixelate(img, 11, 7, 3), LoadF64("baseline_pixelate3_11x7.f64"));
  detail += std::string("pixelate ") + (exact ? "exact" : "DIFFERS");
  for (auto [r, tag] : std::vector<std::pair<double, std::string>>{{0.7, "0p7"}, {1.5, "1p5"}, {2.0, "2p0"}}) {
    const bool same = SameBytes(GaussianBlur(img, 11, 7, r), LoadF64("baseline_blur" + tag + "_11x7.f64"));
    detail += ", blur " + tag + (same ? " exact" : " DIFFERS");
    exact = exact && same;
  }
  std::size_t worst_margin_violations = 0, min_mult = SIZE_MAX;
  for (uint64_t seed = 0; seed < 5; ++seed)
    for (std::size_t k : {1u, 5u, 9u, 10u}) {
      KAnonymizeResult r = KAnonymize(ThreeClusters(seed), k, 3, seed);
      std::map<std::vector<double>, std::size_t> count;
      for (std::size_t i = 0; i < r.data.size(); ++i) {
        auto px = r.data.image(i);
        ++count[std::vector<double>(px.begin(), px.end())];
      }
      for (const auto& [px, c] : count) {
        if (c < k) ++worst_margin_violations;
        min_mult = std::min(min_mult, c);
      }
    }
  detail += ", k-anon multiplicity violations " + std::to_string(worst_margin_violations) + " (min " +
            std::to_string(min_mult) + ")";
  return {exact && worst_margin_violations == 0, detail};
}

// 10 -----------------------------------------------------------------------

Outcome UtilitySanity() {
  SynthConfig sc;
  sc.samples = 800;
  ToySplit split = MakeToySplit(sc, 3);
  ClassifierOptions co;
  co.epochs = 5;
  co.seed = 3;
  Classifier clf = TrainDownstream(split.train, co);
  const double self = FrechetFeatureDistance(clf, split.train, split.train);
  std::vector<double> fd;
  for (double sigma : {0.05, 0.1, 0.2}) {
    LabeledDataset noisy = split.train;
    Rng rng(3, "acceptance.noise");
    for (double& p : noisy.pixels) p += sigma * rng.Normal();
    fd.push_back(FrechetFeatureDistance(clf, split.train, noisy));
  }
  const bool increasing = fd[0] < fd[1] && fd[1] < fd[2];

  // A classifier whose head is all zeros predicts the uniform distribution.
  Classifier uniform(split.train.height, split.train.width, 2, co);
  for (const auto& p : uniform.Parameters()) {
    Tensor t = p.value;
    for (double& x : t.MutableLeafData()) x = 0.0;
  }
  const double div_uniform = DiversityScore(uniform, split.train);
  const std::size_t classes = 4;
  Tensor one_hot(2 * classes, classes, 0.0);
  for (std::size_t i = 0; i < 2 * classes; ++i) one_hot.MutableLeafData()[i * classes + i % classes] = 1.0;
  const double div_one_hot = DiversityScore(one_hot);
  const bool ok = self < 1e-6 && increasing && std::abs(div_uniform - 1.0) < 1e-12 &&
                  std::abs(div_one_hot - static_cast<double>(classes)) < 1e-12;
  return {ok, "FD(A,A) " + Fmt("%.2e", self) + ", FD at noise 0.05/0.1/0.2 " + Fmt("%.4f", fd[0]) + "/" +
                  Fmt("%.4f", fd[1]) + "/" + Fmt("%.4f", fd[2]) + ", diversity uniform " +
                  Fmt("%.12f", div_uniform) + ", one-hot " + Fmt("%.12f", div_one_hot)};
}

// 11 -----------------------------------------------------------------------

std::map<std::string, std::string> Tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = Slurp(e.path());
  return files;
}

Outcome Reproducibility(const fs::path& root) {
  const std::vector<std::string> small{"--synth.samples", "500", "--train.mu_epochs", "2",
                                       "--train.sigma_epochs", "1", "--train.estimator_epochs", "1",
                                       "--train.bilevel_epochs", "3", "--train.geodesic_iterations", "20",
                                       "--eval.classifier_epochs", "5"};
  std::ostringstream log;
  for (const char* run : {"a", "b"}) {
    RunConfig c = ToyConfig(root / run, 11, small);
    CmdSynth(c, log);
    CmdTrain(c, log);
    CmdPublish(c, log);
    CmdAttack(c, log);
    CmdEvaluate(c, log);
  }
  const auto a = Tree(root / "a"), b = Tree(root / "b");
  std::size_t differing = a.size() == b.size() ? 0 : 1;
  std::size_t checkpoints = 0;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) ++differing;
    if (name.ends_with(".ckpt")) ++checkpoints;
  }

  std::vector<std::string> resume = small;
  resume.push_back("--train.resume");
  resume.push_back((root / "a/out/checkpoints/bilevel-001.ckpt").string());
  RunConfig rc = LoadRunConfig(fs::path(MPRS_SOURCE_DIR) / "configs" / "toy.ini", [&] {
    std::vector<std::string> args{"--seed", "11", "--output", (root / "resumed").string()};
    for (const std::string& x : DataArgs(root / "a/data")) args.push_back(x);
    args.insert(args.end(), resume.begin(), resume.end());
    return args;
  }());
  CmdTrain(rc, log);
  const bool log_same = Slurp(root / "a/out/phase_log.csv") == Slurp(root / "resumed/phase_log.csv");
  const bool model_same = Slurp(root / "a/out/model.ckpt") == Slurp(root / "resumed/model.ckpt");
  return {differing == 0 && checkpoints > 0 && log_same && model_same,
          std::to_string(a.size()) + " files (" + std::to_string(checkpoints) + " checkpoints), " +
              std::to_string(differing) + " differ; resume from bilevel-001: phase log " +
              (log_same ? "identical" : "DIFFERS") + ", model " + (model_same ? "identical" : "DIFFERS")};
}

// --------------------------------------------------------------------------

int Main() {
  const fs::path work = fs::temp_directory_path() / "mprs_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail << " ["
              << Fmt("%.1f", Seconds(t0)) << " s]" << std::endl;
  };

  report(1, "geometry oracles", GeometryOracles);
  report(2, "KL correctness", KlCorrectness);
  report(3, "geodesics", Geodesics);
  report(4, "WGAN-GP identities", WganGpIdentities);

  std::vector<SeedRun> runs;
  double total = 0.0;
  std::string run_error;
  try {
    for (uint64_t seed : {0u, 1u, 2u}) {
      runs.push_back(RunToySeed(work / ("seed" + std::to_string(seed)), seed));
      total += runs.back().seconds;
    }
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  std::vector<fs::path> manifests;
  for (const SeedRun& r : runs) manifests.push_back(r.manifest);
  report(5, "perturbation rule", [&] { return PerturbationRule(manifests); });
  report(6, "end-to-end desk run", [&] {
    if (!run_error.empty()) return Outcome{false, "pipeline threw: " + run_error};
    return EndToEnd(runs, total);
  });
  report(7, "curvature-vulnerability direction", [&] {
    if (!run_error.empty()) return Outcome{false, "pipeline threw: " + run_error};
    return VulnerabilityDirection(runs);
  });
  report(8, "loss-sensitivity probe", ProbeDirection);
  report(9, "baselines bit-exact", BaselinesBitExact);
  report(10, "utility metric sanity", UtilitySanity);
  report(11, "reproducibility", [&] { return Reproducibility(work / "repro"); });

  fs::remove_all(work);
  std::cout << (11 - failed) << "/11 criteria passed" << std::endl;
  return std::min(failed, 125);
}

}  // namespace
}  // namespace mprs

int main() { return mprs::Main(); }
