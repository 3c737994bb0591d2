#include "mprs/cli/verbs.h"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "mprs/baselines/baselines.h"
#include "mprs/dataio/checkpoint.h"
#include "mprs/dataio/idx.h"
#include "mprs/dataio/imbalance.h"
#include "mprs/dataio/manifest.h"
#include "mprs/dataio/synth.h"
#include "mprs/errors.h"
#include "mprs/geometry/geodesic.h"
#include "mprs/geometry/metric.h"

namespace mprs {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Secs(const Stopwatch& w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, " (%.1f s)", w.Seconds());
  return buf;
}

void WriteText(const fs::path& path, const std::string& text) {
  WriteBytes(path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

LabeledDataset LoadSplit(const std::string& images, const std::string& labels, const char* split) {
  for (const std::string& p : {images, labels}) {
    if (!fs::exists(p)) throw DataError(std::string("missing dataset: ") + split + " file " + p);
  }
  LabeledDataset ds = LoadIdx(images, labels);
  ds.split = split;
  return ds;
}

ordered_json OptionalJson(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

void CheckSameShape(const LabeledDataset& a, const LabeledDataset& b, const std::string& what) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError(what + " images are " + std::to_string(b.height) + "x" +
                         std::to_string(b.width) + ", expected " + std::to_string(a.height) + "x" +
                         std::to_string(a.width));
  }
}

MiaOptions AttackOptions(const RunConfig& c) {
  MiaOptions o;
  o.softmax_mlp = c.eval.attack_mlp;
  o.mlp_epochs = c.eval.attack_epochs;
  o.mlp_learning_rate = c.eval.attack_lr;
  o.seed = c.seed;
  return o;
}

ordered_json AttackJson(const MiaReport& r, double test_accuracy) {
  ordered_json j;
  j["attack_accuracy"] = r.accuracy;
  j["test_accuracy"] = test_accuracy;
  j["members_used"] = r.members_used;
  j["train_per_class"] = r.train_per_class;
  j["eval_per_class"] = r.eval_per_class;
  return j;
}

ordered_json UtilityJson(const UtilityReport& r) {
  ordered_json j;
  j["test_accuracy"] = r.test_accuracy;
  j["frechet_distance"] = r.frechet_distance;
  j["diversity"] = r.diversity;
  return j;
}

Tensor RowOf(const Tensor& t, std::size_t r) {
  auto row = t.row(r);
  return Tensor(1, t.cols(), std::vector<double>(row.begin(), row.end()));
}

}  // namespace

ToySplit MakeToySplit(const SynthConfig& config, uint64_t seed) {
  SynthManifold m = MakeSynthManifold(config.kind, config.samples, config.noise, seed);
  if (config.label_temperature > 0.0) {
    Rng rng(seed, "toy.labels");
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-m.latents.at(i, 0) / config.label_temperature));
      m.data.labels[i] = rng.Uniform() < p ? 1 : 0;
    }
  }
  LabeledDataset ds = config.tail_fraction < 1.0
                          ? ImbalanceDownsample(m.data, config.tail_classes, config.tail_fraction, seed)
                          : m.data;
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed, "toy.split");
  rng.Shuffle(idx);
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(ds.size()) * (1.0 - config.test_fraction)));
  if (n_train < 2 || ds.size() - n_train < 2) throw ConfigError("toy split leaves fewer than 2 samples");
  const std::vector<std::size_t> a(idx.begin(), idx.begin() + n_train), b(idx.begin() + n_train, idx.end());
  ToySplit out{ds.Subset(a), ds.Subset(b)};
  out.train.split = "train";
  out.test.split = "test";
  return out;
}

LabeledDataset LoadTrainSet(const RunConfig& c) {
  return LoadSplit(c.data.train_images, c.data.train_labels, "train");
}

LabeledDataset LoadTestSet(const RunConfig& c) {
  return LoadSplit(c.data.test_images, c.data.test_labels, "test");
}

Trainer RestoreTrainer(const RunConfig& c, const LabeledDataset& train) {
  const fs::path path = fs::path(c.output) / "model.ckpt";
  if (!fs::exists(path)) throw DataError("missing artifact: no checkpoint at " + path.string());
  Checkpoint ck = LoadCheckpoint(path);
  if (ck.config != DescribeTrainConfig(c.train)) {
    throw ConfigError("checkpoint " + path.string() + " was trained with different [train] settings");
  }
  Trainer t(c.train, train);
  t.Restore(ck);
  return t;
}

ToySplit CmdSynth(const RunConfig& c, std::ostream& log) {
  Stopwatch w;
  ToySplit s = MakeToySplit(c.synth, c.seed);
  SaveIdx(s.train, c.data.train_images, c.data.train_labels);
  SaveIdx(s.test, c.data.test_images, c.data.test_labels);
  log << "[synth] " << c.synth.kind << ": train " << s.train.size() << " (" << s.train.CountLabel(1)
      << " of class 1), test " << s.test.size() << Secs(w) << "\n";
  // Return what a later verb will read back (pixels quantized by IDX).
  return {LoadTrainSet(c), LoadTestSet(c)};
}

PhaseLog CmdTrain(const RunConfig& c, std::ostream& log) {
  Stopwatch w;
  const fs::path out(c.output);
  LabeledDataset train = LoadTrainSet(c);
  const std::string description = DescribeTrainConfig(c.train);
  Trainer trainer(c.train, train);
  if (!c.resume.empty()) {
    if (!fs::exists(c.resume)) throw DataError("missing artifact: no checkpoint at " + c.resume);
    Checkpoint ck = LoadCheckpoint(c.resume);
    if (ck.config != description) {
      throw ConfigError("checkpoint " + c.resume + " was trained with different [train] settings");
    }
    trainer.Restore(ck);
    log << "[train] resumed from " << c.resume << " at " << StageName(trainer.stage()) << " epoch "
        << trainer.stage_epoch() << "\n";
  }
  log << "[train] " << train.size() << " samples, threads=" << c.threads << "\n";
  trainer.Run([&](const Trainer& t) {
    const PhaseLogEntry& e = t.log().entries.back();
    char name[64];
    std::snprintf(name, sizeof name, "checkpoints/%s-%03zu.ckpt", StageName(e.stage), e.epoch);
    Checkpoint ck = t.Save();
    ck.config = description;
    SaveCheckpoint(out / name, ck);
    log << "[train] " << StageName(e.stage) << " epoch " << e.epoch;
    const std::pair<const char*, const std::optional<double>*> losses[] = {
        {"mu", &e.loss_mu}, {"sigma", &e.loss_sigma}, {"d", &e.loss_d}, {"g", &e.loss_g},
        {"curv", &e.loss_curv}};
    for (const auto& [k, v] : losses)
      if (*v) log << " " << k << "=" << **v;
    log << Secs(w) << "\n";
    return std::string(name);
  });
  Checkpoint ck = trainer.Save();
  ck.config = description;
  SaveCheckpoint(out / "model.ckpt", ck);
  WriteText(out / "phase_log.csv", trainer.log().ToCsv(false));
  log << "[train] done" << Secs(w) << "\n";
  return trainer.log();
}

PublishedDataset CmdPublish(const RunConfig& c, std::ostream& log) {
  Stopwatch w;
  LabeledDataset train = LoadTrainSet(c);
  Trainer t = RestoreTrainer(c, train);
  if (t.stage() != Stage::kDone) {
    throw DataError(std::string("missing artifact: model.ckpt stops at ") + StageName(t.stage()) +
                    "; finish training first");
  }
  PublishOptions po;
  po.geodesic = c.train.geodesic;
  po.chunk = c.publish_chunk;
  PublishedDataset pub = Publish(t.model(), t.estimator(), train, po);
  WritePublished(fs::path(c.output) / "published", pub.data, pub.manifest);
  std::size_t moved = 0;
  for (const ManifestRecord& r : pub.manifest) moved += r.i_star > 0 ? 1 : 0;
  log << "[publish] " << pub.data.size() << " samples, " << moved << " moved off their start"
      << Secs(w) << "\n";
  return pub;
}

AttackResult CmdAttack(const RunConfig& c, std::ostream& log) {
  Stopwatch w;
  LabeledDataset published = ReadPublishedImages(c.PublishedDir());
  LabeledDataset train = LoadTrainSet(c);
  LabeledDataset test = LoadTestSet(c);
  CheckSameShape(train, published, "published");
  CheckSameShape(train, test, "test");
  AttackResult r;
  const MiaOptions mo = AttackOptions(c);
  Classifier original = TrainDownstream(train, c.eval.classifier);
  r.original = MiaAttack(original, train, test, mo);
  r.original_test_accuracy = original.Accuracy(test);
  log << "[attack] original: attack " << r.original.accuracy << ", test accuracy "
      << r.original_test_accuracy << Secs(w) << "\n";
  Classifier pub = TrainDownstream(published, c.eval.classifier);
  r.published = MiaAttack(pub, train, test, mo);
  r.published_test_accuracy = pub.Accuracy(test);
  log << "[attack] published: attack " << r.published.accuracy << ", test accuracy "
      << r.published_test_accuracy << Secs(w) << "\n";

  r.members = VulnerableMembers(r.original);
  const std::vector<double> proxy =
      LocalCurvatureProxy(train.Images(), c.eval.neighbors, c.eval.intrinsic_dim);
  std::vector<double> selected;
  for (std::size_t i : r.members.index) selected.push_back(proxy[i]);
  r.vulnerability = CurvatureVulnerabilityReport(std::move(selected), r.members.vulnerable);

  ordered_json j;
  j["original"] = AttackJson(r.original, r.original_test_accuracy);
  j["published"] = AttackJson(r.published, r.published_test_accuracy);
  j["attack_reduction"] = r.original.accuracy - r.published.accuracy;
  j["accuracy_gap"] = r.original_test_accuracy - r.published_test_accuracy;
  const VulnerabilityReport& v = r.vulnerability;
  j["vulnerability"] = {{"neighbors", c.eval.neighbors},
                        {"intrinsic_dim", c.eval.intrinsic_dim},
                        {"vulnerable", v.vulnerable},
                        {"invulnerable", v.invulnerable},
                        {"mean_vulnerable", v.mean_vulnerable},
                        {"mean_invulnerable", v.mean_invulnerable},
                        {"correlation", OptionalJson(v.correlation)}};
  const fs::path out(c.output);
  WriteText(out / "attack.json", j.dump(2) + "\n");

  std::string csv = "model,member,index,score,predicted_member\n";
  for (const auto& [name, rep] : {std::pair{"original", &r.original}, std::pair{"published", &r.published}})
    for (const MiaSample& s : rep->eval)
      csv += std::string(name) + "," + (s.member ? "1" : "0") + "," + std::to_string(s.index) + "," +
             Num(s.score) + "," + (s.predicted_member ? "1" : "0") + "\n";
  WriteText(out / "attack_samples.csv", csv);
  std::string vcsv = "index,score,vulnerable,proxy\n";
  for (std::size_t i = 0; i < r.members.index.size(); ++i)
    vcsv += std::to_string(r.members.index[i]) + "," + Num(r.members.score[i]) + "," +
            (r.members.vulnerable[i] ? "1" : "0") + "," + Num(v.proxy[i]) + "\n";
  WriteText(out / "vulnerability.csv", vcsv);
  log << "[attack] vulnerable mean proxy " << v.mean_vulnerable << " vs " << v.mean_invulnerable
      << Secs(w) << "\n";
  return r;
}

EvaluateResult CmdEvaluate(const RunConfig& c, std::ostream& log) {
  Stopwatch w;
  LabeledDataset published = ReadPublishedImages(c.PublishedDir());
  LabeledDataset train = LoadTrainSet(c);
  LabeledDataset test = LoadTestSet(c);
  CheckSameShape(train, published, "published");
  CheckSameShape(train, test, "test");
  Classifier original = TrainDownstream(train, c.eval.classifier);
  Classifier pub = TrainDownstream(published, c.eval.classifier);
  EvaluateResult r;
  r.original = {original.Accuracy(test), FrechetFeatureDistance(original, train, test),
                DiversityScore(original, train)};
  r.published = {pub.Accuracy(test), FrechetFeatureDistance(original, train, published),
                 DiversityScore(original, published)};
  ordered_json j;
  j["original"] = UtilityJson(r.original);
  j["published"] = UtilityJson(r.published);
  WriteText(fs::path(c.output) / "evaluate.json", j.dump(2) + "\n");
  log << "[evaluate] published: accuracy " << r.published.test_accuracy << ", frechet "
      << r.published.frechet_distance << ", diversity " << r.published.diversity << Secs(w) << "\n";
  return r;
}

LabeledDataset CmdBaseline(const RunConfig& c, std::ostream& log) {
  Stopwatch w;
  LabeledDataset train = LoadTrainSet(c);
  std::vector<std::string> notes;
  LabeledDataset out = ApplyBaseline(c.baseline_method, train, c.baseline, &notes);
  const fs::path dir = fs::path(c.output) / ("baseline-" + c.baseline_method);
  WritePublished(dir, out, {});
  std::string text;
  for (const std::string& n : notes) {
    text += n + "\n";
    log << "[baseline] " << n << "\n";
  }
  if (!text.empty()) WriteText(dir / "log.txt", text);
  log << "[baseline] " << c.baseline_method << ": " << out.size() << " samples" << Secs(w) << "\n";
  return out;
}

ProbeRun CmdProbe(const RunConfig& c, std::ostream& log) {
  Stopwatch w;
  const fs::path dir = fs::path(c.output) / "probe";
  ProbeRun run;
  std::shared_ptr<const Decoder> decoder;
  std::vector<double> estimate;  // K_hat, model source only
  std::vector<double> oracle;
  ProbeLoss loss;
  Tensor polyline;
  if (c.eval.probe_source == "model") {
    LabeledDataset train = LoadTrainSet(c);
    Trainer t = RestoreTrainer(c, train);
    auto model = std::make_shared<RvaeModel>(t.model().Frozen());
    decoder = model;
    std::vector<std::size_t> idx(std::min(c.eval.probe_points, train.size()));
    std::iota(idx.begin(), idx.end(), 0);
    {
      NoGradGuard no_grad;
      run.latents = model->Encode(train.Images(idx)).mean;
    }
    estimate = t.estimator().Evaluate(run.latents);
    oracle = CurvatureFdBatch(*model, run.latents, c.train.curvature);
    loss = ClassifierProbeLoss(TrainDownstream(train, c.eval.classifier));
    polyline = Perturb(*model, t.estimator(), RowOf(run.latents, 0), c.train.geodesic).path.samples;
  } else {
    SynthManifold m = MakeSynthManifold(c.eval.probe_source, c.eval.probe_points, 0.0, c.seed);
    decoder = m.decoder;
    run.latents = m.latents;
    oracle = CurvatureFdBatch(*decoder, run.latents, c.train.curvature);
    Tensor center = decoder->Mean(Tensor(1, decoder->latent_dim(), 0.0));
    loss = QuadraticProbeLoss(center.ToVector());
    polyline = Geodesic(*decoder, RowOf(run.latents, 0), RowOf(run.latents, 1), c.train.geodesic).samples;
  }
  const std::vector<double>& scored = estimate.empty() ? oracle : estimate;
  for (const MetricTensor& g : PullbackMetricBatch(*decoder, run.latents))
    run.eigenvalues.push_back(g.eigenvalues);
  ProbeOptions po;
  po.epsilon = c.eval.probe_epsilon;
  po.trials = c.eval.probe_trials;
  po.seed = c.seed;
  run.sensitivity = LossSensitivityProbe(*decoder, loss, scored, run.latents, po);

  const std::size_t n = run.latents.rows(), d = run.latents.cols();
  std::string geo, sens;
  for (std::size_t j = 0; j < d; ++j) geo += "z_" + std::to_string(j + 1) + ",";
  sens = geo;
  for (std::size_t j = 0; j < d; ++j) geo += "lambda_" + std::to_string(j + 1) + ",";
  geo += estimate.empty() ? "curvature\n" : "curvature,curvature_estimate\n";
  sens += "curvature,mean_delta\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::string z;
    for (std::size_t j = 0; j < d; ++j) z += Num(run.latents.at(i, j)) + ",";
    geo += z;
    for (double l : run.eigenvalues[i]) geo += Num(l) + ",";
    geo += Num(oracle[i]);
    if (!estimate.empty()) geo += "," + Num(estimate[i]);
    geo += "\n";
    sens += z + Num(scored[i]) + "," + Num(run.sensitivity.mean_delta[i]) + "\n";
  }
  WriteText(dir / "geometry.csv", geo);
  WriteText(dir / "sensitivity.csv", sens);
  ordered_json j;
  j["source"] = c.eval.probe_source;
  j["points"] = n;
  j["epsilon"] = po.epsilon;
  j["trials"] = po.trials;
  j["status"] = run.sensitivity.status;
  j["rank_correlation"] = OptionalJson(run.sensitivity.rank_correlation);
  j["mean_delta"] = std::accumulate(run.sensitivity.mean_delta.begin(),
                                    run.sensitivity.mean_delta.end(), 0.0) /
                    static_cast<double>(n);
  WriteText(dir / "probe.json", j.dump(2) + "\n");
  if (d == 2) {
    run.svg = LatentSvg(run.latents, scored, polyline);
    WriteText(dir / "latent.svg", *run.svg);
  }
  log << "[probe] " << c.eval.probe_source << ": " << run.sensitivity.status;
  if (run.sensitivity.rank_correlation) log << ", rank correlation " << *run.sensitivity.rank_correlation;
  log << Secs(w) << "\n";
  return run;
}

std::string LatentSvg(const Tensor& latents, std::span<const double> curvature, const Tensor& polyline) {
  if (latents.cols() != 2 || polyline.cols() != 2) throw DimensionError("latent SVG needs 2-D points");
  if (curvature.size() != latents.rows()) throw DimensionError("latent SVG: one curvature per point");
  double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
  for (const Tensor* t : {&latents, &polyline})
    for (std::size_t i = 0; i < t->rows(); ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        lo[j] = std::min(lo[j], t->at(i, j));
        hi[j] = std::max(hi[j], t->at(i, j));
      }
  constexpr double kSize = 480.0, kMargin = 20.0;
  auto px = [&](double v, std::size_t j) {
    const double span = hi[j] - lo[j] > 0.0 ? hi[j] - lo[j] : 1.0;
    const double u = (v - lo[j]) / span;
    return kMargin + (j == 0 ? u : 1.0 - u) * (kSize - 2.0 * kMargin);
  };
  double kmin = INFINITY, kmax = -INFINITY;
  for (double k : curvature) {
    kmin = std::min(kmin, k);
    kmax = std::max(kmax, k);
  }
  char buf[160];
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  s += "<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < latents.rows(); ++i) {
    const double t = kmax > kmin ? (curvature[i] - kmin) / (kmax - kmin) : 0.0;
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"rgb(%d,40,%d)\"/>\n",
                  px(latents.at(i, 0), 0), px(latents.at(i, 1), 1), static_cast<int>(std::lround(255 * t)),
                  static_cast<int>(std::lround(255 * (1.0 - t))));
    s += buf;
  }
  s += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < polyline.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(polyline.at(i, 0), 0),
                  px(polyline.at(i, 1), 1));
    s += buf;
  }
  s += "\"/>\n</svg>\n";
  return s;
}

}  // namespace mprs
