#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mprs/cli/cli.h"
#include "mprs/cli/run_config.h"
#include "mprs/cli/verbs.h"
#include "mprs/dataio/idx.h"
#include "mprs/dataio/manifest.h"
#include "mprs/errors.h"

namespace mprs {
namespace {

namespace fs = std::filesystem;

const std::string kToy = std::string(MPRS_SOURCE_DIR) + "/configs/toy.ini";

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Scratch directory with data paths and a small, fast schedule.
class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("mprs_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::vector<std::string> Args(const std::string& verb, const std::string& out = "out") const {
    const std::string d = (root_ / "data").string();
    return {verb,
            "-c",
            kToy,
            "--output",
            (root_ / out).string(),
            "--data.train_images",
            d + "/train-images.idx",
            "--data.train_labels",
            d + "/train-labels.idx",
            "--data.test_images",
            d + "/test-images.idx",
            "--data.test_labels",
            d + "/test-labels.idx",
            "--synth.samples",
            "500",
            "--train.mu_epochs",
            "2",
            "--train.sigma_epochs",
            "1",
            "--train.estimator_epochs",
            "1",
            "--train.bilevel_epochs",
            "2",
            "--train.geodesic_iterations",
            "10",
            "--eval.classifier_epochs",
            "5",
            "--eval.probe_points",
            "20"};
  }

  static std::vector<std::string> With(std::vector<std::string> a, const std::vector<std::string>& more) {
    a.insert(a.end(), more.begin(), more.end());
    return a;
  }

  fs::path root_;
};

TEST(CliExitCodes, PartitionByErrorKind) {
  EXPECT_EQ(ExitCodeFor(ErrorKind::kConfig), 2);
  for (ErrorKind k : {ErrorKind::kData, ErrorKind::kFormat, ErrorKind::kDimension, ErrorKind::kContract})
    EXPECT_EQ(ExitCodeFor(k), 3) << ErrorKindName(k);
  for (ErrorKind k : {ErrorKind::kTraining, ErrorKind::kGeometry, ErrorKind::kObfuscation})
    EXPECT_EQ(ExitCodeFor(k), 4) << ErrorKindName(k);
}

TEST(CliExitCodes, HelpListsDefaults) {
  Result r = Cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--train.mu_epochs UINT [100]"), std::string::npos);
  EXPECT_NE(r.out.find("--epochs-bilevel"), std::string::npos);
  EXPECT_NE(r.out.find("--threads"), std::string::npos);
}

TEST(CliExitCodes, MissingVerbIsConfigError) {
  Result r = Cli({});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: config: ", 0), 0u);
}

TEST_F(CliRun, UnknownIniKeyIsRejected) {
  const fs::path ini = root_ / "bad.ini";
  std::ofstream(ini) << "[train]\nmu_epoch = 3\n";
  Result r = Cli({"train", "-c", ini.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train.mu_epoch"), std::string::npos);
  EXPECT_THROW(LoadRunConfig(ini), ConfigError);
}

TEST_F(CliRun, OutOfRangeValueIsConfigError) {
  Result r = Cli(With(Args("train"), {"--train.batch_size", "0"}));
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST_F(CliRun, MissingDatasetExitsThree) {
  Result r = Cli(Args("train"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("error: data: missing dataset"), std::string::npos) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(CliRun, AttackWithoutPublishedSetIsMissingArtifact) {
  ASSERT_EQ(Cli(Args("synth")).code, 0);
  Result r = Cli(Args("attack"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("missing artifact"), std::string::npos) << r.err;
  EXPECT_EQ(Cli(Args("publish")).code, 3);
}

TEST_F(CliRun, ToyConfigLoads) {
  RunConfig c = LoadRunConfig(kToy, {"--seed", "7"});
  EXPECT_EQ(c.train.mu_epochs, 14u);
  EXPECT_EQ(c.train.mu_epochs + c.train.sigma_epochs + c.train.estimator_epochs + c.train.bilevel_epochs, 25u);
  EXPECT_EQ(c.train.batch_size, 16u);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.eval.classifier.seed, 7u);
  EXPECT_EQ(c.eval.classifier.hidden, std::vector<std::size_t>{64});
  EXPECT_EQ(c.synth.tail_classes, std::vector<int>{1});
  EXPECT_EQ(c.train.model.latent_dim, 2u);
}

TEST_F(CliRun, ZeroBilevelEpochsSkipsPhaseThree) {
  ASSERT_EQ(Cli(Args("synth")).code, 0);
  Result r = Cli(With(Args("train"), {"--epochs-bilevel", "0"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string log = Slurp(root_ / "out/phase_log.csv");
  EXPECT_EQ(log.find(",bilevel,"), std::string::npos);
  EXPECT_NE(log.find(",estimator,"), std::string::npos);
}

TEST_F(CliRun, VerbChainProducesArtifactsReproducibly) {
  ASSERT_EQ(Cli(Args("synth")).code, 0);
  for (const std::string out : {"a", "b"}) {
    for (const char* verb : {"train", "publish", "attack", "evaluate"}) {
      Result r = Cli(Args(verb, out));
      ASSERT_EQ(r.code, 0) << verb << ": " << r.err;
    }
  }
  const char* files[] = {"model.ckpt",          "phase_log.csv",     "published/images.idx",
                         "published/labels.idx", "published/manifest.jsonl", "attack.json",
                         "attack_samples.csv",  "vulnerability.csv", "evaluate.json",
                         "checkpoints/bilevel-001.ckpt"};
  for (const char* f : files) {
    ASSERT_TRUE(fs::exists(root_ / "a" / f)) << f;
    EXPECT_EQ(Slurp(root_ / "a" / f), Slurp(root_ / "b" / f)) << f;
  }
  // Manifest invariant: the published latent scores no higher than any
  // earlier point on its path.
  for (const ManifestRecord& m : ReadManifest(root_ / "a/published/manifest.jsonl")) {
    for (std::size_t i = 0; i <= m.i_star; ++i) EXPECT_LE(m.curvature[m.i_star], m.curvature[i]);
  }
  EXPECT_NE(Slurp(root_ / "a/attack.json").find("\"attack_reduction\""), std::string::npos);
  EXPECT_NE(Slurp(root_ / "a/evaluate.json").find("\"frechet_distance\""), std::string::npos);
}

TEST_F(CliRun, ResumeMidPhaseThreeMatchesUninterrupted) {
  ASSERT_EQ(Cli(Args("synth")).code, 0);
  ASSERT_EQ(Cli(Args("train", "full")).code, 0);
  const std::string ckpt = (root_ / "full/checkpoints/bilevel-000.ckpt").string();
  Result r = Cli(With(Args("train", "resumed"), {"--train.resume", ckpt}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Slurp(root_ / "full/phase_log.csv"), Slurp(root_ / "resumed/phase_log.csv"));
  EXPECT_EQ(Slurp(root_ / "full/model.ckpt"), Slurp(root_ / "resumed/model.ckpt"));
  Result bad = Cli(With(Args("train", "other"), {"--train.resume", ckpt, "--train.beta", "0.5"}));
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliRun, BaselineWritesPublishedLayout) {
  ASSERT_EQ(Cli(Args("synth")).code, 0);
  for (const char* m : {"pixelate", "blur", "kanon"}) {
    Result r = Cli(With(Args("baseline"), {"--baseline.method", m, "--baseline.clusters", "20"}));
    ASSERT_EQ(r.code, 0) << m << ": " << r.err;
    LabeledDataset ds = ReadPublishedImages(root_ / "out" / (std::string("baseline-") + m));
    EXPECT_GT(ds.size(), 0u);
  }
  EXPECT_TRUE(fs::exists(root_ / "out/baseline-kanon/log.txt"));
  Result attack = Cli(With(Args("attack"), {"--eval.published", (root_ / "out/baseline-blur").string()}));
  EXPECT_EQ(attack.code, 0) << attack.err;
}

TEST_F(CliRun, PlaneProbeHasZeroCurvature) {
  Result r = Cli(With(Args("probe"), {"--eval.probe_source", "plane"}));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(Slurp(root_ / "out/probe/geometry.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "z_1,z_2,lambda_1,lambda_2,curvature");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "0") << line;
    ++rows;
  }
  EXPECT_EQ(rows, 20u);
  EXPECT_NE(Slurp(root_ / "out/probe/probe.json").find("degenerate: zero-variance curvature"),
            std::string::npos);
  EXPECT_TRUE(fs::exists(root_ / "out/probe/latent.svg"));
}

TEST_F(CliRun, ModelProbeWritesTables) {
  ASSERT_EQ(Cli(Args("synth")).code, 0);
  ASSERT_EQ(Cli(Args("train")).code, 0);
  Result r = Cli(Args("probe"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string geo = Slurp(root_ / "out/probe/geometry.csv");
  EXPECT_EQ(geo.substr(0, geo.find('\n')), "z_1,z_2,lambda_1,lambda_2,curvature,curvature_estimate");
  EXPECT_EQ(std::count(geo.begin(), geo.end(), '\n'), 21);
  const std::string svg = Slurp(root_ / "out/probe/latent.svg");
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '<') - 4, 20);  // svg, rect, polyline, close tag
}

TEST(LatentSvg, RejectsWrongShapes) {
  Tensor z(3, 2, 0.0), line(2, 2, 0.0);
  std::vector<double> k(3, 1.0);
  EXPECT_NO_THROW(LatentSvg(z, k, line));
  EXPECT_THROW(LatentSvg(Tensor(3, 3, 0.0), k, line), DimensionError);
  EXPECT_THROW(LatentSvg(z, std::vector<double>(2), line), DimensionError);
}

}  // namespace
}  // namespace mprs
