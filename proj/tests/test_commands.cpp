#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "pnpunmix/commands.hpp"

using namespace pnpunmix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pnpunmix_cmd_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

SceneSpec tinySpec() {
  SceneSpec spec;
  spec.rows = 12;
  spec.cols = 10;
  spec.endmembers = 3;
  spec.bands = 16;
  spec.fieldSmoothness = 3;
  spec.snrDb = 20;
  spec.seed = 4;
  return spec;
}

int runCli(const std::string& args) {
  const std::string cmd = std::string(PNPUNMIX_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("synth writes a bundle that parses back") {
  TempDir tmp;
  SceneSpec spec = tinySpec();
  cli::SynthOutputs out = cli::cmdSynth(spec, tmp.path);
  HsiCube noisy = io::readCube(out.noisy);
  HsiCube clean = io::readCube(out.clean);
  AbundanceMatrix truth = io::readAbundances(out.truth);
  EndmemberMatrix M = io::readEndmembersCsv(out.endmembers);
  SceneSpec back = cli::sceneSpecFromKeyValues(io::readKeyValues(out.spec));

  CHECK(noisy.bands() == 16);
  CHECK(noisy.rows() == 12);
  CHECK(noisy.cols() == 10);
  CHECK(truth.endmembers() == 3);
  CHECK(M.bands() == 16);
  CHECK(back.rows == spec.rows);
  CHECK(back.seed == spec.seed);
  CHECK(back.snrDb == spec.snrDb);
  CHECK(back.fieldSmoothness == spec.fieldSmoothness);
  CHECK(std::abs(measuredSnrDb(clean.data(), noisy.data()) - spec.snrDb) < 0.1);
}

TEST_CASE("synth is byte-identical for the same seed") {
  TempDir a, b;
  cli::cmdSynth(tinySpec(), a.path);
  cli::cmdSynth(tinySpec(), b.path);
  for (const char* f : {"noisy.raw", "clean.raw", "truth.raw", "endmembers.csv",
                        "noisy.hdr", "scene.cfg"}) {
    CHECK(slurp(a.path / f) == slurp(b.path / f));
  }
}

TEST_CASE("scene spec survives key-value form") {
  SceneSpec spec = tinySpec();
  spec.snrDb = kNoNoise;
  spec.purePixelFraction = 0.125;
  SceneSpec back = cli::sceneSpecFromKeyValues(cli::sceneSpecToKeyValues(spec));
  CHECK(std::isinf(back.snrDb));
  CHECK(back.purePixelFraction == 0.125);
  CHECK(back.cols == spec.cols);
  io::KeyValues bad = cli::sceneSpecToKeyValues(spec);
  bad["rows"] = "twelve";
  CHECK_THROWS(cli::sceneSpecFromKeyValues(bad));
}

TEST_CASE("unmix with identity denoiser reproduces FCLS metrics") {
  TempDir tmp;
  cli::SynthOutputs scene = cli::cmdSynth(tinySpec(), tmp.path / "scene");

  cli::UnmixRequest req;
  req.cube = scene.noisy;
  req.endmembers = scene.endmembers;
  req.truth = scene.truth;
  req.outDir = tmp.path / "run";
  req.config.mode = PatternSwitch::ProA;
  req.config.alpha = 1.1;
  req.config.stopTol = 1e-10;
  req.config.qpTol = 1e-12;
  req.config.maxIter = 30;
  cli::UnmixOutputs out = cli::cmdUnmix(req);

  // Oracle: FCLS straight on the reloaded inputs.
  EndmemberMatrix M = io::readEndmembersCsv(scene.endmembers);
  PixelMatrix y = unfold(io::readCube(scene.noisy));
  AbundanceMatrix truth = io::readAbundances(scene.truth);
  AbundanceMatrix ref = fcls(M, y, 1e-12).abundances;
  REQUIRE(out.metrics.rmse.has_value());
  CHECK(*out.metrics.rmse == doctest::Approx(rmse(truth, ref)).epsilon(1e-6));
  CHECK(out.metrics.re == doctest::Approx(reconstructionError(y, mix(M, ref))).epsilon(1e-6));

  CHECK(fs::exists(out.abundances));
  CHECK(fs::exists(out.reconstruction));
  CHECK(fs::exists(out.metricsFile));
  CHECK(out.maps.size() == 3);
  for (const auto& m : out.maps) CHECK(io::readGraymap(m).rows() == 12);
  CHECK(io::readCube(out.reconstruction).bands() == 16);

  std::string label;
  MetricsReport fromFile = cli::parseMetricsRecord(slurp(out.metricsFile), &label);
  CHECK(label == "pnp");
  CHECK(*fromFile.rmse == *out.metrics.rmse);
}

TEST_CASE("omitting the truth drops RMSE but keeps RE") {
  TempDir tmp;
  cli::SynthOutputs scene = cli::cmdSynth(tinySpec(), tmp.path / "scene");
  cli::UnmixRequest req;
  req.cube = scene.noisy;
  req.endmembers = scene.endmembers;
  req.outDir = tmp.path / "run";
  req.config.maxIter = 3;
  req.emitMaps = false;
  cli::UnmixOutputs out = cli::cmdUnmix(req);
  CHECK(!out.metrics.rmse.has_value());
  CHECK(!out.metrics.psnr.has_value());
  CHECK(out.metrics.re > 0.0);
  CHECK(out.maps.empty());

  req.clean = scene.clean;
  req.outDir = tmp.path / "run2";
  out = cli::cmdUnmix(req);
  CHECK(!out.metrics.rmse.has_value());
  CHECK(out.metrics.psnr.has_value());
}

TEST_CASE("trace has one row per iteration with monotone rho") {
  TempDir tmp;
  cli::SynthOutputs scene = cli::cmdSynth(tinySpec(), tmp.path / "scene");
  cli::UnmixRequest req;
  req.cube = scene.noisy;
  req.endmembers = scene.endmembers;
  req.truth = scene.truth;
  req.outDir = tmp.path / "run";
  req.config.mode = PatternSwitch::ProA;
  req.config.denoiser.kind = DenoiserKind::Tv;
  req.config.alpha = 1.2;
  req.config.maxIter = 6;
  req.emitMaps = false;
  cli::UnmixOutputs out = cli::cmdUnmix(req);
  const size_t iterations = out.result.state.trace.size();

  std::istringstream lines(slurp(out.traceFile));
  std::string line;
  std::getline(lines, line);
  CHECK(line ==
        "iter,rho,sigma,primal_residual,dual_residual,rmse,min_entry,"
        "max_sum_deviation,qp_flagged,a_step_s,z_step_s");
  std::vector<double> rhos;
  while (std::getline(lines, line)) {
    std::istringstream row(line);
    std::string iter, rho;
    std::getline(row, iter, ',');
    std::getline(row, rho, ',');
    CHECK(std::stoi(iter) == static_cast<int>(rhos.size()) + 1);
    rhos.push_back(std::stod(rho));
  }
  CHECK(rhos.size() == iterations);
  CHECK(iterations <= 6);
  for (size_t i = 1; i < rhos.size(); ++i) CHECK(rhos[i] > rhos[i - 1]);
}

TEST_CASE("unmix validates inputs before computing") {
  TempDir tmp;
  cli::SynthOutputs scene = cli::cmdSynth(tinySpec(), tmp.path / "scene");
  EndmemberMatrix wrong(Eigen::MatrixXd::Identity(8, 3));
  io::writeEndmembersCsv(tmp.path / "wrong.csv", wrong);
  cli::UnmixRequest req;
  req.cube = scene.noisy;
  req.endmembers = tmp.path / "wrong.csv";
  req.outDir = tmp.path / "run";
  CHECK_THROWS_AS(cli::cmdUnmix(req), ShapeError);
  CHECK(!fs::exists(tmp.path / "run" / "abundances.hdr"));
  req.endmembers = tmp.path / "absent.csv";
  CHECK_THROWS_AS(cli::cmdUnmix(req), IoError);
}

TEST_CASE("eval agrees with the library metrics") {
  TempDir tmp;
  cli::SynthOutputs scene = cli::cmdSynth(tinySpec(), tmp.path);
  cli::EvalRequest req;
  req.estimate = scene.truth;
  req.truth = scene.truth;
  req.endmembers = scene.endmembers;
  req.cube = scene.noisy;
  req.output = tmp.path / "eval.json";
  MetricsReport r = cli::cmdEval(req);

  EndmemberMatrix M = io::readEndmembersCsv(scene.endmembers);
  AbundanceMatrix truth = io::readAbundances(scene.truth);
  PixelMatrix y = unfold(io::readCube(scene.noisy));
  CHECK(*r.rmse == 0.0);
  CHECK(std::isinf(*r.psnr));
  CHECK(r.re == reconstructionError(y, mix(M, truth)));

  MetricsReport lib = cli::evaluate(M, truth, y, &truth);
  CHECK(lib.re == r.re);
  MetricsReport back = cli::parseMetricsRecord(slurp(tmp.path / "eval.json"));
  CHECK(std::isinf(*back.psnr));
  CHECK(back.re == r.re);
}

TEST_CASE("metrics record round-trip") {
  MetricsReport m;
  m.rmse = 0.0615;
  m.psnr = 32.601;
  m.mse = 1.25e-3;
  m.peak = 0.91;
  m.re = 0.0123;
  m.perIterationRmse = {0.2, 0.1};
  std::string label;
  MetricsReport back = cli::parseMetricsRecord(cli::metricsRecord(m, "Pro-H-NLM"), &label);
  CHECK(label == "Pro-H-NLM");
  CHECK(*back.rmse == *m.rmse);
  CHECK(*back.psnr == *m.psnr);
  CHECK(*back.mse == *m.mse);
  CHECK(*back.peak == *m.peak);
  CHECK(back.re == m.re);
  CHECK(back.perIterationRmse == m.perIterationRmse);
  MetricsReport empty;
  back = cli::parseMetricsRecord(cli::metricsRecord(empty, "x"));
  CHECK(!back.rmse.has_value());
  CHECK_THROWS(cli::parseMetricsRecord("{not json"));
}

TEST_CASE("denoise command") {
  TempDir tmp;
  cli::SynthOutputs scene = cli::cmdSynth(tinySpec(), tmp.path);
  cli::DenoiseRequest req;
  req.input = scene.noisy;
  req.output = tmp.path / "den.hdr";
  req.denoiserName = "identity";
  req.sigma = 0.3;
  cli::cmdDenoise(req);
  CHECK(io::readCube(req.output) == io::readCube(scene.noisy));
}

TEST_CASE("command-line tool") {
  TempDir tmp;
  const fs::path scene = tmp.path / "scene";
  REQUIRE(runCli("synth --out " + q(scene) +
                 " --rows 12 --cols 10 --endmembers 3 --bands 16 --smoothness 3 --seed 4") ==
          cli::kOk);
  CHECK(slurp(scene / "noisy.raw") == slurp([&] {
          cli::cmdSynth(tinySpec(), tmp.path / "lib");
          return tmp.path / "lib" / "noisy.raw";
        }()));

  SUBCASE("config file drives synth and flags override it") {
    REQUIRE(runCli("synth --config " + q(scene / "scene.cfg") + " --out " +
                   q(tmp.path / "again")) == cli::kOk);
    CHECK(slurp(tmp.path / "again" / "noisy.raw") == slurp(scene / "noisy.raw"));
    REQUIRE(runCli("synth --config " + q(scene / "scene.cfg") + " --seed 5 --out " +
                   q(tmp.path / "other")) == cli::kOk);
    CHECK(slurp(tmp.path / "other" / "noisy.raw") != slurp(scene / "noisy.raw"));
  }
  SUBCASE("required inputs may come from the config file") {
    std::ofstream(tmp.path / "run.cfg") << "cube = " << (scene / "noisy.hdr").string()
                                        << "\nendmembers = " << (scene / "endmembers.csv").string()
                                        << "\nmode = pro-a\ndenoiser = tv\niterations = 2\n";
    CHECK(runCli("unmix --config " + q(tmp.path / "run.cfg") + " --out " +
                 q(tmp.path / "cfgrun")) == cli::kOk);
    CHECK(fs::exists(tmp.path / "cfgrun" / "abundances.hdr"));
    std::ofstream(tmp.path / "typo.cfg") << "iteratons = 2\n";
    CHECK(runCli("unmix --config " + q(tmp.path / "typo.cfg") + " --cube " +
                 q(scene / "noisy.hdr") + " --endmembers " + q(scene / "endmembers.csv")) ==
          cli::kParse);
  }
  SUBCASE("unmix and eval") {
    const std::string inputs = " --cube " + q(scene / "noisy.hdr") + " --endmembers " +
                               q(scene / "endmembers.csv");
    CHECK(runCli("unmix" + inputs + " --truth " + q(scene / "truth.hdr") +
                 " --mode pro-a --denoiser tv --iterations 3 --out " + q(tmp.path / "run")) ==
          cli::kOk);
    CHECK(fs::exists(tmp.path / "run" / "metrics.json"));
    CHECK(runCli("eval --estimate " + q(tmp.path / "run" / "abundances.hdr") + " --endmembers " +
                 q(scene / "endmembers.csv") + " --cube " + q(scene / "noisy.hdr") +
                 " --out " + q(tmp.path / "e.json")) == cli::kOk);
    CHECK(runCli("unmix" + inputs + " --preset-snr 10 --denoiser nlm --iterations 1 --out " +
                 q(tmp.path / "preset")) == cli::kOk);
  }
  SUBCASE("exit codes") {
    CHECK(runCli("") == cli::kUsage);
    CHECK(runCli("unmix --bogus") == cli::kUsage);
    CHECK(runCli("unmix --cube " + q(scene / "noisy.hdr")) == cli::kUsage);
    CHECK(runCli("unmix --cube " + q(scene / "noisy.hdr") + " --endmembers " +
                 q(tmp.path / "missing.csv")) == cli::kIo);

    std::ofstream(tmp.path / "bad.csv") << "a,b,c\n0.1,0.2\n";
    CHECK(runCli("unmix --cube " + q(scene / "noisy.hdr") + " --endmembers " +
                 q(tmp.path / "bad.csv")) == cli::kParse);

    io::writeEndmembersCsv(tmp.path / "short.csv",
                           EndmemberMatrix(Eigen::MatrixXd::Identity(8, 3)));
    CHECK(runCli("unmix --cube " + q(scene / "noisy.hdr") + " --endmembers " +
                 q(tmp.path / "short.csv")) == cli::kShape);

    CHECK(runCli("unmix --cube " + q(scene / "noisy.hdr") + " --endmembers " +
                 q(scene / "endmembers.csv") + " --denoiser median") == cli::kParse);
    CHECK(runCli("unmix --cube " + q(scene / "noisy.hdr") + " --endmembers " +
                 q(scene / "endmembers.csv") + " --rho -1") == cli::kParse);
  }
}
