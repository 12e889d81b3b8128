// pnpunmix: synthetic scenes, plug-and-play ADMM unmixing, metrics and
// standalone denoising from the command line.
//
// Exit codes: 0 success, 1 usage, 2 parse, 3 shape, 4 compute, 5 io.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include "pnpunmix/commands.hpp"
#include "pnpunmix/log.hpp"

namespace {

using namespace pnpunmix;

double parseSnr(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "none") {
    return std::numeric_limits<double>::infinity();
  }
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("bad SNR '" + text + "'");
  return v;
}

void addDenoiserOptions(CLI::App* cmd, DenoiserSpec& spec) {
  cmd->add_option("--gaussian-width", spec.gaussian.width,
                  "Gaussian denoiser kernel sigma (pixels)")->capture_default_str();
  cmd->add_option("--nlm-patch", spec.nlm.patchRadius, "NLM patch radius")
      ->capture_default_str();
  cmd->add_option("--nlm-search", spec.nlm.searchRadius, "NLM search radius")
      ->capture_default_str();
  cmd->add_option("--nlm-scale", spec.nlm.bandwidthScale,
                  "NLM bandwidth h as a multiple of sigma")->capture_default_str();
  cmd->add_option("--tv-iterations", spec.tv.iterations, "TV dual iterations")
      ->capture_default_str();
  cmd->add_option("--tv-scale", spec.tv.weightScale,
                  "TV weight mu as a multiple of sigma")->capture_default_str();
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fills options of `cmd` that were not given on the command line from a
// flat key = value file; key `foo` sets `--foo`.
void applyConfig(CLI::App* cmd, const std::string& path) {
  if (!path.empty()) {
    for (const auto& [key, value] : io::readKeyValues(path)) {
      CLI::Option* opt = cmd->get_option_no_throw("--" + key);
      if (opt == nullptr || key == "config") {
        throw std::invalid_argument(path + ": unknown key '" + key + "' for " +
                                    cmd->get_name());
      }
      if (opt->count() > 0) continue;
      opt->add_result(value);
      opt->run_callback();
    }
  }
  // Required options may come from the file, so they are checked here rather
  // than by the parser.
  if (cmd->parsed()) {
    for (const CLI::Option* opt : cmd->get_options()) {
      if (opt->get_group() == "Required" && opt->count() == 0) {
        throw UsageError(cmd->get_name() + ": " + opt->get_name() + " is required");
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plug-and-play ADMM hyperspectral unmixing"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  // synth
  SceneSpec scene;
  std::string sceneSnr = "20";
  std::string synthOut = "scene";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene bundle");
  std::string synthConfig;
  synth->add_option("--config", synthConfig, "Flat key = value file; flags override it");
  synth->add_option("--out", synthOut, "Output directory")->capture_default_str();
  synth->add_option("--rows", scene.rows)->capture_default_str();
  synth->add_option("--cols", scene.cols)->capture_default_str();
  synth->add_option("--endmembers", scene.endmembers)->capture_default_str();
  synth->add_option("--bands", scene.bands)->capture_default_str();
  synth->add_option("--smoothness", scene.fieldSmoothness,
                    "Gaussian field kernel sigma (pixels)")->capture_default_str();
  synth->add_option("--contrast", scene.fieldContrast,
                    "Field scale before the softmax")->capture_default_str();
  synth->add_option("--pure-fraction", scene.purePixelFraction)->capture_default_str();
  synth->add_option("--snr", sceneSnr, "SNR in dB, or inf")->capture_default_str();
  synth->add_option("--seed", scene.seed)->capture_default_str();

  // unmix
  cli::UnmixRequest unmixReq;
  std::string mode = "pro-h";
  std::string unmixDenoiser = "nlm";
  std::string truthPath;
  std::string cleanPath;
  std::string unmixOut = "result";
  double presetSnr = std::numeric_limits<double>::quiet_NaN();
  bool noMaps = false;
  bool noMetrics = false;
  bool noTrace = false;
  PnpConfig& cfg = unmixReq.config;
  auto* unmixCmd = app.add_subcommand("unmix", "Estimate abundances");
  std::string unmixConfig;
  unmixCmd->add_option("--config", unmixConfig, "Flat key = value file; flags override it");
  unmixCmd->add_option("--cube", unmixReq.cube, "Observed cube header")->group("Required");
  unmixCmd->add_option("--endmembers", unmixReq.endmembers, "Endmember CSV")->group("Required");
  unmixCmd->add_option("--truth", truthPath, "Ground-truth abundance header");
  unmixCmd->add_option("--clean", cleanPath, "Clean cube header (PSNR reference)");
  unmixCmd->add_option("--out", unmixOut, "Output directory")->capture_default_str();
  unmixCmd->add_option("--mode", mode, "pro-h or pro-a")->capture_default_str();
  unmixCmd->add_option("--denoiser", unmixDenoiser, "identity, gaussian, nlm or tv")
      ->capture_default_str();
  auto* presetOpt = unmixCmd->add_option(
      "--preset-snr", presetSnr, "Take rho, lambda, alpha from the preset closest to this SNR");
  auto* rhoOpt = unmixCmd->add_option("--rho", cfg.rho0, "Initial penalty")->capture_default_str();
  auto* lambdaOpt = unmixCmd->add_option("--lambda", cfg.lambda, "Regularization weight")
                        ->capture_default_str();
  auto* alphaOpt = unmixCmd->add_option("--alpha", cfg.alpha, "Penalty growth factor")
                       ->capture_default_str();
  unmixCmd->add_option("--iterations", cfg.maxIter, "Maximum ADMM iterations K")
      ->capture_default_str();
  unmixCmd->add_option("--stop-tol", cfg.stopTol)->capture_default_str();
  unmixCmd->add_option("--qp-tol", cfg.qpTol)->capture_default_str();
  unmixCmd->add_option("--qp-max-iter", cfg.qpMaxIter)->capture_default_str();
  unmixCmd->add_option("--seed", cfg.seed, "Seed of the random initialization")
      ->capture_default_str();
  unmixCmd->add_option("--label", unmixReq.label, "Method label in metrics.json")
      ->capture_default_str();
  unmixCmd->add_flag("--no-maps", noMaps, "Skip abundance map images");
  unmixCmd->add_flag("--no-metrics", noMetrics, "Skip metrics.json");
  unmixCmd->add_flag("--no-trace", noTrace, "Skip trace.csv");
  addDenoiserOptions(unmixCmd, cfg.denoiser);

  // eval
  cli::EvalRequest evalReq;
  std::string evalTruth;
  std::string evalClean;
  std::string evalOut;
  auto* evalCmd = app.add_subcommand("eval", "Compute RMSE, PSNR and RE");
  std::string evalConfig;
  evalCmd->add_option("--config", evalConfig, "Flat key = value file; flags override it");
  evalCmd->add_option("--estimate", evalReq.estimate, "Estimated abundance header")->group("Required");
  evalCmd->add_option("--endmembers", evalReq.endmembers, "Endmember CSV")->group("Required");
  evalCmd->add_option("--cube", evalReq.cube, "Observed cube header")->group("Required");
  evalCmd->add_option("--truth", evalTruth, "Ground-truth abundance header");
  evalCmd->add_option("--clean", evalClean, "Clean cube header (PSNR reference)");
  evalCmd->add_option("--out", evalOut, "Write the JSON record here instead of stdout");
  evalCmd->add_option("--label", evalReq.label)->capture_default_str();

  // denoise
  cli::DenoiseRequest denoiseReq;
  auto* denoiseCmd = app.add_subcommand("denoise", "Apply a denoiser to a cube");
  std::string denoiseConfig;
  denoiseCmd->add_option("--config", denoiseConfig, "Flat key = value file; flags override it");
  denoiseCmd->add_option("--input", denoiseReq.input)->group("Required");
  denoiseCmd->add_option("--output", denoiseReq.output)->group("Required");
  denoiseCmd->add_option("--denoiser", denoiseReq.denoiserName)->capture_default_str();
  denoiseCmd->add_option("--sigma", denoiseReq.sigma, "Noise level")->group("Required");
  addDenoiserOptions(denoiseCmd, denoiseReq.spec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  log::setLevel(quiet ? log::Level::Silent
                      : verbose ? log::Level::Info : log::Level::Warn);

  try {
    applyConfig(synth, synthConfig);
    applyConfig(unmixCmd, unmixConfig);
    applyConfig(evalCmd, evalConfig);
    applyConfig(denoiseCmd, denoiseConfig);
    if (*synth) {
      scene.snrDb = parseSnr(sceneSnr);
      const auto out = cli::cmdSynth(scene, synthOut);
      std::cout << "wrote " << out.noisy.string() << ", " << out.clean.string() << ", "
                << out.truth.string() << ", " << out.endmembers.string() << ", "
                << out.spec.string() << '\n';
    } else if (*unmixCmd) {
      const PatternSwitch m = parsePatternSwitch(mode);
      if (presetOpt->count() > 0) {
        const PnpConfig preset =
            presetConfig(m, parseDenoiserKind(unmixDenoiser), presetSnr);
        if (rhoOpt->count() == 0) cfg.rho0 = preset.rho0;
        if (lambdaOpt->count() == 0) cfg.lambda = preset.lambda;
        if (alphaOpt->count() == 0) cfg.alpha = preset.alpha;
      }
      cfg.mode = m;
      const DenoiserRegistry registry = DenoiserRegistry::withBuiltins();
      if (!registry.contains(unmixDenoiser)) {
        throw std::invalid_argument("unknown denoiser '" + unmixDenoiser + "'");
      }
      unmixReq.denoiserName = unmixDenoiser;
      if (!truthPath.empty()) unmixReq.truth = truthPath;
      if (!cleanPath.empty()) unmixReq.clean = cleanPath;
      unmixReq.outDir = unmixOut;
      unmixReq.emitMaps = !noMaps;
      unmixReq.emitMetrics = !noMetrics;
      unmixReq.emitTrace = !noTrace;
      const auto out = cli::cmdUnmix(unmixReq, registry);
      std::cout << cli::metricsRecord(out.metrics, unmixReq.label) << '\n';
    } else if (*evalCmd) {
      if (!evalTruth.empty()) evalReq.truth = evalTruth;
      if (!evalClean.empty()) evalReq.clean = evalClean;
      if (!evalOut.empty()) evalReq.output = evalOut;
      cli::cmdEval(evalReq);
    } else if (*denoiseCmd) {
      cli::cmdDenoise(denoiseReq);
    }
  } catch (const UsageError& e) {
    std::cerr << e.what() << '\n';
    return cli::kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return cli::kShape;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return cli::kParse;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return cli::kIo;
  } catch (const ComputeError& e) {
    std::cerr << "compute error: " << e.what() << '\n';
    return cli::kCompute;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return cli::kParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kCompute;
  }
  return cli::kOk;
}
