#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pnpunmix/io.hpp"
#include "pnpunmix/pnp.hpp"
#include "pnpunmix/synth.hpp"

namespace pnpunmix::cli {

namespace fs = std::filesystem;

/// Process exit codes of the pnpunmix tool.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,    ///< bad command line
  kParse = 2,    ///< malformed input file or config value
  kShape = 3,    ///< inconsistent dimensions between inputs
  kCompute = 4,  ///< numerical failure
  kIo = 5,       ///< file could not be read or written
};

io::KeyValues sceneSpecToKeyValues(const SceneSpec& spec);
SceneSpec sceneSpecFromKeyValues(const io::KeyValues& values);

struct SynthOutputs {
  fs::path noisy;
  fs::path clean;
  fs::path truth;
  fs::path endmembers;
  fs::path spec;
};

/// Writes noisy.hdr/.raw, clean.hdr/.raw, truth.hdr/.raw, endmembers.csv
/// and scene.cfg (the resolved spec, loadable with --config) into outDir.
SynthOutputs cmdSynth(const SceneSpec& spec, const fs::path& outDir);

struct UnmixRequest {
  fs::path cube;
  fs::path endmembers;
  std::optional<fs::path> truth;  ///< abundance file; enables RMSE and PSNR
  std::optional<fs::path> clean;  ///< clean cube; PSNR reference without truth
  PnpConfig config;
  /// Registry name of the denoiser; empty selects config.denoiser.kind.
  std::string denoiserName;
  fs::path outDir;
  std::string label = "pnp";
  bool emitMaps = true;
  bool emitMetrics = true;
  bool emitTrace = true;
};

struct UnmixOutputs {
  UnmixResult result;
  MetricsReport metrics;
  fs::path abundances;
  fs::path reconstruction;
  fs::path metricsFile;
  fs::path traceFile;
  std::vector<fs::path> maps;
};

UnmixOutputs cmdUnmix(const UnmixRequest& request,
                      const DenoiserRegistry& registry =
                          DenoiserRegistry::withBuiltins());

/// RMSE against `truth` (if given), PSNR of M*estimate against M*truth
/// (or against `cleanReference` when there is no truth), RE against y.
MetricsReport evaluate(const EndmemberMatrix& endmembers,
                       const AbundanceMatrix& estimate, const PixelMatrix& y,
                       const AbundanceMatrix* truth,
                       const PixelMatrix* cleanReference = nullptr);

struct EvalRequest {
  fs::path estimate;
  fs::path endmembers;
  fs::path cube;
  std::optional<fs::path> truth;
  std::optional<fs::path> clean;
  std::optional<fs::path> output;  ///< JSON record; printed to stdout if unset
  std::string label = "estimate";
};

MetricsReport cmdEval(const EvalRequest& request);

/// One machine-readable result row: {"method", "rmse", "psnr", "mse",
/// "peak", "re"}. An infinite PSNR is written as the string "inf"; absent
/// metrics are null.
std::string metricsRecord(const MetricsReport& report, const std::string& label);
MetricsReport parseMetricsRecord(const std::string& text,
                                 std::string* label = nullptr);

/// CSV with header iter,rho,sigma,primal_residual,dual_residual,rmse,
/// min_entry,max_sum_deviation,qp_flagged,a_step_s,z_step_s.
void writeTrace(const fs::path& path, const std::vector<IterationRecord>& trace);

struct DenoiseRequest {
  fs::path input;
  fs::path output;
  std::string denoiserName = "nlm";
  DenoiserSpec spec;
  double sigma = 0.0;
};

void cmdDenoise(const DenoiseRequest& request,
                const DenoiserRegistry& registry =
                    DenoiserRegistry::withBuiltins());

}  // namespace pnpunmix::cli
