#pragma once

#include <cstdint>
#include <vector>

#include "pnpunmix/denoise.hpp"
#include "pnpunmix/model.hpp"
#include "pnpunmix/qp.hpp"

namespace pnpunmix {

struct PnpConfig {
  PatternSwitch mode = PatternSwitch::ProH;
  DenoiserSpec denoiser;
  double rho0 = 0.1;
  double lambda = 2e-4;
  double alpha = 1.0;
  int maxIter = 20;
  double stopTol = 1e-4;
  double qpTol = 1e-9;
  int qpMaxIter = 200;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when rho0 <= 0, lambda <= 0, alpha < 1,
  /// maxIter < 1 or a tolerance is not positive.
  void validate() const;

  /// Penalty at iteration k (0-based): rho0 * alpha^k.
  double rhoAt(int k) const;
};

enum class PresetSource {
  /// Tuned for the built-in NLM (h = 10 sigma, 5x5 patches, 11x11 search)
  /// on the default synthetic scene; the default.
  Calibrated,
  /// Larger-rho NLM settings suited to a different NLM parameterization and
  /// data scale; kept for comparison runs.
  Alternate,
};

/// (rho, lambda, alpha) for a mode at the SNR row (5, 10, 20, 30 dB) closest
/// to snrDb. alpha is 1 in ProH and 1.1 in ProA. Other fields keep their
/// defaults apart from the denoiser kind.
PnpConfig presetConfig(PatternSwitch mode, DenoiserKind denoiser, double snrDb,
                       PresetSource source = PresetSource::Calibrated);

struct IterationRecord {
  int iteration = 0;  ///< 1-based
  double rho = 0.0;   ///< penalty used by this iteration
  double sigma = 0.0; ///< noise level handed to the denoiser
  double primalResidual = 0.0;
  double dualResidual = 0.0;
  double rmse = 0.0;  ///< NaN without ground truth
  double minEntry = 0.0;
  double maxSumDeviation = 0.0;
  Index flaggedPixels = 0;
  double aStepSeconds = 0.0;
  double zStepSeconds = 0.0;
};

struct AdmmState {
  PatternSwitch mode = PatternSwitch::ProH;
  AbundanceMatrix A;
  PixelMatrix HA;  ///< H A for the current A
  PixelMatrix Z;
  PixelMatrix U;
  double rhoK = 0.0;  ///< penalty for the next iteration
  int iter = 0;
  std::vector<IterationRecord> trace;
};

/// ||HA - Z||_F / max(||Z||_F, 1e-12).
double primalResidual(const AdmmState& state);

struct UnmixOptions {
  /// Enables the per-iteration RMSE trace.
  const AbundanceMatrix* truth = nullptr;
};

struct UnmixResult {
  AbundanceMatrix abundances;
  AdmmState state;
  bool stoppedEarly = false;
  Index flaggedPixels = 0;  ///< QP non-convergence summed over iterations
};

/// Plug-and-play ADMM unmixing with the built-in denoiser named by cfg.
UnmixResult unmix(const PixelMatrix& y, const EndmemberMatrix& endmembers,
                  const PnpConfig& cfg, const UnmixOptions& options = {});

/// Same loop with a caller-supplied denoiser (cfg.denoiser is ignored).
UnmixResult unmix(const PixelMatrix& y, const EndmemberMatrix& endmembers,
                  const PnpConfig& cfg, const Denoiser& denoiser,
                  const UnmixOptions& options = {});

/// Yhat = M Ahat.
inline PixelMatrix reconstruct(const EndmemberMatrix& endmembers,
                               const AbundanceMatrix& abundances) {
  return mix(endmembers, abundances);
}

std::string toString(PatternSwitch mode);
/// Accepts "pro-h"/"proh"/"h" and "pro-a"/"proa"/"a", case-insensitive.
PatternSwitch parsePatternSwitch(const std::string& name);

}  // namespace pnpunmix
