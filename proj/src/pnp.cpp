#include "pnpunmix/pnp.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pnpunmix/parallel.hpp"
#include "pnpunmix/random.hpp"

namespace pnpunmix {

void PnpConfig::validate() const {
  if (!(rho0 > 0.0)) throw std::invalid_argument("rho0 must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(alpha >= 1.0)) throw std::invalid_argument("alpha must be >= 1");
  if (maxIter < 1) throw std::invalid_argument("maxIter must be >= 1");
  if (!(stopTol > 0.0)) throw std::invalid_argument("stopTol must be positive");
  if (!(qpTol > 0.0)) throw std::invalid_argument("qpTol must be positive");
  if (qpMaxIter < 1) throw std::invalid_argument("qpMaxIter must be >= 1");
  denoiser.validate();
}

double PnpConfig::rhoAt(int k) const { return rho0 * std::pow(alpha, k); }

PnpConfig presetConfig(PatternSwitch mode, DenoiserKind denoiser, double snrDb,
                       PresetSource source) {
  struct Row {
    double snr;
    double rho;
    double lambda;
  };
  using Table = std::array<Row, 4>;
  static constexpr Table kCalibratedProH = {
      {{5, 0.2, 6e-4}, {10, 0.2, 2e-4}, {20, 0.2, 5e-5}, {30, 0.2, 2e-5}}};
  static constexpr Table kCalibratedProA = {
      {{5, 0.5, 4e-3}, {10, 0.5, 1e-3}, {20, 0.5, 2e-4}, {30, 0.5, 1e-4}}};
  static constexpr Table kAlternateProH = {
      {{5, 1.0, 3e-3}, {10, 0.5, 1e-3}, {20, 0.1, 2e-4}, {30, 0.005, 1e-4}}};
  static constexpr Table kAlternateProA = {
      {{5, 3.0, 5e-5}, {10, 2.0, 1e-5}, {20, 5.0, 3e-4}, {30, 5.0, 1e-4}}};

  const bool proH = mode == PatternSwitch::ProH;
  const Table& rows = source == PresetSource::Calibrated
                          ? (proH ? kCalibratedProH : kCalibratedProA)
                          : (proH ? kAlternateProH : kAlternateProA);
  const Row* best = &rows[0];
  for (const Row& r : rows) {
    if (std::abs(r.snr - snrDb) < std::abs(best->snr - snrDb)) best = &r;
  }
  PnpConfig cfg;
  cfg.mode = mode;
  cfg.denoiser.kind = denoiser;
  cfg.rho0 = best->rho;
  cfg.lambda = best->lambda;
  cfg.alpha = mode == PatternSwitch::ProH ? 1.0 : 1.1;
  return cfg;
}

double primalResidual(const AdmmState& state) {
  if (!state.HA.sameShape(state.Z)) {
    throw ShapeError("primalResidual: HA is " + state.HA.shapeString() +
                     ", Z is " + state.Z.shapeString());
  }
  return (state.HA.values - state.Z.values).norm() /
         std::max(state.Z.values.norm(), 1e-12);
}

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void requireFinite(const Eigen::MatrixXd& m, const char* step) {
  if (!m.allFinite()) {
    throw ComputeError(std::string(step) + " produced non-finite values");
  }
}

}  // namespace

UnmixResult unmix(const PixelMatrix& y, const EndmemberMatrix& endmembers,
                  const PnpConfig& cfg, const UnmixOptions& options) {
  cfg.validate();
  return unmix(y, endmembers, cfg, makeDenoiser(cfg.denoiser), options);
}

UnmixResult unmix(const PixelMatrix& y, const EndmemberMatrix& endmembers,
                  const PnpConfig& cfg, const Denoiser& denoiser,
                  const UnmixOptions& options) {
  cfg.validate();
  if (y.channels() != endmembers.bands()) {
    throw ShapeError("unmix: cube has " + std::to_string(y.channels()) +
                     " bands, endmembers have " +
                     std::to_string(endmembers.bands()));
  }
  requireFinite(y.values, "input cube");
  const Index p = endmembers.endmembers();
  const Index n = y.pixels();
  const Index rows = y.spatialRows;
  const Index cols = y.spatialCols;
  if (options.truth != nullptr &&
      (options.truth->endmembers() != p || options.truth->pixels() != n)) {
    throw ShapeError("unmix: ground truth is " + options.truth->shapeString() +
                     ", expected " + std::to_string(p) + " endmembers over " +
                     std::to_string(n) + " pixels");
  }

  const Eigen::MatrixXd& M = endmembers.matrix();
  const bool proH = cfg.mode == PatternSwitch::ProH;
  auto applyH = [&](const Eigen::MatrixXd& a) -> Eigen::MatrixXd {
    return proH ? Eigen::MatrixXd(M * a) : a;
  };

  // Random start on the simplex: uniform entries normalized per column.
  Rng rng(deriveSeed(cfg.seed, 0));
  Eigen::MatrixXd a0(p, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) a0(j, i) = rng.uniformPositive();
    a0.col(i) /= a0.col(i).sum();
  }

  UnmixResult result;
  AdmmState& state = result.state;
  state.mode = cfg.mode;
  state.A = AbundanceMatrix(std::move(a0), rows, cols);
  state.HA = PixelMatrix(applyH(state.A.values), rows, cols);
  state.Z = state.HA;
  state.U = PixelMatrix(Eigen::MatrixXd::Zero(state.Z.channels(), n), rows, cols);
  state.rhoK = cfg.rhoAt(0);

  const Eigen::MatrixXd mty = M.transpose() * y.values;
  QpOptions qpOptions;
  qpOptions.tol = cfg.qpTol;
  qpOptions.maxIter = cfg.qpMaxIter;
  const int threads = threadCount();

  for (int k = 0; k < cfg.maxIter; ++k) {
    IterationRecord record;
    record.iteration = k + 1;
    record.rho = cfg.rhoAt(k);

    // A-step: one simplex QP per pixel, warm-started from the previous A.
    auto start = Clock::now();
    const Eigen::MatrixXd xTilde = state.Z.values - state.U.values;
    const SimplexQpSolver solver(subproblemHessian(endmembers, cfg.mode, record.rho));
    const Eigen::MatrixXd linear =
        proH ? Eigen::MatrixXd(-(mty + record.rho * (M.transpose() * xTilde)))
             : Eigen::MatrixXd(-(mty + record.rho * xTilde));
    Eigen::MatrixXd next(p, n);
    std::vector<char> flagged(n, 0);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (Index i = 0; i < n; ++i) {
      const Eigen::VectorXd warm = state.A.values.col(i);
      const QpSolution s = solver.solve(linear.col(i), qpOptions, &warm);
      next.col(i) = s.a;
      flagged[i] = s.converged ? 0 : 1;
    }
    requireFinite(next, "A-step");
    state.A.values = std::move(next);
    record.flaggedPixels = std::count(flagged.begin(), flagged.end(), 1);
    result.flaggedPixels += record.flaggedPixels;
    const Feasibility feasible = feasibility(state.A);
    record.minEntry = feasible.minEntry;
    record.maxSumDeviation = feasible.maxSumDeviation;
    if (!feasible.satisfied(1e-8)) {
      throw ComputeError("A-step left the simplex (min entry " +
                         std::to_string(feasible.minEntry) + ", sum deviation " +
                         std::to_string(feasible.maxSumDeviation) + ")");
    }
    state.HA.values = applyH(state.A.values);
    record.aStepSeconds = secondsSince(start);

    // Z-step: denoise the folded Z~ = HA + U at sigma = sqrt(lambda / rho).
    start = Clock::now();
    record.sigma = std::sqrt(cfg.lambda / record.rho);
    const PixelMatrix zTilde(state.HA.values + state.U.values, rows, cols);
    const HsiCube denoised = denoiser(fold(zTilde), record.sigma);
    if (denoised.bands() != zTilde.channels() || denoised.rows() != rows ||
        denoised.cols() != cols) {
      throw ShapeError("denoiser returned a " + denoised.shapeString() +
                       " volume for a " + zTilde.shapeString() + " input");
    }
    PixelMatrix zNext = unfold(denoised);
    requireFinite(zNext.values, "Z-step");
    record.zStepSeconds = secondsSince(start);

    // U-step.
    state.U.values += state.HA.values - zNext.values;
    requireFinite(state.U.values, "U-step");

    const double zNorm = std::max(zNext.values.norm(), 1e-12);
    record.dualResidual = (zNext.values - state.Z.values).norm() / zNorm;
    state.Z = std::move(zNext);
    record.primalResidual = primalResidual(state);
    record.rmse = options.truth != nullptr
                      ? rmse(*options.truth, state.A)
                      : std::numeric_limits<double>::quiet_NaN();

    state.trace.push_back(record);
    state.iter = k + 1;
    state.rhoK = cfg.rhoAt(k + 1);

    if (record.primalResidual < cfg.stopTol && record.dualResidual < cfg.stopTol) {
      result.stoppedEarly = k + 1 < cfg.maxIter;
      break;
    }
  }

  result.abundances = state.A;
  return result;
}

std::string toString(PatternSwitch mode) {
  return mode == PatternSwitch::ProH ? "pro-h" : "pro-a";
}

PatternSwitch parsePatternSwitch(const std::string& name) {
  std::string s;
  for (char c : name) {
    if (c != '-' && c != '_') s.push_back(static_cast<char>(std::tolower(c)));
  }
  if (s == "proh" || s == "h") return PatternSwitch::ProH;
  if (s == "proa" || s == "a") return PatternSwitch::ProA;
  throw std::invalid_argument("unknown mode '" + name + "' (expected pro-h or pro-a)");
}

}  // namespace pnpunmix
