#include "pnpunmix/model.hpp"

#include <cmath>

#include "pnpunmix/log.hpp"
#include "pnpunmix/random.hpp"

namespace pnpunmix {

EndmemberMatrix::EndmemberMatrix(Eigen::MatrixXd spectra,
                                 std::vector<std::string> names)
    : spectra_(std::move(spectra)), names_(std::move(names)) {
  if (spectra_.rows() < 1 || spectra_.cols() < 1) {
    throw ShapeError("endmember matrix must have at least one band and one "
                     "endmember");
  }
  if (!spectra_.allFinite()) {
    throw ComputeError("endmember matrix contains non-finite values");
  }
  if (names_.empty()) {
    for (Index j = 0; j < spectra_.cols(); ++j) {
      names_.push_back("em" + std::to_string(j));
    }
  } else if (static_cast<Index>(names_.size()) != spectra_.cols()) {
    throw ShapeError("got " + std::to_string(names_.size()) + " names for " +
                     std::to_string(spectra_.cols()) + " endmembers");
  }
  for (Index j = 0; j < spectra_.cols(); ++j) {
    if ((spectra_.col(j).array() == 0.0).all()) {
      throw std::invalid_argument("endmember " + names_[j] + " is all zero");
    }
    for (Index i = 0; i < j; ++i) {
      if (spectra_.col(i) == spectra_.col(j)) {
        throw std::invalid_argument("endmembers " + names_[i] + " and " +
                                    names_[j] + " are identical");
      }
    }
  }
  if (spectra_.minCoeff() < 0.0 || spectra_.maxCoeff() > 1.0) {
    log::warn("endmember reflectances fall outside [0, 1]");
  }
  if (spectra_.rows() < spectra_.cols()) {
    log::warn("fewer bands than endmembers; abundances are not identifiable");
  }
}

EndmemberMatrix EndmemberMatrix::permuted(const std::vector<Index>& perm) const {
  if (static_cast<Index>(perm.size()) != endmembers()) {
    throw ShapeError("permutation length does not match endmember count");
  }
  Eigen::MatrixXd out(bands(), endmembers());
  std::vector<std::string> names;
  for (Index j = 0; j < endmembers(); ++j) {
    out.col(j) = spectra_.col(perm[j]);
    names.push_back(names_[perm[j]]);
  }
  return EndmemberMatrix(std::move(out), std::move(names));
}

Feasibility feasibility(const AbundanceMatrix& a) {
  Feasibility f;
  if (a.values.size() == 0) return f;
  f.minEntry = a.values.minCoeff();
  f.maxSumDeviation =
      (a.values.colwise().sum().array() - 1.0).abs().maxCoeff();
  return f;
}

PixelMatrix mix(const EndmemberMatrix& endmembers,
                const AbundanceMatrix& abundances) {
  if (endmembers.endmembers() != abundances.endmembers()) {
    throw ShapeError("mix: " + std::to_string(endmembers.endmembers()) +
                     " endmembers but abundances have " +
                     std::to_string(abundances.endmembers()) + " rows");
  }
  return PixelMatrix(endmembers.matrix() * abundances.values,
                     abundances.spatialRows, abundances.spatialCols);
}

PixelMatrix addNoiseSnr(const PixelMatrix& y, double snrDb, std::uint64_t seed) {
  if (!y.values.allFinite()) {
    throw ComputeError("addNoiseSnr: input contains non-finite values");
  }
  if (std::isinf(snrDb) && snrDb > 0) return y;
  if (!std::isfinite(snrDb)) {
    throw std::invalid_argument("addNoiseSnr: SNR must be finite or +inf");
  }
  const double entries = static_cast<double>(y.values.size());
  const double variance =
      y.values.squaredNorm() / (entries * std::pow(10.0, snrDb / 10.0));
  const double sd = std::sqrt(variance);
  Rng rng(seed);
  PixelMatrix out = y;
  double* p = out.values.data();
  for (Index i = 0; i < out.values.size(); ++i) p[i] += sd * rng.gaussian();
  return out;
}

double measuredSnrDb(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noisy) {
  if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols()) {
    throw ShapeError("measuredSnrDb: shape mismatch");
  }
  return 10.0 * std::log10(clean.squaredNorm() / (noisy - clean).squaredNorm());
}

double rmse(const AbundanceMatrix& truth, const AbundanceMatrix& estimate) {
  if (!truth.sameShape(estimate)) {
    throw ShapeError("rmse: truth is " + truth.shapeString() +
                     ", estimate is " + estimate.shapeString());
  }
  return rootMeanSquare(truth.values, estimate.values);
}

double reconstructionError(const PixelMatrix& y, const PixelMatrix& yhat) {
  if (!y.sameShape(yhat)) {
    throw ShapeError("reconstructionError: observed is " + y.shapeString() +
                     ", reconstruction is " + yhat.shapeString());
  }
  return rootMeanSquare(y.values, yhat.values);
}

PsnrResult psnrDetailed(const PixelMatrix& yhat, const PixelMatrix& ytrue) {
  if (!yhat.sameShape(ytrue)) {
    throw ShapeError("psnr: estimate is " + yhat.shapeString() +
                     ", reference is " + ytrue.shapeString());
  }
  PsnrResult r;
  r.peak = yhat.values.maxCoeff();
  r.mse = (yhat.values - ytrue.values).squaredNorm() /
          static_cast<double>(yhat.pixels());
  r.psnr = r.mse == 0.0 ? std::numeric_limits<double>::infinity()
                        : 10.0 * std::log10(r.peak * r.peak / r.mse);
  return r;
}

}  // namespace pnpunmix
