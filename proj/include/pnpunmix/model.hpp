#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pnpunmix/tensor.hpp"

namespace pnpunmix {

/// L x P library of pure spectra, one column per endmember.
class EndmemberMatrix {
 public:
  EndmemberMatrix() = default;

  /// Rejects all-zero, non-finite and duplicated columns. Values outside
  /// [0, 1] only produce a warning. Missing names become "em0", "em1", ...
  explicit EndmemberMatrix(Eigen::MatrixXd spectra,
                           std::vector<std::string> names = {});

  Index bands() const { return spectra_.rows(); }
  Index endmembers() const { return spectra_.cols(); }
  const Eigen::MatrixXd& matrix() const { return spectra_; }
  const std::vector<std::string>& names() const { return names_; }

  /// Columns reordered so that column j of the result is column perm[j].
  EndmemberMatrix permuted(const std::vector<Index>& perm) const;

 private:
  Eigen::MatrixXd spectra_;
  std::vector<std::string> names_;
};

/// P x N per-pixel abundances. Feasibility (ANC/ASC) is a property of the
/// values, checked with feasibility(); it is not enforced on construction
/// because abundances read back from 32-bit files only sum to one within
/// single precision.
struct AbundanceMatrix : PixelMatrix {
  using PixelMatrix::PixelMatrix;
  AbundanceMatrix() = default;
  explicit AbundanceMatrix(PixelMatrix m) : PixelMatrix(std::move(m)) {}

  Index endmembers() const { return channels(); }
};

struct Feasibility {
  double minEntry = 0.0;
  double maxSumDeviation = 0.0;

  bool satisfied(double sumTol = 1e-8) const {
    return minEntry >= 0.0 && maxSumDeviation <= sumTol;
  }
};

Feasibility feasibility(const AbundanceMatrix& a);

/// Y = M A.
PixelMatrix mix(const EndmemberMatrix& endmembers,
                const AbundanceMatrix& abundances);

/// Adds i.i.d. zero-mean Gaussian noise with variance
/// ||Y||_F^2 / (entries * 10^(snrDb / 10)). snrDb = +inf returns the input.
PixelMatrix addNoiseSnr(const PixelMatrix& y, double snrDb, std::uint64_t seed);

/// 10 log10(||clean||^2 / ||noisy - clean||^2).
double measuredSnrDb(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noisy);

/// sqrt(mean squared entry difference); the abundance RMSE and the
/// reconstruction error RE share this form.
template <typename DerivedA, typename DerivedB>
double rootMeanSquare(const Eigen::MatrixBase<DerivedA>& a,
                      const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("rms: operand shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                     " differ");
  }
  if (a.size() == 0) return 0.0;
  return std::sqrt((a.template cast<double>() - b.template cast<double>())
                       .squaredNorm() /
                   static_cast<double>(a.size()));
}

/// Abundance RMSE: sqrt(sum_i ||a_i - ahat_i||^2 / (N P)).
double rmse(const AbundanceMatrix& truth, const AbundanceMatrix& estimate);

/// RE: sqrt(sum_i ||y_i - yhat_i||^2 / (N L)).
double reconstructionError(const PixelMatrix& y, const PixelMatrix& yhat);

struct PsnrResult {
  double psnr = 0.0;  ///< dB; +inf when mse == 0
  double mse = 0.0;   ///< sum over pixels of squared spectral error, / pixels
  double peak = 0.0;  ///< largest entry of the estimate
};

/// Reconstruction PSNR: 10 log10(peak^2 / mse) with peak = max(yhat) and
/// mse = sum_n ||yhat_n - ytrue_n||^2 / N. The squared error is summed over
/// channels and divided by the pixel count only, so values sit
/// 10 log10(L) dB below the per-element convention.
PsnrResult psnrDetailed(const PixelMatrix& yhat, const PixelMatrix& ytrue);

inline double psnr(const PixelMatrix& yhat, const PixelMatrix& ytrue) {
  return psnrDetailed(yhat, ytrue).psnr;
}

struct MetricsReport {
  std::optional<double> rmse;
  std::optional<double> psnr;
  std::optional<double> mse;
  std::optional<double> peak;
  double re = 0.0;
  std::vector<double> perIterationRmse;
};

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

}  // namespace pnpunmix
