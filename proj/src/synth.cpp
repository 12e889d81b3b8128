#include "pnpunmix/synth.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "pnpunmix/denoise.hpp"
#include "pnpunmix/log.hpp"
#include "pnpunmix/random.hpp"

namespace pnpunmix {

namespace {
constexpr std::uint64_t kEndmemberStream = 1;
constexpr std::uint64_t kPurePixelStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kFieldStreamBase = 100;
constexpr int kRejectionBudget = 1000;
}  // namespace

void SceneSpec::validate() const {
  if (endmembers < 2) throw std::invalid_argument("scene needs P >= 2");
  if (rows < 8 || cols < 8) {
    throw std::invalid_argument("scene needs at least 8x8 pixels");
  }
  if (bands < endmembers) {
    throw std::invalid_argument("scene needs at least as many bands as endmembers");
  }
  if (!(fieldSmoothness > 0.0)) {
    throw std::invalid_argument("field smoothness must be positive");
  }
  if (!(fieldContrast > 0.0)) {
    throw std::invalid_argument("field contrast must be positive");
  }
  if (!(purePixelFraction >= 0.0 && purePixelFraction <= 1.0)) {
    throw std::invalid_argument("pure pixel fraction must lie in [0, 1]");
  }
  if (std::isnan(snrDb) || snrDb == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("SNR must be a number or +inf");
  }
}

std::vector<std::uint64_t> fieldSeeds(const SceneSpec& spec) {
  std::vector<std::uint64_t> seeds;
  for (Index j = 0; j < spec.endmembers; ++j) {
    seeds.push_back(deriveSeed(spec.seed, kFieldStreamBase + j));
  }
  return seeds;
}

AbundanceMatrix generateAbundances(const SceneSpec& spec) {
  const auto seeds = fieldSeeds(spec);
  return generateAbundances(spec, seeds);
}

AbundanceMatrix generateAbundances(const SceneSpec& spec,
                                   std::span<const std::uint64_t> seeds) {
  spec.validate();
  if (static_cast<Index>(seeds.size()) != spec.endmembers) {
    throw ShapeError("need one field seed per endmember");
  }
  const Index p = spec.endmembers;
  const Index n = spec.rows * spec.cols;
  // White noise is drawn on a margin-extended canvas so the cropped field
  // carries no boundary artifacts from the smoothing kernel.
  const Index margin = static_cast<Index>(std::ceil(3.0 * spec.fieldSmoothness));

  Eigen::MatrixXd fields(p, n);
  for (Index j = 0; j < p; ++j) {
    Rng rng(seeds[j]);
    Image noise(spec.rows + 2 * margin, spec.cols + 2 * margin);
    for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.gaussian();
    const Image smooth = gaussianFilter(noise, spec.fieldSmoothness)
                             .block(margin, margin, spec.rows, spec.cols);
    const Eigen::Map<const Eigen::RowVectorXd> flat(smooth.data(), n);
    const double mean = flat.mean();
    const double sd = std::sqrt((flat.array() - mean).square().mean());
    fields.row(j) = (flat.array() - mean) * (spec.fieldContrast / sd);
  }

  Eigen::MatrixXd a(p, n);
  for (Index i = 0; i < n; ++i) {
    const double peak = fields.col(i).maxCoeff();
    a.col(i) = (fields.col(i).array() - peak).exp();
    a.col(i) /= a.col(i).sum();
  }

  const auto pureCount = static_cast<Index>(
      std::llround(spec.purePixelFraction * static_cast<double>(n)));
  if (pureCount > 0) {
    Rng rng(deriveSeed(spec.seed, kPurePixelStream));
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    for (Index s = 0; s < pureCount; ++s) {
      const Index pick = s + static_cast<Index>(rng.below(n - s));
      std::swap(order[s], order[pick]);
      Index dominant = 0;
      a.col(order[s]).maxCoeff(&dominant);
      a.col(order[s]).setZero();
      a(dominant, order[s]) = 1.0;
    }
  }
  return AbundanceMatrix(std::move(a), spec.rows, spec.cols);
}

double minSpectralAngleDeg(const Eigen::MatrixXd& spectra) {
  double smallest = 180.0;
  for (Index j = 0; j < spectra.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      const double c = spectra.col(i).dot(spectra.col(j)) /
                       (spectra.col(i).norm() * spectra.col(j).norm());
      smallest = std::min(smallest,
                          std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 /
                              std::numbers::pi);
    }
  }
  return smallest;
}

EndmemberMatrix generateEndmembers(Index bands, Index endmembers,
                                   std::uint64_t seed, double minAngleDeg) {
  if (endmembers < 1 || bands < endmembers) {
    throw std::invalid_argument("generateEndmembers: need bands >= endmembers >= 1");
  }
  Rng rng(seed);
  Eigen::MatrixXd spectra(bands, endmembers);
  const double span = bands > 1 ? static_cast<double>(bands - 1) : 1.0;

  for (Index j = 0; j < endmembers; ++j) {
    bool accepted = false;
    for (int attempt = 0; attempt < kRejectionBudget && !accepted; ++attempt) {
      const double base = rng.uniform(0.1, 0.4);
      const double slope = rng.uniform(-0.2, 0.2);
      const int bumps = 2 + static_cast<int>(rng.below(4));
      Eigen::VectorXd s(bands);
      for (Index b = 0; b < bands; ++b) {
        s[b] = base + slope * (static_cast<double>(b) / span - 0.5);
      }
      for (int k = 0; k < bumps; ++k) {
        const double amplitude = rng.uniform(-0.25, 0.5);
        const double center = rng.uniform();
        const double width = rng.uniform(0.03, 0.2);
        for (Index b = 0; b < bands; ++b) {
          const double x = static_cast<double>(b) / span - center;
          s[b] += amplitude * std::exp(-0.5 * x * x / (width * width));
        }
      }
      s = s.cwiseMax(0.01).cwiseMin(0.99);
      spectra.col(j) = s;
      accepted = j == 0 || minSpectralAngleDeg(spectra.leftCols(j + 1)) >= minAngleDeg;
    }
    if (!accepted) {
      throw ComputeError("generateEndmembers: no spectrum " + std::to_string(j) +
                         " at least " + std::to_string(minAngleDeg) +
                         " degrees from the others after " +
                         std::to_string(kRejectionBudget) + " draws");
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(spectra);
  const auto& sv = svd.singularValues();
  log::info("endmember Gram condition number " +
            std::to_string(std::pow(sv[0] / sv[sv.size() - 1], 2)));
  return EndmemberMatrix(std::move(spectra));
}

Scene makeScene(const SceneSpec& spec) {
  spec.validate();
  EndmemberMatrix endmembers = generateEndmembers(
      spec.bands, spec.endmembers, deriveSeed(spec.seed, kEndmemberStream));
  AbundanceMatrix truth = generateAbundances(spec);
  const PixelMatrix clean = mix(endmembers, truth);
  const PixelMatrix noisy =
      addNoiseSnr(clean, spec.snrDb, deriveSeed(spec.seed, kNoiseStream));
  return Scene{fold(noisy), fold(clean), std::move(truth), std::move(endmembers)};
}

}  // namespace pnpunmix
