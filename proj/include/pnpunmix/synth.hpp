#pragma once

#include <cstdint>
#include <span>

#include "pnpunmix/model.hpp"

namespace pnpunmix {

struct SceneSpec {
  Index rows = 64;
  Index cols = 64;
  Index endmembers = 4;
  Index bands = 64;
  double fieldSmoothness = 6.0;  ///< Gaussian kernel sigma of the fields, pixels
  double fieldContrast = 3.0;    ///< fields are standardized then scaled by this
  double purePixelFraction = 0.02;
  double snrDb = 20.0;           ///< +inf for a noiseless scene
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument unless P >= 2, rows, cols >= 8,
  /// bands >= P, smoothness > 0, contrast > 0, pure fraction in [0, 1].
  void validate() const;
};

/// Seeds of the P abundance fields for `spec`.
std::vector<std::uint64_t> fieldSeeds(const SceneSpec& spec);

/// Smooth Gaussian random fields mapped to the simplex by a per-pixel
/// softmax, with a purePixelFraction share of pixels snapped to the basis
/// vector of their dominant endmember.
AbundanceMatrix generateAbundances(const SceneSpec& spec);

/// As above with explicit per-field seeds (one per endmember).
AbundanceMatrix generateAbundances(const SceneSpec& spec,
                                   std::span<const std::uint64_t> seeds);

/// P smooth spectra in [0, 1] built from Gaussian bumps over the band axis,
/// drawn by rejection until every pair is at least minAngleDeg apart.
/// Throws ComputeError when the rejection budget runs out.
EndmemberMatrix generateEndmembers(Index bands, Index endmembers,
                                   std::uint64_t seed, double minAngleDeg = 5.0);

/// Smallest spectral angle between any two columns, in degrees.
double minSpectralAngleDeg(const Eigen::MatrixXd& spectra);

struct Scene {
  HsiCube noisy;
  HsiCube clean;
  AbundanceMatrix truth;
  EndmemberMatrix endmembers;
};

Scene makeScene(const SceneSpec& spec);

}  // namespace pnpunmix
