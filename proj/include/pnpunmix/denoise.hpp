#pragma once

#include <Eigen/Core>

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pnpunmix/tensor.hpp"

namespace pnpunmix {

using Image = Eigen::MatrixXd;

enum class DenoiserKind { Identity, Gaussian, Nlm, Tv };

struct GaussianParams {
  double width = 1.0;  ///< spatial kernel sigma in pixels
};

struct NlmParams {
  int patchRadius = 2;
  int searchRadius = 5;
  double bandwidthScale = 10.0;  ///< h = bandwidthScale * sigma
};

struct TvParams {
  int iterations = 100;
  double weightScale = 1.0;  ///< mu = weightScale * sigma
};

struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::Identity;
  GaussianParams gaussian;
  NlmParams nlm;
  TvParams tv;

  /// Throws std::invalid_argument on radii < 1, iterations < 1 or
  /// non-positive widths/scales.
  void validate() const;
};

std::string toString(DenoiserKind kind);
/// Accepts "identity", "gaussian", "nlm", "tv".
DenoiserKind parseDenoiserKind(const std::string& name);

/// Plug-in prior: volume + noise level -> volume of the same shape.
using Denoiser = std::function<HsiCube(const HsiCube& volume, double sigma)>;

/// Separable Gaussian blur, kernel truncated at +-ceil(3 width) and
/// renormalized, replicate padding.
Image gaussianFilter(const Image& band, double width);

/// Non-local means: each pixel becomes a weighted mean of the pixels in its
/// (2 searchRadius + 1)^2 window, with weights exp(-d^2 / h^2) where d^2 is
/// the sum of squared differences between the two (2 patchRadius + 1)^2
/// patches and h = bandwidthScale * sigma. Replicate padding.
Image nlmFilter(const Image& band, double sigma, int patchRadius,
                int searchRadius, double bandwidthScale = 10.0);

/// Approximate ROF minimizer of 1/2 ||u - band||^2 + mu TV(u) (isotropic,
/// forward differences, Neumann boundary) by projected gradient on the dual
/// with step 1/8.
Image tvDenoise(const Image& band, double mu, int iterations);

/// ROF energy 1/2 ||u - f||^2 + mu TV(u) with the discretization above.
double rofEnergy(const Image& u, const Image& f, double mu);

/// Applies `filter` to every band independently (band-parallel).
HsiCube applyBandwise(const HsiCube& volume,
                      const std::function<Image(const Image&)>& filter);

/// Built-in band-wise denoiser for `spec`. sigma = 0 returns the input
/// unchanged for every kind.
Denoiser makeDenoiser(const DenoiserSpec& spec);

/// denoise(spec, volume, sigma) == makeDenoiser(spec)(volume, sigma).
HsiCube denoise(const DenoiserSpec& spec, const HsiCube& volume, double sigma);

/// Name -> denoiser factory. Pre-populated with the built-ins; external
/// denoisers (BM3D, network wrappers, ...) register a factory under their
/// own name and then become selectable wherever a name is accepted.
class DenoiserRegistry {
 public:
  using Factory = std::function<Denoiser(const DenoiserSpec&)>;

  static DenoiserRegistry withBuiltins();

  void add(const std::string& name, Factory factory);
  bool contains(const std::string& name) const;
  Denoiser create(const std::string& name, const DenoiserSpec& spec) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Factory> factories_;
};

}  // namespace pnpunmix
