#include "pnpunmix/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pnpunmix/parallel.hpp"

namespace pnpunmix {

void DenoiserSpec::validate() const {
  if (!(gaussian.width > 0.0)) {
    throw std::invalid_argument("gaussian width must be positive");
  }
  if (nlm.patchRadius < 1 || nlm.searchRadius < 1) {
    throw std::invalid_argument("nlm patch and search radii must be >= 1");
  }
  if (!(nlm.bandwidthScale > 0.0)) {
    throw std::invalid_argument("nlm bandwidth scale must be positive");
  }
  if (tv.iterations < 1) {
    throw std::invalid_argument("tv iteration budget must be >= 1");
  }
  if (!(tv.weightScale > 0.0)) {
    throw std::invalid_argument("tv weight scale must be positive");
  }
}

std::string toString(DenoiserKind kind) {
  switch (kind) {
    case DenoiserKind::Identity: return "identity";
    case DenoiserKind::Gaussian: return "gaussian";
    case DenoiserKind::Nlm: return "nlm";
    case DenoiserKind::Tv: return "tv";
  }
  return "identity";
}

DenoiserKind parseDenoiserKind(const std::string& name) {
  if (name == "identity") return DenoiserKind::Identity;
  if (name == "gaussian") return DenoiserKind::Gaussian;
  if (name == "nlm") return DenoiserKind::Nlm;
  if (name == "tv") return DenoiserKind::Tv;
  throw std::invalid_argument("unknown denoiser '" + name + "'");
}

namespace {

Index clampIndex(Index i, Index n) { return std::clamp<Index>(i, 0, n - 1); }

// Replicate-padded copy with `pad` extra pixels on every side.
Image padReplicate(const Image& band, Index pad) {
  const Index rows = band.rows();
  const Index cols = band.cols();
  Image out(rows + 2 * pad, cols + 2 * pad);
  for (Index x = 0; x < out.cols(); ++x) {
    const Index sx = clampIndex(x - pad, cols);
    for (Index y = 0; y < out.rows(); ++y) {
      out(y, x) = band(clampIndex(y - pad, rows), sx);
    }
  }
  return out;
}

// Forward differences with zero flux across the last row/column.
void gradient(const Image& u, Image& gx, Image& gy) {
  const Index rows = u.rows();
  const Index cols = u.cols();
  gx.setZero(rows, cols);
  gy.setZero(rows, cols);
  for (Index x = 0; x < cols; ++x) {
    for (Index y = 0; y < rows; ++y) {
      if (y + 1 < rows) gx(y, x) = u(y + 1, x) - u(y, x);
      if (x + 1 < cols) gy(y, x) = u(y, x + 1) - u(y, x);
    }
  }
}

// Negative adjoint of gradient().
void divergence(const Image& px, const Image& py, Image& div) {
  const Index rows = px.rows();
  const Index cols = px.cols();
  div.resize(rows, cols);
  for (Index x = 0; x < cols; ++x) {
    for (Index y = 0; y < rows; ++y) {
      double d = 0.0;
      if (y + 1 < rows) d += px(y, x);
      if (y > 0) d -= px(y - 1, x);
      if (x + 1 < cols) d += py(y, x);
      if (x > 0) d -= py(y, x - 1);
      div(y, x) = d;
    }
  }
}

}  // namespace

Image gaussianFilter(const Image& band, double width) {
  if (!(width > 0.0)) {
    throw std::invalid_argument("gaussianFilter: width must be positive");
  }
  const Index radius = static_cast<Index>(std::ceil(3.0 * width));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (Index j = -radius; j <= radius; ++j) {
    const double w = std::exp(-0.5 * static_cast<double>(j * j) / (width * width));
    kernel[j + radius] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;

  const Index rows = band.rows();
  const Index cols = band.cols();
  Image vertical(rows, cols);
  for (Index x = 0; x < cols; ++x) {
    for (Index y = 0; y < rows; ++y) {
      double acc = 0.0;
      for (Index j = -radius; j <= radius; ++j) {
        acc += kernel[j + radius] * band(clampIndex(y + j, rows), x);
      }
      vertical(y, x) = acc;
    }
  }
  Image out(rows, cols);
  for (Index x = 0; x < cols; ++x) {
    for (Index y = 0; y < rows; ++y) {
      double acc = 0.0;
      for (Index j = -radius; j <= radius; ++j) {
        acc += kernel[j + radius] * vertical(y, clampIndex(x + j, cols));
      }
      out(y, x) = acc;
    }
  }
  return out;
}

Image nlmFilter(const Image& band, double sigma, int patchRadius,
                int searchRadius, double bandwidthScale) {
  if (patchRadius < 1 || searchRadius < 1) {
    throw std::invalid_argument("nlmFilter: radii must be >= 1");
  }
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("nlmFilter: sigma must be >= 0");
  }
  if (sigma == 0.0) return band;

  const Index rows = band.rows();
  const Index cols = band.cols();
  const Index pr = patchRadius;
  const Index sr = searchRadius;
  const Index pad = pr + sr;
  const Image padded = padReplicate(band, pad);
  const double h = bandwidthScale * sigma;
  const double invH2 = 1.0 / (h * h);

  // Squared differences live on the (rows + 2pr) x (cols + 2pr) patch
  // support; the integral image has one extra leading row and column.
  const Index dRows = rows + 2 * pr;
  const Index dCols = cols + 2 * pr;
  Image integral = Image::Zero(dRows + 1, dCols + 1);
  Image numerator = Image::Zero(rows, cols);
  Image denominator = Image::Zero(rows, cols);
  const Index side = 2 * pr + 1;

  for (Index dx = -sr; dx <= sr; ++dx) {
    for (Index dy = -sr; dy <= sr; ++dy) {
      for (Index x = 0; x < dCols; ++x) {
        double column = 0.0;
        for (Index y = 0; y < dRows; ++y) {
          const double diff =
              padded(y + sr, x + sr) - padded(y + sr + dy, x + sr + dx);
          column += diff * diff;
          integral(y + 1, x + 1) = integral(y + 1, x) + column;
        }
      }
      for (Index x = 0; x < cols; ++x) {
        for (Index y = 0; y < rows; ++y) {
          const double distance = integral(y + side, x + side) -
                                  integral(y, x + side) -
                                  integral(y + side, x) + integral(y, x);
          const double w = std::exp(-std::max(distance, 0.0) * invH2);
          numerator(y, x) += w * padded(y + pad + dy, x + pad + dx);
          denominator(y, x) += w;
        }
      }
    }
  }
  return numerator.cwiseQuotient(denominator);
}

double rofEnergy(const Image& u, const Image& f, double mu) {
  Image gx;
  Image gy;
  gradient(u, gx, gy);
  const double tv = (gx.array().square() + gy.array().square()).sqrt().sum();
  return 0.5 * (u - f).squaredNorm() + mu * tv;
}

Image tvDenoise(const Image& band, double mu, int iterations) {
  if (iterations < 1) {
    throw std::invalid_argument("tvDenoise: iterations must be >= 1");
  }
  if (!(mu >= 0.0)) throw std::invalid_argument("tvDenoise: mu must be >= 0");
  if (mu == 0.0) return band;

  constexpr double kStep = 1.0 / 8.0;
  const Index rows = band.rows();
  const Index cols = band.cols();
  Image px = Image::Zero(rows, cols);
  Image py = Image::Zero(rows, cols);
  Image div = Image::Zero(rows, cols);
  Image gx;
  Image gy;
  const Image scaled = band / mu;

  for (int it = 0; it < iterations; ++it) {
    gradient(div - scaled, gx, gy);
    px += kStep * gx;
    py += kStep * gy;
    const Eigen::ArrayXXd norm =
        (px.array().square() + py.array().square()).sqrt().max(1.0);
    px.array() /= norm;
    py.array() /= norm;
    divergence(px, py, div);
  }

  // Clamping to the data range cannot raise the ROF energy and enforces
  // the maximum principle that the exact minimizer satisfies.
  const double lo = band.minCoeff();
  const double hi = band.maxCoeff();
  return (band - mu * div).cwiseMax(lo).cwiseMin(hi);
}

HsiCube applyBandwise(const HsiCube& volume,
                      const std::function<Image(const Image&)>& filter) {
  HsiCube out(volume.bands(), volume.rows(), volume.cols());
  const Index bands = volume.bands();
#pragma omp parallel for schedule(static) num_threads(threadCount())
  for (Index b = 0; b < bands; ++b) {
    out.band(b) = filter(Image(volume.band(b)));
  }
  return out;
}

Denoiser makeDenoiser(const DenoiserSpec& spec) {
  spec.validate();
  auto guard = [](const HsiCube& volume, double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("denoiser sigma must be finite and >= 0");
    }
    if (!volume.allFinite()) {
      throw std::invalid_argument("denoiser input contains non-finite values");
    }
  };
  switch (spec.kind) {
    case DenoiserKind::Identity:
      return [guard](const HsiCube& v, double sigma) {
        guard(v, sigma);
        return v;
      };
    case DenoiserKind::Gaussian:
      return [guard, p = spec.gaussian](const HsiCube& v, double sigma) {
        guard(v, sigma);
        if (sigma == 0.0) return v;
        return applyBandwise(v, [&](const Image& b) {
          return gaussianFilter(b, p.width);
        });
      };
    case DenoiserKind::Nlm:
      return [guard, p = spec.nlm](const HsiCube& v, double sigma) {
        guard(v, sigma);
        if (sigma == 0.0) return v;
        return applyBandwise(v, [&](const Image& b) {
          return nlmFilter(b, sigma, p.patchRadius, p.searchRadius,
                           p.bandwidthScale);
        });
      };
    case DenoiserKind::Tv:
      return [guard, p = spec.tv](const HsiCube& v, double sigma) {
        guard(v, sigma);
        if (sigma == 0.0) return v;
        return applyBandwise(v, [&](const Image& b) {
          return tvDenoise(b, p.weightScale * sigma, p.iterations);
        });
      };
  }
  throw std::invalid_argument("unhandled denoiser kind");
}

HsiCube denoise(const DenoiserSpec& spec, const HsiCube& volume, double sigma) {
  return makeDenoiser(spec)(volume, sigma);
}

DenoiserRegistry DenoiserRegistry::withBuiltins() {
  DenoiserRegistry registry;
  for (DenoiserKind kind : {DenoiserKind::Identity, DenoiserKind::Gaussian,
                            DenoiserKind::Nlm, DenoiserKind::Tv}) {
    registry.add(toString(kind), [kind](const DenoiserSpec& spec) {
      DenoiserSpec s = spec;
      s.kind = kind;
      return makeDenoiser(s);
    });
  }
  return registry;
}

void DenoiserRegistry::add(const std::string& name, Factory factory) {
  if (name.empty()) throw std::invalid_argument("denoiser name is empty");
  factories_[name] = std::move(factory);
}

bool DenoiserRegistry::contains(const std::string& name) const {
  return factories_.count(name) != 0;
}

Denoiser DenoiserRegistry::create(const std::string& name,
                                  const DenoiserSpec& spec) const {
  const auto it = factories_.find(name);
  if (it == factories_.end()) {
    throw std::invalid_argument("no denoiser registered as '" + name + "'");
  }
  return it->second(spec);
}

std::vector<std::string> DenoiserRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& entry : factories_) out.push_back(entry.first);
  return out;
}

}  // namespace pnpunmix
