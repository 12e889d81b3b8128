#include <doctest.h>

#include <cmath>
#include <random>

#include "pnpunmix/model.hpp"

using namespace pnpunmix;

namespace {

AbundanceMatrix randomAbundances(Index P, Index rows, Index cols,
                                 std::mt19937_64& gen) {
  std::exponential_distribution<double> e(1.0);
  Eigen::MatrixXd a(P, rows * cols);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = e(gen);
  a.array().rowwise() /= a.colwise().sum().array();
  return AbundanceMatrix(a, rows, cols);
}

Eigen::MatrixXd randomMatrix(Index r, Index c, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
  return m;
}

}  // namespace

TEST_CASE("mix examples") {
  SUBCASE("single endmember") {
    Eigen::MatrixXd s(3, 1);
    s << 0.2, 0.5, 0.9;
    EndmemberMatrix M(s);
    AbundanceMatrix a(Eigen::MatrixXd::Ones(1, 4), 2, 2);
    PixelMatrix y = mix(M, a);
    for (Index n = 0; n < 4; ++n) CHECK(y.values.col(n) == s.col(0));
  }
  SUBCASE("pure pixel equals its endmember") {
    std::mt19937_64 gen(3);
    EndmemberMatrix M(randomMatrix(5, 3, gen));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 2);
    a(1, 0) = 1.0;
    a(2, 1) = 1.0;
    PixelMatrix y = mix(M, AbundanceMatrix(a, 2, 1));
    CHECK(y.values.col(0) == M.matrix().col(1));
    CHECK(y.values.col(1) == M.matrix().col(2));
  }
  SUBCASE("identity library") {
    EndmemberMatrix M(Eigen::MatrixXd::Identity(2, 2));
    Eigen::MatrixXd a(2, 1);
    a << 0.3, 0.7;
    PixelMatrix y = mix(M, AbundanceMatrix(a, 1, 1));
    CHECK(y.values(0, 0) == 0.3);
    CHECK(y.values(1, 0) == 0.7);
  }
}

TEST_CASE("mix is linear") {
  std::mt19937_64 gen(11);
  EndmemberMatrix M(randomMatrix(6, 3, gen));
  AbundanceMatrix a1 = randomAbundances(3, 4, 5, gen);
  AbundanceMatrix a2 = randomAbundances(3, 4, 5, gen);
  const double al = 0.7, be = -1.3;
  AbundanceMatrix combo(al * a1.values + be * a2.values, 4, 5);
  Eigen::MatrixXd lhs = mix(M, combo).values;
  Eigen::MatrixXd rhs = al * mix(M, a1).values + be * mix(M, a2).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mix rejects mismatched endmember count") {
  EndmemberMatrix M(Eigen::MatrixXd::Identity(3, 3));
  AbundanceMatrix a(Eigen::MatrixXd::Constant(2, 4, 0.5), 2, 2);
  CHECK_THROWS_AS(mix(M, a), ShapeError);
}

TEST_CASE("endmember validation") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 2);
  CHECK_NOTHROW(EndmemberMatrix(s));
  Eigen::MatrixXd zero = s;
  zero.col(1).setZero();
  CHECK_THROWS(EndmemberMatrix(zero));
  Eigen::MatrixXd dup(3, 2);
  dup.col(0) << 0.1, 0.2, 0.3;
  dup.col(1) = dup.col(0);
  CHECK_THROWS(EndmemberMatrix(dup));
  Eigen::MatrixXd bad = s;
  bad(0, 0) = std::nan("");
  CHECK_THROWS(EndmemberMatrix(bad));
  EndmemberMatrix named(s);
  CHECK(named.names() == std::vector<std::string>{"em0", "em1"});
}

TEST_CASE("addNoiseSnr") {
  std::mt19937_64 gen(5);
  PixelMatrix y(randomMatrix(50, 64 * 64, gen), 64, 64);
  SUBCASE("infinite SNR is a no-op") {
    CHECK(addNoiseSnr(y, kNoNoise, 1) == y);
  }
  SUBCASE("same seed, same output") {
    CHECK(addNoiseSnr(y, 10, 9) == addNoiseSnr(y, 10, 9));
    CHECK(!(addNoiseSnr(y, 10, 9) == addNoiseSnr(y, 10, 10)));
  }
  SUBCASE("measured SNR within 0.1 dB") {
    for (double snr : {5.0, 10.0, 20.0, 30.0}) {
      PixelMatrix noisy = addNoiseSnr(y, snr, 17);
      CHECK(std::abs(measuredSnrDb(y.values, noisy.values) - snr) < 0.1);
    }
  }
}

TEST_CASE("injected noise is zero-mean") {
  PixelMatrix y(Eigen::MatrixXd::Constant(100, 10000, 0.5), 100, 100);
  const double snr = 10.0;
  Eigen::MatrixXd noise = addNoiseSnr(y, snr, 23).values - y.values;
  const double sigma =
      std::sqrt(y.values.squaredNorm() / (y.values.size() * std::pow(10.0, snr / 10)));
  const double mean = noise.mean();
  CHECK(std::abs(mean) < 4 * sigma / std::sqrt(double(noise.size())));
}

TEST_CASE("rmse hand examples") {
  AbundanceMatrix a(Eigen::MatrixXd::Identity(2, 2), 2, 1);
  CHECK(rmse(a, a) == 0.0);

  Eigen::MatrixXd t(2, 1), e(2, 1);
  t << 1, 0;
  e << 0, 1;
  CHECK(rmse(AbundanceMatrix(t, 1, 1), AbundanceMatrix(e, 1, 1)) == 1.0);

  Eigen::MatrixXd base(2, 2);
  base << 0.5, 0.2,
          0.5, 0.8;
  Eigen::MatrixXd shifted = base.array() + 0.1;
  CHECK(rmse(AbundanceMatrix(base, 2, 1), AbundanceMatrix(shifted, 2, 1)) ==
        doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("psnr hand examples") {
  PixelMatrix two(Eigen::MatrixXd::Constant(1, 1, 2.0), 1, 1);
  PixelMatrix one(Eigen::MatrixXd::Constant(1, 1, 1.0), 1, 1);
  const double expected = 10.0 * std::log10(4.0);
  CHECK(psnr(two, one) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(std::abs(psnr(two, one) - 6.0206) < 5e-5);
  CHECK(std::isinf(psnr(two, two)));
  CHECK(psnr(two, two) > 0);

  auto d = psnrDetailed(two, one);
  CHECK(d.peak == 2.0);
  CHECK(d.mse == 1.0);
}

TEST_CASE("psnr divides by the pixel count only") {
  // 3 channels, 2 pixels, error 0.5 everywhere: sum over channels 0.75 per
  // pixel, mean over pixels 0.75.
  PixelMatrix yt(Eigen::MatrixXd::Zero(3, 2), 2, 1);
  PixelMatrix yh(Eigen::MatrixXd::Constant(3, 2, 0.5), 2, 1);
  auto d = psnrDetailed(yh, yt);
  CHECK(d.mse == doctest::Approx(0.75));
  CHECK(d.psnr == doctest::Approx(10 * std::log10(0.25 / 0.75)));
}

TEST_CASE("psnr is scale invariant") {
  std::mt19937_64 gen(2);
  PixelMatrix a(randomMatrix(4, 9, gen), 3, 3);
  PixelMatrix b(randomMatrix(4, 9, gen), 3, 3);
  PixelMatrix a3(3.5 * a.values, 3, 3), b3(3.5 * b.values, 3, 3);
  CHECK(psnr(a3, b3) == doctest::Approx(psnr(a, b)).epsilon(1e-12));
}

TEST_CASE("psnr decreases along a noise ladder") {
  std::mt19937_64 gen(8);
  PixelMatrix ref(randomMatrix(8, 400, gen), 20, 20);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd w(8, 400);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = g(gen);
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {0.001, 0.003, 0.01, 0.03, 0.1}) {
    PixelMatrix est(ref.values + s * w, 20, 20);
    double p = psnr(est, ref);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("reconstruction error hand examples") {
  PixelMatrix y(Eigen::MatrixXd::Constant(4, 1, 0.2), 1, 1);
  CHECK(reconstructionError(y, y) == 0.0);
  PixelMatrix yh(Eigen::MatrixXd::Constant(4, 1, 0.7), 1, 1);
  CHECK(reconstructionError(y, yh) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("rmse and RE are symmetric metrics with the triangle inequality") {
  std::mt19937_64 gen(99);
  for (int t = 0; t < 50; ++t) {
    AbundanceMatrix a = randomAbundances(3, 4, 4, gen);
    AbundanceMatrix b = randomAbundances(3, 4, 4, gen);
    AbundanceMatrix c = randomAbundances(3, 4, 4, gen);
    CHECK(rmse(a, b) == rmse(b, a));
    CHECK(rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-12);

    PixelMatrix x(randomMatrix(5, 16, gen), 4, 4);
    PixelMatrix y(randomMatrix(5, 16, gen), 4, 4);
    PixelMatrix z(randomMatrix(5, 16, gen), 4, 4);
    CHECK(reconstructionError(x, y) == reconstructionError(y, x));
    CHECK(reconstructionError(x, z) <=
          reconstructionError(x, y) + reconstructionError(y, z) + 1e-12);
  }
}

TEST_CASE("metric shape mismatch") {
  AbundanceMatrix a(Eigen::MatrixXd::Constant(2, 4, 0.5), 2, 2);
  AbundanceMatrix b(Eigen::MatrixXd::Constant(2, 6, 0.5), 2, 3);
  CHECK_THROWS_AS(rmse(a, b), ShapeError);
}

TEST_CASE("feasibility report") {
  Eigen::MatrixXd a(2, 2);
  a << 0.4, -0.1,
       0.6, 1.1;
  Feasibility f = feasibility(AbundanceMatrix(a, 2, 1));
  CHECK(f.minEntry == -0.1);
  CHECK(f.maxSumDeviation == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(!f.satisfied());
}
