#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "n2i/dct.hpp"
#include "n2i/errors.hpp"
#include "n2i/noise.hpp"
#include "n2i/rng.hpp"
#include "testutil.hpp"

using namespace n2i;

TEST_CASE("dct2: inverse pair, DC of a constant, Parseval") {
  int h = 13, w = 9;
  Tensor x = test::random_tensor({1, h, w}, 21, -1.0, 1.0);
  std::vector<double> plane(x.v.begin(), x.v.end());

  auto coef = dct2(h, w, plane);
  auto back = idct2(h, w, coef);
  double num = 0, den = 0;
  for (size_t i = 0; i < plane.size(); ++i) {
    num += (back[i] - plane[i]) * (back[i] - plane[i]);
    den += plane[i] * plane[i];
  }
  CHECK(std::sqrt(num / den) < 1e-10);

  std::vector<double> c(static_cast<size_t>(h) * w, 3.25);
  auto cc = dct2(h, w, c);
  CHECK(cc[0] == doctest::Approx(3.25 * std::sqrt(static_cast<double>(h) * w)));
  for (size_t i = 1; i < cc.size(); ++i) CHECK(std::fabs(cc[i]) < 1e-10);

  double e_pix = 0, e_coef = 0;
  for (double v : plane) e_pix += v * v;
  for (double v : coef) e_coef += v * v;
  CHECK(e_coef == doctest::Approx(e_pix).epsilon(1e-10));
}

TEST_CASE("corrupt: sigma 0 is the identity and seeds reproduce bitwise") {
  Image img = test::random_image(16, 16, 1, 255.0, 4);
  NoiseSpec spec;
  spec.kind = NoiseKind::gaussian;
  spec.sigma = 0.0;
  spec.seed = 5;
  CHECK(corrupt(img, spec).data == img.data);

  spec.sigma = 25.0;
  Image a = corrupt(img, spec);
  Image b = corrupt(img, spec);
  CHECK(a.data == b.data);
  spec.seed = 6;
  CHECK(corrupt(img, spec).data != a.data);
}

TEST_CASE("corrupt: bernoulli 0.5 blacks out half the pixels") {
  Image ones = Image::constant(256, 256, 1, 1.0, 1.0);
  NoiseSpec spec;
  spec.kind = NoiseKind::bernoulli;
  spec.p = 0.5;
  spec.seed = 7;
  Image out = corrupt(ones, spec);
  double zeros = 0;
  for (double v : out.data)
    if (v == 0.0) zeros += 1;
  CHECK(zeros / out.data.size() == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("corrupt: gaussian sigma 25 empirical std over 1e6 pixels") {
  Image img = Image::constant(1000, 1000, 1, 255.0, 128.0);
  NoiseSpec spec;
  spec.kind = NoiseKind::gaussian;
  spec.sigma = 25.0;
  spec.seed = 8;
  Image out = corrupt(img, spec);
  double mean = 0;
  for (size_t i = 0; i < out.data.size(); ++i) mean += out.data[i] - img.data[i];
  mean /= out.data.size();
  double var = 0;
  for (size_t i = 0; i < out.data.size(); ++i) {
    double d = out.data[i] - img.data[i] - mean;
    var += d * d;
  }
  var /= out.data.size();
  CHECK(std::sqrt(var) == doctest::Approx(25.0).epsilon(0.02));
  // mean-preservation: |mean| < 3 sigma / sqrt(N)
  CHECK(std::fabs(mean) < 3.0 * 25.0 / 1000.0);
}

TEST_CASE("corrupt: poisson preserves the expected value within 1%") {
  Image img = Image::constant(1000, 1000, 1, 255.0, 255.0);
  NoiseSpec spec;
  spec.kind = NoiseKind::poisson;
  spec.lambda = 30.0;
  spec.seed = 9;
  Image out = corrupt(img, spec);
  double mean = 0;
  for (double v : out.data) mean += v;
  mean /= out.data.size();
  CHECK(mean / 255.0 == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("corrupt: mixture applies components in listed order") {
  Image img = test::random_image(64, 64, 1, 255.0, 10);
  NoiseSpec mix;
  mix.kind = NoiseKind::mixture;
  mix.seed = 11;
  NoiseSpec poisson;
  poisson.kind = NoiseKind::poisson;
  poisson.lambda = 30.0;
  NoiseSpec gauss;
  gauss.kind = NoiseKind::gaussian;
  gauss.sigma = 80.0;
  NoiseSpec bern;
  bern.kind = NoiseKind::bernoulli;
  bern.p = 0.2;
  mix.components = {poisson, gauss, bern};

  Image out = corrupt(img, mix);

  // staged replay with the derived per-component seeds must agree exactly
  Image staged = img;
  NoiseSpec c0 = poisson;
  c0.seed = derive_seed(mix.seed, "mixture", 0);
  staged = corrupt(staged, c0);
  NoiseSpec c1 = gauss;
  c1.seed = derive_seed(mix.seed, "mixture", 1);
  staged = corrupt(staged, c1);
  NoiseSpec c2 = bern;
  c2.seed = derive_seed(mix.seed, "mixture", 2);
  staged = corrupt(staged, c2);
  CHECK(out.data == staged.data);

  // bernoulli last: blackout fraction is visible in the final image
  double zeros = 0;
  for (double v : out.data)
    if (v == 0.0) zeros += 1;
  CHECK(zeros / out.data.size() == doctest::Approx(0.2).epsilon(0.15));
}

TEST_CASE("sample_colored: stop-band is exactly zero and energy is calibrated") {
  ColoredCovariance cov = ColoredCovariance::band_pass(32, 32, 4, 12, 100.0);
  double scale = 0.0;
  for (double v : cov.variance) scale = std::max(scale, v);

  double energy_sum = 0.0;
  for (int s = 0; s < 1000; ++s) {
    auto n = sample_colored(cov, derive_seed(123, "smp", s));
    auto coef = dct2(32, 32, n);
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        bool pass = i >= 4 && i < 12 && j >= 4 && j < 12;
        if (!pass)
          CHECK(std::fabs(coef[static_cast<size_t>(i) * 32 + j]) <
                1e-9 * std::sqrt(scale));
      }
    double e = 0;
    for (double v : n) e += v * v;
    energy_sum += e / (32.0 * 32.0);
  }
  CHECK(energy_sum / 1000.0 == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("apply_covariance: operator algebra") {
  ColoredCovariance cov = ColoredCovariance::band_pass(8, 8, 1, 5, 50.0);
  int n = 64;

  // inverse on the range of K (passband-supported vectors)
  std::vector<double> coef(static_cast<size_t>(n), 0.0);
  Rng rng(31);
  for (int i = 1; i < 5; ++i)
    for (int j = 1; j < 5; ++j)
      coef[static_cast<size_t>(i) * 8 + j] = rng.uniform(-1.0, 1.0);
  auto v = idct2(8, 8, coef);
  auto kv = apply_covariance(cov, v);
  auto back = apply_inverse_covariance(cov, kv);
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += (back[static_cast<size_t>(i)] - v[static_cast<size_t>(i)]) *
           (back[static_cast<size_t>(i)] - v[static_cast<size_t>(i)]);
    den += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
  }
  CHECK(std::sqrt(num / den) < 1e-8);

  // DC lies in the stop band: K maps a constant image to zero
  std::vector<double> dc(static_cast<size_t>(n), 1.0);
  for (double x : apply_covariance(cov, dc)) CHECK(std::fabs(x) < 1e-12);

  // dense assembly is symmetric PSD
  Eigen::MatrixXd K(n, n);
  std::vector<double> unit(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < n; ++c) {
    unit[static_cast<size_t>(c)] = 1.0;
    auto col = apply_covariance(cov, unit);
    unit[static_cast<size_t>(c)] = 0.0;
    for (int r = 0; r < n; ++r) K(r, c) = col[static_cast<size_t>(r)];
  }
  CHECK((K - K.transpose()).norm() < 1e-10 * K.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  CHECK(es.eigenvalues().minCoeff() > -1e-10 * K.norm());

  // <Kv, w> = <v, Kw> and <Kv, v> >= 0 on random vectors
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a(static_cast<size_t>(n)), b(static_cast<size_t>(n));
    for (auto& x : a) x = rng.uniform(-1.0, 1.0);
    for (auto& x : b) x = rng.uniform(-1.0, 1.0);
    auto ka = apply_covariance(cov, a);
    auto kb = apply_covariance(cov, b);
    double kab = 0, akb = 0, kaa = 0;
    for (int i = 0; i < n; ++i) {
      kab += ka[static_cast<size_t>(i)] * b[static_cast<size_t>(i)];
      akb += a[static_cast<size_t>(i)] * kb[static_cast<size_t>(i)];
      kaa += ka[static_cast<size_t>(i)] * a[static_cast<size_t>(i)];
    }
    CHECK(kab == doctest::Approx(akb).epsilon(1e-10));
    CHECK(kaa >= -1e-12);
  }
}

TEST_CASE("sample_colored: empirical covariance matches the operator") {
  ColoredCovariance cov = ColoredCovariance::band_pass(8, 8, 1, 5, 50.0);
  int n = 64;
  int samples = 100000;
  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < samples; ++s) {
    auto v = sample_colored(cov, derive_seed(222, "cov", s));
    Eigen::Map<Eigen::VectorXd> vec(v.data(), n);
    emp.noalias() += vec * vec.transpose();
  }
  emp /= static_cast<double>(samples);

  Eigen::MatrixXd K(n, n);
  std::vector<double> unit(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < n; ++c) {
    unit[static_cast<size_t>(c)] = 1.0;
    auto col = apply_covariance(cov, unit);
    unit[static_cast<size_t>(c)] = 0.0;
    for (int r = 0; r < n; ++r) K(r, c) = col[static_cast<size_t>(r)];
  }
  CHECK((emp - K).norm() / K.norm() < 0.10);
}

TEST_CASE("noise specs validate their parameters") {
  NoiseSpec bad;
  bad.kind = NoiseKind::gaussian;
  bad.sigma = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.kind = NoiseKind::bernoulli;
  bad.p = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.kind = NoiseKind::poisson;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(ColoredCovariance::band_pass(8, 8, 0, 1, 10.0), ConfigError);
  CHECK_THROWS_AS(ColoredCovariance::band_pass(8, 8, 2, 12, 10.0), ConfigError);
}
