#include "n2i/unroll.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "n2i/dct.hpp"
#include "n2i/errors.hpp"
#include "n2i/rng.hpp"

namespace n2i {

DfVariant df_variant_from_string(const std::string& s) {
  if (s == "masked_quadratic") return DfVariant::masked_quadratic;
  if (s == "full_image") return DfVariant::full_image;
  if (s == "colored_cg") return DfVariant::colored_cg;
  throw ConfigError("unknown df variant: " + s);
}

std::string to_string(DfVariant v) {
  switch (v) {
    case DfVariant::masked_quadratic: return "masked_quadratic";
    case DfVariant::full_image: return "full_image";
    case DfVariant::colored_cg: return "colored_cg";
  }
  return "unknown";
}

void UnrollConfig::validate() const {
  if (iterations < 1) throw ConfigError("unroll: iterations must be >= 1");
  if (!(cg_tol > 0.0)) throw ConfigError("unroll: cg_tol must be > 0");
  if (cg_max_iter < 1) throw ConfigError("unroll: cg_max_iter must be >= 1");
  if (fill.radius < 1) throw ConfigError("unroll: fill radius must be >= 1");
}

Tensor df_update(const Tensor& y, const Tensor& z, const MaskPartition& partition,
                 double mu) {
  if (!y.same_shape(z)) throw DimensionError("df_update: shape mismatch");
  if (y.height() != partition.height || y.width() != partition.width)
    throw DimensionError("df_update: partition shape mismatch");
  if (mu < 0.0) throw ConfigError("df_update: mu must be >= 0");
  std::vector<uint8_t> ind = partition.indicator();
  double wz = mu / (1.0 + mu);
  Tensor out = y;
  size_t hw = partition.pixel_count();
  for (int c = 0; c < y.channels(); ++c) {
    const double* yp = y.plane(c);
    const double* zp = z.plane(c);
    double* op = out.plane(c);
    for (size_t i = 0; i < hw; ++i)
      op[i] = ind[i] ? zp[i] : yp[i] + wz * (zp[i] - yp[i]);
  }
  return out;
}

Tensor df_update_full(const Tensor& y, const Tensor& z, double mu) {
  if (!y.same_shape(z)) throw DimensionError("df_update_full: shape mismatch");
  if (mu < 0.0) throw ConfigError("df_update_full: mu must be >= 0");
  double wz = mu / (1.0 + mu);
  Tensor out = y;
  for (size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = y.v[i] + wz * (z.v[i] - y.v[i]);
  return out;
}

Tensor cg_solve(const std::function<Tensor(const Tensor&)>& apply_A,
                const Tensor& b, double tol, int max_iter, CgInfo* info,
                const CgObserver& observer) {
  if (!(tol > 0.0) || max_iter < 1) throw ConfigError("cg: bad tolerance/iterations");
  Tensor x(b.shape);
  double bnorm = norm2(b);
  CgInfo local;
  CgInfo& out = info ? *info : local;
  if (bnorm == 0.0) {
    out = {0, 0.0, true};
    return x;
  }
  Tensor r = b;  // r = b - A*0
  Tensor p = r;
  double rs = dot(r, r);
  out.converged = false;
  int k = 0;
  for (; k < max_iter; ++k) {
    Tensor ap = apply_A(p);
    double pap = dot(p, ap);
    if (!std::isfinite(pap) || pap <= 0.0)
      throw NumericError("cg: operator is not positive definite");
    double alpha = rs / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    double rs_new = dot(r, r);
    if (!std::isfinite(rs_new)) throw NumericError("cg: non-finite residual");
    if (observer) observer(k + 1, x, std::sqrt(rs_new));
    if (std::sqrt(rs_new) <= tol * bnorm) {
      rs = rs_new;
      out.converged = true;
      ++k;
      break;
    }
    double beta = rs_new / rs;
    rs = rs_new;
    scale(p, beta);
    axpy(1.0, r, p);
  }
  out.iterations = k;
  out.rel_residual = std::sqrt(rs) / bnorm;
  return x;
}

namespace {

std::vector<double> plane_vec(const Tensor& t, int c) {
  return std::vector<double>(t.plane(c),
                             t.plane(c) + static_cast<size_t>(t.height()) * t.width());
}

}  // namespace

ColoredDfResult df_update_colored(const Tensor& y, const Tensor& z,
                                  const ColoredCovariance& cov, double mu,
                                  double cg_tol, int cg_max_iter) {
  if (!y.same_shape(z)) throw DimensionError("df_update_colored: shape mismatch");
  if (y.height() != cov.height || y.width() != cov.width)
    throw DimensionError("df_update_colored: covariance shape mismatch");
  if (!(mu > 0.0)) throw ConfigError("df_update_colored: mu must be > 0");

  ColoredDfResult res;
  res.x = Tensor(y.shape);
  int h = y.height(), w = y.width();
  for (int c = 0; c < y.channels(); ++c) {
    std::vector<double> rhs = apply_inverse_covariance(cov, plane_vec(y, c));
    Tensor b({1, h, w});
    for (size_t i = 0; i < rhs.size(); ++i)
      b.v[i] = rhs[i] + mu * z.plane(c)[i];
    auto apply_A = [&](const Tensor& v) {
      std::vector<double> kv = apply_inverse_covariance(
          cov, std::vector<double>(v.v.begin(), v.v.end()));
      Tensor out({1, h, w});
      for (size_t i = 0; i < kv.size(); ++i) out.v[i] = kv[i] + mu * v.v[i];
      return out;
    };
    CgInfo info;
    Tensor xc = cg_solve(apply_A, b, cg_tol, cg_max_iter, &info);
    res.cg.push_back(info);
    std::copy(xc.v.begin(), xc.v.end(), res.x.plane(c));
  }
  return res;
}

Tensor df_update_colored_masked(const Tensor& y, const Tensor& z,
                                const MaskPartition& partition,
                                const ColoredCovariance& cov, double mu) {
  if (!y.same_shape(z)) throw DimensionError("df_update_colored_masked: shape mismatch");
  if (y.height() != partition.height || y.width() != partition.width ||
      y.height() != cov.height || y.width() != cov.width)
    throw DimensionError("df_update_colored_masked: shape mismatch");
  if (!(mu > 0.0)) throw ConfigError("df_update_colored_masked: mu must be > 0");
  if (y.height() > 32 || y.width() > 32)
    throw DimensionError(
        "df_update_colored_masked: dense solve is limited to 32x32 images");

  int h = y.height(), w = y.width();
  int n = h * w;
  std::vector<uint8_t> ind = partition.indicator();
  std::vector<int> jc;  // observed positions
  for (int i = 0; i < n; ++i)
    if (!ind[static_cast<size_t>(i)]) jc.push_back(i);
  int m = static_cast<int>(jc.size());
  if (m == 0) throw DimensionError("df_update_colored_masked: empty complement");

  // Dense floored covariance (variance clamped at the whitening floor, the
  // same regularization the CG path inverts), then its J^c restriction.
  auto apply_floored = [&](const std::vector<double>& v) {
    std::vector<double> coef = dct2(cov.height, cov.width, v);
    for (size_t i = 0; i < coef.size(); ++i)
      coef[i] *= std::max(cov.variance[i], cov.floor_eps);
    return idct2(cov.height, cov.width, coef);
  };
  Eigen::MatrixXd K(n, n);
  std::vector<double> unit(static_cast<size_t>(n), 0.0);
  for (int col = 0; col < n; ++col) {
    unit[static_cast<size_t>(col)] = 1.0;
    std::vector<double> kcol = apply_floored(unit);
    unit[static_cast<size_t>(col)] = 0.0;
    for (int row = 0; row < n; ++row) K(row, col) = kcol[static_cast<size_t>(row)];
  }
  Eigen::MatrixXd Kjc(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) Kjc(a, b) = K(jc[static_cast<size_t>(a)], jc[static_cast<size_t>(b)]);
  Eigen::LLT<Eigen::MatrixXd> kllt(Kjc);
  if (kllt.info() != Eigen::Success)
    throw NumericError("df_update_colored_masked: covariance factorization failed");

  // Minimizer of ||K_Jc^{-1/2}(y_Jc - P_Jc x)||^2 + mu ||x - z||^2:
  //   (P^T K_Jc^-1 P + mu I) x = P^T K_Jc^-1 y_Jc + mu z.
  Tensor out(y.shape);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd kinv = kllt.solve(Eigen::MatrixXd::Identity(m, m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      A(jc[static_cast<size_t>(a)], jc[static_cast<size_t>(b)]) = kinv(a, b);
  A.diagonal().array() += mu;
  Eigen::LLT<Eigen::MatrixXd> allt(A);
  if (allt.info() != Eigen::Success)
    throw NumericError("df_update_colored_masked: system factorization failed");

  for (int c = 0; c < y.channels(); ++c) {
    Eigen::VectorXd yjc(m);
    for (int a = 0; a < m; ++a) yjc(a) = y.plane(c)[static_cast<size_t>(jc[static_cast<size_t>(a)])];
    Eigen::VectorXd kinv_y = kllt.solve(yjc);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < m; ++a) rhs(jc[static_cast<size_t>(a)]) = kinv_y(a);
    for (int i = 0; i < n; ++i) rhs(i) += mu * z.plane(c)[static_cast<size_t>(i)];
    Eigen::VectorXd x = allt.solve(rhs);
    for (int i = 0; i < n; ++i) out.plane(c)[static_cast<size_t>(i)] = x(i);
  }
  return out;
}

namespace {

// Deterministic internal stream for the random_neighbor fill inside the
// unroll (the public fill_masked takes an explicit seed).
constexpr uint64_t kUnrollFillSeed = 0x6E32695546494C4Cull;

Tensor apply_df(const Tensor& y, const Tensor& z, const MaskPartition* partition,
                double mu, const UnrollConfig& cfg, const ColoredCovariance* cov,
                std::vector<CgInfo>* cg_log) {
  switch (cfg.df_variant) {
    case DfVariant::masked_quadratic:
      return df_update(y, z, *partition, mu);
    case DfVariant::full_image:
      return df_update_full(y, z, mu);
    case DfVariant::colored_cg: {
      ColoredDfResult res = df_update_colored(y, z, *cov, mu, cfg.cg_tol, cfg.cg_max_iter);
      if (cg_log)
        cg_log->insert(cg_log->end(), res.cg.begin(), res.cg.end());
      return std::move(res.x);
    }
  }
  throw ConfigError("unknown df variant");
}

}  // namespace

Tensor unroll_forward(const Tensor& y, const MaskPartition* partition, double mu,
                      const UnrollConfig& config, const Regularizer& reg,
                      UnrollTrace* trace, const ColoredCovariance* cov) {
  config.validate();
  if (config.df_variant == DfVariant::masked_quadratic && !partition)
    throw ConfigError("unroll: masked_quadratic requires a partition");
  if (config.df_variant == DfVariant::colored_cg && !cov)
    throw ConfigError("unroll: colored_cg requires a covariance");
  if (mu < 0.0) throw ConfigError("unroll: mu must be >= 0");

  bool masked = config.df_variant == DfVariant::masked_quadratic;
  Tensor z = masked ? fill_masked(y, *partition, config.fill, kUnrollFillSeed) : y;
  if (trace) {
    trace->z0 = z;
    trace->x.clear();
    trace->z.clear();
    trace->reg_acts.clear();
    trace->cg.clear();
  }
  for (int k = 0; k < config.iterations; ++k) {
    Tensor x = apply_df(y, z, partition, mu, config, cov, trace ? &trace->cg : nullptr);
    if (trace) {
      std::any acts;
      z = reg.trainable() ? reg.apply_traced(x, acts) : reg.apply(x);
      trace->reg_acts.push_back(std::move(acts));
      trace->x.push_back(std::move(x));
      trace->z.push_back(z);
    } else {
      z = reg.apply(x);
    }
  }
  Tensor out = apply_df(y, z, partition, mu, config, cov, trace ? &trace->cg : nullptr);
  if (trace) trace->output = out;
  return out;
}

namespace {

// Backward through x = df(y, z): returns dL/dz and accumulates dL/dmu.
Tensor df_backward(const Tensor& g, const Tensor& y, const Tensor& z_in,
                   const MaskPartition* partition, double mu, double* dmu) {
  Tensor dz = g;
  double wz = mu / (1.0 + mu);
  double wmu = 1.0 / ((1.0 + mu) * (1.0 + mu));
  size_t hw = static_cast<size_t>(y.height()) * y.width();
  std::vector<uint8_t> ind;
  if (partition) ind = partition->indicator();
  for (int c = 0; c < y.channels(); ++c) {
    const double* yp = y.plane(c);
    const double* zp = z_in.plane(c);
    double* gp = dz.plane(c);
    for (size_t i = 0; i < hw; ++i) {
      bool on_j = partition && ind[i];
      if (!on_j) {
        *dmu += gp[i] * (zp[i] - yp[i]) * wmu;
        gp[i] *= wz;
      }
      // on J the blend is identity in z, gradient passes through unchanged
    }
  }
  return dz;
}

}  // namespace

double unroll_backward(const Tensor& y, const MaskPartition* partition, double mu,
                       const UnrollConfig& config, const Regularizer& reg,
                       const UnrollTrace& trace, const Tensor& upstream,
                       NetParams& grads) {
  config.validate();
  if (config.df_variant == DfVariant::colored_cg)
    throw ConfigError("unroll backward: colored_cg is inference-only");
  if (static_cast<int>(trace.z.size()) != config.iterations ||
      static_cast<int>(trace.x.size()) != config.iterations)
    throw NumericError("unroll backward: trace does not match configuration");
  const MaskPartition* part =
      config.df_variant == DfVariant::masked_quadratic ? partition : nullptr;
  if (config.df_variant == DfVariant::masked_quadratic && !partition)
    throw ConfigError("unroll backward: masked_quadratic requires a partition");
  if (!reg.trainable())
    throw NumericError("unroll backward: regularizer is not trainable");

  double dmu = 0.0;
  // final DF consumed z^(K); z^(0) is the filled input with nothing upstream
  Tensor gz = df_backward(upstream, y, trace.z.back(), part, mu, &dmu);
  for (int k = config.iterations - 1; k >= 0; --k) {
    Tensor gx = reg.backward(trace.reg_acts[static_cast<size_t>(k)], gz, grads);
    const Tensor& z_in = k == 0 ? trace.z0 : trace.z[static_cast<size_t>(k - 1)];
    gz = df_backward(gx, y, z_in, part, mu, &dmu);
  }
  return dmu;
}

}  // namespace n2i
