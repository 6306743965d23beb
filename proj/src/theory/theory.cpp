#include "flowbench/theory/theory.hpp"

#include "flowbench/error.hpp"
#include "flowbench/flow/train.hpp"
#include "flowbench/numeric/parallel.hpp"
#include "flowbench/scoring/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowbench {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 pi)

void require_positive_sigma(double s, const char* name) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument(std::string(name) + " must be positive");
}

// Cholesky factor of a spec's covariance, materialised for the isotropic case.
Matrix chol_of(const GaussianSpec& g) {
  if (g.chol.size() > 0) return g.chol;
  require_positive_sigma(g.sigma, "sigma");
  return Matrix::Identity(g.dim(), g.dim()) * g.sigma;
}

double log_det_chol(const Matrix& l) {
  double s = 0.0;
  for (Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

// Running mean and variance, merged from chunk results.
struct Moments {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  MonteCarloEstimate estimate() const {
    return {mean, n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0, n};
  }
};

constexpr Index kChunk = 1 << 14;

template <class F>
void for_each_chunk(long n, F&& f) {
  for (long done = 0; done < n;) {
    const Index m = static_cast<Index>(std::min<long>(kChunk, n - done));
    f(m);
    done += m;
  }
}

}  // namespace

double gaussian_entropy(Index d, double sigma) {
  require_positive_sigma(sigma, "sigma");
  if (d < 1) throw InvalidArgument("dimension must be positive");
  return 0.5 * static_cast<double>(d) * (kLog2Pi + 1.0 + 2.0 * std::log(sigma));
}

double gaussian_entropy(const GaussianSpec& g) {
  if (g.chol.size() == 0) return gaussian_entropy(g.dim(), g.sigma);
  return 0.5 * static_cast<double>(g.dim()) * (kLog2Pi + 1.0) + 0.5 * log_det_chol(g.chol);
}

double gaussian_kl_isotropic(const Vector& mu_p, double sigma_p, const Vector& mu_q, double sigma_q) {
  require_positive_sigma(sigma_p, "sigma_p");
  require_positive_sigma(sigma_q, "sigma_q");
  if (mu_p.size() != mu_q.size()) throw DimMismatch("mean vectors differ in length");
  const double d = static_cast<double>(mu_p.size());
  const double r = sigma_q * sigma_q / (sigma_p * sigma_p);
  return 0.5 * ((mu_p - mu_q).squaredNorm() / (sigma_p * sigma_p) + 2.0 * d * std::log(sigma_p / sigma_q) +
                d * r - d);
}

double gaussian_kl_isotropic(double mu_p, double sigma_p, double mu_q, double sigma_q, Index d) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  return gaussian_kl_isotropic(Vector::Constant(d, mu_p), sigma_p, Vector::Constant(d, mu_q), sigma_q);
}

double gaussian_kl(const GaussianSpec& q, const GaussianSpec& p) {
  if (p.dim() != q.dim()) throw DimMismatch("P and Q have different dimensions");
  if (p.chol.size() == 0 && q.chol.size() == 0) return gaussian_kl_isotropic(p.mean, p.sigma, q.mean, q.sigma);
  const Matrix lp = chol_of(p);
  const Matrix lq = chol_of(q);
  const auto lpt = lp.triangularView<Eigen::Lower>();
  const double trace = lpt.solve(lq).squaredNorm();
  const Vector diff = p.mean - q.mean;
  const double maha = lpt.solve(diff).squaredNorm();
  const double d = static_cast<double>(p.dim());
  return 0.5 * (trace + maha - d + log_det_chol(lp) - log_det_chol(lq));
}

Vector gaussian_log_density(const GaussianSpec& g, const Matrix& x) {
  if (x.cols() != g.dim()) throw DimMismatch("rows have " + std::to_string(x.cols()) + " columns, density has " +
                                            std::to_string(g.dim()));
  const double d = static_cast<double>(g.dim());
  Matrix centred = x.rowwise() - g.mean.transpose();
  if (g.chol.size() == 0) {
    require_positive_sigma(g.sigma, "sigma");
    const double c = -0.5 * d * kLog2Pi - d * std::log(g.sigma);
    return (c - 0.5 * centred.rowwise().squaredNorm().array() / (g.sigma * g.sigma)).matrix();
  }
  const Matrix y = g.chol.triangularView<Eigen::Lower>().solve(centred.transpose());
  const double c = -0.5 * d * kLog2Pi - 0.5 * log_det_chol(g.chol);
  return (c - 0.5 * y.colwise().squaredNorm().array()).matrix().transpose();
}

GapCondition gap_condition(const Vector& mu_p, double sigma_p, const Vector& mu_q, double sigma_q) {
  require_positive_sigma(sigma_p, "sigma_p");
  require_positive_sigma(sigma_q, "sigma_q");
  if (mu_p.size() != mu_q.size()) throw DimMismatch("mean vectors differ in length");
  const Index d = mu_p.size();
  GapCondition g;
  const double lhs = (mu_p - mu_q).squaredNorm();
  const double rhs = static_cast<double>(d) * (sigma_p * sigma_p - sigma_q * sigma_q);
  g.margin = rhs - lhs;
  g.holds = lhs < rhs;

  const double hp = gaussian_entropy(d, sigma_p);
  const double hq = gaussian_entropy(d, sigma_q);
  const double kl = gaussian_kl_isotropic(mu_p, sigma_p, mu_q, sigma_q);
  g.direct_margin = hp - hq - kl;
  g.direct_holds = hp - hq > kl;
  const double scale = std::abs(hp) + std::abs(hq) + std::abs(kl) + 1.0;
  g.routes_agree = g.holds == g.direct_holds || std::abs(g.direct_margin) <= 1e-12 * scale;
  return g;
}

GapCondition gap_condition(double mu_p, double sigma_p, double mu_q, double sigma_q, Index d) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  return gap_condition(Vector::Constant(d, mu_p), sigma_p, Vector::Constant(d, mu_q), sigma_q);
}

MonteCarloEstimate mc_entropy(const GaussianSpec& g, long n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("need at least 2 draws");
  Rng rng(seed);
  Moments m;
  for_each_chunk(n, [&](Index k) {
    const Vector lp = gaussian_log_density(g, g.sample(rng, k));
    for (Index i = 0; i < k; ++i) m.add(-lp(i));
  });
  return m.estimate();
}

MonteCarloEstimate mc_kl(const GaussianSpec& q, const GaussianSpec& p, long n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("need at least 2 draws");
  if (p.dim() != q.dim()) throw DimMismatch("P and Q have different dimensions");
  Rng rng(seed);
  Moments m;
  for_each_chunk(n, [&](Index k) {
    const Matrix x = q.sample(rng, k);
    const Vector diff = gaussian_log_density(q, x) - gaussian_log_density(p, x);
    for (Index i = 0; i < k; ++i) m.add(diff(i));
  });
  return m.estimate();
}

namespace {

template <class LogDensity>
GapReport likelihood_gap(LogDensity&& log_p, const GaussianSpec& p, const GaussianSpec& q, long n,
                         std::uint64_t seed) {
  if (p.dim() != q.dim()) throw DimMismatch("P and Q have different dimensions");
  if (n < 2) throw InvalidArgument("need at least 2 draws");
  GapReport r;
  r.d = p.dim();
  r.n = n;
  r.entropy_p = gaussian_entropy(p);
  r.entropy_q = gaussian_entropy(q);
  r.kl_qp = gaussian_kl(q, p);
  r.analytic_gap = r.kl_qp + r.entropy_q - r.entropy_p;

  Rng rng_p(derive_seed(seed, 0));
  Rng rng_q(derive_seed(seed, 1));
  Moments mp, mq;
  for_each_chunk(n, [&](Index k) {
    const Vector lp = log_p(p.sample(rng_p, k));
    const Vector lq = log_p(q.sample(rng_q, k));
    for (Index i = 0; i < k; ++i) {
      mp.add(lp(i));
      mq.add(lq(i));
    }
  });
  r.mean_ll_p = mp.mean;
  r.mean_ll_q = mq.mean;
  r.gap = mp.mean - mq.mean;
  r.gap_se = std::sqrt(mp.variance() / static_cast<double>(n) + mq.variance() / static_cast<double>(n));
  if (!std::isfinite(r.gap)) throw NonFiniteActivation("likelihood gap is not finite");
  return r;
}

}  // namespace

GapReport empirical_likelihood_gap(const GaussianSpec& model, const GaussianSpec& p, const GaussianSpec& q, long n,
                                   std::uint64_t seed) {
  if (model.dim() != p.dim()) throw DimMismatch("model and P have different dimensions");
  return likelihood_gap([&](const Matrix& x) { return gaussian_log_density(model, x); }, p, q, n, seed);
}

GapReport empirical_likelihood_gap(const FlowModel& model, const ScalerState& scaler, const GaussianSpec& p,
                                   const GaussianSpec& q, long n, std::uint64_t seed) {
  if (model.input_dim != p.dim()) throw DimMismatch("model and P have different dimensions");
  return likelihood_gap([&](const Matrix& x) { return log_likelihood(model, apply_scaler(scaler, x)); }, p, q, n,
                        seed);
}

ConcentrationReport concentration_check(Index d, double t, long n, std::uint64_t seed) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (!(t > 0.0 && t < static_cast<double>(d)))
    throw TOutOfRange("t = " + std::to_string(t) + " outside (0, " + std::to_string(d) + ")");
  if (n < 1) throw InvalidArgument("need at least 1 draw");
  Rng rng(seed);
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double z = rng.normal();
      s += z * z;
    }
    if (std::abs(s - static_cast<double>(d)) >= t) ++hits;
  }
  ConcentrationReport r;
  r.d = d;
  r.t = t;
  r.n = n;
  r.empirical = static_cast<double>(hits) / static_cast<double>(n);
  r.bound = 2.0 * std::exp(-t * t / (8.0 * static_cast<double>(d)));
  r.se = std::sqrt(r.empirical * (1.0 - r.empirical) / static_cast<double>(n));
  r.within_bound = r.empirical <= r.bound + 3.0 * r.se;
  return r;
}

std::vector<NormVariance> norm_variance_ratio(const std::vector<Index>& dims, long n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("need at least 2 draws");
  std::vector<NormVariance> out;
  for (Index d : dims) {
    if (d < 1) throw InvalidArgument("dimension must be positive");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    std::vector<double> norms(static_cast<std::size_t>(n));
    for (auto& v : norms) {
      double s = 0.0;
      for (Index j = 0; j < d; ++j) {
        const double z = rng.normal();
        s += z * z;
      }
      v = std::sqrt(s);
    }
    double mean = 0.0;
    for (double v : norms) mean += v;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m4 = 0.0;
    for (double v : norms) {
      const double c = (v - mean) * (v - mean);
      m2 += c;
      m4 += c * c;
    }
    const double var = m2 / static_cast<double>(n - 1);
    m4 /= static_cast<double>(n);
    const double var_of_var = std::max(0.0, m4 - var * var) / static_cast<double>(n);
    out.push_back({d, var / static_cast<double>(d), std::sqrt(var_of_var) / static_cast<double>(d)});
  }
  return out;
}

Histogram make_histogram(const std::string& quantity, const Vector& normal, const Vector& anomaly, int bins) {
  if (bins < 1) throw InvalidArgument("bins must be positive");
  if (normal.size() == 0 && anomaly.size() == 0) throw EmptyDataset("nothing to histogram");
  if (!normal.allFinite() || !anomaly.allFinite()) throw InvalidArgument("histogram values must be finite");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vector* v : {&normal, &anomaly}) {
    if (v->size() == 0) continue;
    lo = std::min(lo, v->minCoeff());
    hi = std::max(hi, v->maxCoeff());
  }
  Histogram h;
  h.quantity = quantity;
  if (!(hi > lo)) {
    bins = 1;
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(i == bins ? hi : lo + width * i);
  h.count_normal.assign(static_cast<std::size_t>(bins), 0);
  h.count_anomaly.assign(static_cast<std::size_t>(bins), 0);
  auto fill = [&](const Vector& v, std::vector<long>& counts) {
    for (Index i = 0; i < v.size(); ++i) {
      auto b = static_cast<long>(std::floor((v(i) - lo) / width));
      b = std::clamp<long>(b, 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
  };
  fill(normal, h.count_normal);
  fill(anomaly, h.count_anomaly);
  return h;
}

double histogram_w1(const Histogram& h) {
  const std::size_t bins = h.count_normal.size();
  if (bins == 0 || h.count_anomaly.size() != bins || h.edges.size() != bins + 1)
    throw InvalidArgument("malformed histogram");
  double tn = 0.0, ta = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    tn += static_cast<double>(h.count_normal[i]);
    ta += static_cast<double>(h.count_anomaly[i]);
  }
  if (tn == 0.0 || ta == 0.0) throw EmptyDataset("histogram side is empty");
  double cn = 0.0, ca = 0.0, w1 = 0.0;
  for (std::size_t i = 0; i + 1 < bins; ++i) {
    cn += static_cast<double>(h.count_normal[i]) / tn;
    ca += static_cast<double>(h.count_anomaly[i]) / ta;
    const double gap = 0.5 * (h.edges[i + 2] - h.edges[i]);  // centre i to centre i+1
    w1 += std::abs(cn - ca) * gap;
  }
  return w1;
}

std::vector<SweepCell> dimension_sweep_auroc(FlowKind kind, const DimensionSweepSpec& spec,
                                             const TrainConfig& config, const SweepOptions& options) {
  validate_sweep(spec);
  config.validate();
  std::vector<SweepCell> cells(spec.dims.size());
  parallel_for(spec.dims.size(), options.jobs, [&](std::size_t i) {
    const Index d = spec.dims[i];
    const GaussianPair pair = dimension_sweep_cell(spec, d);
    const ScalerState scaler = fit_scaler(pair.train, options.scaler);
    TrainConfig c = config;
    c.seed = derive_seed(sweep_cell_seed(spec.seed, d), 1);
    const TrainResult trained = train_flow(kind, apply_scaler(scaler, pair.train), c);

    const FlowOutput out = flow_forward(trained.model, apply_scaler(scaler, pair.test.features));
    const double dim = static_cast<double>(out.z.cols());
    const Vector sq = out.z.rowwise().squaredNorm();
    const Vector nll = (0.5 * sq.array() + 0.5 * dim * kLog2Pi - out.logdet.array()).matrix();
    Vector norm = sq.array().sqrt().matrix();
    if (options.normalise_norm) norm /= std::sqrt(dim);

    const Index n_normal = pair.test.count(0);
    const Index n_anom = pair.test.rows() - n_normal;
    // Test rows are P first, then Q.
    auto split = [&](const Vector& v) { return std::pair{Vector(v.head(n_normal)), Vector(v.tail(n_anom))}; };

    SweepCell& cell = cells[i];
    cell.d = d;
    cell.auroc = auroc(nll, pair.test.labels);
    auto [nll_n, nll_a] = split(nll);
    auto [norm_n, norm_a] = split(norm);
    cell.histograms.nll = make_histogram("nll", nll_n, nll_a, options.bins);
    cell.histograms.norm = make_histogram("norm", norm_n, norm_a, options.bins);
    if (kind == FlowKind::realnvp) {
      auto [ld_n, ld_a] = split(out.logdet);
      cell.histograms.logdet = make_histogram("logdet", ld_n, ld_a, options.bins);
    }
    cell.norm_w1 = histogram_w1(cell.histograms.norm);
  });
  return cells;
}

}  // namespace flowbench
