#include "effectmap/shapley_fit.hpp"

#include "effectmap/error.hpp"
#include "effectmap/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace effectmap {

ValueOracle ValueOracle::from_function(FactorSpace space, Function f, ReferenceDistribution background, double bound) {
  if (background.dimension() != space.dimension())
    throw Error(Errc::invalid_argument, "background does not match the factor space");
  ValueOracle o;
  o.space_ = std::move(space);
  o.f_ = std::move(f);
  o.background_ = std::move(background);
  o.bound_ = bound;
  return o;
}

ValueOracle ValueOracle::from_log(const RunLog& log, ReferenceDistribution background) {
  const FactorSpace& space = log.space();
  std::unordered_map<std::uint64_t, WeightedMean> cells;
  WeightedMean overall;
  for (const auto& r : log.records()) {
    cells[space.rank(r.config)].add(r.response, r.weight);
    overall.add(r.response, r.weight);
  }
  auto means = std::make_shared<std::unordered_map<std::uint64_t, double>>();
  double bound = std::abs(overall.value());
  for (const auto& [key, acc] : cells) {
    if (acc.empty()) continue;
    (*means)[key] = acc.value();
    bound = std::max(bound, std::abs(acc.value()));
  }
  const double fallback = overall.value();
  ValueOracle o = from_function(
      space,
      [means, fallback, space](const Config& x) {
        auto it = means->find(space.rank(x));
        return it == means->end() ? fallback : it->second;
      },
      std::move(background), bound);
  const std::uint64_t g = space.grid_size();
  o.unobserved_ = g > means->size() ? static_cast<std::size_t>(g - means->size()) : 0;
  return o;
}

double ValueOracle::evaluate(const Config& x) const { return f_(x); }

CoalitionValue ValueOracle::coalition_value(const Config& x, FactorMask present, std::uint64_t seed,
                                            std::uint64_t exact_cap, std::size_t mc_draws) const {
  if (!background_.is_product())
    throw Error(Errc::invalid_argument, "coalition values need a product-form background");
  const std::size_t d = space_.dimension();
  std::vector<std::size_t> absent;
  std::uint64_t complement = 1;
  for (std::size_t j = 0; j < d; ++j)
    if (!(present >> j & 1U)) {
      absent.push_back(j);
      complement = complement > exact_cap ? complement : complement * space_.levels(j);
    }
  Config z = x;
  if (absent.empty()) return {f_(z), 0};
  if (complement <= exact_cap) {
    double total = 0.0;
    std::vector<int> idx(absent.size(), 0);
    while (true) {
      double p = 1.0;
      for (std::size_t a = 0; a < absent.size(); ++a) {
        z[absent[a]] = idx[a];
        p *= background_.marginal(absent[a], idx[a]);
      }
      if (p > 0.0) total += p * f_(z);
      std::size_t a = absent.size();
      while (a > 0) {
        --a;
        if (++idx[a] < static_cast<int>(space_.levels(absent[a]))) break;
        idx[a] = 0;
        if (a == 0) return {total, 0};
      }
    }
  }
  Rng rng = make_rng(seed, {streams::oracle, present});
  std::vector<std::discrete_distribution<int>> dists;
  for (std::size_t j : absent) dists.emplace_back(background_.marginal(j).begin(), background_.marginal(j).end());
  double total = 0.0;
  for (std::size_t s = 0; s < mc_draws; ++s) {
    for (std::size_t a = 0; a < absent.size(); ++a) z[absent[a]] = dists[a](rng);
    total += f_(z);
  }
  return {total / static_cast<double>(mc_draws), mc_draws};
}

CoalitionCache::CoalitionCache(const ValueOracle& oracle, Config x, std::uint64_t seed)
    : oracle_(&oracle), x_(std::move(x)), seed_(seed) {
  oracle.space().require_valid(x_);
}

double CoalitionCache::operator()(FactorMask present) {
  auto it = values_.find(present);
  if (it != values_.end()) return it->second;
  const double v = oracle_->coalition_value(x_, present, seed_).value;
  values_.emplace(present, v);
  return v;
}

std::vector<double> permutation_contributions(CoalitionCache& cache, std::span<const std::size_t> order) {
  std::vector<double> delta(order.size(), 0.0);
  FactorMask mask = 0;
  double prev = cache(mask);
  for (std::size_t j : order) {
    mask |= FactorMask{1} << j;
    const double next = cache(mask);
    delta[j] = next - prev;
    prev = next;
  }
  return delta;
}

namespace {

struct Welford {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

}  // namespace

ShapleyEstimate mc_shapley(const ValueOracle& oracle, const Config& x, std::size_t M, std::uint64_t seed,
                           ShapleySampling sampling) {
  if (M < 1) throw Error(Errc::invalid_argument, "Monte Carlo Shapley needs at least one sample");
  const std::size_t d = oracle.space().dimension();
  CoalitionCache cache(oracle, x, seed);
  std::vector<Welford> acc(d);
  std::vector<std::size_t> order(d);
  for (std::size_t m = 0; m < M; ++m) {
    Rng rng = make_rng(seed, {streams::shapley, m});
    std::iota(order.begin(), order.end(), 0);
    if (sampling == ShapleySampling::permutation) {
      std::shuffle(order.begin(), order.end(), rng);
      const auto delta = permutation_contributions(cache, order);
      for (std::size_t j = 0; j < d; ++j) acc[j].add(delta[j]);
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<std::size_t> others;
      for (std::size_t k = 0; k < d; ++k)
        if (k != j) others.push_back(k);
      std::shuffle(others.begin(), others.end(), rng);
      const std::size_t size = uniform_index(rng, d);
      FactorMask mask = 0;
      for (std::size_t s = 0; s < size; ++s) mask |= FactorMask{1} << others[s];
      acc[j].add(cache(mask | FactorMask{1} << j) - cache(mask));
    }
  }
  ShapleyEstimate est;
  est.point = x;
  est.samples = M;
  for (const auto& a : acc) {
    est.phi.push_back(a.mean);
    est.variance.push_back(a.variance());
  }
  return est;
}

ShapleyEstimate exact_shapley(const ValueOracle& oracle, const Config& x) {
  const std::size_t d = oracle.space().dimension();
  if (d > 20) throw Error(Errc::cap_exceeded, "exact Shapley enumeration is limited to 20 factors");
  CoalitionCache cache(oracle, x);
  std::vector<double> weight(d);
  for (std::size_t s = 0; s < d; ++s)
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1) + std::lgamma(static_cast<double>(d - s)) -
                         std::lgamma(static_cast<double>(d) + 1));
  ShapleyEstimate est;
  est.point = x;
  est.phi.assign(d, 0.0);
  est.variance.assign(d, 0.0);
  const FactorMask all = (FactorMask{1} << d) - 1;
  for (std::size_t j = 0; j < d; ++j) {
    const FactorMask bit = FactorMask{1} << j;
    double phi = 0.0;
    for (FactorMask mask = 0; mask <= all; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(mask))] * (cache(mask | bit) - cache(mask));
    }
    est.phi[j] = phi;
  }
  return est;
}

std::vector<double> exact_shapley_second_order(const EffectTable& table, const Config& x) {
  const std::size_t d = table.dimension();
  table.space.require_valid(x);
  std::vector<double> phi(d);
  for (std::size_t j = 0; j < d; ++j) phi[j] = table.mains[j](x[j]);
  std::size_t p = 0;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j + 1; k < d; ++k, ++p) {
      const double half = 0.5 * table.pairs[p](x[j], x[k]);
      phi[j] += half;
      phi[k] += half;
    }
  return phi;
}

double mc_sample_bound(double B, double eps, double delta, std::uint64_t union_items) {
  if (!(B > 0.0) || !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) || union_items < 1)
    throw Error(Errc::invalid_argument, "sample size needs B > 0 and eps, delta in (0,1)");
  return 8.0 * B * B / (eps * eps) * std::log(2.0 * static_cast<double>(union_items) / delta);
}

std::uint64_t mc_sample_size(double B, double eps, double delta, std::uint64_t union_items) {
  return static_cast<std::uint64_t>(std::ceil(mc_sample_bound(B, eps, delta, union_items)));
}

Eigen::MatrixXd contrast_basis(const std::vector<double>& weights) {
  const auto L = static_cast<Eigen::Index>(weights.size());
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), L);
  const Eigen::MatrixXd wm = w;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(wm);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(L, L);
  return Q.rightCols(L - 1);
}

std::vector<std::string> EffectDesignMatrix::parameter_blocks() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < space.dimension(); ++j) names.push_back("main:" + space.factor(j).name);
  for (std::size_t p = 0; p < space.pair_count(); ++p) names.push_back("pair:" + space.pair_name(p));
  return names;
}

Eigen::Index EffectDesignMatrix::raw_main_column(std::size_t j, int l) const {
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < j; ++i) c += static_cast<Eigen::Index>(space.levels(i));
  return c + l;
}

Eigen::Index EffectDesignMatrix::raw_pair_column(std::size_t p, int l, int m) const {
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < space.dimension(); ++j) c += static_cast<Eigen::Index>(space.levels(j));
  for (std::size_t q = 0; q < p; ++q) {
    auto [a, b] = space.pair_factors(q);
    c += static_cast<Eigen::Index>(space.levels(a) * space.levels(b));
  }
  auto [j, k] = space.pair_factors(p);
  (void)j;
  return c + static_cast<Eigen::Index>(l) * static_cast<Eigen::Index>(space.levels(k)) + m;
}

Eigen::VectorXd EffectDesignMatrix::encode(const EffectTable& table) const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameters()));
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    const auto& C = bases[j];
    theta.segment(offsets[j], C.cols()) = C.transpose() * table.mains[j];
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const Eigen::MatrixXd B = bases[j].transpose() * table.pairs[p] * bases[k];
    const Eigen::Index off = offsets[space.dimension() + p];
    for (Eigen::Index a = 0; a < B.rows(); ++a)
      for (Eigen::Index b = 0; b < B.cols(); ++b) theta(off + a * B.cols() + b) = B(a, b);
  }
  return theta;
}

EffectTable EffectDesignMatrix::decode(const Eigen::VectorXd& theta) const {
  EffectTable t(space, Provenance::sf);
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    const auto& C = bases[j];
    t.mains[j] = C * theta.segment(offsets[j], C.cols());
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const Eigen::Index off = offsets[space.dimension() + p];
    Eigen::MatrixXd B(bases[j].cols(), bases[k].cols());
    for (Eigen::Index a = 0; a < B.rows(); ++a)
      for (Eigen::Index b = 0; b < B.cols(); ++b) B(a, b) = theta(off + a * B.cols() + b);
    t.pairs[p] = bases[j] * B * bases[k].transpose();
  }
  return t;
}

namespace {

EffectDesignMatrix assemble_design_matrix(const std::vector<Config>& eval_set, const FactorSpace& space,
                                          const ReferenceDistribution& reference) {
  if (eval_set.empty()) throw Error(Errc::invalid_argument, "evaluation set is empty");
  if (!reference.is_product())
    throw Error(Errc::invalid_argument, "design matrix needs a product-form reference");
  const std::size_t d = space.dimension();
  EffectDesignMatrix A;
  A.space = space;
  A.points = eval_set;
  Eigen::Index free = 0, full = 0;
  for (std::size_t j = 0; j < d; ++j) {
    A.bases.push_back(contrast_basis(reference.marginal(j)));
    A.offsets.push_back(free);
    free += A.bases.back().cols();
    full += static_cast<Eigen::Index>(space.levels(j));
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    A.offsets.push_back(free);
    free += A.bases[j].cols() * A.bases[k].cols();
    full += static_cast<Eigen::Index>(space.levels(j) * space.levels(k));
  }

  // Full-table entries as linear functions of the free parameters.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(full, free);
  for (std::size_t j = 0; j < d; ++j)
    T.block(A.raw_main_column(j, 0), A.offsets[j], A.bases[j].rows(), A.bases[j].cols()) = A.bases[j];
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const auto& Cj = A.bases[j];
    const auto& Ck = A.bases[k];
    for (Eigen::Index l = 0; l < Cj.rows(); ++l)
      for (Eigen::Index m = 0; m < Ck.rows(); ++m) {
        const Eigen::Index row = A.raw_pair_column(p, static_cast<int>(l), static_cast<int>(m));
        for (Eigen::Index a = 0; a < Cj.cols(); ++a)
          for (Eigen::Index b = 0; b < Ck.cols(); ++b)
            T(row, A.offsets[d + p] + a * Ck.cols() + b) = Cj(l, a) * Ck(m, b);
      }
  }

  const auto N = static_cast<Eigen::Index>(eval_set.size() * d);
  A.raw = Eigen::MatrixXd::Zero(N, full);
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    const Config& x = eval_set[i];
    space.require_valid(x);
    for (std::size_t j = 0; j < d; ++j) {
      const auto row = static_cast<Eigen::Index>(i * d + j);
      A.raw(row, A.raw_main_column(j, x[j])) = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        if (k == j) continue;
        const std::size_t p = space.pair_index(j, k);
        const Eigen::Index col = j < k ? A.raw_pair_column(p, x[j], x[k]) : A.raw_pair_column(p, x[k], x[j]);
        A.raw(row, col) = 0.5;
      }
    }
  }
  A.reduced = A.raw * T;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A.reduced);
  A.singular_values = svd.singularValues();
  A.sigma_min = (A.reduced.rows() < A.reduced.cols() || A.singular_values.size() == 0)
                    ? 0.0
                    : A.singular_values(A.singular_values.size() - 1);
  return A;
}

std::vector<std::string> deficient_blocks(const EffectDesignMatrix& A) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A.reduced, Eigen::ComputeFullV);
  const Eigen::MatrixXd& V = svd.matrixV();
  const Eigen::VectorXd& s = svd.singularValues();
  const auto names = A.parameter_blocks();
  const std::size_t d = A.space.dimension();
  std::vector<bool> hit(names.size(), false);
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    if (c < s.size() && s(c) >= rank_tolerance) continue;
    for (std::size_t b = 0; b < names.size(); ++b) {
      const Eigen::Index start = A.offsets[b];
      const Eigen::Index stop = b + 1 < A.offsets.size() ? A.offsets[b + 1] : V.rows();
      if (V.col(c).segment(start, stop - start).norm() > 1e-6) hit[b] = true;
    }
  }
  (void)d;
  std::vector<std::string> out;
  for (std::size_t b = 0; b < names.size(); ++b)
    if (hit[b]) out.push_back(names[b]);
  return out;
}

void require_full_rank(const EffectDesignMatrix& A) {
  if (A.sigma_min >= rank_tolerance) return;
  auto blocks = deficient_blocks(A);
  std::string msg = "effect design matrix is rank deficient (sigma_min below 1e-8); unidentified blocks:";
  for (const auto& b : blocks) msg += " " + b;
  throw RankDeficientError(msg, std::move(blocks), A.sigma_min);
}

}  // namespace

EffectDesignMatrix build_design_matrix(const std::vector<Config>& eval_set, const FactorSpace& space,
                                       const ReferenceDistribution& reference) {
  EffectDesignMatrix A = assemble_design_matrix(eval_set, space, reference);
  require_full_rank(A);
  return A;
}

SfFit fit_effects_sf(const std::vector<ShapleyEstimate>& estimates, const FactorSpace& space,
                     const ReferenceDistribution& reference, const ShrinkageSpec& shrinkage, double baseline,
                     const SfFitOptions& options) {
  if (estimates.empty()) throw Error(Errc::invalid_argument, "no Shapley estimates to fit");
  if (!(options.ridge >= 0.0)) throw Error(Errc::invalid_argument, "ridge weight must be nonnegative");
  const std::size_t d = space.dimension();
  std::vector<Config> points;
  for (const auto& e : estimates) {
    if (e.phi.size() != d || !space.valid(e.point))
      throw Error(Errc::invalid_argument, "Shapley estimate does not match the factor space");
    points.push_back(e.point);
  }
  EffectDesignMatrix A = assemble_design_matrix(points, space, reference);
  if (options.ridge == 0.0) require_full_rank(A);

  Eigen::VectorXd phi(static_cast<Eigen::Index>(points.size() * d));
  for (std::size_t i = 0; i < estimates.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) phi(static_cast<Eigen::Index>(i * d + j)) = estimates[i].phi[j];

  Eigen::VectorXd theta;
  if (options.ridge == 0.0) {
    theta = A.reduced.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(phi);
  } else {
    const auto p = A.reduced.cols();
    Eigen::MatrixXd normal = A.reduced.transpose() * A.reduced;
    normal.diagonal().array() += options.ridge;
    theta = normal.ldlt().solve(A.reduced.transpose() * phi);
    (void)p;
  }

  SfFit fit;
  fit.diagnostics.sigma_min = A.sigma_min;
  fit.diagnostics.residual_norm = (A.reduced * theta - phi).norm();
  fit.diagnostics.rows = A.rows();
  fit.diagnostics.parameters = A.parameters();
  fit.diagnostics.points = points.size();
  fit.table = A.decode(theta);
  fit.table.mu = baseline;
  center_table(fit.table, reference);
  if (options.support) apply_shrinkage(fit.table, *options.support, shrinkage, reference);
  return fit;
}

double stability_bound(const EffectDesignMatrix& matrix, double observation_error_norm) {
  if (!(matrix.sigma_min > 0.0)) throw Error(Errc::rank_deficient, "stability bound needs sigma_min > 0");
  return observation_error_norm / matrix.sigma_min;
}

}  // namespace effectmap
