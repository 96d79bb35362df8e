#include "effectmap/effect_table.hpp"

#include "effectmap/error.hpp"

#include <algorithm>
#include <cmath>

namespace effectmap {

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::cm: return "cm";
    case Provenance::sf: return "sf";
    case Provenance::truth: return "truth";
  }
  return "unknown";
}

EffectTable::EffectTable(FactorSpace sp, Provenance prov) : space(std::move(sp)), provenance(prov) {
  const std::size_t d = space.dimension();
  for (std::size_t j = 0; j < d; ++j) {
    const auto L = static_cast<Eigen::Index>(space.levels(j));
    mains.push_back(Eigen::VectorXd::Zero(L));
    main_unsupported.emplace_back(space.levels(j), false);
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const auto Lj = static_cast<Eigen::Index>(space.levels(j));
    const auto Lk = static_cast<Eigen::Index>(space.levels(k));
    pairs.push_back(Eigen::MatrixXd::Zero(Lj, Lk));
    pair_unsupported.push_back(Eigen::MatrixXi::Zero(Lj, Lk));
  }
}

double EffectTable::pair(std::size_t j, int l, std::size_t k, int m) const {
  const std::size_t p = space.pair_index(j, k);
  return j < k ? pairs[p](l, m) : pairs[p](m, l);
}

Eigen::MatrixXd EffectTable::pair_matrix(std::size_t j, std::size_t k) const {
  const std::size_t p = space.pair_index(j, k);
  return j < k ? pairs[p] : Eigen::MatrixXd(pairs[p].transpose());
}

double EffectTable::predict(const Config& x) const {
  double s = mu;
  const std::size_t d = dimension();
  for (std::size_t j = 0; j < d; ++j) s += mains[j](x[j]);
  std::size_t p = 0;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j + 1; k < d; ++k, ++p) s += pairs[p](x[j], x[k]);
  return s;
}

void EffectTable::zero_pairs() {
  for (auto& g : pairs) g.setZero();
}

std::size_t EffectTable::entry_count() const {
  std::size_t n = 0;
  for (const auto& g : mains) n += static_cast<std::size_t>(g.size());
  for (const auto& g : pairs) n += static_cast<std::size_t>(g.size());
  return n;
}

Eigen::VectorXd center_vector(const Eigen::VectorXd& v, const std::vector<double>& weights) {
  double total = 0.0, mean = 0.0;
  for (Eigen::Index l = 0; l < v.size(); ++l) {
    total += weights[l];
    mean += weights[l] * v(l);
  }
  if (!(total > 0.0)) return v;
  return (v.array() - mean / total).matrix();
}

Eigen::MatrixXd double_center(const Eigen::MatrixXd& g, const Eigen::MatrixXd& joint, bool product_form) {
  const Eigen::Index R = g.rows(), C = g.cols();
  if (product_form) {
    const Eigen::VectorXd pr = joint.rowwise().sum();
    const Eigen::VectorXd pc = joint.colwise().sum().transpose();
    const Eigen::VectorXd row_mean = g * pc;
    const Eigen::RowVectorXd col_mean = pr.transpose() * g;
    const double total = pr.dot(g * pc);
    Eigen::MatrixXd h = g;
    h.colwise() -= row_mean;
    h.rowwise() -= col_mean;
    h.array() += total;
    return h;
  }
  // General joint weights: minimize sum pi*(h-g)^2 subject to zero weighted row and column sums.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (Eigen::Index a = 0; a < R; ++a)
    for (Eigen::Index b = 0; b < C; ++b)
      if (joint(a, b) > 0.0) cells.emplace_back(a, b);
  if (cells.empty()) return g;
  const auto n = static_cast<Eigen::Index>(cells.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(R + C, n);
  Eigen::VectorXd w(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [a, b] = cells[static_cast<std::size_t>(i)];
    w(i) = joint(a, b);
    v(i) = g(a, b);
    A(a, i) = w(i);
    A(R + b, i) = w(i);
  }
  const Eigen::MatrixXd M = A * w.cwiseInverse().asDiagonal() * A.transpose();
  const Eigen::VectorXd lambda = M.completeOrthogonalDecomposition().solve(A * v);
  const Eigen::VectorXd h = v - w.cwiseInverse().asDiagonal() * (A.transpose() * lambda);
  Eigen::MatrixXd out = g;
  for (Eigen::Index i = 0; i < n; ++i) out(cells[static_cast<std::size_t>(i)].first, cells[static_cast<std::size_t>(i)].second) = h(i);
  return out;
}

void center_table(EffectTable& table, const ReferenceDistribution& reference) {
  const auto& space = table.space;
  for (std::size_t j = 0; j < space.dimension(); ++j) table.mains[j] = center_vector(table.mains[j], reference.marginal(j));
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    table.pairs[p] = double_center(table.pairs[p], reference.joint(j, k), reference.is_product());
  }
}

double centering_violation(const EffectTable& table, const ReferenceDistribution& reference) {
  double worst = 0.0;
  const auto& space = table.space;
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    double s = 0.0;
    for (std::size_t l = 0; l < space.levels(j); ++l) s += reference.marginal(j, static_cast<int>(l)) * table.mains[j](l);
    worst = std::max(worst, std::abs(s));
  }
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const Eigen::MatrixXd pi = reference.joint(j, k);
    const Eigen::MatrixXd& g = table.pairs[p];
    for (Eigen::Index a = 0; a < g.rows(); ++a) {
      const double mass = pi.row(a).sum();
      if (mass > 0.0) worst = std::max(worst, std::abs(pi.row(a).dot(g.row(a)) / mass));
    }
    for (Eigen::Index b = 0; b < g.cols(); ++b) {
      const double mass = pi.col(b).sum();
      if (mass > 0.0) worst = std::max(worst, std::abs(pi.col(b).dot(g.col(b)) / mass));
    }
  }
  return worst;
}

double max_entry_difference(const EffectTable& a, const EffectTable& b) {
  if (!(a.space == b.space)) throw Error(Errc::invalid_argument, "tables are over different spaces");
  double worst = std::abs(a.mu - b.mu);
  for (std::size_t j = 0; j < a.mains.size(); ++j) worst = std::max(worst, (a.mains[j] - b.mains[j]).cwiseAbs().maxCoeff());
  for (std::size_t p = 0; p < a.pairs.size(); ++p) worst = std::max(worst, (a.pairs[p] - b.pairs[p]).cwiseAbs().maxCoeff());
  return worst;
}

double rms_entry_difference(const EffectTable& a, const EffectTable& b) {
  if (!(a.space == b.space)) throw Error(Errc::invalid_argument, "tables are over different spaces");
  double sq = 0.0;
  for (std::size_t j = 0; j < a.mains.size(); ++j) sq += (a.mains[j] - b.mains[j]).squaredNorm();
  for (std::size_t p = 0; p < a.pairs.size(); ++p) sq += (a.pairs[p] - b.pairs[p]).squaredNorm();
  return std::sqrt(sq / static_cast<double>(a.entry_count()));
}

}  // namespace effectmap
