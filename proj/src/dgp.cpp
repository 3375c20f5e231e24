#include "fairpos/dgp.hpp"

#include "fairpos/error.hpp"
#include "fairpos/estimator.hpp"
#include "fairpos/interventions.hpp"
#include "fairpos/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fairpos {

namespace {

RowMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
  const auto m = static_cast<Eigen::Index>(values.size());
  const auto d = static_cast<Eigen::Index>(values.begin()->size());
  RowMatrix out(m, d);
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) out(i, j++) = v;
    ++i;
  }
  return out;
}

Vector vec(std::initializer_list<double> values) {
  Vector out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) out[i++] = v;
  return out;
}

Matrix index_atoms(int m) {
  Matrix atoms(m, 1);
  for (int i = 0; i < m; ++i) atoms(i, 0) = i;
  return atoms;
}

// Sum over atoms and arms of p(x) * mu_b(x) * weight_b(x), in a fixed order
// shared by every functional so that equal weights give bit-equal sums.
template <class WeightRow>
double atom_sum(const DiscreteDgp& dgp, WeightRow&& weight_row) {
  const int d = dgp.arms();
  std::vector<double> w(static_cast<std::size_t>(d));
  double total = 0.0;
  for (int x = 0; x < dgp.m(); ++x) {
    weight_row(x, std::span<double>(w));
    double inner = 0.0;
    for (int b = 0; b < d; ++b) inner += dgp.mu(x, b) * w[static_cast<std::size_t>(b)];
    total += dgp.probs[x] * inner;
  }
  return total;
}

}  // namespace

DiscreteDgp DiscreteDgp::symmetric(std::string name, Matrix atoms, Vector probs, RowMatrix pi, const RowMatrix& mu,
                                   const RowMatrix& variance) {
  if (mu.rows() != pi.rows() || mu.cols() != pi.cols() || variance.rows() != pi.rows() ||
      variance.cols() != pi.cols()) {
    throw Error(ErrorCode::LengthMismatch, "mu and variance must match the propensity shape");
  }
  if ((variance.array() < 0.0).any()) throw Error(ErrorCode::BadConfig, "outcome variance must be non-negative");
  DiscreteDgp dgp;
  dgp.name = std::move(name);
  dgp.atoms = std::move(atoms);
  dgp.probs = std::move(probs);
  dgp.pi = std::move(pi);
  const RowMatrix sd = variance.array().sqrt();
  dgp.y_lo = mu - sd;
  dgp.y_hi = mu + sd;
  dgp.w_hi = RowMatrix::Constant(mu.rows(), mu.cols(), 0.5);
  return dgp;
}

DiscreteDgp DiscreteDgp::bernoulli(std::string name, Matrix atoms, Vector probs, RowMatrix pi, const RowMatrix& mu) {
  if (mu.rows() != pi.rows() || mu.cols() != pi.cols()) {
    throw Error(ErrorCode::LengthMismatch, "mu must match the propensity shape");
  }
  if ((mu.array() < 0.0).any() || (mu.array() > 1.0).any()) {
    throw Error(ErrorCode::BadConfig, "bernoulli means must lie in [0, 1]");
  }
  DiscreteDgp dgp;
  dgp.name = std::move(name);
  dgp.atoms = std::move(atoms);
  dgp.probs = std::move(probs);
  dgp.pi = std::move(pi);
  dgp.y_lo = RowMatrix::Zero(mu.rows(), mu.cols());
  dgp.y_hi = RowMatrix::Ones(mu.rows(), mu.cols());
  dgp.w_hi = mu;
  return dgp;
}

double DiscreteDgp::mu(int atom, int arm) const {
  const double w = w_hi(atom, arm);
  return (1.0 - w) * y_lo(atom, arm) + w * y_hi(atom, arm);
}

RowMatrix DiscreteDgp::mu() const {
  RowMatrix out(pi.rows(), pi.cols());
  for (int x = 0; x < m(); ++x) {
    for (int b = 0; b < arms(); ++b) out(x, b) = mu(x, b);
  }
  return out;
}

void DiscreteDgp::validate(bool fair_comparable) const {
  auto fail = [this](const std::string& what) { throw Error(ErrorCode::BadConfig, name + ": " + what); };
  if (probs.size() == 0 || pi.rows() != probs.size()) fail("atom count mismatch");
  if (atoms.rows() != probs.size()) fail("atom covariates do not match the atom count");
  if (y_lo.rows() != pi.rows() || y_hi.rows() != pi.rows() || w_hi.rows() != pi.rows() ||
      y_lo.cols() != pi.cols() || y_hi.cols() != pi.cols() || w_hi.cols() != pi.cols()) {
    fail("outcome tables do not match the propensity shape");
  }
  if ((probs.array() < 0.0).any() || std::abs(probs.sum() - 1.0) > 1e-12) fail("atom probabilities must sum to one");
  for (int x = 0; x < m(); ++x) {
    if ((pi.row(x).array() < 0.0).any() || std::abs(pi.row(x).sum() - 1.0) > 1e-12) {
      fail("propensity row " + std::to_string(x) + " must be a distribution");
    }
  }
  if ((w_hi.array() < 0.0).any() || (w_hi.array() > 1.0).any()) fail("outcome weights must lie in [0, 1]");
  if (!labels.empty() && static_cast<int>(labels.size()) != arms()) fail("label count does not match arms");
  if (fair_comparable) {
    for (int b = 0; b < arms(); ++b) {
      if ((pi.col(b).array() <= 0.0).all()) fail("arm " + std::to_string(b) + " is never received");
    }
  }
}

bool DiscreteDgp::in_trimmed_set(int atom) const { return (pi.row(atom).array() > 0.0).all(); }

double DiscreteDgp::observed_mean() const {
  return atom_sum(*this, [this](int x, std::span<double> w) {
    for (int b = 0; b < arms(); ++b) w[static_cast<std::size_t>(b)] = pi(x, b);
  });
}

double DiscreteDgp::trimmed_mass() const {
  double total = 0.0;
  for (int x = 0; x < m(); ++x) {
    if (in_trimmed_set(x)) total += probs[x];
  }
  return total;
}

double true_functional(const DiscreteDgp& dgp, const ShiftFamily& family, const SmoothingKernel& kernel,
                       int target) {
  if (target < 0 || target >= dgp.arms()) throw Error(ErrorCode::BadLabel, "target arm out of range");
  std::vector<double> r(static_cast<std::size_t>(dgp.arms()));
  return atom_sum(dgp, [&](int x, std::span<double> q) {
    const auto pi = row_span(dgp.pi, x);
    rho_row(pi, family, target, r);
    q_row(pi, r, trim_score_row(pi, kernel), q);
  });
}

double enumerate_eif_mean(const DiscreteDgp& dgp, const ShiftFamily& family, const SmoothingKernel& kernel,
                          int target) {
  const RowMatrix mu = dgp.mu();
  double total = 0.0;
  for (int x = 0; x < dgp.m(); ++x) {
    double atom_total = 0.0;
    for (int b = 0; b < dgp.arms(); ++b) {
      if (dgp.pi(x, b) == 0.0) continue;
      const double w = dgp.w_hi(x, b);
      const double lo = eif_row(b, dgp.y_lo(x, b), row_span(dgp.pi, x), row_span(mu, x), family, kernel, target).phi;
      const double hi = eif_row(b, dgp.y_hi(x, b), row_span(dgp.pi, x), row_span(mu, x), family, kernel, target).phi;
      atom_total += dgp.pi(x, b) * ((1.0 - w) * lo + w * hi);
    }
    total += dgp.probs[x] * atom_total;
  }
  return total;
}

double known_trim_functional(const DiscreteDgp& dgp, int target) {
  if (target < 0 || target >= dgp.arms()) throw Error(ErrorCode::BadLabel, "target arm out of range");
  return atom_sum(dgp, [&](int x, std::span<double> w) {
    const bool inside = dgp.in_trimmed_set(x);
    for (int b = 0; b < dgp.arms(); ++b) {
      w[static_cast<std::size_t>(b)] = inside ? (b == target ? 1.0 : 0.0) : dgp.pi(x, b);
    }
  });
}

double smr_comparator(const DiscreteDgp& dgp, int arm) {
  double num = 0.0, den = 0.0;
  for (int x = 0; x < dgp.m(); ++x) {
    num += dgp.probs[x] * dgp.pi(x, arm) * dgp.mu(x, arm);
    den += dgp.probs[x] * dgp.pi(x, arm);
  }
  if (den <= 0.0) throw Error(ErrorCode::EmptyArm, "arm is never received");
  return num / den;
}

Dataset SampledData::to_dataset(const std::vector<std::string>& labels) const {
  const int d = static_cast<int>(pi.cols());
  LabelMap map = labels.empty() ? LabelMap::identity(d) : LabelMap(labels);
  return Dataset(covariates, treatments, outcomes, std::move(map));
}

NuisanceFits SampledData::oracle() const { return oracle_nuisances(pi, mu); }

SampledData sample(const DiscreteDgp& dgp, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::TooFewRows, "sample size must be positive");
  Rng rng(seed);
  const auto rows_n = static_cast<Eigen::Index>(n);
  SampledData out;
  out.covariates.resize(rows_n, dgp.atoms.cols());
  out.treatments.resize(n);
  out.outcomes.resize(rows_n);
  out.atom_of.resize(n);
  out.pi.resize(rows_n, dgp.arms());
  out.mu.resize(rows_n, dgp.arms());
  const RowMatrix mu = dgp.mu();
  const std::span<const double> probs(dgp.probs.data(), static_cast<std::size_t>(dgp.probs.size()));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto x = static_cast<int>(rng.categorical(probs));
    const auto b = static_cast<int>(rng.categorical(row_span(dgp.pi, x)));
    const bool high = rng.uniform() < dgp.w_hi(x, b);
    out.atom_of[i] = x;
    out.treatments[i] = b;
    out.outcomes[r] = high ? dgp.y_hi(x, b) : dgp.y_lo(x, b);
    out.covariates.row(r) = dgp.atoms.row(x);
    out.pi.row(r) = dgp.pi.row(x);
    out.mu.row(r) = mu.row(x);
  }
  return out;
}

DiscreteDgp point_mass_mixture(const DiscreteDgp& dgp, int atom, int arm, int support_index, double t) {
  if (atom < 0 || atom >= dgp.m() || arm < 0 || arm >= dgp.arms() || support_index < 0 || support_index > 1) {
    throw Error(ErrorCode::BadConfig, "support point out of range");
  }
  const double cell = dgp.probs[atom] * dgp.pi(atom, arm);
  const double point_w = support_index == 1 ? dgp.w_hi(atom, arm) : 1.0 - dgp.w_hi(atom, arm);
  if (cell * point_w <= 0.0) throw Error(ErrorCode::BadConfig, "point mass must sit on the support");

  DiscreteDgp out = dgp;
  const double p_new = (1.0 - t) * dgp.probs[atom] + t;
  for (int x = 0; x < dgp.m(); ++x) out.probs[x] = (1.0 - t) * dgp.probs[x];
  out.probs[atom] = p_new;
  for (int b = 0; b < dgp.arms(); ++b) {
    const double mass = (1.0 - t) * dgp.probs[atom] * dgp.pi(atom, b) + (b == arm ? t : 0.0);
    out.pi(atom, b) = mass / p_new;
  }
  const double cell_new = (1.0 - t) * cell + t;
  const double hi_mass = (1.0 - t) * cell * dgp.w_hi(atom, arm) + (support_index == 1 ? t : 0.0);
  out.w_hi(atom, arm) = hi_mass / cell_new;
  return out;
}

namespace dgps {

DiscreteDgp positivity_violation() {
  auto pi = rows({{0.5, 0.3, 0.2}, {0.2, 0.5, 0.3}, {0.6, 0.4, 0.0},
                  {0.0, 0.3, 0.7}, {0.3, 0.3, 0.4}, {1.0, 0.0, 0.0}});
  auto mu = rows({{0.2, 0.5, 0.9}, {0.4, 0.3, 0.6}, {1.0, 1.5, 2.0},
                  {3.0, 0.8, 0.1}, {0.7, 0.2, 0.4}, {0.5, 0.0, 0.0}});
  RowMatrix var = RowMatrix::Constant(6, 3, 0.25);
  return DiscreteDgp::symmetric("positivity_violation", index_atoms(6), vec({0.2, 0.15, 0.2, 0.15, 0.15, 0.15}),
                                std::move(pi), mu, var);
}

DiscreteDgp intermediate_positivity() {
  auto pi = rows({{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.1, 0.2, 0.7}, {0.34, 0.33, 0.33}});
  auto mu = rows({{1.0, 0.4, -0.5}, {0.3, 0.9, 0.6}, {-0.2, 0.1, 1.2}, {0.5, 0.5, 0.8}});
  RowMatrix var = RowMatrix::Constant(4, 3, 0.5);
  return DiscreteDgp::symmetric("intermediate_positivity", index_atoms(4), vec({0.3, 0.2, 0.25, 0.25}),
                                std::move(pi), mu, var);
}

DiscreteDgp two_atom() {
  auto pi = rows({{0.3, 0.7}, {0.8, 0.2}});
  auto mu = rows({{1.0, 2.0}, {0.5, -1.0}});
  RowMatrix var = RowMatrix::Constant(2, 2, 0.1);
  return DiscreteDgp::symmetric("two_atom", index_atoms(2), vec({0.4, 0.6}), std::move(pi), mu, var);
}

DiscreteDgp four_arm_mixed() {
  constexpr int m = 8, d = 4;
  Rng rng(11);
  RowMatrix pi(m, d), mu(m, d), var(m, d);
  for (int x = 0; x < m; ++x) {
    for (int b = 0; b < d; ++b) {
      pi(x, b) = rng.uniform(0.2, 1.0);
      mu(x, b) = rng.uniform(-1.0, 2.0);
      var(x, b) = rng.uniform(0.1, 1.0);
    }
  }
  pi(1, 2) = 0.0;
  pi(4, 0) = 0.0;
  pi(6, 1) = 0.0;
  pi(6, 3) = 0.0;
  for (int x = 0; x < m; ++x) pi.row(x) /= pi.row(x).sum();
  Vector probs = Vector::Constant(m, 1.0 / m);
  return DiscreteDgp::symmetric("four_arm_mixed", index_atoms(m), probs, std::move(pi), mu, var);
}

DiscreteDgp constant_outcome(double c) {
  DiscreteDgp base = positivity_violation();
  RowMatrix mu = RowMatrix::Constant(base.m(), base.arms(), c);
  RowMatrix var = RowMatrix::Zero(base.m(), base.arms());
  return DiscreteDgp::symmetric("constant_outcome", base.atoms, base.probs, base.pi, mu, var);
}

DiscreteDgp no_overlap() {
  auto pi = rows({{0.5, 0.5, 0.0}, {0.0, 0.6, 0.4}, {0.7, 0.0, 0.3}});
  auto mu = rows({{0.1, 0.9, 5.0}, {-2.0, 0.4, 1.1}, {0.6, 3.0, 0.2}});
  RowMatrix var = RowMatrix::Constant(3, 3, 0.3);
  return DiscreteDgp::symmetric("no_overlap", index_atoms(3), vec({0.3, 0.3, 0.4}), std::move(pi), mu, var);
}

DiscreteDgp exchangeable_pair() {
  auto pi = rows({{0.3, 0.3, 0.4}, {0.4, 0.4, 0.2}, {0.25, 0.25, 0.5}, {0.1, 0.1, 0.8}});
  auto mu = rows({{1.0, 1.0, 2.0}, {0.5, 0.5, -1.0}, {2.0, 2.0, 0.0}, {1.5, 1.5, 3.0}});
  RowMatrix var = RowMatrix::Constant(4, 3, 1.0);
  return DiscreteDgp::symmetric("exchangeable_pair", index_atoms(4), vec({0.25, 0.25, 0.25, 0.25}), std::move(pi),
                                mu, var);
}

DiscreteDgp provider_synthetic() {
  constexpr int m = 60, d = 10, p = 3;
  Rng rng(2020);
  Matrix atoms(m, p);
  for (int x = 0; x < m; ++x) {
    atoms(x, 0) = std::round(rng.normal() * 100.0) / 100.0;
    atoms(x, 1) = std::round(rng.normal() * 100.0) / 100.0;
    atoms(x, 2) = rng.uniform() < 0.4 ? 1.0 : 0.0;
  }
  Matrix slopes(d, p);
  Vector provider_effect(d);
  for (int b = 0; b < d; ++b) {
    for (int j = 0; j < p; ++j) slopes(b, j) = rng.uniform(-1.2, 1.2);
    provider_effect[b] = rng.uniform(-0.25, 0.25);
  }
  RowMatrix pi(m, d), mu(m, d);
  for (int x = 0; x < m; ++x) {
    double total = 0.0;
    for (int b = 0; b < d; ++b) {
      pi(x, b) = std::exp(slopes.row(b).dot(atoms.row(x)));
      total += pi(x, b);
    }
    pi.row(x) /= total;
    const double risk = -1.1 + 0.35 * atoms(x, 0) - 0.2 * atoms(x, 1) + 0.3 * atoms(x, 2);
    for (int b = 0; b < d; ++b) mu(x, b) = 1.0 / (1.0 + std::exp(-(risk + provider_effect[b])));
  }
  // Patients who can never reach some providers.
  for (int x = 0; x < m; x += 7) {
    pi(x, static_cast<Eigen::Index>(rng.below(d))) = 0.0;
    pi.row(x) /= pi.row(x).sum();
  }
  Vector probs = Vector::Constant(m, 1.0 / m);
  DiscreteDgp dgp = DiscreteDgp::bernoulli("provider_synthetic", atoms, probs, std::move(pi), mu);
  for (int b = 1; b <= d; ++b) {
    char label[8];
    std::snprintf(label, sizeof label, "H%02d", b);
    dgp.labels.emplace_back(label);
  }
  return dgp;
}

std::vector<DiscreteDgp> eif_suite() {
  return {positivity_violation(), intermediate_positivity(), two_atom(), four_arm_mixed(),
          exchangeable_pair(),    no_overlap(),              provider_synthetic()};
}

}  // namespace dgps

}  // namespace fairpos
