#include "fairpos/estimator.hpp"

#include "fairpos/error.hpp"
#include "fairpos/interventions.hpp"
#include "fairpos/normal.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace fairpos {

double eif_mu_term(int treatment, double outcome, int b, double pi_b, double mu_b, bool* inconsistent) {
  if (treatment != b) return 0.0;
  double denom = pi_b;
  if (pi_b < kInconsistencyFloor) {
    if (inconsistent != nullptr) *inconsistent = true;
    denom = kInconsistencyFloor;
  }
  return (outcome - mu_b) / denom;
}

namespace {

inline double score(int treatment, std::size_t b, double pi_b) {
  return (static_cast<std::size_t>(treatment) == b ? 1.0 : 0.0) - pi_b;
}

// Per-row quantities shared by every target.
struct RowContext {
  double trim = 0.0;      // S
  double trim_if = 0.0;   // phi_S
  std::vector<double> shift_if;  // f'(pi_b) (1(A = b) - pi_b)
};

void fill_context(int treatment, std::span<const double> pi, const ShiftFamily& family,
                  const SmoothingKernel& kernel, RowContext& ctx) {
  const std::size_t d = pi.size();
  ctx.trim = trim_score_row(pi, kernel);
  ctx.trim_if = eif_S(treatment, pi, kernel);
  ctx.shift_if.resize(d);
  for (std::size_t b = 0; b < d; ++b) ctx.shift_if[b] = family.eval(pi[b], 1) * score(treatment, b, pi[b]);
}

EifRow assemble(int treatment, double outcome, std::span<const double> pi, std::span<const double> mu,
                const ShiftFamily& family, int target, const RowContext& ctx, std::vector<double>& rho_buf) {
  const std::size_t d = pi.size();
  const auto a = static_cast<std::size_t>(target);
  rho_buf.resize(d);
  rho_row(pi, family, target, rho_buf);

  double shifted_total = 0.0;
  for (std::size_t b = 0; b < d; ++b) {
    if (b != a) shifted_total += ctx.shift_if[b];
  }

  EifRow out;
  for (std::size_t b = 0; b < d; ++b) {
    const double q = ctx.trim == 0.0 ? pi[b] : ctx.trim * rho_buf[b] + (1.0 - ctx.trim) * pi[b];
    const double rho_if = b == a ? -shifted_total : ctx.shift_if[b];
    const double q_if = ctx.trim_if * (rho_buf[b] - pi[b]) + ctx.trim * rho_if +
                        (1.0 - ctx.trim) * score(treatment, b, pi[b]);
    double weighted_residual = 0.0;
    if (static_cast<std::size_t>(treatment) == b) {
      bool flag = false;
      const double r = eif_mu_term(treatment, outcome, static_cast<int>(b), pi[b], mu[b], &flag);
      out.inconsistent = out.inconsistent || flag;
      if (q != 0.0) weighted_residual = r * q;
    }
    out.plug_in += mu[b] * q;
    out.phi += mu[b] * q + weighted_residual + mu[b] * q_if;
  }
  return out;
}

}  // namespace

double eif_rho(int treatment, int target, int b, std::span<const double> pi, const ShiftFamily& family) {
  const auto a = static_cast<std::size_t>(target);
  const auto bb = static_cast<std::size_t>(b);
  if (bb != a) return family.eval(pi[bb], 1) * score(treatment, bb, pi[bb]);
  double total = 0.0;
  for (std::size_t c = 0; c < pi.size(); ++c) {
    if (c != a) total += family.eval(pi[c], 1) * score(treatment, c, pi[c]);
  }
  return -total;
}

double eif_S(int treatment, std::span<const double> pi, const SmoothingKernel& kernel) {
  const std::size_t d = pi.size();
  double total = 0.0;
  for (std::size_t b = 0; b < d; ++b) {
    double others = 1.0;
    for (std::size_t c = 0; c < d; ++c) {
      if (c != b) others *= kernel.eval(pi[c], 0);
    }
    total += kernel.eval(pi[b], 1) * score(treatment, b, pi[b]) * others;
  }
  return total;
}

double eif_q(int treatment, int target, int b, std::span<const double> pi, const ShiftFamily& family,
             const SmoothingKernel& kernel) {
  const auto bb = static_cast<std::size_t>(b);
  std::vector<double> r(pi.size());
  rho_row(pi, family, target, r);
  const double trim = trim_score_row(pi, kernel);
  return eif_S(treatment, pi, kernel) * (r[bb] - pi[bb]) + trim * eif_rho(treatment, target, b, pi, family) +
         (1.0 - trim) * score(treatment, bb, pi[bb]);
}

EifRow eif_row(int treatment, double outcome, std::span<const double> pi, std::span<const double> mu,
               const ShiftFamily& family, const SmoothingKernel& kernel, int target) {
  if (pi.size() != mu.size()) throw Error(ErrorCode::LengthMismatch, "pi and mu rows differ in length");
  if (target < 0 || static_cast<std::size_t>(target) >= pi.size()) {
    throw Error(ErrorCode::BadLabel, "target arm out of range");
  }
  RowContext ctx;
  fill_context(treatment, pi, family, kernel, ctx);
  std::vector<double> rho_buf;
  return assemble(treatment, outcome, pi, mu, family, target, ctx, rho_buf);
}

EifMatrix eif_matrix(std::span<const int> treatments, std::span<const double> outcomes, const RowMatrix& pi,
                     const RowMatrix& mu, const ShiftFamily& family, const SmoothingKernel& kernel, int threads) {
  const auto n = static_cast<Eigen::Index>(treatments.size());
  if (static_cast<Eigen::Index>(outcomes.size()) != n || pi.rows() != n || mu.rows() != n ||
      pi.cols() != mu.cols()) {
    throw Error(ErrorCode::LengthMismatch, "data and nuisances are not aligned");
  }
  const auto d = static_cast<int>(pi.cols());
  EifMatrix out;
  out.phi.resize(n, d);
  out.plug_in.resize(n, d);

  auto work = [&](Eigen::Index begin, Eigen::Index end) {
    RowContext ctx;
    std::vector<double> rho_buf;
    long flagged = 0;
    for (Eigen::Index i = begin; i < end; ++i) {
      const int a_i = treatments[static_cast<std::size_t>(i)];
      if (a_i < 0 || a_i >= d) throw Error(ErrorCode::BadLabel, "treatment index out of range");
      fill_context(a_i, row_span(pi, i), family, kernel, ctx);
      bool row_flag = false;
      for (int a = 0; a < d; ++a) {
        const EifRow r = assemble(a_i, outcomes[static_cast<std::size_t>(i)], row_span(pi, i), row_span(mu, i),
                                  family, a, ctx, rho_buf);
        out.phi(i, a) = r.phi;
        out.plug_in(i, a) = r.plug_in;
        row_flag = row_flag || r.inconsistent;
      }
      if (row_flag) ++flagged;
    }
    return flagged;
  };

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(std::max<Eigen::Index>(n / 256, 1))));
  if (workers == 1) {
    out.inconsistent_rows = work(0, n);
  } else {
    std::vector<long> flagged(static_cast<std::size_t>(workers), 0);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      const Eigen::Index begin = n * w / workers;
      const Eigen::Index end = n * (w + 1) / workers;
      pool.emplace_back([&, w, begin, end] {
        try {
          flagged[static_cast<std::size_t>(w)] = work(begin, end);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (long f : flagged) out.inconsistent_rows += f;
  }
  return out;
}

Vector eif_psi(const Dataset& data, const NuisanceFits& nuisances, const ShiftFamily& family,
               const SmoothingKernel& kernel, int target) {
  const auto& pi = nuisances.pi_hat.values();
  if (target < 0 || target >= static_cast<int>(pi.cols())) throw Error(ErrorCode::BadLabel, "target out of range");
  Vector out(static_cast<Eigen::Index>(data.n()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = eif_row(data.treatments()[static_cast<std::size_t>(i)], data.outcomes()[i], row_span(pi, i),
                     row_span(nuisances.mu_hat, i), family, kernel, target)
                 .phi;
  }
  return out;
}

Vector column_means(const RowMatrix& m) {
  Vector means(m.cols());
  std::vector<double> column(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index a = 0; a < m.cols(); ++a) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) column[static_cast<std::size_t>(i)] = m(i, a);
    means[a] = m.rows() > 0 ? pairwise_sum(column) / static_cast<double>(m.rows()) : 0.0;
  }
  return means;
}

Matrix column_covariance(const RowMatrix& m, const Vector& means) {
  const Eigen::Index n = m.rows();
  const Eigen::Index d = m.cols();
  Matrix cov = Matrix::Zero(d, d);
  if (n < 2) return cov;
  std::vector<double> products(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      for (Eigen::Index i = 0; i < n; ++i) {
        products[static_cast<std::size_t>(i)] = (m(i, a) - means[a]) * (m(i, b) - means[b]);
      }
      cov(a, b) = pairwise_sum(products) / static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }
  }
  return cov;
}

EstimateSet summarize_eif(const EifMatrix& eif, double ci_level) {
  EstimateSet est;
  est.n = static_cast<std::size_t>(eif.phi.rows());
  est.ci_level = ci_level;
  est.critical_value = two_sided_critical(ci_level);
  est.psi_hat = column_means(eif.phi);
  est.plug_in = column_means(eif.plug_in);
  est.sigma_hat = column_covariance(eif.phi, est.psi_hat);
  est.inconsistent_rows = eif.inconsistent_rows;
  const auto d = est.psi_hat.size();
  est.se.resize(d);
  est.ci.resize(d, 2);
  for (Eigen::Index a = 0; a < d; ++a) {
    const double var = std::max(est.sigma_hat(a, a), 0.0);
    est.se[a] = est.n > 0 ? std::sqrt(var / static_cast<double>(est.n)) : 0.0;
    if (est.se[a] <= 1e-12 * std::max(1.0, std::abs(est.psi_hat[a]))) {
      est.degenerate_variance.push_back(static_cast<int>(a));
      est.ci(a, 0) = est.ci(a, 1) = est.psi_hat[a];
    } else {
      est.ci(a, 0) = est.psi_hat[a] - est.critical_value * est.se[a];
      est.ci(a, 1) = est.psi_hat[a] + est.critical_value * est.se[a];
    }
  }
  return est;
}

EstimateSet one_step(std::span<const int> treatments, std::span<const double> outcomes, const RowMatrix& pi,
                     const RowMatrix& mu, const ShiftFamily& family, const SmoothingKernel& kernel, double ci_level,
                     int threads) {
  return summarize_eif(eif_matrix(treatments, outcomes, pi, mu, family, kernel, threads), ci_level);
}

EstimateSet one_step(const Dataset& data, const NuisanceFits& nuisances, const EstimationConfig& config) {
  config.validate();
  const auto& y = data.outcomes();
  return one_step(data.treatments(), std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                  nuisances.pi_hat.values(), nuisances.mu_hat, config.shift_family(), config.kernel(),
                  config.ci_level, config.threads);
}

Vector plugin(const Dataset& data, const NuisanceFits& nuisances, const EstimationConfig& config) {
  return one_step(data, nuisances, config).plug_in;
}

Contrast contrast(const EstimateSet& estimates, int a, int b) {
  const auto d = static_cast<int>(estimates.psi_hat.size());
  if (a < 0 || b < 0 || a >= d || b >= d) throw Error(ErrorCode::BadLabel, "contrast arm out of range");
  if (a == b) throw Error(ErrorCode::BadLabel, "contrast needs two distinct arms");
  Contrast c;
  c.a = a;
  c.b = b;
  c.estimate = estimates.psi_hat[a] - estimates.psi_hat[b];
  const auto& s = estimates.sigma_hat;
  const double var = std::max(s(a, a) + s(b, b) - 2.0 * s(a, b), 0.0);
  c.se = estimates.n > 0 ? std::sqrt(var / static_cast<double>(estimates.n)) : 0.0;
  c.ci_lo = c.estimate - estimates.critical_value * c.se;
  c.ci_hi = c.estimate + estimates.critical_value * c.se;
  return c;
}

}  // namespace fairpos
