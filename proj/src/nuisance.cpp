#include "fairpos/nuisance.hpp"

#include "fairpos/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace fairpos {

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean[j]).square().sum() / std::max(n, 1.0);
    const double sd = std::sqrt(var);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

namespace {

Matrix with_intercept(const Matrix& z) {
  Matrix design(z.rows(), z.cols() + 1);
  design.leftCols(z.cols()) = z;
  design.col(z.cols()).setOnes();
  return design;
}

// Class probabilities for a linear predictor row, reference class first.
void softmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& eta, std::span<double> out) {
  const double top = eta.maxCoeff();
  double total = 0.0;
  for (Eigen::Index k = 0; k < eta.size(); ++k) {
    out[static_cast<std::size_t>(k)] = std::exp(eta[k] - top);
    total += out[static_cast<std::size_t>(k)];
  }
  for (double& v : out) v /= total;
}

struct LogisticProblem {
  const Matrix& design;  // n x (p + 1), intercept last
  const std::vector<int>& classes;
  int arms;
  double penalty;

  Eigen::Index q() const { return design.cols(); }

  // Full d x q coefficient matrix from the free parameter vector.
  Matrix unpack(const Vector& theta) const {
    Matrix w = Matrix::Zero(arms, q());
    for (int k = 1; k < arms; ++k) w.row(k) = theta.segment((k - 1) * q(), q()).transpose();
    return w;
  }

  double objective(const Vector& theta) const {
    const Matrix eta = design * unpack(theta).transpose();
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
      const double top = eta.row(i).maxCoeff();
      const double lse = top + std::log((eta.row(i).array() - top).exp().sum());
      total += eta(i, classes[static_cast<std::size_t>(i)]) - lse;
    }
    return total / static_cast<double>(design.rows()) - 0.5 * penalty * slope_norm2(theta);
  }

  double slope_norm2(const Vector& theta) const {
    double acc = 0.0;
    for (int k = 1; k < arms; ++k) acc += theta.segment((k - 1) * q(), q() - 1).squaredNorm();
    return acc;
  }

  // Gradient and negated Hessian of the penalized mean log-likelihood.
  void derivatives(const Vector& theta, Vector& grad, Matrix& neg_hess, RowMatrix& probs) const {
    const Eigen::Index n = design.rows();
    const Eigen::Index dim = theta.size();
    const Matrix eta = design * unpack(theta).transpose();
    probs.resize(n, arms);
    grad.setZero(dim);
    neg_hess.setZero(dim, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      softmax_row(eta.row(i), row_span(probs, i));
      const auto x = design.row(i);
      const Matrix xx = x.transpose() * x;
      for (int k = 1; k < arms; ++k) {
        const double pk = probs(i, k);
        const double resid = (classes[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0) - pk;
        grad.segment((k - 1) * q(), q()) += resid * x.transpose();
        for (int l = k; l < arms; ++l) {
          const double w = (k == l ? pk : 0.0) - pk * probs(i, l);
          neg_hess.block((k - 1) * q(), (l - 1) * q(), q(), q()) += w * xx;
        }
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    grad *= inv_n;
    neg_hess *= inv_n;
    for (int k = 1; k < arms; ++k) {
      for (int l = k + 1; l < arms; ++l) {
        neg_hess.block((l - 1) * q(), (k - 1) * q(), q(), q()) =
            neg_hess.block((k - 1) * q(), (l - 1) * q(), q(), q()).transpose();
      }
      for (Eigen::Index j = 0; j + 1 < q(); ++j) {
        const Eigen::Index idx = (k - 1) * q() + j;
        grad[idx] -= penalty * theta[idx];
        neg_hess(idx, idx) += penalty;
      }
    }
  }
};

void require_arms(const std::vector<int>& treatments, int arms, ErrorCode code, const std::string& context) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(arms), 0);
  for (int a : treatments) {
    if (a < 0 || a >= arms) throw Error(ErrorCode::BadLabel, "treatment index out of range");
    ++counts[static_cast<std::size_t>(a)];
  }
  for (int b = 0; b < arms; ++b) {
    if (counts[static_cast<std::size_t>(b)] == 0) {
      throw Error(code, context + ": arm " + std::to_string(b) + " has no training rows");
    }
  }
}

}  // namespace

RowMatrix PropensityModel::predict(const Matrix& x) const {
  const Matrix eta = with_intercept(x) * coefficients.transpose();
  RowMatrix out(x.rows(), coefficients.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) softmax_row(eta.row(i), row_span(out, i));
  return out;
}

PropensityModel fit_propensity(const Matrix& x, const std::vector<int>& treatments, int arms,
                               const PropensityFitOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != treatments.size()) {
    throw Error(ErrorCode::LengthMismatch, "covariates and treatments differ in length");
  }
  require_arms(treatments, arms, ErrorCode::EmptyArm, "fit_propensity");

  const Standardizer standardizer = Standardizer::fit(x);
  const Matrix design = with_intercept(standardizer.apply(x));
  const LogisticProblem problem{design, treatments, arms, options.l2_penalty};

  PropensityModel model;
  Vector theta = Vector::Zero((arms - 1) * problem.q());
  // Start from the intercept-only maximizer: log odds of arm frequencies.
  {
    std::vector<double> freq(static_cast<std::size_t>(arms), 0.0);
    for (int a : treatments) freq[static_cast<std::size_t>(a)] += 1.0;
    for (int k = 1; k < arms; ++k) {
      theta[(k - 1) * problem.q() + problem.q() - 1] =
          std::log(freq[static_cast<std::size_t>(k)] / freq[0]);
    }
  }

  Vector grad;
  Matrix neg_hess;
  RowMatrix probs;
  double current = problem.objective(theta);
  model.objective_trace.push_back(current);
  if (arms > 1) {
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      problem.derivatives(theta, grad, neg_hess, probs);
      model.final_gradient_norm = grad.norm();
      model.iterations = iter;
      if (model.final_gradient_norm < options.gradient_tolerance) {
        model.converged = true;
        break;
      }
      Eigen::LDLT<Matrix> ldlt(neg_hess);
      Vector step = ldlt.solve(grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite() || grad.dot(step) <= 0.0) step = grad;

      // Armijo backtracking keeps the objective non-decreasing.
      const double slope = grad.dot(step);
      double t = 1.0;
      bool improved = false;
      while (t > 1e-14) {
        const Vector trial = theta + t * step;
        const double value = problem.objective(trial);
        if (std::isfinite(value) && value >= current + 1e-4 * t * slope) {
          theta = trial;
          current = value;
          improved = true;
          break;
        }
        t *= 0.5;
      }
      model.objective_trace.push_back(current);
      if (!improved) break;  // stalled at numerical precision
    }
    if (!model.converged) {
      problem.derivatives(theta, grad, neg_hess, probs);
      model.final_gradient_norm = grad.norm();
      model.converged = model.final_gradient_norm < options.gradient_tolerance;
    }
  } else {
    model.converged = true;
  }

  // Back to the original covariate scale.
  const Matrix w_std = problem.unpack(theta);
  const Eigen::Index p = x.cols();
  model.coefficients = Matrix::Zero(arms, p + 1);
  for (int k = 1; k < arms; ++k) {
    double intercept = w_std(k, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      model.coefficients(k, j) = w_std(k, j) / standardizer.scale[j];
      intercept -= w_std(k, j) * standardizer.mean[j] / standardizer.scale[j];
    }
    model.coefficients(k, p) = intercept;
  }

  const RowMatrix fitted = model.predict(x);
  model.separation_warning = fitted.minCoeff() < 1e-12;
  return model;
}

PropensityModel fit_propensity(const Dataset& train, const EstimationConfig& config) {
  return fit_propensity(train.covariates(), train.treatments(), train.arms(),
                        {config.l2_penalty, config.max_iterations, config.gradient_tolerance});
}

Vector OutcomeModel::predict(const Matrix& x) const {
  return std::visit(
      [&x](const auto& m) -> Vector {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearArmModel>) {
          return x * m.coefficients.head(x.cols()) + Vector::Constant(x.rows(), m.coefficients[x.cols()]);
        } else {
          const Matrix z = m.standardizer.apply(x);
          Vector out(x.rows());
          std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(m.points.rows()));
          for (Eigen::Index i = 0; i < z.rows(); ++i) {
            for (Eigen::Index r = 0; r < m.points.rows(); ++r) {
              dist[static_cast<std::size_t>(r)] = {(m.points.row(r) - z.row(i)).squaredNorm(), r};
            }
            const auto kth = dist.begin() + static_cast<std::ptrdiff_t>(m.neighbors);
            std::nth_element(dist.begin(), kth - 1, dist.end());
            std::sort(dist.begin(), kth);  // ties broken by training index
            double total = 0.0;
            for (auto it = dist.begin(); it != kth; ++it) total += m.outcomes[it->second];
            out[i] = total / static_cast<double>(m.neighbors);
          }
          return out;
        }
      },
      model);
}

OutcomeModel fit_outcome(const Matrix& x, const Vector& y, const std::vector<int>& treatments, int arm,
                         OutcomeMethod method) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < treatments.size(); ++i) {
    if (treatments[i] == arm) rows.push_back(static_cast<Eigen::Index>(i));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyArm, "fit_outcome: arm " + std::to_string(arm) + " is empty");

  const auto nb = static_cast<Eigen::Index>(rows.size());
  Matrix xb(nb, x.cols());
  Vector yb(nb);
  for (Eigen::Index r = 0; r < nb; ++r) {
    xb.row(r) = x.row(rows[static_cast<std::size_t>(r)]);
    yb[r] = y[rows[static_cast<std::size_t>(r)]];
  }
  const Standardizer standardizer = Standardizer::fit(xb);
  const Matrix z = standardizer.apply(xb);

  OutcomeModel out;
  out.arm = arm;
  if (method == OutcomeMethod::linear) {
    const Matrix design = with_intercept(z);
    Matrix gram = design.transpose() * design;
    gram.diagonal().array() += 1e-8;
    const Vector beta = gram.ldlt().solve(design.transpose() * yb);
    const Eigen::Index p = x.cols();
    LinearArmModel lin;
    lin.coefficients.resize(p + 1);
    double intercept = beta[p];
    for (Eigen::Index j = 0; j < p; ++j) {
      lin.coefficients[j] = beta[j] / standardizer.scale[j];
      intercept -= beta[j] * standardizer.mean[j] / standardizer.scale[j];
    }
    lin.coefficients[p] = intercept;
    out.model = std::move(lin);
  } else {
    KnnArmModel knn;
    knn.standardizer = standardizer;
    knn.points = z;
    knn.outcomes = yb;
    const auto k = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(nb), 0.8)));
    knn.neighbors = std::clamp<std::size_t>(k, 1, static_cast<std::size_t>(nb));
    out.model = std::move(knn);
  }
  return out;
}

OutcomeModel fit_outcome(const Dataset& train, int arm, OutcomeMethod method) {
  return fit_outcome(train.covariates(), train.outcomes(), train.treatments(), arm, method);
}

PositivityDiagnostics summarize_positivity(const RowMatrix& pi, double floor) {
  PositivityDiagnostics d;
  long full_rows = 0;
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    bool has_zero = false;
    for (double v : row_span(pi, i)) {
      d.min_pi = std::min(d.min_pi, v);
      if (v == 0.0) {
        ++d.zero_cells;
        has_zero = true;
      }
      if (v < floor) ++d.sub_floor_cells;
    }
    if (has_zero) ++d.rows_with_zero;
    else ++full_rows;
  }
  d.trimmed_fraction = pi.rows() > 0 ? static_cast<double>(full_rows) / static_cast<double>(pi.rows()) : 0.0;
  d.weak_positivity = d.zero_cells == 0;
  d.strong_positivity = d.sub_floor_cells == 0;
  return d;
}

NuisanceFits crossfit_nuisances(const Dataset& data, const EstimationConfig& config) {
  config.validate();
  const FoldAssignment folds = split_folds(data.n(), config.folds, config.seed);
  const int d = data.arms();
  const auto n = static_cast<Eigen::Index>(data.n());

  for (int f = 0; f < folds.folds; ++f) {
    std::vector<int> train_arms;
    for (std::size_t i : folds.complement(f)) train_arms.push_back(data.treatments()[i]);
    require_arms(train_arms, d, ErrorCode::FoldArmEmpty, "fold " + std::to_string(f) + " training complement");
  }

  RowMatrix pi(n, d);
  RowMatrix mu(n, d);
  std::vector<FoldDiagnostics> fold_diag(static_cast<std::size_t>(folds.folds));

  auto run_fold = [&](int f) {
    const auto train_rows = folds.complement(f);
    const auto test_rows = folds.members(f);
    const Dataset train = data.subset(train_rows);
    const Dataset test = data.subset(test_rows);

    const PropensityModel pm = fit_propensity(train, config);
    const RowMatrix pi_test = pm.predict(test.covariates());
    Matrix mu_test(static_cast<Eigen::Index>(test_rows.size()), d);
    for (int b = 0; b < d; ++b) {
      mu_test.col(b) = fit_outcome(train, b, config.outcome_method).predict(test.covariates());
    }
    for (std::size_t r = 0; r < test_rows.size(); ++r) {
      const auto i = static_cast<Eigen::Index>(test_rows[r]);
      pi.row(i) = pi_test.row(static_cast<Eigen::Index>(r));
      mu.row(i) = mu_test.row(static_cast<Eigen::Index>(r));
    }
    fold_diag[static_cast<std::size_t>(f)] = {f, pm.converged, pm.iterations, pm.final_gradient_norm,
                                              pm.separation_warning};
  };

  if (config.threads > 1) {
    // Folds write disjoint rows; results do not depend on scheduling.
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(folds.folds));
    for (int f = 0; f < folds.folds; ++f) {
      workers.emplace_back([&, f] {
        try {
          run_fold(f);
        } catch (...) {
          errors[static_cast<std::size_t>(f)] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (int f = 0; f < folds.folds; ++f) run_fold(f);
  }

  NuisanceDiagnostics diagnostics;
  diagnostics.folds = std::move(fold_diag);
  diagnostics.positivity = summarize_positivity(pi, config.propensity_floor);
  for (const auto& fd : diagnostics.folds) {
    if (!fd.converged) diagnostics.notes.push_back("propensity fit did not converge in fold " + std::to_string(fd.fold));
    if (fd.separation_warning) {
      diagnostics.notes.push_back("quasi-separation in fold " + std::to_string(fd.fold) +
                                  ": some fitted propensity below 1e-12");
    }
  }
  return NuisanceFits{PropensityMatrix(std::move(pi), PropensitySource::estimated), std::move(mu), folds,
                      std::move(diagnostics)};
}

NuisanceFits oracle_nuisances(RowMatrix pi, RowMatrix mu, double propensity_floor) {
  if (pi.rows() != mu.rows() || pi.cols() != mu.cols()) {
    throw Error(ErrorCode::LengthMismatch, "oracle pi and mu must have the same shape");
  }
  NuisanceDiagnostics diagnostics;
  diagnostics.positivity = summarize_positivity(pi, propensity_floor);
  FoldAssignment folds{0, {}};
  return NuisanceFits{PropensityMatrix(std::move(pi), PropensitySource::oracle), std::move(mu), std::move(folds),
                      std::move(diagnostics)};
}

std::pair<RowMatrix, RowMatrix> corrupt_nuisances(const RowMatrix& pi, const RowMatrix& mu,
                                                  const ErrorDirections& directions, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw Error(ErrorCode::BadConfig, "corruption size must lie in [0, 1)");
  if (directions.pi_direction.rows() != pi.rows() || directions.pi_direction.cols() != pi.cols() ||
      directions.mu_direction.rows() != mu.rows() || directions.mu_direction.cols() != mu.cols()) {
    throw Error(ErrorCode::LengthMismatch, "error directions are not aligned with the nuisances");
  }
  RowMatrix pi_out = pi.array() * (1.0 + epsilon * directions.pi_direction.array());
  for (Eigen::Index i = 0; i < pi_out.rows(); ++i) pi_out.row(i) /= pi_out.row(i).sum();
  RowMatrix mu_out = mu + epsilon * directions.mu_direction;
  return {std::move(pi_out), std::move(mu_out)};
}

}  // namespace fairpos
