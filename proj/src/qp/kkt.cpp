#include "ata/errors.hpp"
#include "ata/qp.hpp"

#include "qp_internal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace ata {
namespace {

// Lawson-Hanson nonnegative least squares: min ||G w - y|| s.t. w >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& g, const Eigen::VectorXd& y) {
  const Eigen::Index k = g.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  if (k == 0) return w;
  std::vector<bool> passive(static_cast<std::size_t>(k), false);
  const double tol = 1e-14 * std::max(1.0, g.cwiseAbs().maxCoeff()) * std::max(1.0, y.norm());

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < k; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Eigen::MatrixXd gp(g.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) gp.col(static_cast<Eigen::Index>(c)) = g.col(idx[c]);
    const Eigen::VectorXd sp = gp.completeOrthogonalDecomposition().solve(y);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(k);
    for (std::size_t c = 0; c < idx.size(); ++c) full[idx[c]] = sp[static_cast<Eigen::Index>(c)];
    return full;
  };

  for (Eigen::Index outer = 0; outer < 3 * k + 10; ++outer) {
    const Eigen::VectorXd grad = g.transpose() * (y - g * w);
    Eigen::Index best = -1;
    double best_val = tol;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && grad[j] > best_val) {
        best_val = grad[j];
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (Eigen::Index inner = 0; inner < 3 * k + 10; ++inner) {
      const Eigen::VectorXd s = solve_passive();
      bool all_positive = true;
      for (Eigen::Index j = 0; j < k; ++j)
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) all_positive = false;
      if (all_positive) {
        w = s;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          const double denom = w[j] - s[j];
          if (denom > 0.0) alpha = std::min(alpha, w[j] / denom);
        }
      }
      w += alpha * (s - w);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && w[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          w[j] = 0.0;
        }
      }
    }
  }
  return w;
}

void check_candidate(const QpProblem& problem, const Eigen::VectorXd& candidate) {
  problem.check_dimensions();
  if (static_cast<std::size_t>(candidate.size()) != problem.num_variables())
    throw DimensionError("check_kkt: candidate length " + std::to_string(candidate.size()) +
                         " differs from problem size " + std::to_string(problem.num_variables()));
}

KktReport assemble(const QpProblem& problem, const Eigen::MatrixXd& h,
                   const Eigen::VectorXd& z, Eigen::VectorXd ineq_dual, Eigen::VectorXd box_dual,
                   double tol) {
  KktReport rep;
  rep.primal_feasibility = detail::primal_violation(problem, z);
  rep.stationarity =
      detail::lagrangian_gradient(h, problem, z, ineq_dual, box_dual).cwiseAbs().maxCoeff();

  double comp = 0.0;
  if (problem.num_ineq() > 0) {
    const Eigen::VectorXd slack = problem.ineq_rhs - problem.ineq_matrix * z;
    for (Eigen::Index i = 0; i < slack.size(); ++i)
      comp = std::max(comp, std::abs(ineq_dual[i] * slack[i]));
  }
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (box_dual[j] < 0.0 && std::isfinite(problem.lower[j]))
      comp = std::max(comp, std::abs(box_dual[j] * (z[j] - problem.lower[j])));
    if (box_dual[j] > 0.0 && std::isfinite(problem.upper[j]))
      comp = std::max(comp, std::abs(box_dual[j] * (problem.upper[j] - z[j])));
  }
  rep.complementarity = comp;
  rep.pass = rep.stationarity <= tol && rep.primal_feasibility <= tol && rep.complementarity <= tol;
  rep.ineq_dual = std::move(ineq_dual);
  rep.box_dual = std::move(box_dual);
  return rep;
}

KktReport estimate_with_threshold(const QpProblem& problem, const Eigen::MatrixXd& h,
                                  const Eigen::VectorXd& candidate, double active_tol,
                                  double tol) {
  const Eigen::Index n = candidate.size();
  const Eigen::Index nin = problem.ineq_matrix.rows();

  // Outward normals of near-active constraints, one column each.
  struct Col {
    int kind;  // 0 ineq, 1 lower, 2 upper
    Eigen::Index index;
  };
  std::vector<Col> cols;
  for (Eigen::Index i = 0; i < nin; ++i) {
    if (problem.ineq_rhs[i] - problem.ineq_matrix.row(i).dot(candidate) <= active_tol)
      cols.push_back({0, i});
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isfinite(problem.lower[j]) && candidate[j] - problem.lower[j] <= active_tol)
      cols.push_back({1, j});
    if (std::isfinite(problem.upper[j]) && problem.upper[j] - candidate[j] <= active_tol)
      cols.push_back({2, j});
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    switch (cols[c].kind) {
      case 0: g.col(col) = problem.ineq_matrix.row(cols[c].index).transpose(); break;
      case 1: g(cols[c].index, col) = -1.0; break;
      default: g(cols[c].index, col) = 1.0; break;
    }
  }
  const Eigen::VectorXd grad = h * candidate + problem.linear_cost;
  const Eigen::VectorXd w = nnls(g, -grad);

  Eigen::VectorXd ineq_dual = Eigen::VectorXd::Zero(nin);
  Eigen::VectorXd box_dual = Eigen::VectorXd::Zero(n);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const double v = w[static_cast<Eigen::Index>(c)];
    switch (cols[c].kind) {
      case 0: ineq_dual[cols[c].index] = v; break;
      case 1: box_dual[cols[c].index] -= v; break;
      default: box_dual[cols[c].index] += v; break;
    }
  }
  return assemble(problem, h, candidate, std::move(ineq_dual), std::move(box_dual), tol);
}

}  // namespace

KktReport check_kkt(const QpProblem& problem, const Eigen::VectorXd& candidate, double tol) {
  check_candidate(problem, candidate);
  const Eigen::MatrixXd h = detail::regularized_hessian(problem);
  // Tight activity threshold first; widen only if it leaves stationarity unmet.
  KktReport best;
  double best_worst = kInf;
  for (const double active_tol : {tol, std::sqrt(tol)}) {
    KktReport rep = estimate_with_threshold(problem, h, candidate, active_tol, tol);
    const double worst =
        std::max({rep.stationarity, rep.primal_feasibility, rep.complementarity});
    if (worst < best_worst) {
      best_worst = worst;
      best = std::move(rep);
    }
    if (best.pass) break;
  }
  return best;
}

KktReport check_kkt(const QpProblem& problem, const Eigen::VectorXd& candidate,
                    const Eigen::VectorXd& ineq_dual, const Eigen::VectorXd& box_dual,
                    double tol) {
  check_candidate(problem, candidate);
  if (ineq_dual.size() != problem.ineq_matrix.rows() || box_dual.size() != candidate.size())
    throw DimensionError("check_kkt: multiplier lengths do not match the problem");
  const Eigen::MatrixXd h = detail::regularized_hessian(problem);
  KktReport rep = assemble(problem, h, candidate, ineq_dual, box_dual, tol);
  // Sign conditions on the supplied multipliers count toward stationarity.
  double sign_violation = ineq_dual.size() > 0 ? std::max(0.0, -ineq_dual.minCoeff()) : 0.0;
  rep.stationarity = std::max(rep.stationarity, sign_violation);
  rep.pass = rep.stationarity <= tol && rep.primal_feasibility <= tol && rep.complementarity <= tol;
  return rep;
}

}  // namespace ata
