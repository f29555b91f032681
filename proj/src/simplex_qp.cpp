#include "dsc/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace dsc {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::span<const double> as_span(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

VectorXd project(const VectorXd& v) {
  const auto w = project_to_simplex(as_span(v));
  return Eigen::Map<const VectorXd>(w.values().data(), v.size());
}

// Largest eigenvalue of a PSD matrix. Falls back to a Gershgorin/trace bound
// when power iteration has not settled, so the step never overshoots.
double lipschitz_bound(const MatrixXd& A) {
  const Index n = A.rows();
  const double trace = A.trace();
  double gershgorin = 0.0;
  for (Index i = 0; i < n; ++i) gershgorin = std::max(gershgorin, A.row(i).cwiseAbs().sum());
  const double safe = std::min(trace, gershgorin);
  if (safe <= 0.0) return 0.0;

  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 2000; ++it) {
    VectorXd w = A * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return safe;
    v = w / norm;
    if (std::fabs(next - lambda) <= 1e-12 * next) return std::min(safe, next * 1.01);
    lambda = next;
  }
  return safe;
}

// Minimizer of the quadratic restricted to the face spanned by `support`,
// ignoring the sign constraints. Empty result if it leaves the simplex.
std::optional<VectorXd> solve_on_face(const MatrixXd& A, const VectorXd& b, const std::vector<Index>& support) {
  const Index s = static_cast<Index>(support.size());
  MatrixXd K = MatrixXd::Zero(s + 1, s + 1);
  VectorXd rhs(s + 1);
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) K(i, j) = 2.0 * A(support[i], support[j]);
    K(i, s) = 1.0;
    K(s, i) = 1.0;
    rhs[i] = 2.0 * b[support[i]];
  }
  rhs[s] = 1.0;
  const VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);

  VectorXd w = VectorXd::Zero(A.rows());
  double total = 0.0;
  for (Index i = 0; i < s; ++i) {
    if (!(sol[i] >= 0.0) || !std::isfinite(sol[i])) return std::nullopt;
    w[support[i]] = sol[i];
    total += sol[i];
  }
  if (!(std::fabs(total - 1.0) <= 1e-9)) return std::nullopt;
  return w / total;
}

std::vector<Index> support_of(const VectorXd& w) {
  std::vector<Index> s;
  for (Index j = 0; j < w.size(); ++j) {
    if (w[j] > 0.0) s.push_back(j);
  }
  return s;
}

VectorXd exact_gradient(const MatrixXd& X, const VectorXd& y, const VectorXd& w) {
  const VectorXd r = X * w - y;
  return (2.0 / static_cast<double>(X.rows())) * (X.transpose() * r);
}

void check_inputs(const MatrixXd& X, const VectorXd& y) {
  if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("simplex least squares: empty design");
  if (y.size() != X.rows()) throw std::invalid_argument("simplex least squares: target length mismatch");
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("simplex least squares: non-finite entries");
}

}  // namespace

SimplexWeights::SimplexWeights(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("SimplexWeights: empty vector");
  double total = 0.0;
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("SimplexWeights: negative or non-finite entry");
    total += v;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("SimplexWeights: entries must sum to 1");
}

SimplexWeights SimplexWeights::uniform(std::size_t size) {
  if (size == 0) throw std::invalid_argument("SimplexWeights: empty vector");
  return SimplexWeights(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

SimplexWeights SimplexWeights::vertex(std::size_t size, std::size_t j) {
  if (j >= size) throw std::invalid_argument("SimplexWeights: vertex index out of range");
  std::vector<double> v(size, 0.0);
  v[j] = 1.0;
  return SimplexWeights(std::move(v));
}

SimplexWeights project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("project_to_simplex: empty input");
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("project_to_simplex: non-finite input");
  }
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());

  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - candidate > 0.0) theta = candidate;
  }

  std::vector<double> w(v.size());
  double total = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    w[j] = std::max(v[j] - theta, 0.0);
    total += w[j];
  }
  if (total != 1.0) {
    for (double& x : w) x /= total;
  }
  return SimplexWeights(std::move(w));
}

double mean_squared_residual(const MatrixXd& X, const VectorXd& y, std::span<const double> w) {
  const Eigen::Map<const VectorXd> wv(w.data(), static_cast<Index>(w.size()));
  const VectorXd r = X * wv - y;
  double sum = 0.0;
  for (Index m = 0; m < r.size(); ++m) sum += r[m] * r[m];
  return sum / static_cast<double>(X.rows());
}

double kkt_residual_from_gradient(std::span<const double> g, std::span<const double> w) {
  if (g.size() != w.size() || g.empty()) throw std::invalid_argument("kkt_residual: dimension mismatch");
  double mu = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] > 0.0) mu = std::min(mu, g[j]);
  }
  double residual = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    residual = std::max(residual, w[j] > 0.0 ? g[j] - mu : mu - g[j]);
  }
  return residual;
}

double kkt_residual(const MatrixXd& X, const VectorXd& y, const SimplexWeights& w) {
  check_inputs(X, y);
  if (static_cast<Index>(w.size()) != X.cols()) throw std::invalid_argument("kkt_residual: dimension mismatch");
  const VectorXd g = exact_gradient(X, y, w.vector());
  return kkt_residual_from_gradient(as_span(g), w.values());
}

SolveReport solve_simplex_ls(const MatrixXd& X, const VectorXd& y, const SolverOptions& options) {
  check_inputs(X, y);
  if (!(options.tol > 0.0)) throw std::invalid_argument("simplex least squares: tol must be positive");

  const Index J = X.cols();
  const double inv_m = 1.0 / static_cast<double>(X.rows());
  const MatrixXd A = (X.transpose() * X) * inv_m;
  const VectorXd b = (X.transpose() * y) * inv_m;
  // f(to) - f(from) as d'h with d = to - from, h = A(to + from) - 2b, which
  // avoids differencing two large objective values. Both points sum to one
  // only up to rounding, and h can be large, so the multiplier part of h is
  // removed first: the stray sum of d then contributes nothing.
  auto change = [&](const VectorXd& from, const VectorXd& to) {
    const VectorXd d = to - from;
    VectorXd h = A * (to + from) - 2.0 * b;
    double mu = 0.0;
    int active = 0;
    for (Index j = 0; j < J; ++j) {
      if (to[j] > 0.0 || from[j] > 0.0) mu += h[j], ++active;
    }
    h.array() -= mu / active;
    return d.dot(h);
  };
  auto certificate = [&](const VectorXd& w) {
    const VectorXd g = exact_gradient(X, y, w);
    return kkt_residual_from_gradient(as_span(g), as_span(w));
  };

  SolveReport report{SimplexWeights::uniform(static_cast<std::size_t>(J)), 0.0, 0, 0.0, false, {}};
  VectorXd x = VectorXd::Constant(J, 1.0 / static_cast<double>(J));
  double level = mean_squared_residual(X, y, as_span(x));  // objective at x, tracked by increments
  double kkt = certificate(x);

  // Moves x to the minimizer on its current face when that does not raise
  // the objective and does not worsen the certificate.
  auto polish = [&](const std::vector<Index>& face, double max_certificate) {
    auto p = solve_on_face(A, b, face);
    if (!p) return false;
    const double dp = change(x, *p);
    if (dp > 0.0) return false;
    const double kp = certificate(*p);
    if (kp > max_certificate) return false;
    x = std::move(*p);
    level += dp;
    kkt = kp;
    if (options.record_trace) report.trace.push_back(level);
    return true;
  };

  const double L = 2.0 * lipschitz_bound(A);
  bool converged = kkt <= options.tol;
  int iterations = 0;

  if (!converged && L > 0.0) {
    VectorXd momentum_point = x;
    double t = 1.0;
    bool momentum_active = false;
    std::vector<Index> last_face;

    while (iterations < options.max_iter) {
      ++iterations;
      const VectorXd grad = 2.0 * (A * momentum_point - b);
      VectorXd z = project(momentum_point - grad / L);
      const double dz = change(x, z);

      if (dz > 0.0) {
        // Non-monotone step: drop momentum and retry from the last accepted point.
        if (!momentum_active) break;  // a plain gradient step no longer descends
        momentum_point = x;
        t = 1.0;
        momentum_active = false;
      } else {
        if (!momentum_active && z == x) break;  // fixed point of the projected gradient map
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        momentum_point = z + ((t - 1.0) / t_next) * (z - x);
        x = std::move(z);
        level += dz;
        t = t_next;
        momentum_active = momentum_point != x;
      }
      if (options.record_trace) report.trace.push_back(level);

      const VectorXd g_gram = 2.0 * (A * x - b);
      if (kkt_residual_from_gradient(as_span(g_gram), as_span(x)) <= options.tol) {
        kkt = certificate(x);
        if (kkt <= options.tol) {
          // Finish on the identified face so the answer does not depend on
          // how the tolerance compares with the problem's scale.
          polish(support_of(x), kkt);
          converged = true;
          break;
        }
      }

      // Try the face solve whenever the support changes, and periodically otherwise.
      auto face = support_of(x);
      if (face != last_face || iterations % 200 == 0) {
        last_face = std::move(face);
        if (polish(last_face, options.tol)) {
          converged = true;
          break;
        }
      }
    }
    if (!converged) {
      kkt = certificate(x);
      // Stalled at rounding level or out of iterations: a last face solve.
      polish(support_of(x), kkt);
      converged = kkt <= options.tol;
    }
  } else if (L == 0.0) {
    converged = true;  // X == 0: every feasible point is optimal
  }

  std::vector<double> w(x.data(), x.data() + J);
  report.weights = SimplexWeights(std::move(w));
  report.objective = mean_squared_residual(X, y, report.weights.values());
  report.iterations = iterations;
  report.kkt_residual = kkt;
  report.converged = converged;
  return report;
}

}  // namespace dsc
