#include "pnpunmix/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pnpunmix/parallel.hpp"

namespace pnpunmix {

namespace {

// Newton steps taken on one face before it is treated as minimized; the
// second step is an iterative refinement of the first.
constexpr int kStepsPerFace = 2;
constexpr double kNegligibleStep = 1e-13;

double scaleOf(const Eigen::MatrixXd& Q) {
  return std::max(1.0, Q.cwiseAbs().maxCoeff());
}

}  // namespace

Eigen::MatrixXd subproblemHessian(const EndmemberMatrix& endmembers,
                                  PatternSwitch mode, double rho) {
  if (!(rho >= 0.0)) {
    throw std::invalid_argument("subproblemHessian: rho must be >= 0");
  }
  const Eigen::MatrixXd& M = endmembers.matrix();
  Eigen::MatrixXd gram = M.transpose() * M;
  if (mode == PatternSwitch::ProH) return (1.0 + rho) * gram;
  gram.diagonal().array() += rho;
  return gram;
}

QpProblem buildSubproblem(const EndmemberMatrix& endmembers, PatternSwitch mode,
                          const Eigen::VectorXd& y, const Eigen::VectorXd& xTilde,
                          double rho) {
  const Eigen::MatrixXd& M = endmembers.matrix();
  if (y.size() != M.rows()) {
    throw ShapeError("buildSubproblem: spectrum has " + std::to_string(y.size()) +
                     " bands, endmembers have " + std::to_string(M.rows()));
  }
  const Index anchorSize = mode == PatternSwitch::ProH ? M.rows() : M.cols();
  if (xTilde.size() != anchorSize) {
    throw ShapeError("buildSubproblem: anchor has " +
                     std::to_string(xTilde.size()) + " entries, expected " +
                     std::to_string(anchorSize));
  }
  QpProblem problem;
  problem.Q = subproblemHessian(endmembers, mode, rho);
  if (mode == PatternSwitch::ProH) {
    problem.f = -(M.transpose() * (y + rho * xTilde));
  } else {
    problem.f = -(M.transpose() * y + rho * xTilde);
  }
  return problem;
}

double qpObjective(const Eigen::MatrixXd& Q, const Eigen::VectorXd& f,
                   const Eigen::VectorXd& a) {
  return 0.5 * a.dot(Q * a) + f.dot(a);
}

Eigen::VectorXd projectToSimplex(const Eigen::VectorXd& v) {
  const Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0).matrix();
}

double kktResidual(const Eigen::MatrixXd& Q, const Eigen::VectorXd& f,
                   const Eigen::VectorXd& a) {
  const Eigen::VectorXd g = Q * a + f;
  double sum = 0.0;
  Index nFree = 0;
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) {
      sum += g[i];
      ++nFree;
    }
  }
  if (nFree == 0) return std::numeric_limits<double>::infinity();
  const double nu = -sum / static_cast<double>(nFree);
  double residual = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double shifted = g[i] + nu;
    residual = std::max(residual, a[i] > 0.0 ? std::abs(shifted)
                                             : std::max(0.0, -shifted));
  }
  return residual;
}

SimplexQpSolver::SimplexQpSolver(Eigen::MatrixXd Q) : Q_(std::move(Q)) {
  if (Q_.rows() != Q_.cols() || Q_.rows() < 1) {
    throw ShapeError("QP Hessian must be square and non-empty");
  }
  if (!Q_.allFinite()) throw ComputeError("QP Hessian is not finite");
  const double scale = scaleOf(Q_);
  if ((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ComputeError("QP Hessian is not symmetric");
  }
  Q_ = 0.5 * (Q_ + Q_.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q_, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (lmin < -1e-10 * scale) {
    throw ComputeError("QP Hessian is indefinite (smallest eigenvalue " +
                       std::to_string(lmin) + ")");
  }
  if (lmin <= 1e-12 * std::max(lmax, 0.0)) {
    const double trace = Q_.trace();
    const double shift =
        trace > 0.0 ? 1e-10 * trace / static_cast<double>(Q_.rows()) : 1e-10;
    Q_.diagonal().array() += shift;
    regularized_ = true;
  }
  lipschitz_ = std::max(lmax, 1e-300) + (regularized_ ? 1e-10 * lmax : 0.0);
}

QpSolution SimplexQpSolver::solve(const Eigen::VectorXd& f,
                                  const QpOptions& options,
                                  const Eigen::VectorXd* warmStart) const {
  const Index n = Q_.rows();
  if (f.size() != n) {
    throw ShapeError("QP linear term has " + std::to_string(f.size()) +
                     " entries, Hessian is " + std::to_string(n) + "x" +
                     std::to_string(n));
  }
  if (!f.allFinite()) throw ComputeError("QP linear term is not finite");

  QpSolution out;
  out.regularized = regularized_;

  Eigen::VectorXd a;
  if (warmStart != nullptr) {
    if (warmStart->size() != n) {
      throw ShapeError("QP warm start has the wrong dimension");
    }
    a = projectToSimplex(*warmStart);
  } else {
    a = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  }

  std::vector<char> active(n, 0);
  for (Index i = 0; i < n; ++i) {
    if (a[i] <= 0.0) {
      a[i] = 0.0;
      active[i] = 1;
    }
  }

  if (options.objectiveTrace != nullptr) {
    options.objectiveTrace->push_back(qpObjective(Q_, f, a));
  }

  std::vector<Index> freeIdx;
  freeIdx.reserve(n);
  int stepsOnFace = 0;
  bool fallback = false;

  for (int it = 0; it < options.maxIter; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd g = Q_ * a + f;

    freeIdx.clear();
    for (Index i = 0; i < n; ++i) {
      if (!active[i]) freeIdx.push_back(i);
    }
    const Index nf = static_cast<Index>(freeIdx.size());

    bool faceMinimum = stepsOnFace >= kStepsPerFace;
    Eigen::VectorXd p;
    if (!faceMinimum) {
      // [Q_FF 1; 1' 0] [p; nu] = [-g_F; 0]
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + 1);
      for (Index r = 0; r < nf; ++r) {
        for (Index c = 0; c < nf; ++c) kkt(r, c) = Q_(freeIdx[r], freeIdx[c]);
        kkt(r, nf) = 1.0;
        kkt(nf, r) = 1.0;
        rhs[r] = -g[freeIdx[r]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      if (!lu.isInvertible()) {
        fallback = true;
        break;
      }
      p = lu.solve(rhs).head(nf);
      if (!p.allFinite()) {
        fallback = true;
        break;
      }
      faceMinimum = p.lpNorm<Eigen::Infinity>() <= kNegligibleStep;
    }

    if (!faceMinimum) {
      double step = 1.0;
      Index blocking = -1;
      for (Index r = 0; r < nf; ++r) {
        if (p[r] < 0.0) {
          const double limit = -a[freeIdx[r]] / p[r];
          if (limit < step) {
            step = limit;
            blocking = freeIdx[r];
          }
        }
      }
      for (Index r = 0; r < nf; ++r) {
        a[freeIdx[r]] = std::max(0.0, a[freeIdx[r]] + step * p[r]);
      }
      if (blocking >= 0) {
        a[blocking] = 0.0;
        active[blocking] = 1;
        stepsOnFace = 0;
      } else {
        ++stepsOnFace;
      }
      if (options.objectiveTrace != nullptr) {
        options.objectiveTrace->push_back(qpObjective(Q_, f, a));
      }
      continue;
    }

    // Face minimum: release the most violated bound, if any.
    double sumFree = 0.0;
    for (Index i : freeIdx) sumFree += g[i];
    const double nu = -sumFree / static_cast<double>(nf);
    Index release = -1;
    double worst = -options.tol;
    for (Index i = 0; i < n; ++i) {
      if (active[i] && g[i] + nu < worst) {
        worst = g[i] + nu;
        release = i;
      }
    }
    if (release < 0) {
      out.converged = true;
      break;
    }
    active[release] = 0;
    stepsOnFace = 0;
  }

  if (fallback) {
    out.usedFallback = true;
    out.converged = projectedGradient(f, options, a, out);
  }

  for (Index i = 0; i < n; ++i) a[i] = std::max(0.0, a[i]);
  a /= a.sum();
  out.kktResidual = kktResidual(Q_, f, a);
  out.converged = out.converged && out.kktResidual <= options.tol;
  out.a = std::move(a);
  return out;
}

bool SimplexQpSolver::projectedGradient(const Eigen::VectorXd& f,
                                        const QpOptions& options,
                                        Eigen::VectorXd& a,
                                        QpSolution& out) const {
  a = projectToSimplex(a);
  double objective = qpObjective(Q_, f, a);
  for (int it = out.iterations; it < options.maxIter; ++it) {
    out.iterations = it + 1;
    if (kktResidual(Q_, f, a) <= options.tol) return true;
    const Eigen::VectorXd g = Q_ * a + f;
    double step = 1.0 / lipschitz_;
    Eigen::VectorXd next;
    double nextObjective = objective;
    for (int backtrack = 0; backtrack < 50; ++backtrack) {
      next = projectToSimplex(a - step * g);
      const Eigen::VectorXd d = next - a;
      nextObjective = qpObjective(Q_, f, next);
      if (nextObjective <= objective + g.dot(d) + 0.5 / step * d.squaredNorm()) {
        break;
      }
      step *= 0.5;
    }
    if (nextObjective > objective) break;
    a = next;
    objective = nextObjective;
    if (options.objectiveTrace != nullptr) {
      options.objectiveTrace->push_back(objective);
    }
  }
  return kktResidual(Q_, f, a) <= options.tol;
}

QpSolution solveSimplexQp(const QpProblem& problem, double tol, int maxIter) {
  if (problem.Q.rows() != problem.f.size()) {
    throw ShapeError("QP problem dimensions disagree");
  }
  SimplexQpSolver solver(problem.Q);
  QpOptions options;
  options.tol = tol;
  options.maxIter = maxIter;
  return solver.solve(problem.f, options);
}

FclsResult fcls(const EndmemberMatrix& endmembers, const PixelMatrix& y,
                double tol, int maxIter) {
  if (y.channels() != endmembers.bands()) {
    throw ShapeError("fcls: cube has " + std::to_string(y.channels()) +
                     " bands, endmembers have " +
                     std::to_string(endmembers.bands()));
  }
  const SimplexQpSolver solver(subproblemHessian(endmembers, PatternSwitch::ProH, 0.0));
  const Eigen::MatrixXd linear = -(endmembers.matrix().transpose() * y.values);
  const Index n = y.pixels();
  const Index p = endmembers.endmembers();

  Eigen::MatrixXd a(p, n);
  std::vector<char> flagged(n, 0);
  QpOptions options;
  options.tol = tol;
  options.maxIter = maxIter;

#pragma omp parallel for schedule(static) num_threads(threadCount())
  for (Index i = 0; i < n; ++i) {
    const QpSolution s = solver.solve(linear.col(i), options);
    a.col(i) = s.a;
    flagged[i] = s.converged ? 0 : 1;
  }

  FclsResult result;
  result.abundances = AbundanceMatrix(std::move(a), y.spatialRows, y.spatialCols);
  result.flaggedPixels = std::count(flagged.begin(), flagged.end(), 1);
  result.regularizedPixels = solver.regularized() ? n : 0;
  return result;
}

}  // namespace pnpunmix
