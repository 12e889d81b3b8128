#pragma once

#include <Eigen/Core>

#include <vector>

#include "pnpunmix/model.hpp"

namespace pnpunmix {

/// Where the prior acts: ProH uses H = M (reconstructed image),
/// ProA uses H = I (abundance maps).
enum class PatternSwitch { ProH, ProA };

/// min 1/2 a'Qa + f'a  subject to  a >= 0, sum(a) = 1.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd f;

  Index dimension() const { return f.size(); }
};

/// Q = M'M + rho H'H, shared by every pixel of one ADMM iteration.
Eigen::MatrixXd subproblemHessian(const EndmemberMatrix& endmembers,
                                  PatternSwitch mode, double rho);

/// Per-pixel A-step problem: Q as above, f = -(M'y + rho H' xTilde).
/// xTilde has L entries in ProH and P entries in ProA. rho = 0 gives the
/// plain FCLS problem in either mode.
QpProblem buildSubproblem(const EndmemberMatrix& endmembers, PatternSwitch mode,
                          const Eigen::VectorXd& y, const Eigen::VectorXd& xTilde,
                          double rho);

double qpObjective(const Eigen::MatrixXd& Q, const Eigen::VectorXd& f,
                   const Eigen::VectorXd& a);

/// Euclidean projection onto the unit simplex (sort-based).
Eigen::VectorXd projectToSimplex(const Eigen::VectorXd& v);

struct QpOptions {
  double tol = 1e-9;
  int maxIter = 200;
  /// When set, receives the objective after every primal step.
  std::vector<double>* objectiveTrace = nullptr;
};

struct QpSolution {
  Eigen::VectorXd a;
  double kktResidual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Q was rank deficient and solved with a small Tikhonov shift.
  bool regularized = false;
  /// The active-set KKT system was singular and projected gradient finished.
  bool usedFallback = false;
};

/// Primal active-set solver on the unit simplex for a fixed Q.
///
/// Each iteration solves the equality-constrained Newton step on the free
/// face, takes the longest feasible step along it, and pins the first
/// blocking coordinate to zero (lowest index on ties). At a face minimum
/// the coordinate with the most negative multiplier (lowest index on ties)
/// is released. Iterates never increase the objective. If the face KKT
/// system is singular the solve continues with projected gradient and
/// Armijo backtracking. The returned point is always feasible, also when
/// maxIter is hit (converged = false).
class SimplexQpSolver {
 public:
  /// Throws ComputeError when Q is asymmetric or indefinite beyond 1e-10
  /// (relative to its largest entry).
  explicit SimplexQpSolver(Eigen::MatrixXd Q);

  QpSolution solve(const Eigen::VectorXd& f, const QpOptions& options = {},
                   const Eigen::VectorXd* warmStart = nullptr) const;

  const Eigen::MatrixXd& hessian() const { return Q_; }
  Index dimension() const { return Q_.rows(); }
  bool regularized() const { return regularized_; }

 private:
  bool projectedGradient(const Eigen::VectorXd& f, const QpOptions& options,
                         Eigen::VectorXd& a, QpSolution& out) const;

  Eigen::MatrixXd Q_;
  double lipschitz_ = 1.0;
  bool regularized_ = false;
};

QpSolution solveSimplexQp(const QpProblem& problem, double tol = 1e-9,
                          int maxIter = 200);

/// KKT residual of a feasible point: infinity norm of the gradient projected
/// onto the tangent space of its active face, plus any multiplier sign
/// violation on the active coordinates.
double kktResidual(const Eigen::MatrixXd& Q, const Eigen::VectorXd& f,
                   const Eigen::VectorXd& a);

struct FclsResult {
  AbundanceMatrix abundances;
  Index flaggedPixels = 0;      ///< did not converge within maxIter
  Index regularizedPixels = 0;  ///< solved with the Tikhonov shift
};

/// Fully constrained least squares, one simplex QP per pixel.
FclsResult fcls(const EndmemberMatrix& endmembers, const PixelMatrix& y,
                double tol = 1e-9, int maxIter = 200);

}  // namespace pnpunmix
