#pragma once

#include "dtlfssc/common.hpp"

#include <optional>

namespace dtlfssc {

/// min_z ½‖target − dictionary·z‖² + Σ_j weights_j·|z_j|
struct WeightedLassoProblem {
    Matrix dictionary;
    Vector target;
    Vector weights;

    void validate() const;
};

struct LassoResult {
    Vector z;
    double objective = 0.0;
    int iterations = 0;
    int restarts = 0;
    bool converged = false;
};

/// Elementwise shrinkage sign(v)·max(|v| − w, 0).
Vector soft_threshold(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& w);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double largest_eigenvalue(const Eigen::Ref<const Matrix>& sym, int iterations = 50);

/// Weighted lasso objective written in terms of the Gram matrix DᵀD, the
/// correlation Dᵀx and ‖x‖².
double weighted_lasso_objective(const Eigen::Ref<const Matrix>& gram,
                                const Eigen::Ref<const Vector>& corr,
                                double target_sq_norm,
                                const Eigen::Ref<const Vector>& weights,
                                const Eigen::Ref<const Vector>& z);

double weighted_lasso_objective(const WeightedLassoProblem& problem, const Eigen::Ref<const Vector>& z);

/// FISTA on the Gram form of the problem.
///
/// The step is 1/L with L taken from `lipschitz` when given, otherwise from
/// power iteration on the Gram matrix; L doubles whenever the quadratic upper
/// bound fails at a trial point. Momentum restarts whenever the objective
/// would increase, so the accepted objective sequence is non-increasing.
/// Stops once the duality gap at an accepted point is at most tol times the
/// objective (so the objective is within tol, relative, of the optimum), or
/// when a plain proximal step from an accepted point cannot descend.
LassoResult solve_weighted_lasso_gram(const Eigen::Ref<const Matrix>& gram,
                                      const Eigen::Ref<const Vector>& corr,
                                      double target_sq_norm,
                                      const Eigen::Ref<const Vector>& weights,
                                      const SolverOptions& opts,
                                      const std::optional<Vector>& warm_start = std::nullopt,
                                      std::optional<double> lipschitz = std::nullopt);

LassoResult solve_weighted_lasso(const WeightedLassoProblem& problem,
                                 const SolverOptions& opts,
                                 const std::optional<Vector>& warm_start = std::nullopt);

/// Euclidean projection onto the probability simplex {q ≥ 0, Σq = 1}.
Vector project_simplex(const Eigen::Ref<const Vector>& v);

/// Singular value thresholding: argmin_Y ½‖M − Y‖_F² + t‖Y‖_*.
Matrix prox_nuclear(const Eigen::Ref<const Matrix>& m, double t);

/// Nuclear norm (sum of singular values).
double nuclear_norm(const Eigen::Ref<const Matrix>& m);

/// Positive stationary point of aσ² − bσ − c·log σ, i.e. the positive root of
/// 2aσ² − bσ − c = 0.
double positive_quadratic_log_root(double a, double b, double c);

/// argmin_Y (rho/2)‖M − Y‖_F² − tau·log det(YᵀY) for a tall m×k matrix M.
/// Every singular value of the result is strictly positive; they are written to
/// `singular_values` when it is non-null.
Matrix logdet_barrier_shrink(const Eigen::Ref<const Matrix>& m,
                             double rho,
                             double tau,
                             Vector* singular_values = nullptr);

} // namespace dtlfssc
