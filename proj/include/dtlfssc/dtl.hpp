#pragma once

#include "dtlfssc/common.hpp"
#include "dtlfssc/fssc.hpp"

#include <vector>

namespace dtlfssc {

/// Linear map A (p×n, p ≤ n) from the input space to the feature space.
class TransformOperator {
public:
    TransformOperator() = default;
    explicit TransformOperator(Matrix a);

    static TransformOperator identity(Index n) { return TransformOperator(Matrix::Identity(n, n)); }

    const Matrix& matrix() const { return a_; }
    Index feature_dim() const { return a_.rows(); }
    Index input_dim() const { return a_.cols(); }
    double min_singular_value() const;
    Matrix apply(const Eigen::Ref<const Matrix>& x) const;

private:
    Matrix a_;
};

/// Latent feature points F (p×N), one column per sample.
class LatentFeatures {
public:
    LatentFeatures() = default;
    explicit LatentFeatures(Matrix f);

    const Matrix& matrix() const { return f_; }

private:
    Matrix f_;
};

struct DtlParams {
    double lambda = 0.05;
    double tau1 = 1.0;
    /// Subgradient step; zero selects 0.1/lambda.
    double mu = 0.0;
    int t_dtl = 1;
    int dc_steps = 10;
    /// ADMM for the operator update.
    SolverOptions admm{100, 1e-6, 1.0, 0};
    /// ADMM for the convex feature initialization.
    SolverOptions feature_admm{300, 1e-6, 1.0, 0};

    double step() const { return mu > 0.0 ? mu : 0.1 / lambda; }
    void validate() const;
};

/// Σ_k ‖F·diag(Q_k)‖_* − ‖F‖_*; nonnegative for every row-simplex Q.
double discriminative_gap(const Eigen::Ref<const Matrix>& f, const FuzzyLabelMatrix& q);

/// f(F) = (λ/2)‖AX − F‖_F² + Σ_k ‖F·diag(Q_k)‖_*
double convex_feature_objective(const Eigen::Ref<const Matrix>& f,
                                const Eigen::Ref<const Matrix>& x_proj,
                                const FuzzyLabelMatrix& q,
                                double lambda);

/// f(F) − ‖F‖_*
double dc_feature_objective(const Eigen::Ref<const Matrix>& f,
                            const Eigen::Ref<const Matrix>& x_proj,
                            const FuzzyLabelMatrix& q,
                            double lambda);

struct AdmmReport {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double rho = 0.0;
    /// Accelerated majorize-minimize steps run after the ADMM loop.
    int polish_iterations = 0;
    bool converged = false;
};

/// Minimizes the convex f(F) by ADMM with one splitting variable G_k = F·diag(Q_k)
/// per cluster; each G_k step is a singular value threshold.
LatentFeatures init_features(const Eigen::Ref<const Matrix>& x_proj,
                             const FuzzyLabelMatrix& q,
                             double lambda,
                             const SolverOptions& opts,
                             Diagnostics* diag = nullptr,
                             AdmmReport* report = nullptr);

/// U·Vᵀ over singular values above 1e-10; a subgradient of the nuclear norm.
Matrix nuclear_subgradient(const Eigen::Ref<const Matrix>& m);

struct RefineTrace {
    /// f(F) − ‖F‖_* at the start and after every accepted step.
    std::vector<double> objective;
    /// ‖F‖_* at the same points.
    std::vector<double> nuclear;
};

/// Subgradient descent on f(F) − ‖F‖_* from F_init. A step is accepted only if
/// it lowers the objective; otherwise the step size is halved (at most 20
/// times) and the descent stops if no halving helps.
LatentFeatures refine_features(const LatentFeatures& f_init,
                               const Eigen::Ref<const Matrix>& x_proj,
                               const FuzzyLabelMatrix& q,
                               double lambda,
                               double mu,
                               int dc_steps,
                               RefineTrace* trace = nullptr);

/// Precomputed pieces of the operator subproblem for fixed (X, F, Z, λ, ρ):
/// the A-step solves A·(λXXᵀ + EEᵀ + ρI) = λFXᵀ + ρÂ − Λ with E = XZ − X.
class OperatorSystem {
public:
    OperatorSystem(const Eigen::Ref<const Matrix>& x,
                   const Eigen::Ref<const Matrix>& f,
                   const CoefficientMatrix& z,
                   double lambda,
                   double rho);

    Matrix a_step(const Eigen::Ref<const Matrix>& a_hat, const Eigen::Ref<const Matrix>& lam) const;

    /// Refactors the A-step system for a new penalty.
    void set_rho(double rho);

    /// A·(λXXᵀ + EEᵀ)
    Matrix apply_quadratic(const Eigen::Ref<const Matrix>& a) const;

    /// Gradient A·(λXXᵀ + EEᵀ) − λFXᵀ of the smooth part.
    Matrix gradient(const Eigen::Ref<const Matrix>& a) const;

    /// λFXᵀ
    const Matrix& linear_term() const { return rhs_base_; }
    /// λXXᵀ + EEᵀ
    const Matrix& quadratic() const { return quad_; }

    /// ½tr(A(λXXᵀ + EEᵀ)Aᵀ) − ⟨A, λFXᵀ⟩ − τ·log det(AAᵀ); +inf off full row rank.
    double objective(const Eigen::Ref<const Matrix>& a, double tau) const;

    /// λ(AX − F)Xᵀ + A·EEᵀ + ρ(A − Â + Λ/ρ)
    Matrix stationarity(const Eigen::Ref<const Matrix>& a,
                        const Eigen::Ref<const Matrix>& a_hat,
                        const Eigen::Ref<const Matrix>& lam) const;

    double rho() const { return rho_; }
    /// Largest eigenvalue of λXXᵀ + EEᵀ.
    double curvature() const { return curvature_; }

private:
    Matrix quad_;
    Matrix rhs_base_;
    Eigen::LLT<Matrix> chol_;
    double rho_;
    double curvature_;
};

/// ADMM on (λ/2)‖AX − F‖² + ½‖AXZ − AX‖² − τ₁·log det(AAᵀ), started from
/// `a_start` with a zero multiplier, then finished exactly (p = n, by
/// whitening with (λXXᵀ + EEᵀ)^{-1/2}) or by accelerated majorize-minimize
/// steps that reuse the barrier shrink (p < n).
///
/// The barrier shrink never returns singular values below √(2τ₁/ρ), so the
/// penalty is raised to the largest eigenvalue of λXXᵀ + EEᵀ when ρ is
/// smaller; otherwise the optimum can lie outside the reachable set.
TransformOperator update_operator(const Eigen::Ref<const Matrix>& x,
                                  const LatentFeatures& f,
                                  const CoefficientMatrix& z,
                                  const DtlParams& params,
                                  const TransformOperator& a_start,
                                  Diagnostics* diag = nullptr,
                                  AdmmReport* report = nullptr);

/// (λ/2)‖AX − F‖² + ½‖AXZ − AX‖² + (Σ_k‖F·diag(Q_k)‖_* − ‖F‖_*) − τ₁·log det(AAᵀ)
double dtl_objective(const Eigen::Ref<const Matrix>& x,
                     const TransformOperator& a,
                     const LatentFeatures& f,
                     const CoefficientMatrix& z,
                     const FuzzyLabelMatrix& q,
                     const DtlParams& params);

struct DtlResult {
    TransformOperator a;
    LatentFeatures f;
};

/// t_dtl rounds of feature initialization, DC refinement and operator update.
DtlResult run_dtl(const Eigen::Ref<const Matrix>& x,
                  const CoefficientMatrix& z,
                  const FuzzyLabelMatrix& q,
                  const TransformOperator& a_init,
                  const DtlParams& params,
                  Diagnostics* diag = nullptr);

} // namespace dtlfssc
