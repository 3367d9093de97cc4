#pragma once

#include "dtlfssc/common.hpp"

#include <optional>

namespace dtlfssc {

/// Self-representation matrix Z (N×N). Column i holds the coefficients that
/// express sample i through the others; the diagonal is exactly zero.
class CoefficientMatrix {
public:
    CoefficientMatrix() = default;
    explicit CoefficientMatrix(Matrix values);

    static CoefficientMatrix zeros(Index n) { return CoefficientMatrix(Matrix::Zero(n, n)); }

    const Matrix& matrix() const { return values_; }
    Index size() const { return values_.rows(); }

private:
    Matrix values_;
};

/// Fuzzy membership matrix Q (N×K) with every row on the probability simplex.
/// Full column rank is a property of solver outputs, not a construction
/// requirement: the uniform starting point has rank one.
class FuzzyLabelMatrix {
public:
    static constexpr double kRowSumTolerance = 1e-9;

    FuzzyLabelMatrix() = default;
    explicit FuzzyLabelMatrix(Matrix values);

    static FuzzyLabelMatrix uniform(Index n, Index k);
    static FuzzyLabelMatrix one_hot(const Labels& labels, Index k);

    const Matrix& matrix() const { return values_; }
    Index samples() const { return values_.rows(); }
    Index clusters() const { return values_.cols(); }
    double min_singular_value() const;

private:
    Matrix values_;
};

struct GraphLaplacian {
    Matrix laplacian;
    Matrix affinity;
};

struct FsscParams {
    double alpha = 0.03;
    double beta = 0.5;
    double tau = 4.0;
    int t_fssc = 3;
    SolverOptions lasso{500, 1e-6, 1.0, 0};
    SolverOptions admm{100, 1e-6, 1.0, 0};

    double tau_tilde() const { return tau / beta; }
    void validate() const;
};

/// Weights β‖q_i − q_j‖² + α for every j ≠ i, in column order with i removed.
Vector representation_weights(const FuzzyLabelMatrix& q, Index i, double alpha, double beta);

/// Column-wise weighted lasso for Z. `warm_start` seeds each column's solver.
CoefficientMatrix update_representations(const Eigen::Ref<const Matrix>& x_feat,
                                         const FuzzyLabelMatrix& q,
                                         const FsscParams& params,
                                         const CoefficientMatrix* warm_start = nullptr,
                                         Diagnostics* diag = nullptr);

GraphLaplacian build_laplacian(const CoefficientMatrix& z);

/// Tr(QᵀLQ) − τ̃·log det(QᵀQ); +inf when QᵀQ is singular.
double fuzzy_label_objective(const Eigen::Ref<const Matrix>& laplacian,
                             const Eigen::Ref<const Matrix>& q,
                             double tau_tilde);

/// Full FSSC objective: Σ_i ½‖x̃_i − X̃z_i‖² + Σ_{j≠i}(β‖q_i−q_j‖²+α)|z_i(j)| − τ·log det(QᵀQ).
double fssc_objective(const Eigen::Ref<const Matrix>& x_feat,
                      const CoefficientMatrix& z,
                      const FuzzyLabelMatrix& q,
                      const FsscParams& params);

struct LabelUpdateReport {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double rho = 0.0;
    bool converged = false;
};

/// ADMM on min Tr(QᵀL_ZQ) − τ̃·log det(QᵀQ) over row-simplex Q, τ̃ = τ/β.
/// Returns the simplex-feasible split variable.
FuzzyLabelMatrix update_fuzzy_labels(const GraphLaplacian& graph,
                                     const FsscParams& params,
                                     Index k,
                                     const FuzzyLabelMatrix& q_init,
                                     Diagnostics* diag = nullptr,
                                     LabelUpdateReport* report = nullptr);

struct FsscResult {
    CoefficientMatrix z;
    FuzzyLabelMatrix q;
};

/// t_fssc alternations of (Z update, Q update), Z first.
FsscResult run_fssc(const Eigen::Ref<const Matrix>& x_feat,
                    Index k,
                    const FsscParams& params,
                    const CoefficientMatrix& z_init,
                    const FuzzyLabelMatrix& q_init,
                    Diagnostics* diag = nullptr);

} // namespace dtlfssc
