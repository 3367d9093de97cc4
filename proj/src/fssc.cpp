#include "dtlfssc/fssc.hpp"

#include "dtlfssc/solver_primitives.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dtlfssc {

namespace {

// log det(MᵀM) for a tall matrix; -inf when the Gram is not positive definite.
double log_det_gram(const Eigen::Ref<const Matrix>& m)
{
    const Matrix gram = m.transpose() * m;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Vector d = llt.matrixL().toDenseMatrix().diagonal();
    if ((d.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
    return 2.0 * d.array().log().sum();
}

Matrix project_rows(const Eigen::Ref<const Matrix>& m)
{
    Matrix out(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i) out.row(i) = project_simplex(m.row(i).transpose()).transpose();
    return out;
}

// Exact minimizer of h(Q) = Tr(QᵀMQ) − τ̃·log det(QᵀQ) − ρ·Tr(QᵀΛ̃) by
// majorize-minimize: the quadratic is bounded by c‖Q − Q_t‖² around the
// current iterate (c ≥ λ_max(M)), and each surrogate is solved exactly by the
// singular-value root.
Matrix refine_q_step(const Matrix& m, double c, double tau_tilde, double rho, const Matrix& lam_tilde, Matrix q)
{
    constexpr int kMaxInner = 200;
    for (int it = 0; it < kMaxInner; ++it) {
        const Matrix grad = 2.0 * (m * q) - rho * lam_tilde;
        const Matrix next = logdet_barrier_shrink(q - grad / (2.0 * c), 2.0 * c, tau_tilde);
        const double step = (next - q).norm();
        q = next;
        if (step <= 1e-11 * (1.0 + q.norm())) break;
    }
    return q;
}

double q_step_objective(const Matrix& m, double tau_tilde, double rho, const Matrix& lam_tilde, const Matrix& q)
{
    const double ld = log_det_gram(q);
    if (!std::isfinite(ld)) return std::numeric_limits<double>::infinity();
    return (q.transpose() * m * q).trace() - tau_tilde * ld - rho * (q.cwiseProduct(lam_tilde)).sum();
}

} // namespace

CoefficientMatrix::CoefficientMatrix(Matrix values) : values_(std::move(values))
{
    if (values_.rows() != values_.cols()) throw DimensionError("coefficient matrix must be square");
    require_finite(values_, "coefficient matrix");
    if (values_.size() > 0 && !values_.diagonal().isZero(0.0)) {
        throw DomainError("coefficient matrix must have an exactly zero diagonal");
    }
}

FuzzyLabelMatrix::FuzzyLabelMatrix(Matrix values) : values_(std::move(values))
{
    require_finite(values_, "fuzzy label matrix");
    if ((values_.array() < 0.0).any()) throw DomainError("fuzzy label matrix has negative entries");
    for (Index i = 0; i < values_.rows(); ++i) {
        if (std::abs(values_.row(i).sum() - 1.0) > kRowSumTolerance) {
            std::ostringstream os;
            os << "fuzzy label row " << i << " does not sum to 1";
            throw DomainError(os.str());
        }
    }
}

FuzzyLabelMatrix FuzzyLabelMatrix::uniform(Index n, Index k)
{
    if (k < 1) throw DimensionError("need at least one cluster");
    return FuzzyLabelMatrix(Matrix::Constant(n, k, 1.0 / static_cast<double>(k)));
}

FuzzyLabelMatrix FuzzyLabelMatrix::one_hot(const Labels& labels, Index k)
{
    Matrix q = Matrix::Zero(static_cast<Index>(labels.size()), k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw DomainError("label id out of range for one-hot encoding");
        q(static_cast<Index>(i), labels[i]) = 1.0;
    }
    return FuzzyLabelMatrix(std::move(q));
}

double FuzzyLabelMatrix::min_singular_value() const
{
    if (values_.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(values_);
    return svd.singularValues().minCoeff();
}

void FsscParams::validate() const
{
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (!std::isfinite(tau_tilde())) throw ConfigError("tau/beta must be finite");
    if (t_fssc < 0) throw ConfigError("t_fssc must be >= 0");
    lasso.validate();
    admm.validate();
}

Vector representation_weights(const FuzzyLabelMatrix& q, Index i, double alpha, double beta)
{
    const Index n = q.samples();
    if (i < 0 || i >= n) throw DimensionError("representation_weights: sample index out of range");
    const Matrix& m = q.matrix();
    Vector w(n - 1);
    Index out = 0;
    for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        w[out++] = beta * (m.row(i) - m.row(j)).squaredNorm() + alpha;
    }
    return w;
}

CoefficientMatrix update_representations(const Eigen::Ref<const Matrix>& x_feat,
                                         const FuzzyLabelMatrix& q,
                                         const FsscParams& params,
                                         const CoefficientMatrix* warm_start,
                                         Diagnostics* diag)
{
    const Index n = x_feat.cols();
    if (x_feat.rows() == 0 || n < 2) throw DimensionError("update_representations: need p > 0 and N >= 2");
    if (q.samples() != n) throw DimensionError("update_representations: Q row count differs from sample count");
    if (!(params.alpha > 0.0) || !(params.beta >= 0.0)) throw ConfigError("alpha must be > 0 and beta >= 0");
    params.lasso.validate();
    require_finite(x_feat, "feature matrix");

    const Matrix gram_full = x_feat.transpose() * x_feat;
    // Eigenvalue interlacing: λ_max of the full Gram bounds every principal submatrix.
    const double lipschitz = largest_eigenvalue(gram_full, 50) * (1.0 + 1e-9);
    const bool use_warm = warm_start != nullptr && warm_start->size() == n;

    Matrix z = Matrix::Zero(n, n);
    std::vector<int> unconverged(static_cast<std::size_t>(n), 0);

#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        const Index m = n - 1;
        Matrix gram(m, m);
        Vector corr(m);
        auto src = [i](Index j) { return j < i ? j : j + 1; };
        for (Index a = 0; a < m; ++a) {
            corr[a] = gram_full(src(a), i);
            for (Index b = 0; b < m; ++b) gram(a, b) = gram_full(src(a), src(b));
        }
        const Vector weights = representation_weights(q, i, params.alpha, params.beta);
        std::optional<Vector> warm;
        if (use_warm) {
            Vector w0(m);
            for (Index a = 0; a < m; ++a) w0[a] = warm_start->matrix()(src(a), i);
            warm = std::move(w0);
        }
        const LassoResult res = solve_weighted_lasso_gram(gram, corr, gram_full(i, i), weights, params.lasso, warm, lipschitz);
        for (Index a = 0; a < m; ++a) z(src(a), i) = res.z[a];
        unconverged[static_cast<std::size_t>(i)] = res.converged ? 0 : 1;
    }

    if (diag != nullptr) {
        int count = 0;
        for (int u : unconverged) count += u;
        if (count > 0) diag->warn("weighted lasso did not converge for " + std::to_string(count) + " column(s)");
    }
    return CoefficientMatrix(std::move(z));
}

GraphLaplacian build_laplacian(const CoefficientMatrix& z)
{
    const Matrix abs_z = z.matrix().cwiseAbs();
    GraphLaplacian g;
    g.affinity = 0.5 * (abs_z + abs_z.transpose());
    g.laplacian = -g.affinity;
    g.laplacian.diagonal() += g.affinity.rowwise().sum();
    return g;
}

double fuzzy_label_objective(const Eigen::Ref<const Matrix>& laplacian, const Eigen::Ref<const Matrix>& q, double tau_tilde)
{
    const double ld = log_det_gram(q);
    if (!std::isfinite(ld)) return std::numeric_limits<double>::infinity();
    return (q.transpose() * laplacian * q).trace() - tau_tilde * ld;
}

double fssc_objective(const Eigen::Ref<const Matrix>& x_feat,
                      const CoefficientMatrix& z,
                      const FuzzyLabelMatrix& q,
                      const FsscParams& params)
{
    const Matrix& zm = z.matrix();
    const Matrix& qm = q.matrix();
    const double fit = 0.5 * (x_feat - x_feat * zm).squaredNorm();
    double reg = 0.0;
    for (Index i = 0; i < zm.cols(); ++i) {
        for (Index j = 0; j < zm.rows(); ++j) {
            if (j == i || zm(j, i) == 0.0) continue;
            reg += (params.beta * (qm.row(i) - qm.row(j)).squaredNorm() + params.alpha) * std::abs(zm(j, i));
        }
    }
    const double ld = log_det_gram(qm);
    if (!std::isfinite(ld)) return std::numeric_limits<double>::infinity();
    return fit + reg - params.tau * ld;
}

namespace {

// Power iteration from the constant vector sees only the null space of L_Z.
double laplacian_spectral_radius(const Matrix& lap)
{
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(lap, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

} // namespace

FuzzyLabelMatrix update_fuzzy_labels(const GraphLaplacian& graph,
                                     const FsscParams& params,
                                     Index k,
                                     const FuzzyLabelMatrix& q_init,
                                     Diagnostics* diag,
                                     LabelUpdateReport* report)
{
    const Matrix& lap = graph.laplacian;
    const Index n = lap.rows();
    if (lap.cols() != n) throw DimensionError("update_fuzzy_labels: Laplacian must be square");
    if (k < 1 || n < k) throw DimensionError("update_fuzzy_labels: need N >= K >= 1");
    if (q_init.samples() != n || q_init.clusters() != k) throw DimensionError("update_fuzzy_labels: Q_init shape mismatch");
    params.validate();
    require_finite(lap, "graph Laplacian");

    const double tau_tilde = params.tau_tilde();
    // The barrier's curvature scales like τ̃/σ_min(Q)² with σ_min(Q)² ≈ N/K for
    // balanced memberships, and the trace term's like λ_max(L_Z); ρ below
    // either makes the splitting stall with Q̂ collapsing onto a face.
    const double rho = std::max({params.admm.rho,
                                 8.0 * tau_tilde * static_cast<double>(k) / static_cast<double>(n),
                                 laplacian_spectral_radius(lap)});

    Matrix m = lap;
    m.diagonal().array() += 0.5 * rho;
    // M = L_Z + (ρ/2)I = G Gᵀ with G lower triangular.
    const Eigen::LLT<Matrix> chol(m);
    if (chol.info() != Eigen::Success) throw NumericError("update_fuzzy_labels: Cholesky of L_Z + (rho/2)I failed");
    const double max_degree = lap.diagonal().maxCoeff();
    const double majorizer = 2.0 * std::max(max_degree, 0.0) + 0.5 * rho;

    Matrix q_hat = q_init.matrix();
    Matrix lam = Matrix::Zero(n, k);
    Matrix q = q_hat;
    LabelUpdateReport rep;
    rep.rho = rho;

    for (int it = 0; it < params.admm.max_iters; ++it) {
        rep.iterations = it + 1;
        const Matrix lam_tilde = q_hat - lam / rho;

        // Closed-form candidate from the Cholesky change of variables.
        const Matrix c = chol.matrixL().solve(lam_tilde);
        Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Vector sigma(svd.singularValues().size());
        for (Index i = 0; i < sigma.size(); ++i) {
            sigma[i] = positive_quadratic_log_root(1.0, rho * svd.singularValues()[i], 2.0 * tau_tilde);
        }
        const Matrix candidate =
            chol.matrixL().transpose().solve(svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose());

        const Matrix& start =
            q_step_objective(m, tau_tilde, rho, lam_tilde, q) < q_step_objective(m, tau_tilde, rho, lam_tilde, candidate)
                ? q
                : candidate;
        q = refine_q_step(m, majorizer, tau_tilde, rho, lam_tilde, start);

        const Matrix q_hat_old = q_hat;
        q_hat = project_rows(q + lam / rho);
        lam += rho * (q - q_hat);

        rep.primal_residual = (q - q_hat).norm();
        rep.dual_residual = rho * (q_hat - q_hat_old).norm();
        if (std::max(rep.primal_residual, rep.dual_residual) < params.admm.tol) {
            rep.converged = true;
            break;
        }
    }

    if (diag != nullptr && !rep.converged) {
        std::ostringstream os;
        os << "fuzzy label ADMM stopped after " << rep.iterations << " iterations (primal " << rep.primal_residual
           << ", dual " << rep.dual_residual << ")";
        diag->warn(os.str());
    }
    if (report != nullptr) *report = rep;

    // The problem is nonconvex, so ADMM is not guaranteed to descend.
    const double start_obj = fuzzy_label_objective(lap, q_init.matrix(), tau_tilde);
    if (std::isfinite(start_obj) && !(fuzzy_label_objective(lap, q_hat, tau_tilde) <= start_obj)) {
        if (diag != nullptr) diag->warn("fuzzy label ADMM did not improve on its start; keeping the previous labels");
        return q_init;
    }
    return FuzzyLabelMatrix(std::move(q_hat));
}

FsscResult run_fssc(const Eigen::Ref<const Matrix>& x_feat,
                    Index k,
                    const FsscParams& params,
                    const CoefficientMatrix& z_init,
                    const FuzzyLabelMatrix& q_init,
                    Diagnostics* diag)
{
    params.validate();
    FsscResult out{z_init, q_init};
    for (int t = 0; t < params.t_fssc; ++t) {
        out.z = update_representations(x_feat, out.q, params, &out.z, diag);
        out.q = update_fuzzy_labels(build_laplacian(out.z), params, k, out.q, diag);
    }
    return out;
}

} // namespace dtlfssc
