#include "dtlfssc/dtl.hpp"

#include "dtlfssc/solver_primitives.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dtlfssc {

namespace {

void check_columns(const Eigen::Ref<const Matrix>& f, const FuzzyLabelMatrix& q, const char* where)
{
    if (f.cols() != q.samples()) {
        throw DimensionError(std::string(where) + ": feature columns differ from label rows");
    }
}

double log_det_row_gram(const Eigen::Ref<const Matrix>& a)
{
    Eigen::LLT<Matrix> llt(a * a.transpose());
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Vector d = llt.matrixL().toDenseMatrix().diagonal();
    if ((d.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
    return 2.0 * d.array().log().sum();
}

std::string admm_message(const char* what, const AdmmReport& rep)
{
    std::ostringstream os;
    os << what << " stopped after " << rep.iterations << " iterations (primal " << rep.primal_residual << ", dual "
       << rep.dual_residual << ")";
    return os.str();
}

} // namespace

TransformOperator::TransformOperator(Matrix a) : a_(std::move(a))
{
    if (a_.rows() > a_.cols()) throw DimensionError("transform operator must satisfy p <= n");
    require_finite(a_, "transform operator");
}

double TransformOperator::min_singular_value() const
{
    if (a_.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a_);
    return svd.singularValues().minCoeff();
}

Matrix TransformOperator::apply(const Eigen::Ref<const Matrix>& x) const
{
    if (x.rows() != a_.cols()) throw DimensionError("transform operator: input dimension mismatch");
    return a_ * x;
}

LatentFeatures::LatentFeatures(Matrix f) : f_(std::move(f))
{
    require_finite(f_, "latent features");
}

void DtlParams::validate() const
{
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (!(tau1 > 0.0)) throw ConfigError("tau1 must be > 0");
    if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0 (0 selects the default)");
    if (t_dtl < 0) throw ConfigError("t_dtl must be >= 0");
    if (dc_steps < 0) throw ConfigError("dc_steps must be >= 0");
    admm.validate();
    feature_admm.validate();
}

double discriminative_gap(const Eigen::Ref<const Matrix>& f, const FuzzyLabelMatrix& q)
{
    check_columns(f, q, "discriminative_gap");
    double sum = 0.0;
    for (Index k = 0; k < q.clusters(); ++k) {
        sum += nuclear_norm(f * q.matrix().col(k).asDiagonal());
    }
    return sum - nuclear_norm(f);
}

double convex_feature_objective(const Eigen::Ref<const Matrix>& f,
                                const Eigen::Ref<const Matrix>& x_proj,
                                const FuzzyLabelMatrix& q,
                                double lambda)
{
    check_columns(f, q, "convex_feature_objective");
    double value = 0.5 * lambda * (x_proj - f).squaredNorm();
    for (Index k = 0; k < q.clusters(); ++k) value += nuclear_norm(f * q.matrix().col(k).asDiagonal());
    return value;
}

double dc_feature_objective(const Eigen::Ref<const Matrix>& f,
                            const Eigen::Ref<const Matrix>& x_proj,
                            const FuzzyLabelMatrix& q,
                            double lambda)
{
    return convex_feature_objective(f, x_proj, q, lambda) - nuclear_norm(f);
}

LatentFeatures init_features(const Eigen::Ref<const Matrix>& x_proj,
                             const FuzzyLabelMatrix& q,
                             double lambda,
                             const SolverOptions& opts,
                             Diagnostics* diag,
                             AdmmReport* report)
{
    check_columns(x_proj, q, "init_features");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    opts.validate();
    require_finite(x_proj, "projected data");

    const Index p = x_proj.rows();
    const Index n = x_proj.cols();
    const Index k_count = q.clusters();
    const Matrix& qm = q.matrix();
    const double rho = opts.rho;

    // Per-column denominator of the F step: λ + ρ Σ_k q_jk².
    const Vector denom = (lambda + rho * qm.rowwise().squaredNorm().array()).matrix();

    Matrix f = x_proj;
    std::vector<Matrix> g(static_cast<std::size_t>(k_count));
    std::vector<Matrix> u(static_cast<std::size_t>(k_count), Matrix::Zero(p, n));
    for (Index k = 0; k < k_count; ++k) g[static_cast<std::size_t>(k)] = f * qm.col(k).asDiagonal();

    AdmmReport rep;
    rep.rho = rho;
    const double scale = 1.0 + x_proj.norm();
    for (int it = 0; it < opts.max_iters; ++it) {
        rep.iterations = it + 1;

        Matrix numer = lambda * x_proj;
        for (Index k = 0; k < k_count; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            numer += rho * (g[kk] - u[kk]) * qm.col(k).asDiagonal();
        }
        f = numer * denom.cwiseInverse().asDiagonal();

        double primal_sq = 0.0;
        double dual_sq = 0.0;
        for (Index k = 0; k < k_count; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const Matrix fd = f * qm.col(k).asDiagonal();
            const Matrix g_new = prox_nuclear(fd + u[kk], 1.0 / rho);
            dual_sq += (rho * (g_new - g[kk]) * qm.col(k).asDiagonal()).squaredNorm();
            g[kk] = g_new;
            u[kk] += fd - g_new;
            primal_sq += (fd - g_new).squaredNorm();
        }
        rep.primal_residual = std::sqrt(primal_sq);
        rep.dual_residual = std::sqrt(dual_sq);
        if (std::max(rep.primal_residual, rep.dual_residual) < opts.tol * scale) {
            rep.converged = true;
            break;
        }
    }

    if (diag != nullptr && !rep.converged) diag->warn(admm_message("feature initialization ADMM", rep));
    if (report != nullptr) *report = rep;
    return LatentFeatures(std::move(f));
}

Matrix nuclear_subgradient(const Eigen::Ref<const Matrix>& m)
{
    if (m.size() == 0) return Matrix(m.rows(), m.cols());
    require_finite(m, "nuclear_subgradient input");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Index rank = 0;
    while (rank < s.size() && s[rank] > 1e-10) ++rank;
    return svd.matrixU().leftCols(rank) * svd.matrixV().leftCols(rank).transpose();
}

LatentFeatures refine_features(const LatentFeatures& f_init,
                               const Eigen::Ref<const Matrix>& x_proj,
                               const FuzzyLabelMatrix& q,
                               double lambda,
                               double mu,
                               int dc_steps,
                               RefineTrace* trace)
{
    check_columns(f_init.matrix(), q, "refine_features");
    if (x_proj.rows() != f_init.matrix().rows() || x_proj.cols() != f_init.matrix().cols()) {
        throw DimensionError("refine_features: projected data and features differ in shape");
    }
    constexpr int kMaxHalvings = 20;
    const Matrix& qm = q.matrix();

    Matrix f = f_init.matrix();
    double obj = dc_feature_objective(f, x_proj, q, lambda);
    if (trace != nullptr) {
        trace->objective = {obj};
        trace->nuclear = {nuclear_norm(f)};
    }

    for (int step = 0; step < dc_steps; ++step) {
        Matrix grad = lambda * (f - x_proj) - nuclear_subgradient(f);
        for (Index k = 0; k < q.clusters(); ++k) {
            const auto dk = qm.col(k).asDiagonal();
            grad += nuclear_subgradient(f * dk) * dk;
        }

        bool accepted = false;
        double size = mu;
        for (int h = 0; h <= kMaxHalvings; ++h, size *= 0.5) {
            Matrix trial = f - size * grad;
            const double trial_obj = dc_feature_objective(trial, x_proj, q, lambda);
            if (trial_obj < obj) {
                f = std::move(trial);
                obj = trial_obj;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (trace != nullptr) {
            trace->objective.push_back(obj);
            trace->nuclear.push_back(nuclear_norm(f));
        }
    }
    return LatentFeatures(std::move(f));
}

OperatorSystem::OperatorSystem(const Eigen::Ref<const Matrix>& x,
                               const Eigen::Ref<const Matrix>& f,
                               const CoefficientMatrix& z,
                               double lambda,
                               double rho)
    : rho_(rho)
{
    if (z.size() != x.cols()) throw DimensionError("operator update: Z size differs from sample count");
    if (f.cols() != x.cols()) throw DimensionError("operator update: F and X sample counts differ");
    const Matrix err = x * z.matrix() - x;
    quad_ = lambda * (x * x.transpose()) + err * err.transpose();
    rhs_base_ = lambda * (f * x.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(quad_, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericError("operator update: eigenvalue solve failed");
    curvature_ = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    set_rho(rho);
}

void OperatorSystem::set_rho(double rho)
{
    rho_ = rho;
    Matrix h = quad_;
    h.diagonal().array() += rho;
    chol_.compute(h);
    if (chol_.info() != Eigen::Success) throw NumericError("operator update: system matrix is not positive definite");
}

Matrix OperatorSystem::a_step(const Eigen::Ref<const Matrix>& a_hat, const Eigen::Ref<const Matrix>& lam) const
{
    // A·H = R with H symmetric  ⇔  H·Aᵀ = Rᵀ.
    const Matrix rhs = rhs_base_ + rho_ * a_hat - lam;
    return chol_.solve(rhs.transpose()).transpose();
}

Matrix OperatorSystem::apply_quadratic(const Eigen::Ref<const Matrix>& a) const
{
    return a * quad_;
}

Matrix OperatorSystem::gradient(const Eigen::Ref<const Matrix>& a) const
{
    return a * quad_ - rhs_base_;
}

double OperatorSystem::objective(const Eigen::Ref<const Matrix>& a, double tau) const
{
    const double ld = log_det_row_gram(a);
    if (!std::isfinite(ld)) return std::numeric_limits<double>::infinity();
    return 0.5 * (a * quad_).cwiseProduct(a).sum() - a.cwiseProduct(rhs_base_).sum() - tau * ld;
}

Matrix OperatorSystem::stationarity(const Eigen::Ref<const Matrix>& a,
                                    const Eigen::Ref<const Matrix>& a_hat,
                                    const Eigen::Ref<const Matrix>& lam) const
{
    return gradient(a) + rho_ * (a - a_hat) + lam;
}

namespace {

Matrix barrier_shrink_rows(const Eigen::Ref<const Matrix>& m, double rho, double tau, Vector* sv = nullptr)
{
    // The barrier acts on ÂÂᵀ, so shrink the transpose (n×p, tall).
    return logdet_barrier_shrink(m.transpose(), rho, tau, sv).transpose();
}

} // namespace

TransformOperator update_operator(const Eigen::Ref<const Matrix>& x,
                                  const LatentFeatures& f,
                                  const CoefficientMatrix& z,
                                  const DtlParams& params,
                                  const TransformOperator& a_start,
                                  Diagnostics* diag,
                                  AdmmReport* report)
{
    params.validate();
    if (a_start.input_dim() != x.rows()) throw DimensionError("operator update: A and X dimensions differ");
    if (f.matrix().rows() != a_start.feature_dim()) throw DimensionError("operator update: F and A feature dims differ");
    require_finite(x, "data matrix");

    const Index p = a_start.feature_dim();
    const double tau = params.tau1;
    const double tol = params.admm.tol;
    OperatorSystem system(x, f.matrix(), z, params.lambda, params.admm.rho);
    if (system.curvature() > system.rho()) system.set_rho(system.curvature());
    const double rho = system.rho();

    Matrix a_hat = a_start.matrix();
    Matrix lam = Matrix::Zero(p, x.rows());
    AdmmReport rep;
    rep.rho = rho;
    const double scale = 1.0 + a_hat.norm();

    for (int it = 0; it < params.admm.max_iters; ++it) {
        rep.iterations = it + 1;
        const Matrix a = system.a_step(a_hat, lam);
        const Matrix a_hat_old = a_hat;
        a_hat = barrier_shrink_rows(a + lam / rho, rho, tau);
        lam += rho * (a - a_hat);
        rep.primal_residual = (a - a_hat).norm();
        rep.dual_residual = rho * (a_hat - a_hat_old).norm();
        if (std::max(rep.primal_residual, rep.dual_residual) < tol * scale) {
            rep.converged = true;
            break;
        }
    }

    if (!rep.converged && p == x.rows()) {
        // Square case: with W = H^{-1/2} the subproblem in C = AW reads
        // ½‖C − BW‖² − τ·log det(CCᵀ) + const, minimized by a single shrink.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(system.quadratic());
        const Vector& ev = eig.eigenvalues();
        if (eig.info() == Eigen::Success && ev.minCoeff() > 1e-12 * std::max(ev.maxCoeff(), 1e-300)) {
            const Matrix w = eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                             eig.eigenvectors().transpose();
            Matrix exact = barrier_shrink_rows(system.linear_term() * w, 1.0, tau) * w;
            if (system.objective(exact, tau) <= system.objective(a_hat, tau)) {
                a_hat = std::move(exact);
                rep.converged = true;
            }
        }
    }

    // Majorize the quadratic by (c/2)‖A − V‖² with c ≥ λ_max; each step is then
    // an exact barrier shrink. Nesterov momentum with a function-value restart.
    // A·H is carried along (it is linear under the momentum combination), so a
    // step costs one product and one SVD.
    if (!rep.converged) {
        const double c = std::max(system.curvature(), 1e-12);
        const Matrix& b = system.linear_term();
        auto value = [&](const Matrix& a, const Matrix& ah, const Vector& sv) {
            return 0.5 * a.cwiseProduct(ah).sum() - a.cwiseProduct(b).sum() - 2.0 * tau * sv.array().log().sum();
        };
        Vector sv = Eigen::JacobiSVD<Matrix>(a_hat).singularValues();
        Matrix cur = a_hat;
        Matrix cur_h = system.apply_quadratic(cur);
        Matrix prev = cur;
        Matrix prev_h = cur_h;
        Matrix y = cur;
        Matrix y_h = cur_h;
        double obj = value(cur, cur_h, sv);
        double t = 1.0;
        bool at_accepted = true;
        const int cap = 20 * params.admm.max_iters;
        for (int it = 0; it < cap; ++it) {
            rep.polish_iterations = it + 1;
            Matrix next = barrier_shrink_rows(y - (y_h - b) / c, c, tau, &sv);
            const double mapping = c * (next - y).norm();
            Matrix next_h = system.apply_quadratic(next);
            const double next_obj = value(next, next_h, sv);
            if (!(next_obj <= obj)) {
                // A plain step from an accepted point cannot rise beyond roundoff.
                if (at_accepted) {
                    rep.converged = true;
                    break;
                }
                y = cur;
                y_h = cur_h;
                t = 1.0;
                at_accepted = true;
                continue;
            }
            prev = std::move(cur);
            prev_h = std::move(cur_h);
            cur = std::move(next);
            cur_h = std::move(next_h);
            obj = next_obj;
            if (mapping <= tol * scale) {
                rep.converged = true;
                break;
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            y = cur + beta * (cur - prev);
            y_h = cur_h + beta * (cur_h - prev_h);
            at_accepted = beta == 0.0;
            t = t_next;
        }
        a_hat = std::move(cur);
    }

    if (diag != nullptr && !rep.converged) diag->warn(admm_message("operator ADMM", rep));
    if (report != nullptr) *report = rep;
    return TransformOperator(std::move(a_hat));
}

double dtl_objective(const Eigen::Ref<const Matrix>& x,
                     const TransformOperator& a,
                     const LatentFeatures& f,
                     const CoefficientMatrix& z,
                     const FuzzyLabelMatrix& q,
                     const DtlParams& params)
{
    const Matrix ax = a.apply(x);
    const double fidelity = 0.5 * params.lambda * (ax - f.matrix()).squaredNorm();
    const double structure = 0.5 * (ax * z.matrix() - ax).squaredNorm();
    const double ld = log_det_row_gram(a.matrix());
    if (!std::isfinite(ld)) return std::numeric_limits<double>::infinity();
    return fidelity + structure + discriminative_gap(f.matrix(), q) - params.tau1 * ld;
}

DtlResult run_dtl(const Eigen::Ref<const Matrix>& x,
                  const CoefficientMatrix& z,
                  const FuzzyLabelMatrix& q,
                  const TransformOperator& a_init,
                  const DtlParams& params,
                  Diagnostics* diag)
{
    params.validate();
    if (a_init.input_dim() != x.rows()) throw DimensionError("run_dtl: A and X dimensions differ");
    DtlResult out{a_init, LatentFeatures(a_init.apply(x))};
    for (int t = 0; t < params.t_dtl; ++t) {
        const Matrix x_proj = out.a.apply(x);
        const LatentFeatures f0 = init_features(x_proj, q, params.lambda, params.feature_admm, diag);
        out.f = refine_features(f0, x_proj, q, params.lambda, params.step(), params.dc_steps);
        out.a = update_operator(x, out.f, z, params, out.a, diag);
    }
    return out;
}

} // namespace dtlfssc
