#include "dtlfssc/solver_primitives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dtlfssc {

void WeightedLassoProblem::validate() const
{
    if (dictionary.cols() == 0 || dictionary.rows() == 0) throw DimensionError("weighted lasso: empty dictionary");
    if (dictionary.rows() != target.size()) throw DimensionError("weighted lasso: dictionary/target row mismatch");
    if (dictionary.cols() != weights.size()) throw DimensionError("weighted lasso: dictionary/weights size mismatch");
    require_finite(dictionary, "weighted lasso dictionary");
    require_finite(target, "weighted lasso target");
    require_finite(weights, "weighted lasso weights");
    if ((weights.array() <= 0.0).any()) throw DomainError("weighted lasso: weights must be strictly positive");
}

Vector soft_threshold(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& w)
{
    if (v.size() != w.size()) throw DimensionError("soft_threshold: length mismatch");
    Vector out(v.size());
    for (Index j = 0; j < v.size(); ++j) {
        const double mag = std::abs(v[j]) - w[j];
        out[j] = mag > 0.0 ? std::copysign(mag, v[j]) : 0.0;
    }
    return out;
}

double largest_eigenvalue(const Eigen::Ref<const Matrix>& sym, int iterations)
{
    const Index n = sym.rows();
    if (n == 0) return 0.0;
    Vector x = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector y = sym * x;
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        lambda = x.dot(y);
        x = y / norm;
    }
    return std::max(lambda, (x.transpose() * sym * x).value());
}

double weighted_lasso_objective(const Eigen::Ref<const Matrix>& gram,
                                const Eigen::Ref<const Vector>& corr,
                                double target_sq_norm,
                                const Eigen::Ref<const Vector>& weights,
                                const Eigen::Ref<const Vector>& z)
{
    const double quad = 0.5 * z.dot(gram * z) - corr.dot(z) + 0.5 * target_sq_norm;
    // Guard tiny negative values from cancellation; the residual is a square.
    return std::max(quad, 0.0) + weights.cwiseProduct(z.cwiseAbs()).sum();
}

double weighted_lasso_objective(const WeightedLassoProblem& problem, const Eigen::Ref<const Vector>& z)
{
    const Vector r = problem.target - problem.dictionary * z;
    return 0.5 * r.squaredNorm() + problem.weights.cwiseProduct(z.cwiseAbs()).sum();
}

LassoResult solve_weighted_lasso_gram(const Eigen::Ref<const Matrix>& gram,
                                      const Eigen::Ref<const Vector>& corr,
                                      double target_sq_norm,
                                      const Eigen::Ref<const Vector>& weights,
                                      const SolverOptions& opts,
                                      const std::optional<Vector>& warm_start,
                                      std::optional<double> lipschitz)
{
    opts.validate();
    const Index m = corr.size();
    if (gram.rows() != m || gram.cols() != m || weights.size() != m) {
        throw DimensionError("weighted lasso: inconsistent Gram/correlation/weight sizes");
    }
    if (!gram.allFinite() || !corr.allFinite() || !weights.allFinite() || !std::isfinite(target_sq_norm)) {
        throw NumericError("weighted lasso: non-finite input");
    }

    LassoResult res;
    Vector x = (warm_start && warm_start->size() == m) ? *warm_start : Vector::Zero(m);
    if (x.isZero(0.0) && (corr.cwiseAbs().array() <= weights.array()).all()) {
        // Zero satisfies the optimality conditions: |Dᵀx̃|_j ≤ w_j.
        res.z = Vector::Zero(m);
        res.objective = 0.5 * target_sq_norm;
        res.converged = true;
        return res;
    }

    double L = lipschitz ? *lipschitz : largest_eigenvalue(gram, 50);
    if (!(L > 0.0)) L = 1.0;

    // Products with the Gram matrix are carried along so each iteration costs
    // one matrix-vector product; momentum combinations are linear in G·z.
    // Proximal points are sparse, so only their nonzero columns are touched.
    std::vector<Index> support;
    support.reserve(static_cast<std::size_t>(m));
    auto gram_times = [&](const Vector& v) -> Vector {
        support.clear();
        for (Index j = 0; j < m; ++j)
            if (v[j] != 0.0) support.push_back(j);
        if (2 * static_cast<Index>(support.size()) > m) return gram * v;
        Vector out = Vector::Zero(m);
        for (Index j : support) out.noalias() += v[j] * gram.col(j);
        return out;
    };
    Vector gx = gram_times(x);
    Vector x_prev = x;
    Vector gx_prev = gx;
    Vector y = x;
    Vector gy = gx;
    bool at_accepted = true;
    double t = 1.0;
    auto smooth = [&](const Vector& z, const Vector& gz) { return 0.5 * z.dot(gz) - corr.dot(z); };
    auto penalty = [&](const Vector& z) { return weights.dot(z.cwiseAbs()) + 0.5 * target_sq_norm; };
    double obj = smooth(x, gx) + penalty(x);

    // Dual value at the residual r = x̃ − Dz scaled into the feasible set
    // |Dᵀθ| ≤ w; the primal-dual gap bounds the suboptimality of z.
    auto dual_bound = [&](const Vector& z, const Vector& gz) {
        const Vector dtr = corr - gz;
        const double xr = target_sq_norm - corr.dot(z);
        const double rr = std::max(xr - corr.dot(z) + z.dot(gz), 0.0);
        double scale = 1.0;
        for (Index j = 0; j < m; ++j) {
            const double a = std::abs(dtr[j]);
            if (a > weights[j]) scale = std::min(scale, weights[j] / a);
        }
        return scale * xr - 0.5 * scale * scale * rr;
    };
    // The Gram form loses about eps·‖x̃‖² to cancellation.
    const double gap_floor = 1e-13 * target_sq_norm;

    for (int it = 0; it < opts.max_iters; ++it) {
        res.iterations = it + 1;
        const Vector grad = gy - corr;
        const double smooth_y = smooth(y, gy);
        Vector trial;
        Vector gt;
        double smooth_t = 0.0;
        for (int bt = 0; bt < 60; ++bt) {
            trial = soft_threshold(y - grad / L, weights / L);
            gt = gram_times(trial);
            smooth_t = smooth(trial, gt);
            const Vector d = trial - y;
            if (smooth_t <= smooth_y + grad.dot(d) + 0.5 * L * d.squaredNorm() + 1e-14 * std::abs(smooth_y)) break;
            L *= 2.0;
        }

        const double trial_obj = smooth_t + penalty(trial);
        if (trial_obj > obj) {
            if (at_accepted) {
                // A proximal step from an accepted point can only rise by roundoff.
                res.converged = true;
                break;
            }
            // Momentum overshoot: restart from the last accepted point.
            ++res.restarts;
            t = 1.0;
            y = x;
            gy = gx;
            at_accepted = true;
            continue;
        }

        x_prev = std::move(x);
        gx_prev = std::move(gx);
        x = std::move(trial);
        gx = std::move(gt);
        obj = trial_obj;
        if (obj - dual_bound(x, gx) <= opts.tol * obj + gap_floor) {
            res.converged = true;
            break;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        y = x + beta * (x - x_prev);
        gy = gx + beta * (gx - gx_prev);
        at_accepted = beta == 0.0;
        t = t_next;
    }

    res.z = std::move(x);
    res.objective = obj;
    return res;
}

LassoResult solve_weighted_lasso(const WeightedLassoProblem& problem,
                                 const SolverOptions& opts,
                                 const std::optional<Vector>& warm_start)
{
    problem.validate();
    const Matrix gram = problem.dictionary.transpose() * problem.dictionary;
    const Vector corr = problem.dictionary.transpose() * problem.target;
    return solve_weighted_lasso_gram(gram, corr, problem.target.squaredNorm(), problem.weights, opts, warm_start);
}

Vector project_simplex(const Eigen::Ref<const Vector>& v)
{
    const Index k = v.size();
    if (k == 0) throw DimensionError("project_simplex: empty vector");
    if (!v.allFinite()) throw NumericError("project_simplex: non-finite input");

    std::vector<double> u(v.data(), v.data() + k);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double shift = 0.0;
    for (Index j = 0; j < k; ++j) {
        cumsum += u[static_cast<std::size_t>(j)];
        const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - candidate > 0.0) shift = candidate;
    }
    return (v.array() - shift).max(0.0).matrix();
}

namespace {

struct ThinSvd {
    Matrix u;
    Vector s;
    Matrix v;
};

ThinSvd thin_svd(const Eigen::Ref<const Matrix>& m)
{
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

} // namespace

Matrix prox_nuclear(const Eigen::Ref<const Matrix>& m, double t)
{
    if (!(t >= 0.0)) throw DomainError("prox_nuclear: threshold must be nonnegative");
    if (m.size() == 0) return Matrix(m.rows(), m.cols());
    require_finite(m, "prox_nuclear input");
    const ThinSvd svd = thin_svd(m);
    const Vector shrunk = (svd.s.array() - t).max(0.0).matrix();
    return svd.u * shrunk.asDiagonal() * svd.v.transpose();
}

double nuclear_norm(const Eigen::Ref<const Matrix>& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues().sum();
}

double positive_quadratic_log_root(double a, double b, double c)
{
    if (!(a > 0.0)) throw DomainError("positive_quadratic_log_root: a must be > 0");
    if (!(c > 0.0)) throw DomainError("positive_quadratic_log_root: c must be > 0");
    if (!(b >= 0.0)) throw DomainError("positive_quadratic_log_root: b must be >= 0");
    // No cancellation for b ≥ 0: both terms in the numerator are nonnegative.
    return (b + std::sqrt(b * b + 8.0 * a * c)) / (4.0 * a);
}

Matrix logdet_barrier_shrink(const Eigen::Ref<const Matrix>& m, double rho, double tau, Vector* singular_values)
{
    if (m.rows() < m.cols()) throw DimensionError("logdet_barrier_shrink: need rows >= cols");
    if (!(rho > 0.0) || !(tau > 0.0)) throw DomainError("logdet_barrier_shrink: rho and tau must be > 0");
    require_finite(m, "logdet_barrier_shrink input");
    const ThinSvd svd = thin_svd(m);
    Vector sigma(svd.s.size());
    for (Index i = 0; i < sigma.size(); ++i) {
        sigma[i] = positive_quadratic_log_root(0.5 * rho, rho * svd.s[i], 2.0 * tau);
    }
    Matrix out = svd.u * sigma.asDiagonal() * svd.v.transpose();
    if (singular_values != nullptr) *singular_values = std::move(sigma);
    return out;
}

} // namespace dtlfssc
