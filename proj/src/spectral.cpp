#include "dtlfssc/spectral.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace dtlfssc {

namespace {

Matrix kmeanspp_init(const Eigen::Ref<const Matrix>& points, Index k, std::mt19937_64& rng)
{
    const Index n = points.rows();
    Matrix centers(k, points.cols());
    std::uniform_int_distribution<Index> pick(0, n - 1);
    centers.row(0) = points.row(pick(rng));
    Vector dist = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index c = 1; c < k; ++c) {
        const double total = dist.sum();
        Index chosen = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            chosen = n - 1;
            for (Index i = 0; i < n; ++i) {
                acc += dist[i];
                if (acc >= target && dist[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.row(c) = points.row(chosen);
        dist = dist.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

KMeansResult lloyd(const Eigen::Ref<const Matrix>& points, Matrix centers, int max_iters)
{
    const Index n = points.rows();
    const Index k = centers.rows();
    KMeansResult res;
    res.labels.assign(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        Vector best_dist(n);
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (Index c = 0; c < k; ++c) {
                const double d = (points.row(i) - centers.row(c)).squaredNorm();
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            best_dist[i] = bd;
            if (res.labels[static_cast<std::size_t>(i)] != best) {
                res.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
                changed = true;
            }
        }

        Matrix sums = Matrix::Zero(k, points.cols());
        Vector counts = Vector::Zero(k);
        for (Index i = 0; i < n; ++i) {
            sums.row(res.labels[static_cast<std::size_t>(i)]) += points.row(i);
            counts[res.labels[static_cast<std::size_t>(i)]] += 1.0;
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[c] > 0.0) {
                centers.row(c) = sums.row(c) / counts[c];
            } else {
                // Empty cluster: move it onto the worst-served point.
                Index far = 0;
                best_dist.maxCoeff(&far);
                centers.row(c) = points.row(far);
                best_dist[far] = 0.0;
                changed = true;
            }
        }
        if (!changed) break;
    }
    res.inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
        res.inertia += (points.row(i) - centers.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    res.centers = std::move(centers);
    return res;
}

} // namespace

KMeansResult kmeans(const Eigen::Ref<const Matrix>& points, Index k, const KMeansOptions& opts)
{
    const Index n = points.rows();
    if (k < 1 || n < k) throw DimensionError("kmeans: need 1 <= K <= number of points");
    std::mt19937_64 rng(opts.seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        KMeansResult cur = lloyd(points, kmeanspp_init(points, k, rng), opts.max_iters);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

Labels spectral_cluster(const Eigen::Ref<const Matrix>& affinity, Index k, std::uint64_t seed, Diagnostics* diag)
{
    const Index n = affinity.rows();
    if (affinity.cols() != n) throw DimensionError("spectral_cluster: affinity must be square");
    if (k < 1 || n < k) throw DimensionError("spectral_cluster: need 1 <= K <= N");
    require_finite(affinity, "affinity");
    if ((affinity.array() < 0.0).any()) throw DomainError("spectral_cluster: affinity must be nonnegative");
    const double scale = std::max(1.0, affinity.cwiseAbs().maxCoeff());
    if (!(affinity - affinity.transpose()).isZero(1e-10 * scale)) throw DomainError("spectral_cluster: affinity must be symmetric");
    if (k == 1) return Labels(static_cast<std::size_t>(n), 0);

    const Vector degree = affinity.rowwise().sum();
    Vector inv_sqrt(n);
    Index isolated = 0;
    for (Index i = 0; i < n; ++i) {
        inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
        if (degree[i] <= 0.0) ++isolated;
    }
    Matrix lsym = -(inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal());
    lsym.diagonal().array() += 1.0;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(lsym);
    if (eig.info() != Eigen::Success) throw NumericError("spectral_cluster: eigendecomposition failed");
    if (diag != nullptr) {
        if (isolated == n) diag->warn("spectral_cluster: affinity is identically zero");
        Index components = 0;
        for (Index i = 0; i < n; ++i) components += eig.eigenvalues()[i] < 1e-9 ? 1 : 0;
        if (components > k) {
            diag->warn("spectral_cluster: affinity graph has " + std::to_string(components) +
                       " connected components for K=" + std::to_string(k));
        }
    }

    Matrix embed = eig.eigenvectors().leftCols(k);
    for (Index i = 0; i < n; ++i) {
        const double norm = embed.row(i).norm();
        if (norm > 0.0) embed.row(i) /= norm;
    }
    return kmeans(embed, k, KMeansOptions{20, 300, seed}).labels;
}

} // namespace dtlfssc
