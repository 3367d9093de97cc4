#pragma once

#include "dtlfssc/common.hpp"

namespace dtlfssc {

struct KMeansOptions {
    int restarts = 20;
    int max_iters = 300;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    Labels labels;
    Matrix centers;
    double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; keeps the restart with the lowest
/// inertia. Rows of `points` are the observations.
KMeansResult kmeans(const Eigen::Ref<const Matrix>& points, Index k, const KMeansOptions& opts);

/// Normalized spectral clustering: the K eigenvectors of I − D^{-1/2}WD^{-1/2}
/// with smallest eigenvalues, rows scaled to unit length, then k-means.
Labels spectral_cluster(const Eigen::Ref<const Matrix>& affinity,
                        Index k,
                        std::uint64_t seed,
                        Diagnostics* diag = nullptr);

} // namespace dtlfssc
