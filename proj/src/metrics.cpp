#include "dtlfssc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dtlfssc {

std::vector<Index> solve_assignment(const Eigen::Ref<const Matrix>& cost)
{
    const Index n = cost.rows();
    if (cost.cols() != n) throw DimensionError("solve_assignment: cost matrix must be square");
    if (n == 0) return {};
    const double inf = std::numeric_limits<double>::infinity();

    // Potentials formulation, 1-based with a virtual column 0.
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<Index> match(static_cast<std::size_t>(n + 1), 0);
    std::vector<Index> way(static_cast<std::size_t>(n + 1), 0);

    for (Index row = 1; row <= n; ++row) {
        match[0] = row;
        Index col0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
        do {
            used[static_cast<std::size_t>(col0)] = 1;
            const Index row0 = match[static_cast<std::size_t>(col0)];
            double delta = inf;
            Index col1 = 0;
            for (Index col = 1; col <= n; ++col) {
                const auto c = static_cast<std::size_t>(col);
                if (used[c]) continue;
                const double cur = cost(row0 - 1, col - 1) - u[static_cast<std::size_t>(row0)] - v[c];
                if (cur < minv[c]) {
                    minv[c] = cur;
                    way[c] = col0;
                }
                if (minv[c] < delta) {
                    delta = minv[c];
                    col1 = col;
                }
            }
            for (Index col = 0; col <= n; ++col) {
                const auto c = static_cast<std::size_t>(col);
                if (used[c]) {
                    u[static_cast<std::size_t>(match[c])] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
        } while (match[static_cast<std::size_t>(col0)] != 0);
        do {
            const Index col1 = way[static_cast<std::size_t>(col0)];
            match[static_cast<std::size_t>(col0)] = match[static_cast<std::size_t>(col1)];
            col0 = col1;
        } while (col0 != 0);
    }

    std::vector<Index> assignment(static_cast<std::size_t>(n), 0);
    for (Index col = 1; col <= n; ++col) {
        assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(col)] - 1)] = col - 1;
    }
    return assignment;
}

double clustering_error(const Labels& predicted, const Labels& truth)
{
    if (predicted.size() != truth.size()) throw DimensionError("clustering_error: label vectors differ in length");
    if (predicted.empty()) return 0.0;
    const auto [pmin, pmax] = std::minmax_element(predicted.begin(), predicted.end());
    const auto [tmin, tmax] = std::minmax_element(truth.begin(), truth.end());
    if (*pmin < 0 || *tmin < 0) throw DomainError("clustering_error: labels must be nonnegative");

    const Index k = std::max(*pmax, *tmax) + 1;
    Matrix confusion = Matrix::Zero(k, k);
    for (std::size_t i = 0; i < predicted.size(); ++i) confusion(predicted[i], truth[i]) += 1.0;

    // Maximizing matched counts = minimizing their negation.
    const std::vector<Index> assign = solve_assignment(-confusion);
    double matched = 0.0;
    for (Index r = 0; r < k; ++r) matched += confusion(r, assign[static_cast<std::size_t>(r)]);
    const auto n = static_cast<double>(predicted.size());
    return 100.0 * (n - matched) / n;
}

namespace {

Matrix unit_columns(const Matrix& m, Diagnostics* diag, const char* group)
{
    Matrix out(m.rows(), m.cols());
    Index kept = 0;
    for (Index j = 0; j < m.cols(); ++j) {
        const double norm = m.col(j).norm();
        if (norm > 0.0) {
            out.col(kept++) = m.col(j) / norm;
        }
    }
    if (kept < m.cols() && diag != nullptr) {
        diag->warn(std::to_string(m.cols() - kept) + " transformed sample(s) of group " + group +
                   " have zero norm and were excluded");
    }
    if (kept == 0) throw DomainError(std::string("smallest_principal_angle: every transformed sample of group ") + group +
                                     " is zero");
    return out.leftCols(kept);
}

} // namespace

double smallest_principal_angle(const TransformOperator& a,
                                const Eigen::Ref<const Matrix>& xi,
                                const Eigen::Ref<const Matrix>& xj,
                                Diagnostics* diag)
{
    if (xi.cols() == 0 || xj.cols() == 0) throw DimensionError("smallest_principal_angle: empty sample set");
    const Matrix ui = unit_columns(a.apply(xi), diag, "i");
    const Matrix uj = unit_columns(a.apply(xj), diag, "j");
    const double max_cos = std::min(1.0, (ui.transpose() * uj).cwiseAbs().maxCoeff());
    return std::acos(max_cos) * 180.0 / std::numbers::pi;
}

Matrix angle_matrix(const TransformOperator& a,
                    const Eigen::Ref<const Matrix>& x,
                    const Labels& labels,
                    Index k,
                    Diagnostics* diag)
{
    if (static_cast<Index>(labels.size()) != x.cols()) throw DimensionError("angle_matrix: label count differs from samples");
    std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw DomainError("angle_matrix: label id out of range");
        members[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
    }
    std::vector<Matrix> groups;
    for (const auto& idx : members) {
        Matrix g(x.rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) g.col(static_cast<Index>(c)) = x.col(idx[c]);
        groups.push_back(std::move(g));
    }

    Matrix angles = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = i + 1; j < k; ++j) {
            const double v = smallest_principal_angle(a, groups[static_cast<std::size_t>(i)],
                                                      groups[static_cast<std::size_t>(j)], diag);
            angles(i, j) = v;
            angles(j, i) = v;
        }
    }
    return angles;
}

} // namespace dtlfssc
