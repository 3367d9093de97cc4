#pragma once

#include "dtlfssc/common.hpp"
#include "dtlfssc/dtl.hpp"

namespace dtlfssc {

/// Minimum-cost perfect assignment on a square cost matrix (Kuhn-Munkres).
/// Returns, for each row, the assigned column.
std::vector<Index> solve_assignment(const Eigen::Ref<const Matrix>& cost);

/// Percentage of misclustered samples under the best one-to-one mapping of
/// predicted ids onto truth ids.
double clustering_error(const Labels& predicted, const Labels& truth);

/// Smallest angle in degrees, over all sample pairs, between the transformed
/// columns A·x_i and A·x_j. Uses |cos| so antipodal samples count as 0°.
/// Columns mapped to zero are skipped (and reported through `diag`).
double smallest_principal_angle(const TransformOperator& a,
                                const Eigen::Ref<const Matrix>& xi,
                                const Eigen::Ref<const Matrix>& xj,
                                Diagnostics* diag = nullptr);

/// K×K symmetric matrix of smallest angles between the groups given by
/// `labels`; the diagonal is zero.
Matrix angle_matrix(const TransformOperator& a,
                    const Eigen::Ref<const Matrix>& x,
                    const Labels& labels,
                    Index k,
                    Diagnostics* diag = nullptr);

} // namespace dtlfssc
