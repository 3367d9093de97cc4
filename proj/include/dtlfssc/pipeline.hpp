#pragma once

#include "dtlfssc/common.hpp"
#include "dtlfssc/dtl.hpp"
#include "dtlfssc/fssc.hpp"

#include <optional>

namespace dtlfssc {

enum class MembershipMode { fuzzy, binary };

struct PipelineConfig {
    FsscParams fssc;
    DtlParams dtl;
    Index k = 2;
    /// Feature dimension; 0 means p = n.
    Index p = 0;
    int t_max = 10;
    std::uint64_t seed = 0;
    MembershipMode membership = MembershipMode::fuzzy;
    bool normalize_features = true;
    /// Sparsity weight of the SSC initializer; defaults to fssc.alpha.
    std::optional<double> ssc_alpha;

    Index feature_dim(Index n) const { return p > 0 ? p : n; }
    void validate() const;
    void validate_for(const Eigen::Ref<const Matrix>& x) const;
};

struct IterationRecord {
    int iteration = 0;
    double fssc_objective = 0.0;
    double dtl_objective = 0.0;
    double discriminative_gap = 0.0;
    /// NaN when no ground truth was supplied.
    double error_pct = 0.0;
    /// Smallest off-diagonal entry of the truth-grouped angle matrix (degrees);
    /// NaN without ground truth.
    double min_angle_deg = 0.0;
    double q_min_singular = 0.0;
    double a_min_singular = 0.0;
};

struct RunHistory {
    std::vector<IterationRecord> records;
};

/// Thrown when a stage fails mid-run; the message names the iteration and step.
class PipelineError : public Error {
public:
    PipelineError(int iteration, const std::string& stage, const std::string& cause);
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

/// Gaussian p×n matrix scaled to unit spectral norm.
TransformOperator init_operator(Index p, Index n, std::uint64_t seed);

struct SscResult {
    CoefficientMatrix z;
    Labels labels;
};

/// Plain sparse subspace clustering: uniform ℓ1 weights, then spectral
/// clustering of (|Z| + |Zᵀ|)/2.
SscResult ssc_baseline(const Eigen::Ref<const Matrix>& x_feat,
                       Index k,
                       double alpha,
                       const SolverOptions& opts,
                       std::uint64_t seed,
                       Diagnostics* diag = nullptr);

/// Row-wise argmax; ties go to the smallest column index.
Labels assign_labels(const FuzzyLabelMatrix& q);

struct PipelineResult {
    Labels labels;
    FuzzyLabelMatrix q;
    CoefficientMatrix z;
    TransformOperator a;
    LatentFeatures f;
    RunHistory history;
    Diagnostics diagnostics;
};

/// Alternates FSSC and DTL for t_max outer iterations starting from a random
/// operator and an SSC coefficient matrix.
PipelineResult run_dtl_fssc(const Eigen::Ref<const Matrix>& x,
                            const PipelineConfig& config,
                            const std::optional<Labels>& truth = std::nullopt);

} // namespace dtlfssc
