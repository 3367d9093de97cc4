#include "dtlfssc/pipeline.hpp"

#include "dtlfssc/data.hpp"
#include "dtlfssc/metrics.hpp"
#include "dtlfssc/spectral.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace dtlfssc {

void PipelineConfig::validate() const
{
    if (k < 1) throw ConfigError("K must be >= 1");
    if (p < 0) throw ConfigError("p must be >= 0");
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
    if (ssc_alpha && !(*ssc_alpha > 0.0)) throw ConfigError("ssc_alpha must be > 0");
    fssc.validate();
    dtl.validate();
}

void PipelineConfig::validate_for(const Eigen::Ref<const Matrix>& x) const
{
    validate();
    if (x.cols() <= k) throw ConfigError("need more samples than clusters (N > K)");
    if (feature_dim(x.rows()) > x.rows()) throw ConfigError("feature dimension p must be <= ambient dimension n");
    require_finite(x, "data matrix");
}

PipelineError::PipelineError(int iteration, const std::string& stage, const std::string& cause)
    : Error("iteration " + std::to_string(iteration) + ", " + stage + ": " + cause), iteration_(iteration)
{
}

TransformOperator init_operator(Index p, Index n, std::uint64_t seed)
{
    if (p < 1 || n < 1) throw DimensionError("init_operator: dimensions must be positive");
    if (p > n) throw DimensionError("init_operator: p must be <= n");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a(p, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < p; ++i) a(i, j) = normal(rng);
    Eigen::JacobiSVD<Matrix> svd(a);
    return TransformOperator(a / svd.singularValues()[0]);
}

SscResult ssc_baseline(const Eigen::Ref<const Matrix>& x_feat,
                       Index k,
                       double alpha,
                       const SolverOptions& opts,
                       std::uint64_t seed,
                       Diagnostics* diag)
{
    if (x_feat.cols() <= k) throw DimensionError("ssc_baseline: need N > K");
    FsscParams params;
    params.alpha = alpha;
    params.beta = 0.0;
    params.lasso = opts;
    const auto q = FuzzyLabelMatrix::uniform(x_feat.cols(), k);
    SscResult out{update_representations(x_feat, q, params, nullptr, diag), {}};
    if (diag != nullptr && out.z.matrix().isZero(0.0)) {
        diag->warn("ssc_baseline: alpha is above the zero-solution threshold; Z = 0 and clustering is degenerate");
    }
    out.labels = spectral_cluster(build_laplacian(out.z).affinity, k, seed, diag);
    return out;
}

Labels assign_labels(const FuzzyLabelMatrix& q)
{
    Labels labels(static_cast<std::size_t>(q.samples()));
    for (Index i = 0; i < q.samples(); ++i) {
        Index best = 0;
        q.matrix().row(i).maxCoeff(&best);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

namespace {

Matrix transform_samples(const TransformOperator& a, const Eigen::Ref<const Matrix>& x, bool normalize)
{
    Matrix xt = a.apply(x);
    return normalize ? normalize_columns(xt) : xt;
}

template <class Fn>
auto stage(int iteration, const char* name, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(iteration, name, e.what());
    }
}

} // namespace

PipelineResult run_dtl_fssc(const Eigen::Ref<const Matrix>& x, const PipelineConfig& config, const std::optional<Labels>& truth)
{
    config.validate_for(x);
    if (truth && static_cast<Index>(truth->size()) != x.cols()) throw ConfigError("truth labels differ in length from the data");

    const Index n_samples = x.cols();
    const Index k = config.k;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    PipelineResult out;
    Diagnostics& diag = out.diagnostics;
    out.a = init_operator(config.feature_dim(x.rows()), x.rows(), config.seed);
    out.q = FuzzyLabelMatrix::uniform(n_samples, k);
    out.f = LatentFeatures(out.a.apply(x));
    out.z = stage(0, "SSC initialization", [&] {
        const Matrix x0 = transform_samples(out.a, x, config.normalize_features);
        return ssc_baseline(x0, k, config.ssc_alpha.value_or(config.fssc.alpha), config.fssc.lasso, config.seed, &diag).z;
    });

    for (int t = 1; t <= config.t_max; ++t) {
        const Matrix x_feat = transform_samples(out.a, x, config.normalize_features);

        if (config.membership == MembershipMode::fuzzy) {
            auto res = stage(t, "FSSC", [&] { return run_fssc(x_feat, k, config.fssc, out.z, out.q, &diag); });
            out.z = std::move(res.z);
            out.q = std::move(res.q);
        } else {
            stage(t, "FSSC (binary membership)", [&] {
                for (int s = 0; s < config.fssc.t_fssc; ++s) {
                    out.z = update_representations(x_feat, out.q, config.fssc, &out.z, &diag);
                    const Labels hard = spectral_cluster(build_laplacian(out.z).affinity, k, config.seed, &diag);
                    out.q = FuzzyLabelMatrix::one_hot(hard, k);
                }
                return 0;
            });
        }

        IterationRecord rec;
        rec.iteration = t;
        rec.fssc_objective = fssc_objective(x_feat, out.z, out.q, config.fssc);

        auto dtl = stage(t, "DTL", [&] { return run_dtl(x, out.z, out.q, out.a, config.dtl, &diag); });
        out.a = std::move(dtl.a);
        out.f = std::move(dtl.f);

        rec.dtl_objective = dtl_objective(x, out.a, out.f, out.z, out.q, config.dtl);
        rec.discriminative_gap = discriminative_gap(out.f.matrix(), out.q);
        rec.q_min_singular = out.q.min_singular_value();
        rec.a_min_singular = out.a.min_singular_value();
        rec.error_pct = nan;
        rec.min_angle_deg = nan;
        if (truth) {
            rec.error_pct = clustering_error(assign_labels(out.q), *truth);
            int truth_k = 0;
            for (int l : *truth) truth_k = std::max(truth_k, l + 1);
            if (truth_k > 1) {
                const Matrix angles = angle_matrix(out.a, x, *truth, truth_k);
                double min_angle = std::numeric_limits<double>::infinity();
                for (Index i = 0; i < truth_k; ++i)
                    for (Index j = i + 1; j < truth_k; ++j) min_angle = std::min(min_angle, angles(i, j));
                rec.min_angle_deg = min_angle;
            }
        }
        out.history.records.push_back(rec);
    }

    out.labels = assign_labels(out.q);
    return out;
}

} // namespace dtlfssc
