#include "oracles.hpp"

#include "dtlfssc/dtl.hpp"
#include "dtlfssc/metrics.hpp"
#include "dtlfssc/pipeline.hpp"
#include "dtlfssc/solver_primitives.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace dtlfssc;

namespace {

Matrix random_coefficients(Index n, std::mt19937_64& rng, double scale = 0.3)
{
    Matrix z = scale * oracle::gaussian(n, n, rng);
    z.diagonal().setZero();
    return z;
}

} // namespace

TEST_CASE("discriminative_gap examples")
{
    const FuzzyLabelMatrix eye(Matrix::Identity(2, 2));
    CHECK(std::abs(discriminative_gap(Matrix::Identity(2, 2), eye)) < 1e-12);

    std::mt19937_64 rng(41);
    const FuzzyLabelMatrix q(oracle::random_fuzzy(6, 3, rng));
    CHECK(discriminative_gap(Matrix::Zero(3, 6), q) == 0.0);

    for (int trial = 0; trial < 50; ++trial) {
        const Matrix f = oracle::gaussian(3, 6, rng);
        const double gap = discriminative_gap(f, q);
        CHECK(gap >= -1e-9);
        CHECK(gap == doctest::Approx(oracle::dense_gap(f, q.matrix())).epsilon(1e-10));
    }
    CHECK_THROWS_AS(discriminative_gap(Matrix::Zero(3, 5), q), DimensionError);
}

TEST_CASE("nuclear norm of the whole is at most the sum over clusters")
{
    std::mt19937_64 rng(43);
    std::uniform_int_distribution<int> pd(1, 6), nd(2, 12), kd(1, 4);
    for (int trial = 0; trial < 200; ++trial) {
        const Index p = pd(rng), n = nd(rng), k = kd(rng);
        const Matrix f = oracle::gaussian(p, n, rng);
        const FuzzyLabelMatrix q(oracle::random_fuzzy(n, k, rng));
        double sum = 0.0;
        for (Index c = 0; c < k; ++c) sum += nuclear_norm(f * q.matrix().col(c).asDiagonal());
        CHECK(nuclear_norm(f) <= sum + 1e-9);
    }
}

TEST_CASE("discriminative_gap vanishes for binary labels on orthogonal blocks")
{
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 50; ++trial) {
        // Group k lives in coordinates {2k, 2k+1} of R^6.
        const Index k = 3, per = 3, n = k * per;
        Matrix f = Matrix::Zero(6, n);
        Labels labels(static_cast<std::size_t>(n));
        for (Index g = 0; g < k; ++g) {
            f.block(2 * g, g * per, 2, per) = oracle::gaussian(2, per, rng);
            for (Index j = 0; j < per; ++j) labels[static_cast<std::size_t>(g * per + j)] = static_cast<int>(g);
        }
        // Shuffle sample order so the blocks are not contiguous.
        std::vector<Index> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix fp(6, n);
        Labels lp(labels.size());
        for (Index j = 0; j < n; ++j) {
            fp.col(j) = f.col(perm[static_cast<std::size_t>(j)]);
            lp[static_cast<std::size_t>(j)] = labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
        }
        CHECK(std::abs(discriminative_gap(fp, FuzzyLabelMatrix::one_hot(lp, k))) <= 1e-9);
    }
}

TEST_CASE("nuclear_subgradient examples")
{
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 2;
    CHECK((nuclear_subgradient(d) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(nuclear_subgradient(Matrix::Zero(3, 2)).isZero(0.0));

    std::mt19937_64 rng(45);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = oracle::gaussian(4, 3, rng);
        const Matrix g = nuclear_subgradient(m);
        CHECK(Eigen::JacobiSVD<Matrix>(g).singularValues()[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g.cwiseProduct(m).sum() == doctest::Approx(nuclear_norm(m)).epsilon(1e-12));
    }
}

TEST_CASE("init_features examples")
{
    std::mt19937_64 rng(46);
    const Matrix xp = oracle::gaussian(4, 8, rng);
    const FuzzyLabelMatrix q(oracle::random_fuzzy(8, 2, rng));
    const SolverOptions opts{2000, 1e-10, 1.0, 0};

    CHECK(init_features(Matrix::Zero(4, 8), q, 0.5, opts).matrix().isZero(0.0));

    const LatentFeatures big = init_features(xp, q, 1e6, opts);
    CHECK((big.matrix() - xp).cwiseAbs().maxCoeff() < 1e-4);

    // The result is no worse than the start F = AX and than nearby points.
    const double lambda = 0.8;
    AdmmReport rep;
    const LatentFeatures f = init_features(xp, q, lambda, opts, nullptr, &rep);
    CHECK(rep.converged);
    const double best = convex_feature_objective(f.matrix(), xp, q, lambda);
    CHECK(best <= convex_feature_objective(xp, xp, q, lambda));
    for (int probe = 0; probe < 50; ++probe) {
        const Matrix other = f.matrix() + 1e-3 * oracle::gaussian(4, 8, rng);
        CHECK(convex_feature_objective(other, xp, q, lambda) >= best - 1e-7);
    }
}

TEST_CASE("init_features separates into per-group SVT for binary labels")
{
    std::mt19937_64 rng(47);
    const Labels labels{0, 1, 0, 1, 1, 0, 1};
    const FuzzyLabelMatrix q = FuzzyLabelMatrix::one_hot(labels, 2);
    const SolverOptions opts{5000, 1e-11, 1.0, 0};
    for (double lambda : {0.3, 1.0, 4.0}) {
        const Matrix xp = oracle::gaussian(5, 7, rng);
        const Matrix f = init_features(xp, q, lambda, opts).matrix();
        for (int g = 0; g < 2; ++g) {
            std::vector<Index> cols;
            for (Index j = 0; j < 7; ++j)
                if (labels[static_cast<std::size_t>(j)] == g) cols.push_back(j);
            Matrix block(5, static_cast<Index>(cols.size())), got(5, static_cast<Index>(cols.size()));
            for (std::size_t c = 0; c < cols.size(); ++c) {
                block.col(static_cast<Index>(c)) = xp.col(cols[c]);
                got.col(static_cast<Index>(c)) = f.col(cols[c]);
            }
            CHECK((got - oracle::svt(block, 1.0 / lambda)).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("refine_features accepts only descending steps")
{
    std::mt19937_64 rng(48);
    const double lambda = 0.5;
    const SolverOptions opts{300, 1e-6, 1.0, 0};
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix xp = oracle::gaussian(4, 9, rng);
        const FuzzyLabelMatrix q(oracle::random_fuzzy(9, 3, rng));
        const LatentFeatures f0 = init_features(xp, q, lambda, opts);

        const LatentFeatures same = refine_features(f0, xp, q, lambda, 0.2, 0);
        CHECK(same.matrix() == f0.matrix());

        RefineTrace trace;
        const LatentFeatures f = refine_features(f0, xp, q, lambda, 0.2, 10, &trace);
        REQUIRE(!trace.objective.empty());
        CHECK(trace.objective.size() == trace.nuclear.size());
        CHECK(trace.objective.size() <= 11);
        for (std::size_t s = 1; s < trace.objective.size(); ++s) CHECK(trace.objective[s] < trace.objective[s - 1]);
        CHECK(trace.objective.back() == doctest::Approx(dc_feature_objective(f.matrix(), xp, q, lambda)));
        CHECK(f.matrix().allFinite());
        // Growth of the nuclear norm along the path is only recorded.
        MESSAGE("nuclear norm " << trace.nuclear.front() << " -> " << trace.nuclear.back());
    }
}

TEST_CASE("operator A-step is stationary")
{
    std::mt19937_64 rng(49);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 3 + trial % 6, big_n = 4 + trial % 9, p = 1 + trial % n;
        const Matrix x = oracle::gaussian(n, big_n, rng);
        const Matrix f = oracle::gaussian(p, big_n, rng);
        const CoefficientMatrix z(random_coefficients(big_n, rng));
        const OperatorSystem sys(x, f, z, 0.05 + 0.01 * trial, 0.5 + 0.1 * (trial % 5));
        const Matrix a_hat = oracle::gaussian(p, n, rng);
        const Matrix lam = oracle::gaussian(p, n, rng);
        const Matrix a = sys.a_step(a_hat, lam);
        CHECK(sys.stationarity(a, a_hat, lam).norm() < 1e-8 * std::max(a.norm(), 1.0));

        // Same residual spelled out from the data.
        const Matrix e = x * z.matrix() - x;
        const double lambda = 0.05 + 0.01 * trial;
        const Matrix direct = lambda * (a * x - f) * x.transpose() + a * e * e.transpose() + sys.rho() * (a - a_hat) + lam;
        CHECK(direct.norm() < 1e-8 * std::max(a.norm(), 1.0) * (1.0 + x.squaredNorm()));
    }
}

TEST_CASE("operator A-step closed form for identity data")
{
    std::mt19937_64 rng(50);
    const Index n = 4;
    const double lambda = 0.3, rho = 2.0;
    const Matrix f = oracle::gaussian(2, n, rng);
    const Matrix a_hat = oracle::gaussian(2, n, rng);
    const OperatorSystem sys(Matrix::Identity(n, n), f, CoefficientMatrix::zeros(n), lambda, rho);
    const Matrix expect = (lambda * f + rho * a_hat) / (lambda + 1.0 + rho);
    CHECK((sys.a_step(a_hat, Matrix::Zero(2, n)) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("update_operator returns full-rank minimizers")
{
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 4 + trial % 4, big_n = 10, p = trial % 2 == 0 ? n : n - 2;
        const Matrix x = oracle::gaussian(n, big_n, rng);
        const Matrix f = oracle::gaussian(p, big_n, rng);
        const CoefficientMatrix z(random_coefficients(big_n, rng));
        DtlParams params;
        params.lambda = 0.05 + 0.1 * (trial % 3);
        params.tau1 = 0.5;
        const TransformOperator start = init_operator(p, n, static_cast<std::uint64_t>(trial));
        AdmmReport rep;
        Diagnostics diag;
        const TransformOperator a = update_operator(x, LatentFeatures(f), z, params, start, &diag, &rep);
        CHECK(a.min_singular_value() > 0.0);
        CHECK(rep.converged);
        CHECK(diag.empty());

        const OperatorSystem sys(x, f, z, params.lambda, 1.0);
        const double best = sys.objective(a.matrix(), params.tau1);
        CHECK(best <= sys.objective(start.matrix(), params.tau1));
        for (int probe = 0; probe < 30; ++probe) {
            const Matrix other = a.matrix() + 1e-4 * oracle::gaussian(p, n, rng);
            CHECK(sys.objective(other, params.tau1) >= best - 1e-9 * (1.0 + std::abs(best)));
        }
    }
}

TEST_CASE("update_operator approaches the ridge solution as the barrier vanishes")
{
    std::mt19937_64 rng(52);
    const Index n = 5, big_n = 12;
    const Matrix x = oracle::gaussian(n, big_n, rng);
    const Matrix f = oracle::gaussian(n, big_n, rng);
    const CoefficientMatrix z(random_coefficients(big_n, rng));
    DtlParams params;
    params.lambda = 0.5;
    params.tau1 = 1e-9;
    params.admm.rho = 100.0;
    const TransformOperator a = update_operator(x, LatentFeatures(f), z, params, init_operator(n, n, 3));
    const Matrix e = x * z.matrix() - x;
    const Matrix h = params.lambda * x * x.transpose() + e * e.transpose();
    const Matrix ridge = h.llt().solve((params.lambda * f * x.transpose()).transpose()).transpose();
    CHECK((a.matrix() - ridge).norm() < 1e-4 * ridge.norm());
}

TEST_CASE("run_dtl examples")
{
    std::mt19937_64 rng(53);
    DtlParams params;
    CHECK(params.t_dtl == 1);

    // Degenerate data: F vanishes and A stays finite and full rank.
    const TransformOperator a0 = init_operator(3, 4, 9);
    const DtlResult deg = run_dtl(Matrix::Zero(4, 6), CoefficientMatrix::zeros(6), FuzzyLabelMatrix::uniform(6, 2), a0, params);
    CHECK(deg.f.matrix().isZero(0.0));
    CHECK(deg.a.matrix().allFinite());
    CHECK(deg.a.min_singular_value() > 0.0);

    // One round equals the three stages run by hand.
    const Matrix x = oracle::gaussian(5, 9, rng);
    const CoefficientMatrix z(random_coefficients(9, rng));
    const FuzzyLabelMatrix q(oracle::random_fuzzy(9, 3, rng));
    const TransformOperator a_init = init_operator(5, 5, 1);
    const DtlResult res = run_dtl(x, z, q, a_init, params);
    const Matrix xp = a_init.apply(x);
    const LatentFeatures f0 = init_features(xp, q, params.lambda, params.feature_admm);
    const LatentFeatures f = refine_features(f0, xp, q, params.lambda, params.step(), params.dc_steps);
    const TransformOperator a = update_operator(x, f, z, params, a_init);
    CHECK(res.f.matrix() == f.matrix());
    CHECK(res.a.matrix() == a.matrix());

    DtlParams bad;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(run_dtl(x, z, q, a_init, bad), ConfigError);
}

TEST_CASE("run_dtl on two lines: principal angle trend")
{
    // Two lines in R^3 with a few noisy points; the angle between groups under
    // the learned operator is compared with the random starting operator.
    Matrix x = Matrix::Zero(3, 8);
    const double s[4] = {1.0, -0.6, 0.8, -1.3};
    for (int j = 0; j < 4; ++j) {
        x(0, j) = s[j];
        x(1, j) = 0.5 * s[j];
        x(1, 4 + j) = s[3 - j];
        x(2, 4 + j) = -0.4 * s[3 - j];
    }
    const Labels truth{0, 0, 0, 0, 1, 1, 1, 1};
    Matrix zm = Matrix::Zero(8, 8);
    for (int g = 0; g < 2; ++g)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (i != j) zm(4 * g + j, 4 * g + i) = 0.25;
    const CoefficientMatrix z(zm);
    const FuzzyLabelMatrix q = FuzzyLabelMatrix::one_hot(truth, 2);

    int wider = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TransformOperator a0 = init_operator(3, 3, seed);
        const DtlResult res = run_dtl(x, z, q, a0, DtlParams{});
        const double before = angle_matrix(a0, x, truth, 2)(0, 1);
        const double after = angle_matrix(res.a, x, truth, 2)(0, 1);
        wider += after >= before - 1e-9;
    }
    MESSAGE("angle not reduced on " << wider << " of 20 seeds");
    CHECK(wider >= 10);
}

TEST_CASE("dtl_objective matches its definition")
{
    std::mt19937_64 rng(54);
    const Matrix x = oracle::gaussian(4, 7, rng);
    const TransformOperator a(oracle::gaussian(3, 4, rng));
    const LatentFeatures f(oracle::gaussian(3, 7, rng));
    const CoefficientMatrix z(random_coefficients(7, rng));
    const FuzzyLabelMatrix q(oracle::random_fuzzy(7, 2, rng));
    DtlParams params;
    const Matrix ax = a.matrix() * x;
    const double expect = 0.5 * params.lambda * (ax - f.matrix()).squaredNorm() +
                          0.5 * (ax * z.matrix() - ax).squaredNorm() + oracle::dense_gap(f.matrix(), q.matrix()) -
                          params.tau1 * std::log((a.matrix() * a.matrix().transpose()).determinant());
    CHECK(dtl_objective(x, a, f, z, q, params) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("operator and params invariants")
{
    CHECK_THROWS_AS(TransformOperator(Matrix::Zero(3, 2)), DimensionError);
    CHECK(TransformOperator::identity(3).min_singular_value() == doctest::Approx(1.0));
    DtlParams p;
    CHECK(p.step() == doctest::Approx(2.0));
    p.mu = 0.3;
    CHECK(p.step() == 0.3);
    p.tau1 = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
