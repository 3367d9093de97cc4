#include "oracles.hpp"

#include "dtlfssc/fssc.hpp"
#include "dtlfssc/pipeline.hpp"
#include "dtlfssc/solver_primitives.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dtlfssc;

namespace {

Matrix random_coefficients(Index n, std::mt19937_64& rng)
{
    Matrix z = oracle::gaussian(n, n, rng);
    z.diagonal().setZero();
    return z;
}

bool rows_on_simplex(const Matrix& q, double tol = 1e-9)
{
    if ((q.array() < 0.0).any()) return false;
    return ((q.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

// Two 1-D lines along e1 and e2 in R^3, four points each.
Matrix two_lines()
{
    Matrix x = Matrix::Zero(3, 8);
    const double scales[4] = {1.0, -0.6, 0.8, -1.3};
    for (int j = 0; j < 4; ++j) {
        x(0, j) = scales[j];
        x(1, 4 + j) = scales[3 - j];
    }
    return x;
}

} // namespace

TEST_CASE("coefficient and label matrices enforce their invariants")
{
    Matrix z = Matrix::Zero(3, 3);
    z(0, 0) = 1e-300;
    CHECK_THROWS_AS(CoefficientMatrix{z}, DomainError);
    CHECK_THROWS_AS(CoefficientMatrix{Matrix::Zero(2, 3)}, DimensionError);

    Matrix q(2, 2);
    q << 0.5, 0.5, 0.3, 0.6;
    CHECK_THROWS_AS(FuzzyLabelMatrix{q}, DomainError);
    q << 1.2, -0.2, 0.3, 0.7;
    CHECK_THROWS_AS(FuzzyLabelMatrix{q}, DomainError);

    const FuzzyLabelMatrix u = FuzzyLabelMatrix::uniform(5, 3);
    CHECK(rows_on_simplex(u.matrix()));
    const FuzzyLabelMatrix h = FuzzyLabelMatrix::one_hot({0, 2, 1, 1}, 3);
    CHECK(h.matrix()(1, 2) == 1.0);
    CHECK(h.matrix().row(3).sum() == 1.0);
    CHECK_THROWS_AS(FuzzyLabelMatrix::one_hot({0, 3}, 3), DomainError);
}

TEST_CASE("representation_weights examples")
{
    const FuzzyLabelMatrix same = FuzzyLabelMatrix::uniform(4, 2);
    CHECK((representation_weights(same, 1, 0.1, 0.5).array() == 0.1).all());

    std::mt19937_64 rng(1);
    const FuzzyLabelMatrix fuzzy(oracle::random_fuzzy(5, 3, rng));
    CHECK((representation_weights(fuzzy, 2, 0.2, 0.0).array() == 0.2).all());

    const FuzzyLabelMatrix hot = FuzzyLabelMatrix::one_hot({0, 1}, 2);
    const Vector w = representation_weights(hot, 0, 0.1, 0.5);
    REQUIRE(w.size() == 1);
    CHECK(w[0] == doctest::Approx(1.1).epsilon(1e-15));

    const Vector wf = representation_weights(fuzzy, 4, 0.05, 2.0);
    CHECK(wf.size() == 4);
    CHECK((wf.array() >= 0.05).all());
    for (Index j = 0; j < 4; ++j) {
        const double d = (fuzzy.matrix().row(4) - fuzzy.matrix().row(j)).squaredNorm();
        CHECK(wf[j] == doctest::Approx(2.0 * d + 0.05));
    }
    CHECK_THROWS_AS(representation_weights(fuzzy, 5, 0.1, 0.1), DimensionError);
}

TEST_CASE("update_representations examples")
{
    FsscParams params;
    params.alpha = 0.01;
    params.beta = 0.5;
    // Pinning the minimizer needs a much tighter gap than the objective does.
    params.lasso.tol = 1e-13;
    params.lasso.max_iters = 20000;

    Matrix x(2, 2);
    x << 1, 1, 0, 0;
    const CoefficientMatrix z = update_representations(x, FuzzyLabelMatrix::uniform(2, 2), params);
    CHECK(z.matrix()(1, 0) == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(z.matrix()(0, 1) == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(z.matrix().diagonal().isZero(0.0));

    std::mt19937_64 rng(4);
    Matrix xr = oracle::gaussian(4, 6, rng);
    xr = xr.array().rowwise() / xr.colwise().norm().array();
    const Matrix corr = (xr.transpose() * xr).cwiseAbs();
    FsscParams big = params;
    big.beta = 0.0;
    big.alpha = (corr - Matrix(corr.diagonal().asDiagonal())).maxCoeff();
    CHECK(update_representations(xr, FuzzyLabelMatrix(oracle::random_fuzzy(6, 2, rng)), big).matrix().isZero(0.0));

    const CoefficientMatrix zo = update_representations(Matrix::Identity(3, 3), FuzzyLabelMatrix::uniform(3, 2), params);
    CHECK(zo.matrix().isZero(0.0));

    CHECK_THROWS_AS(update_representations(Matrix::Zero(0, 3), FuzzyLabelMatrix::uniform(3, 2), params), DimensionError);
    CHECK_THROWS_AS(update_representations(Matrix::Ones(3, 1), FuzzyLabelMatrix::uniform(1, 1), params), DimensionError);
}

TEST_CASE("update_representations columns match the coordinate-descent oracle")
{
    std::mt19937_64 rng(77);
    FsscParams params;
    params.alpha = 0.05;
    params.beta = 0.3;
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 3 + trial % 8;
        const Matrix x = oracle::gaussian(5, n, rng);
        const FuzzyLabelMatrix q(oracle::random_fuzzy(n, 3, rng));
        const CoefficientMatrix z = update_representations(x, q, params);
        CHECK(z.matrix().diagonal().isZero(0.0));
        for (Index i = 0; i < n; ++i) {
            Matrix d(x.rows(), n - 1);
            Vector zi(n - 1);
            for (Index j = 0, c = 0; j < n; ++j) {
                if (j == i) continue;
                d.col(c) = x.col(j);
                zi[c] = z.matrix()(j, i);
                ++c;
            }
            const Vector w = representation_weights(q, i, params.alpha, params.beta);
            const Vector cd = oracle::cd_lasso(d, x.col(i), w);
            const double ref = oracle::lasso_objective(d, x.col(i), w, cd);
            CHECK(oracle::lasso_objective(d, x.col(i), w, zi) <= ref + 1e-6 * std::abs(ref));
        }
    }
}

TEST_CASE("update_representations with beta zero is plain SSC")
{
    std::mt19937_64 rng(8);
    const Matrix x = oracle::gaussian(4, 7, rng);
    FsscParams params;
    params.alpha = 0.1;
    params.beta = 0.0;
    const CoefficientMatrix z = update_representations(x, FuzzyLabelMatrix(oracle::random_fuzzy(7, 2, rng)), params);
    const SscResult ssc = ssc_baseline(x, 2, 0.1, params.lasso, 0);
    CHECK(z.matrix() == ssc.z.matrix());
}

TEST_CASE("build_laplacian examples and identities")
{
    CHECK(build_laplacian(CoefficientMatrix::zeros(4)).laplacian.isZero(0.0));

    Matrix z = Matrix::Zero(2, 2);
    z(0, 1) = 1.0;
    const GraphLaplacian g = build_laplacian(CoefficientMatrix(z));
    Matrix w(2, 2), l(2, 2);
    w << 0, 0.5, 0.5, 0;
    l << 0.5, -0.5, -0.5, 0.5;
    CHECK(g.affinity == w);
    CHECK(g.laplacian == l);

    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix zr = random_coefficients(9, rng);
        const GraphLaplacian gr = build_laplacian(CoefficientMatrix(zr));
        CHECK(gr.affinity.isApprox(0.5 * (zr.cwiseAbs() + zr.transpose().cwiseAbs())));
        CHECK(gr.laplacian == gr.laplacian.transpose());
        CHECK((gr.laplacian * Vector::Ones(9)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(gr.laplacian).eigenvalues().minCoeff() > -1e-9);
    }
}

TEST_CASE("update_fuzzy_labels stays feasible, full rank and descends")
{
    std::mt19937_64 rng(99);
    FsscParams params;
    params.tau = 1.0;
    params.beta = 1.0;
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = 6 + trial % 10;
        const Index k = 2 + trial % 3;
        const GraphLaplacian g = build_laplacian(CoefficientMatrix(random_coefficients(n, rng)));
        const FuzzyLabelMatrix q0(oracle::random_fuzzy(n, k, rng));
        LabelUpdateReport rep;
        const FuzzyLabelMatrix q = update_fuzzy_labels(g, params, k, q0, nullptr, &rep);
        CHECK(rows_on_simplex(q.matrix()));
        CHECK(q.min_singular_value() > 0.0);
        const double before = fuzzy_label_objective(g.laplacian, q0.matrix(), params.tau_tilde());
        const double after = fuzzy_label_objective(g.laplacian, q.matrix(), params.tau_tilde());
        CHECK(after <= before + 1e-6);
        CHECK(after == doctest::Approx(oracle::label_objective(g.laplacian, q.matrix(), params.tau_tilde())));
    }
}

TEST_CASE("update_fuzzy_labels reaches the grid minimum for four samples")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    FsscParams params;
    params.tau = 0.5;
    params.beta = 1.0;
    for (int trial = 0; trial < 5; ++trial) {
        Matrix z(4, 4);
        for (Index i = 0; i < 4; ++i)
            for (Index j = 0; j < 4; ++j) z(i, j) = i == j ? 0.0 : unit(rng);
        const GraphLaplacian g = build_laplacian(CoefficientMatrix(z));
        LabelUpdateReport rep;
        const FuzzyLabelMatrix q = update_fuzzy_labels(g, params, 2, FuzzyLabelMatrix::uniform(4, 2), nullptr, &rep);
        CHECK(rep.converged);
        CHECK(rep.iterations <= 100);
        const double got = fuzzy_label_objective(g.laplacian, q.matrix(), params.tau_tilde());
        CHECK(got <= oracle::label_grid_min(g.laplacian, params.tau_tilde()) + 1e-3);
    }
}

TEST_CASE("update_fuzzy_labels examples")
{
    // Two disconnected pairs: rows split by component.
    Matrix z = Matrix::Zero(4, 4);
    z(0, 1) = z(1, 0) = 1.0;
    z(2, 3) = z(3, 2) = 1.0;
    const GraphLaplacian g = build_laplacian(CoefficientMatrix(z));
    FsscParams params;
    params.tau = 0.1;
    params.beta = 1.0;
    const FuzzyLabelMatrix q = update_fuzzy_labels(g, params, 2, FuzzyLabelMatrix::uniform(4, 2));
    const Labels lab = assign_labels(q);
    CHECK(lab[0] == lab[1]);
    CHECK(lab[2] == lab[3]);
    CHECK(lab[0] != lab[2]);
    CHECK(fuzzy_label_objective(g.laplacian, q.matrix(), params.tau_tilde()) <=
          oracle::label_grid_min(g.laplacian, params.tau_tilde()) + 1e-3);

    // No graph, huge barrier: balanced columns and full rank.
    const GraphLaplacian empty = build_laplacian(CoefficientMatrix::zeros(6));
    FsscParams heavy;
    heavy.tau = 100.0;
    heavy.beta = 1.0;
    std::mt19937_64 rng(2);
    const FuzzyLabelMatrix qb = update_fuzzy_labels(empty, heavy, 2, FuzzyLabelMatrix(oracle::random_fuzzy(6, 2, rng)));
    CHECK(qb.min_singular_value() > 0.0);
    const Vector mass = qb.matrix().colwise().sum();
    CHECK(mass[0] == doctest::Approx(3.0).epsilon(1e-3));
    CHECK(mass[1] == doctest::Approx(3.0).epsilon(1e-3));

    // N = K with an optimal start stays put.
    FsscParams light;
    light.tau = 1e-6;
    light.beta = 1.0;
    const FuzzyLabelMatrix start(Matrix::Identity(3, 3));
    const FuzzyLabelMatrix fixed = update_fuzzy_labels(build_laplacian(CoefficientMatrix::zeros(3)), light, 3, start);
    CHECK((fixed.matrix() - start.matrix()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("run_fssc examples")
{
    const Matrix x = two_lines();
    FsscParams params;
    params.alpha = 0.01;
    params.beta = 0.5;
    params.tau = 0.1;

    FsscParams none = params;
    none.t_fssc = 0;
    std::mt19937_64 rng(6);
    const CoefficientMatrix z0(random_coefficients(8, rng));
    const FuzzyLabelMatrix q0(oracle::random_fuzzy(8, 2, rng));
    const FsscResult same = run_fssc(x, 2, none, z0, q0);
    CHECK(same.z.matrix() == z0.matrix());
    CHECK(same.q.matrix() == q0.matrix());

    const FsscResult res = run_fssc(x, 2, params, CoefficientMatrix::zeros(8), FuzzyLabelMatrix::uniform(8, 2));
    const Labels truth{0, 0, 0, 0, 1, 1, 1, 1};
    CHECK(oracle::brute_force_error(assign_labels(res.q), truth) == 0.0);
    CHECK(res.z.matrix().diagonal().isZero(0.0));
    for (Index i = 0; i < 8; ++i) CHECK(res.q.matrix().row(i).maxCoeff() > 0.5);
}

TEST_CASE("fssc_objective matches its definition")
{
    std::mt19937_64 rng(21);
    const Matrix x = oracle::gaussian(3, 5, rng);
    const CoefficientMatrix z(random_coefficients(5, rng));
    const FuzzyLabelMatrix q(oracle::random_fuzzy(5, 2, rng));
    FsscParams params;
    double expect = 0.0;
    for (Index i = 0; i < 5; ++i) {
        expect += 0.5 * (x.col(i) - x * z.matrix().col(i)).squaredNorm();
        for (Index j = 0; j < 5; ++j) {
            if (j == i) continue;
            const double w = params.beta * (q.matrix().row(i) - q.matrix().row(j)).squaredNorm() + params.alpha;
            expect += w * std::abs(z.matrix()(j, i));
        }
    }
    expect -= params.tau * std::log((q.matrix().transpose() * q.matrix()).determinant());
    CHECK(fssc_objective(x, z, q, params) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("fssc params validation")
{
    FsscParams p;
    CHECK_NOTHROW(p.validate());
    p.alpha = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = FsscParams{};
    p.tau = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = FsscParams{};
    p.beta = 0.01;
    p.tau = 8.0;
    CHECK(p.tau_tilde() == doctest::Approx(800.0));
}
