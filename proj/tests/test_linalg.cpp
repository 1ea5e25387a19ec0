#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "agec/linalg.hpp"
#include "agec/rng.hpp"

using namespace agec;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

Matrix random_symmetric(std::size_t n, Rng& rng) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            m(i, j) = rng.normal();
            m(j, i) = m(i, j);
        }
    return m;
}

// Independent covariance oracle: explicit sum of outer products of centered
// rows, divided by N-1.
Matrix covariance_oracle(const Matrix& data) {
    const std::size_t n = data.cols();
    std::vector<double> mean = column_means(data);
    Matrix cov(n, n);
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                cov(a, b) += (data(r, a) - mean[a]) * (data(r, b) - mean[b]);
    for (double& v : cov.values()) v /= static_cast<double>(data.rows() - 1);
    return cov;
}

}  // namespace

TEST_CASE("covariance of two centered points on the x axis") {
    Matrix data = Matrix::from_rows({{-1.0, 0.0}, {1.0, 0.0}});
    Matrix cov = covariance(data);
    CHECK(cov(0, 0) == 2.0);
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(1, 0) == 0.0);
    CHECK(cov(1, 1) == 0.0);
}

TEST_CASE("covariance of identical rows is the zero matrix") {
    Matrix data = Matrix::from_rows({{3.0, 5.0}, {3.0, 5.0}, {3.0, 5.0}});
    Matrix centered = center_columns(data, column_means(data));
    Matrix cov = covariance(centered);
    for (double v : cov.values()) CHECK(v == 0.0);
}

TEST_CASE("covariance matches the brute-force oracle on random data") {
    Rng rng(42);
    Matrix data = random_matrix(50, 6, rng);
    Matrix centered = center_columns(data, column_means(data));
    Matrix got = covariance(centered);
    Matrix want = covariance_oracle(data);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            CHECK(std::fabs(got(i, j) - want(i, j)) < 1e-10);
}

TEST_CASE("covariance rejects fewer than 2 rows") {
    Matrix one(1, 3);
    CHECK_THROWS_AS(covariance(one), DegenerateDataError);
}

TEST_CASE("sym_eig of the identity") {
    Matrix eye(3, 3);
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    EigResult r = sym_eig(eye);
    for (double v : r.values) CHECK(v == Catch::Approx(1.0));
}

TEST_CASE("sym_eig of the textbook 2x2 case") {
    Matrix m = Matrix::from_rows({{2.0, 1.0}, {1.0, 2.0}});
    EigResult r = sym_eig(m);
    REQUIRE(r.values.size() == 2);
    CHECK(r.values[0] == Catch::Approx(3.0).margin(1e-12));
    CHECK(r.values[1] == Catch::Approx(1.0).margin(1e-12));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(r.vectors(0, 0) == Catch::Approx(inv_sqrt2).margin(1e-12));
    CHECK(r.vectors(0, 1) == Catch::Approx(inv_sqrt2).margin(1e-12));
    // sign convention: first of the tied largest-magnitude entries positive
    CHECK(r.vectors(1, 0) == Catch::Approx(inv_sqrt2).margin(1e-12));
    CHECK(r.vectors(1, 1) == Catch::Approx(-inv_sqrt2).margin(1e-12));
}

TEST_CASE("sym_eig residual, trace and reconstruction on random symmetric input") {
    Rng rng(7);
    Matrix m = random_symmetric(10, rng);
    EigResult r = sym_eig(m);

    double trace = 0.0;
    for (std::size_t i = 0; i < 10; ++i) trace += m(i, i);
    double sum = 0.0;
    for (double v : r.values) sum += v;
    CHECK(std::fabs(sum - trace) < 1e-9);

    // descending order
    for (std::size_t i = 1; i < r.values.size(); ++i) CHECK(r.values[i - 1] >= r.values[i]);

    // A v = lambda v
    for (std::size_t i = 0; i < 10; ++i) {
        auto v = r.vectors.row(i);
        for (std::size_t a = 0; a < 10; ++a) {
            double av = 0.0;
            for (std::size_t b = 0; b < 10; ++b) av += m(a, b) * v[b];
            CHECK(std::fabs(av - r.values[i] * v[a]) < 1e-8);
        }
    }

    // orthonormal rows
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) {
            const double d = dot(r.vectors.row(i), r.vectors.row(j));
            CHECK(std::fabs(d - (i == j ? 1.0 : 0.0)) < 1e-10);
        }

    // reconstruction: m = sum lambda_i v_i v_i'
    double max_abs = 0.0;
    for (double v : m.values()) max_abs = std::max(max_abs, std::fabs(v));
    for (std::size_t a = 0; a < 10; ++a)
        for (std::size_t b = 0; b < 10; ++b) {
            double rec = 0.0;
            for (std::size_t i = 0; i < 10; ++i)
                rec += r.values[i] * r.vectors(i, a) * r.vectors(i, b);
            CHECK(std::fabs(rec - m(a, b)) <= 1e-8 * max_abs);
        }
}

TEST_CASE("sym_eig rejects non-symmetric input") {
    Matrix m = Matrix::from_rows({{1.0, 2.0}, {0.5, 1.0}});
    CHECK_THROWS_AS(sym_eig(m), ContractError);
}

TEST_CASE("pca on data along the x axis keeps one component") {
    Rng rng(3);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 40; ++i) rows.push_back({rng.normal(), 0.0, 0.0});
    PcaWhitening model = fit_pca_whitening(Matrix::from_rows(rows));
    REQUIRE(model.retained() == 1);
    CHECK(model.components(0, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(model.components(0, 1) == Catch::Approx(0.0).margin(1e-12));
    CHECK(model.components(0, 2) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pca eigenvalues of an isotropic sample are close to each other") {
    Rng rng(11);
    Matrix data = random_matrix(2000, 5, rng);
    PcaWhitening model = fit_pca_whitening(data);
    REQUIRE(model.retained() == 5);
    CHECK(model.eigenvalues.front() <= 1.15 * model.eigenvalues.back());
}

TEST_CASE("whitening produces zero mean and identity covariance") {
    Rng rng(13);
    Matrix data = random_matrix(400, 8, rng, 2.5);
    // correlate the columns so the test is not trivially diagonal
    for (std::size_t i = 0; i < data.rows(); ++i)
        for (std::size_t j = 1; j < 8; ++j) data(i, j) += 0.7 * data(i, j - 1);
    PcaWhitening model = fit_pca_whitening(data);
    Matrix white = project_whiten_rows(model, data);

    std::vector<double> mean = column_means(white);
    for (double v : mean) CHECK(std::fabs(v) <= 1e-9);

    Matrix cov = covariance(center_columns(white, mean));
    for (std::size_t a = 0; a < cov.rows(); ++a)
        for (std::size_t b = 0; b < cov.cols(); ++b)
            CHECK(std::fabs(cov(a, b) - (a == b ? 1.0 : 0.0)) <= 1e-6);
}

TEST_CASE("pca components are orthonormal") {
    Rng rng(17);
    Matrix data = random_matrix(60, 12, rng);
    PcaWhitening model = fit_pca_whitening(data);
    for (std::size_t i = 0; i < model.retained(); ++i)
        for (std::size_t j = 0; j < model.retained(); ++j) {
            const double d = dot(model.components.row(i), model.components.row(j));
            CHECK(std::fabs(d - (i == j ? 1.0 : 0.0)) <= 1e-8);
        }
}

TEST_CASE("pca drops the duplicated coordinate without error") {
    Rng rng(19);
    Matrix data(100, 6);
    for (std::size_t i = 0; i < 100; ++i) {
        for (std::size_t j = 0; j < 5; ++j) data(i, j) = rng.normal();
        data(i, 5) = data(i, 2);  // exact repeat
    }
    PcaWhitening model = fit_pca_whitening(data);
    CHECK(model.retained() < 6);
    CHECK(model.retained() >= 5);
}

TEST_CASE("pca rejects constant data") {
    Matrix data(30, 4, 3.25);
    CHECK_THROWS_AS(fit_pca_whitening(data), DegenerateDataError);
}

TEST_CASE("gram route matches the covariance route when both are feasible") {
    Rng rng(23);
    Matrix data = random_matrix(30, 40, rng);  // n > N: fit uses the Gram route

    PcaWhitening fast = fit_pca_whitening(data);

    // independent covariance-route computation
    std::vector<double> mean = column_means(data);
    Matrix centered = center_columns(data, mean);
    EigResult eig = sym_eig(covariance(centered));
    const double lambda1 = eig.values[0];
    std::size_t k = 0;
    while (k < eig.values.size() && k < 29 && eig.values[k] > 1e-10 * lambda1) ++k;

    REQUIRE(fast.retained() == k);
    for (std::size_t i = 0; i < k; ++i) {
        CHECK(fast.eigenvalues[i] == Catch::Approx(eig.values[i]).epsilon(1e-9));
        for (std::size_t j = 0; j < 40; ++j)
            CHECK(fast.components(i, j) == Catch::Approx(eig.vectors(i, j)).margin(1e-6));
    }
}

TEST_CASE("project_whiten basics") {
    Rng rng(29);
    Matrix data = random_matrix(80, 6, rng);
    PcaWhitening model = fit_pca_whitening(data);

    std::vector<double> at_mean = project_whiten(model, model.mean);
    for (double v : at_mean) CHECK(std::fabs(v) < 1e-12);

    // one whitened step along the leading component
    std::vector<double> x = model.mean;
    const double step = std::sqrt(model.eigenvalues[0]);
    for (std::size_t j = 0; j < 6; ++j) x[j] += model.components(0, j) * step;
    std::vector<double> u = project_whiten(model, x);
    CHECK(u[0] == Catch::Approx(1.0).margin(1e-8));
    for (std::size_t i = 1; i < u.size(); ++i) CHECK(std::fabs(u[i]) < 1e-8);

    std::vector<double> short_x(5, 0.0);
    CHECK_THROWS_AS(project_whiten(model, short_x), ContractError);
}

TEST_CASE("cholesky solves a known SPD system") {
    Matrix a = Matrix::from_rows({{4.0, 1.0, 0.5}, {1.0, 3.0, 0.2}, {0.5, 0.2, 2.0}});
    std::vector<double> x_true = {1.5, -2.0, 0.75};
    std::vector<double> b(3, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) b[i] += a(i, j) * x_true[j];
    Cholesky chol(a);
    std::vector<double> x = chol.solve(b);
    for (std::size_t i = 0; i < 3; ++i) CHECK(x[i] == Catch::Approx(x_true[i]).margin(1e-12));
}
