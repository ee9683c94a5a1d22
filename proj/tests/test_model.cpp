#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "rjmf/model.hpp"

using namespace rjmf;

TEST_CASE("matrix storage is row major with span access") {
    Matrix m(2, 3);
    m(0, 0) = 1.0;
    m(0, 2) = 2.0;
    m(1, 1) = 3.0;
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m.flat()[2] == 2.0);
    CHECK(m.flat()[4] == 3.0);
    m.row(1)[0] = 7.0;
    CHECK(m(1, 0) == 7.0);
    CHECK(dot(m.row(0), m.row(1)) == 1.0 * 7.0 + 0.0 + 2.0 * 0.0);
    CHECK(frobenius_sq(m) == 1.0 + 4.0 + 9.0 + 49.0);
}

TEST_CASE("cholesky reproduces a textbook factorization") {
    // A = L L^T with L = [[2,0,0],[6,1,0],[-8,5,3]].
    Matrix a(3, 3);
    const double vals[3][3] = {{4, 12, -16}, {12, 37, -43}, {-16, -43, 98}};
    for (std::size_t r = 0; r < 3; r++) {
        for (std::size_t c = 0; c < 3; c++) {
            a(r, c) = vals[r][c];
        }
    }
    REQUIRE(cholesky_factor(a));
    CHECK(a(0, 0) == Catch::Approx(2.0));
    CHECK(a(1, 0) == Catch::Approx(6.0));
    CHECK(a(1, 1) == Catch::Approx(1.0));
    CHECK(a(2, 0) == Catch::Approx(-8.0));
    CHECK(a(2, 1) == Catch::Approx(5.0));
    CHECK(a(2, 2) == Catch::Approx(3.0));

    // b = A x for x = (1, 2, 3).
    std::vector<double> b = {-20.0, -43.0, 192.0};
    cholesky_solve(a, b);
    CHECK(b[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(b[1] == Catch::Approx(2.0).margin(1e-12));
    CHECK(b[2] == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("cholesky rejects indefinite input") {
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 0) = 2.0;
    a(1, 1) = 1.0;
    CHECK_FALSE(cholesky_factor(a));
    Matrix z(2, 2);
    CHECK_FALSE(cholesky_factor(z));
}

TEST_CASE("cholesky factor rebuilds random SPD matrices") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> d(0.0, 1.0);
    for (int rep = 0; rep < 20; rep++) {
        const std::size_t k = 1 + rng() % 6;
        Matrix b(k, k);
        for (double& x : b.flat()) {
            x = d(rng);
        }
        Matrix a(k, k);
        for (std::size_t r = 0; r < k; r++) {
            for (std::size_t c = 0; c < k; c++) {
                double s = r == c ? 0.5 : 0.0;
                for (std::size_t t = 0; t < k; t++) {
                    s += b(t, r) * b(t, c);
                }
                a(r, c) = s;
            }
        }
        Matrix l = a;
        REQUIRE(cholesky_factor(l));
        for (std::size_t r = 0; r < k; r++) {
            for (std::size_t c = 0; c <= r; c++) {
                double s = 0.0;
                for (std::size_t t = 0; t <= c; t++) {
                    s += l(r, t) * l(c, t);
                }
                CHECK(s == Catch::Approx(a(r, c)).margin(1e-10));
            }
        }
    }
}

TEST_CASE("energy breakdown on a worked two-by-two instance") {
    const SparseRatings r = make_sparse(2, 2, {{0, 0, 5.0}, {1, 1, 3.0}});
    FactorState s;
    s.u = Matrix(2, 1);
    s.v = Matrix(2, 1);
    s.u(0, 0) = 1.0;
    s.u(1, 0) = 2.0;
    s.v(0, 0) = 1.0;
    s.v(1, 0) = 1.0;
    REQUIRE(s.k() == 1);

    // Residuals are 5 - 1 = 4 and 3 - 2 = 1.
    const EnergyBreakdown b = accumulate_energy(s, r);
    CHECK(b.sq_error_sum == 17.0);
    CHECK(b.frob_u == 5.0);
    CHECK(b.frob_v == 2.0);
    CHECK(b.kappa == 2);

    const HyperParams hp{0.1, 0.2};
    CHECK(regularized_loss(b, hp) == Catch::Approx(9.4).margin(1e-12));
    CHECK(regularized_loss(s, r, hp) == Catch::Approx(9.4).margin(1e-12));
    // Bracket 17 + 0.5 + 0.4 over kappa * t = 4.
    CHECK(boltzmann_exponent(b, hp, 2.0) == Catch::Approx(-4.475).margin(1e-12));
    CHECK(boltzmann_exponent(s, r, hp, 2.0) == Catch::Approx(-4.475).margin(1e-12));
}

TEST_CASE("exponent scales inversely with temperature") {
    const SparseRatings r = make_sparse(4, 3, {{0, 0, 4.0}, {1, 2, 2.0}, {3, 1, 5.0}});
    const FactorState s = init_factors(4, 3, 2, 17);
    const HyperParams hp{0.3, 0.7};
    const double e1 = boltzmann_exponent(s, r, hp, 1.0);
    CHECK(boltzmann_exponent(s, r, hp, 0.5) == Catch::Approx(2.0 * e1).epsilon(1e-12));
    CHECK(boltzmann_exponent(s, r, hp, 4.0) == Catch::Approx(e1 / 4.0).epsilon(1e-12));

    const EnergyBreakdown b = accumulate_energy(s, r);
    const double bracket = -boltzmann_exponent(b, hp, 2.0) * static_cast<double>(b.kappa) * 2.0;
    CHECK(bracket - b.sq_error_sum ==
          Catch::Approx(hp.lambda1 * b.frob_u + hp.lambda2 * b.frob_v).epsilon(1e-12));
}

TEST_CASE("sigma0 = 0 pins every factor entry to sqrt(3/k)") {
    const FactorState s = init_factors(3, 5, 4, 123, 0.0);
    const double mean = std::sqrt(3.0 / 4.0);
    for (double x : s.u.flat()) {
        CHECK(x == mean);
    }
    for (double x : s.v.flat()) {
        CHECK(x == mean);
    }
    CHECK(predict(s, 1, 2) == Catch::Approx(4.0 * mean * mean).epsilon(1e-15));
}

TEST_CASE("default initialization predicts near the rating midpoint") {
    const std::size_t n = 300;
    const std::size_t k = 4;
    const FactorState s = init_factors(n, n, k, 99);

    double mean_sum = 0.0;
    double sq_sum = 0.0;
    for (double x : s.u.flat()) {
        mean_sum += x;
        sq_sum += x * x;
    }
    const double cnt = static_cast<double>(n * k);
    const double m = mean_sum / cnt;
    const double sd = std::sqrt(sq_sum / cnt - m * m);
    CHECK(m == Catch::Approx(std::sqrt(3.0 / 4.0)).margin(0.02));
    CHECK(sd == Catch::Approx(1.0 / std::sqrt(8.0)).margin(0.02));

    std::mt19937_64 rng(5);
    double pred_sum = 0.0;
    const int pairs = 2000;
    for (int i = 0; i < pairs; i++) {
        pred_sum += predict(s, rng() % n, rng() % n);
    }
    CHECK(pred_sum / pairs == Catch::Approx(3.0).margin(0.1));
}

TEST_CASE("seeded initialization is reproducible") {
    const FactorState a = init_factors(6, 4, 3, 42);
    const FactorState b = init_factors(6, 4, 3, 42);
    const FactorState c = init_factors(6, 4, 3, 43);
    bool same = true;
    for (std::size_t i = 0; i < a.u.flat().size(); i++) {
        same = same && a.u.flat()[i] == b.u.flat()[i];
    }
    CHECK(same);
    CHECK(a.u.flat()[0] != c.u.flat()[0]);
}

TEST_CASE("rmse against observed entries matches a direct computation") {
    // k = 1 with all entries sqrt(3) predicts exactly 3 everywhere.
    const FactorState s = init_factors(2, 2, 1, 0, 0.0);
    const SparseRatings r = make_sparse(2, 2, {{0, 0, 5.0}, {0, 1, 1.0}, {1, 1, 3.0}});
    CHECK(test_rmse(s, r) == Catch::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("model guards reject degenerate arguments") {
    CHECK_THROWS_AS(init_factors(0, 2, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(init_factors(2, 0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(init_factors(2, 2, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(init_factors(2, 2, 1, 0, -0.5), std::invalid_argument);

    const HyperParams hp{0.1, 0.1};
    EnergyBreakdown empty;
    CHECK_THROWS_AS(regularized_loss(empty, hp), std::invalid_argument);
    CHECK_THROWS_AS(boltzmann_exponent(empty, hp, 1.0), std::invalid_argument);

    const SparseRatings r = make_sparse(2, 2, {{0, 0, 3.0}});
    const FactorState s = init_factors(2, 2, 1, 0);
    CHECK_THROWS_AS(boltzmann_exponent(s, r, hp, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(boltzmann_exponent(s, r, hp, -1.0), std::invalid_argument);

    SparseRatings none = make_sparse(2, 2, {});
    CHECK_THROWS_AS(test_rmse(s, none), std::invalid_argument);
}
