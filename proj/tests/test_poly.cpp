#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "agec/poly.hpp"
#include "agec/rng.hpp"

using namespace agec;

namespace {

using Exponents = std::vector<int>;

// Independent brute-force monomial enumerator: every exponent vector with
// total degree in [1, d], evaluated with std::pow.
void enumerate_oracle(std::size_t n, std::size_t d, Exponents& e, std::size_t pos,
                      int used, std::map<Exponents, double>& out,
                      const std::vector<double>& x) {
    if (pos == n) {
        if (used >= 1) {
            double v = 1.0;
            for (std::size_t i = 0; i < n; ++i)
                v *= std::pow(x[i], static_cast<double>(e[i]));
            out[e] = v;
        }
        return;
    }
    for (int k = 0; k + used <= static_cast<int>(d); ++k) {
        e[pos] = k;
        enumerate_oracle(n, d, e, pos + 1, used + k, out, x);
    }
    e[pos] = 0;
}

std::map<Exponents, double> oracle_lift(std::size_t n, std::size_t d,
                                        const std::vector<double>& x) {
    std::map<Exponents, double> out;
    Exponents e(n, 0);
    enumerate_oracle(n, d, e, 0, 0, out, x);
    return out;
}

Exponents exponents_of(const PolyFeatureMap& map, std::size_t j) {
    auto row = map.exponent(j);
    return Exponents(row.begin(), row.end());
}

}  // namespace

TEST_CASE("exponent table for n=2 d=2 in graded-lex order") {
    PolyFeatureMap map = build_poly_map(2, 2);
    REQUIRE(map.output_dim() == 5);
    CHECK(exponents_of(map, 0) == Exponents{1, 0});
    CHECK(exponents_of(map, 1) == Exponents{0, 1});
    CHECK(exponents_of(map, 2) == Exponents{2, 0});
    CHECK(exponents_of(map, 3) == Exponents{1, 1});
    CHECK(exponents_of(map, 4) == Exponents{0, 2});
}

TEST_CASE("output dimension for the 8-PC degree-5 configuration") {
    CHECK(build_poly_map(8, 5).output_dim() == 1286);  // C(13,5) - 1
}

TEST_CASE("degree 1 is the identity map on coordinates") {
    PolyFeatureMap map = build_poly_map(3, 1);
    REQUIRE(map.output_dim() == 3);
    std::vector<double> x = {0.25, -1.5, 3.0};
    std::vector<double> y = lift(map, x);
    CHECK(y == x);
}

TEST_CASE("output dimension matches exhaustive enumeration for n,d <= 6") {
    for (std::size_t n = 1; n <= 6; ++n) {
        for (std::size_t d = 1; d <= 6; ++d) {
            PolyFeatureMap map = build_poly_map(n, d);
            std::vector<double> x(n, 1.0);
            const std::size_t brute = oracle_lift(n, d, x).size();
            CHECK(map.output_dim() == brute);
        }
    }
}

TEST_CASE("lift of the zero vector is zero") {
    PolyFeatureMap map = build_poly_map(4, 3);
    std::vector<double> x(4, 0.0);
    for (double v : lift(map, x)) CHECK(v == 0.0);
}

TEST_CASE("hand-computed lift at x=(2,3)") {
    PolyFeatureMap map = build_poly_map(2, 2);
    std::vector<double> y = lift(map, std::vector<double>{2.0, 3.0});
    CHECK(y == std::vector<double>{2.0, 3.0, 4.0, 6.0, 9.0});
}

TEST_CASE("lift matches the brute-force oracle for all n,d <= 4") {
    Rng rng(101);
    for (std::size_t n = 1; n <= 4; ++n) {
        for (std::size_t d = 1; d <= 4; ++d) {
            PolyFeatureMap map = build_poly_map(n, d);
            std::vector<double> x(n);
            for (double& v : x) v = rng.uniform(-2.0, 2.0);
            const std::map<Exponents, double> want = oracle_lift(n, d, x);
            REQUIRE(map.output_dim() == want.size());

            std::vector<double> got = lift(map, x);
            std::map<Exponents, int> seen;
            for (std::size_t j = 0; j < map.output_dim(); ++j) {
                const Exponents e = exponents_of(map, j);
                ++seen[e];
                auto it = want.find(e);
                REQUIRE(it != want.end());
                CHECK(std::fabs(got[j] - it->second) <=
                      1e-12 * std::max(1.0, std::fabs(it->second)));
            }
            for (const auto& [e, count] : seen) CHECK(count == 1);  // each monomial once
        }
    }
}

TEST_CASE("table is graded then lexicographically descending") {
    PolyFeatureMap map = build_poly_map(4, 4);
    auto total = [](const Exponents& e) {
        int t = 0;
        for (int v : e) t += v;
        return t;
    };
    for (std::size_t j = 1; j < map.output_dim(); ++j) {
        const Exponents a = exponents_of(map, j - 1);
        const Exponents b = exponents_of(map, j);
        const int ta = total(a), tb = total(b);
        CHECK(ta <= tb);
        if (ta == tb) CHECK(a > b);  // descending lexicographic within a degree
    }
}

TEST_CASE("capacity limit on the output dimension") {
    CHECK_THROWS_AS(build_poly_map(100, 9), CapacityError);
    CHECK_THROWS_AS(build_poly_map(20'000'000, 1), CapacityError);
}

TEST_CASE("contract violations") {
    CHECK_THROWS_AS(build_poly_map(0, 2), ContractError);
    CHECK_THROWS_AS(build_poly_map(3, 0), ContractError);
    CHECK_THROWS_AS(build_poly_map(3, 10), ContractError);
    PolyFeatureMap map = build_poly_map(3, 2);
    std::vector<double> x(2, 1.0);
    CHECK_THROWS_AS(lift(map, x), ContractError);
}

TEST_CASE("monomial multiplicativity on random inputs") {
    Rng rng(555);
    PolyFeatureMap map = build_poly_map(3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                                 rng.uniform(-1.5, 1.5)};
        std::vector<double> y = lift(map, x);
        for (std::size_t j = 0; j < map.output_dim(); ++j) {
            auto e = map.exponent(j);
            double v = 1.0;
            for (std::size_t i = 0; i < 3; ++i)
                for (int r = 0; r < e[i]; ++r) v *= x[i];
            CHECK(y[j] == v);  // identical operation order, bitwise equal
        }
    }
}
