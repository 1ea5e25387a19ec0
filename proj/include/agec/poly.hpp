#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agec/errors.hpp"
#include "agec/matrix.hpp"

namespace agec {

// Explicit polynomial feature lift: every monomial of total degree 1..d over
// n inputs, in graded lexicographic order (ascending total degree, then
// descending exponent tuples). The constant term is excluded; centering
// would make it a zero-variance feature anyway.
struct PolyFeatureMap {
    std::size_t input_dim = 0;
    std::size_t degree = 0;
    std::vector<std::uint8_t> exponents;  // output_dim x input_dim, row-major

    std::size_t output_dim() const noexcept {
        return input_dim == 0 ? 0 : exponents.size() / input_dim;
    }

    std::span<const std::uint8_t> exponent(std::size_t j) const {
        return {exponents.data() + j * input_dim, input_dim};
    }
};

// C(n+d, d) - 1 computed exactly; throws once the count exceeds the 1e7
// capacity limit.
inline std::size_t poly_output_dim(std::size_t n, std::size_t d) {
    constexpr std::uint64_t kLimit = 10'000'000;
    std::uint64_t c = 1;  // C(n+i, i), i = 0
    for (std::size_t i = 1; i <= d; ++i) {
        c = c * (static_cast<std::uint64_t>(n) + i) / i;
        if (c > kLimit + 1)
            throw CapacityError("poly map: output dimension exceeds 1e7 for n=" +
                                std::to_string(n) + " d=" + std::to_string(d));
    }
    if (c - 1 > kLimit)
        throw CapacityError("poly map: output dimension exceeds 1e7");
    return static_cast<std::size_t>(c - 1);
}

namespace detail {

inline void enumerate_monomials(std::size_t n, std::size_t total,
                                std::vector<std::uint8_t>& current, std::size_t pos,
                                std::size_t remaining,
                                std::vector<std::uint8_t>& out) {
    if (pos + 1 == n) {
        current[pos] = static_cast<std::uint8_t>(remaining);
        out.insert(out.end(), current.begin(), current.end());
        return;
    }
    for (std::size_t e = remaining + 1; e-- > 0;) {
        current[pos] = static_cast<std::uint8_t>(e);
        enumerate_monomials(n, total, current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

}  // namespace detail

inline PolyFeatureMap build_poly_map(std::size_t n, std::size_t d) {
    if (n < 1) throw ContractError("build_poly_map: input_dim must be >= 1");
    if (d < 1 || d > 9)
        throw ContractError("build_poly_map: degree must be in [1, 9], got " +
                            std::to_string(d));
    const std::size_t m = poly_output_dim(n, d);

    PolyFeatureMap map;
    map.input_dim = n;
    map.degree = d;
    map.exponents.reserve(m * n);
    std::vector<std::uint8_t> current(n, 0);
    for (std::size_t total = 1; total <= d; ++total)
        detail::enumerate_monomials(n, total, current, 0, total, map.exponents);
    return map;
}

// Evaluate the lift at x: component j is the plain monomial
// prod_i x_i^{e_{j,i}} with no multinomial scaling.
inline void lift_into(const PolyFeatureMap& map, std::span<const double> x,
                      std::span<double> out) {
    if (x.size() != map.input_dim)
        throw ContractError("lift: expected dimension " +
                            std::to_string(map.input_dim) + ", got " +
                            std::to_string(x.size()));
    const std::size_t m = map.output_dim();
    const std::size_t n = map.input_dim;
    const std::uint8_t* e = map.exponents.data();
    for (std::size_t j = 0; j < m; ++j, e += n) {
        double v = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = x[i];
            for (std::uint8_t r = 0; r < e[i]; ++r) v *= xi;
        }
        out[j] = v;
    }
}

inline std::vector<double> lift(const PolyFeatureMap& map, std::span<const double> x) {
    std::vector<double> out(map.output_dim());
    lift_into(map, x, out);
    return out;
}

inline Matrix lift_rows(const PolyFeatureMap& map, const Matrix& data) {
    Matrix out(data.rows(), map.output_dim());
    for (std::size_t i = 0; i < data.rows(); ++i)
        lift_into(map, data.row(i), out.row(i));
    return out;
}

}  // namespace agec
