#include <catch2/catch_amalgamated.hpp>

#include "secagg/matrix.hpp"
#include "secagg/rng.hpp"

using namespace secagg;

namespace {

FieldMatrix random_matrix(const PrimeField& F, std::size_t rows, std::size_t cols, Rng& rng) {
    FieldMatrix m(F, rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m.set(i, j, rng.uniform(F.modulus()));
    return m;
}

// 3x3 determinant by cofactor expansion; elimination-free oracle for rank-3.
std::uint64_t det3(const PrimeField& F, const FieldMatrix& m) {
    auto mul3 = [&](std::uint64_t a, std::uint64_t b, std::uint64_t c) {
        return F.mul(F.mul(a, b), c);
    };
    std::uint64_t pos = F.add(F.add(mul3(m.get(0, 0), m.get(1, 1), m.get(2, 2)),
                                    mul3(m.get(0, 1), m.get(1, 2), m.get(2, 0))),
                              mul3(m.get(0, 2), m.get(1, 0), m.get(2, 1)));
    std::uint64_t neg = F.add(F.add(mul3(m.get(0, 2), m.get(1, 1), m.get(2, 0)),
                                    mul3(m.get(0, 0), m.get(1, 2), m.get(2, 1))),
                              mul3(m.get(0, 1), m.get(1, 0), m.get(2, 2)));
    return F.sub(pos, neg);
}

}  // namespace

TEST_CASE("rank basics") {
    PrimeField f11(11);
    CHECK(rank(FieldMatrix::identity(f11, 3)) == 3);
    CHECK(rank(FieldMatrix(f11, 2, 4)) == 0);

    // the three non-unit key rows of the first example construction
    FieldMatrix m = FieldMatrix::from_rows(f11, {{1, 2, 3}, {1, 3, 4}, {8, 5, 3}});
    CHECK(det3(f11, m) == 1);
    CHECK(rank(m) == 3);
}

TEST_CASE("stack") {
    PrimeField f11(11);
    FieldMatrix a = FieldMatrix::from_rows(f11, {{1, 2, 3}});
    FieldMatrix b = FieldMatrix::from_rows(f11, {{4, 5, 6}, {7, 8, 9}});
    FieldMatrix s = stack({a, b});
    REQUIRE(s.rows() == 3);
    CHECK(s.get(0, 1) == 2);
    CHECK(s.get(1, 0) == 4);
    CHECK(s.get(2, 2) == 9);

    FieldMatrix empty = stack(f11, 3, {});
    CHECK(empty.rows() == 0);
    CHECK(empty.cols() == 3);

    FieldMatrix i2 = FieldMatrix::identity(f11, 2);
    CHECK(rank(stack({i2, i2})) == 2);

    FieldMatrix wide(f11, 1, 4);
    CHECK_THROWS_AS(stack({a, wide}), std::invalid_argument);
    PrimeField f17(17);
    CHECK_THROWS_AS(stack({a, FieldMatrix(f17, 1, 3)}), std::invalid_argument);
}

TEST_CASE("mat_vec_mul") {
    PrimeField f11(11);
    FieldMatrix id = FieldMatrix::identity(f11, 3);
    std::vector<std::uint64_t> v{2, 3, 1};
    CHECK(mat_vec_mul(id, v) == v);

    FieldMatrix zero(f11, 2, 3);
    CHECK(mat_vec_mul(zero, v) == std::vector<std::uint64_t>{0, 0});

    FieldMatrix row = FieldMatrix::from_rows(f11, {{1, 2, 3}});
    CHECK(mat_vec_mul(row, v) == std::vector<std::uint64_t>{0});  // 2 + 6 + 3 = 11

    CHECK_THROWS_AS(mat_vec_mul(row, std::vector<std::uint64_t>{1, 2}), std::invalid_argument);

    std::vector<FieldElement> fv{{2, f11}, {3, f11}, {1, f11}};
    auto out = mat_vec_mul(row, fv);
    REQUIRE(out.size() == 1);
    CHECK(out[0].value() == 0);
}

TEST_CASE("rank is transpose-invariant and unchanged by row reduction") {
    Rng rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        PrimeField F(trial % 2 ? 11 : 5);
        const std::size_t r = 1 + rng.uniform(6), c = 1 + rng.uniform(6);
        FieldMatrix m = random_matrix(F, r, c, rng);
        const std::size_t rk = rank(m);
        CHECK(rk == rank(transpose(m)));
        CHECK(rk == rank(row_reduce(m)));
        CHECK(rk <= std::min(r, c));
    }
}

TEST_CASE("stack rank is subadditive; deficit equals row-space intersection") {
    Rng rng(99);
    for (int trial = 0; trial < 120; ++trial) {
        PrimeField F(7);
        const std::size_t c = 2 + rng.uniform(5);
        FieldMatrix a = random_matrix(F, 1 + rng.uniform(4), c, rng);
        FieldMatrix b = random_matrix(F, 1 + rng.uniform(4), c, rng);
        FieldMatrix s = stack({a, b});
        const std::size_t ra = rank(a), rb = rank(b), rs = rank(s);
        CHECK(rs <= ra + rb);
        CHECK(rs >= std::max(ra, rb));

        // Solve for the intersection explicitly: left-kernel vectors (x,y) of
        // the stack give xA = -yB; the xA span the row-space intersection.
        FieldMatrix left_kernel = kernel(transpose(s));
        FieldMatrix inter(F, left_kernel.rows(), c);
        for (std::size_t i = 0; i < left_kernel.rows(); ++i)
            for (std::size_t col = 0; col < c; ++col) {
                std::uint64_t acc = 0;
                for (std::size_t j = 0; j < a.rows(); ++j)
                    acc = F.add(acc, F.mul(left_kernel.get(i, j), a.get(j, col)));
                inter.set(i, col, acc);
            }
        CHECK(rank(inter) == ra + rb - rs);
        if (rs == ra + rb) CHECK(rank(inter) == 0);  // equality iff trivial intersection
    }
}

TEST_CASE("kernel vectors annihilate the matrix") {
    Rng rng(5);
    PrimeField F(13);
    for (int trial = 0; trial < 50; ++trial) {
        FieldMatrix m = random_matrix(F, 1 + rng.uniform(5), 1 + rng.uniform(6), rng);
        FieldMatrix k = kernel(m);
        CHECK(k.rows() == m.cols() - rank(m));
        for (std::size_t i = 0; i < k.rows(); ++i) {
            std::vector<std::uint64_t> v(m.cols());
            for (std::size_t j = 0; j < m.cols(); ++j) v[j] = k.get(i, j);
            for (auto x : mat_vec_mul(m, v)) CHECK(x == 0);
        }
        CHECK(rank(k) == k.rows());
    }
}
