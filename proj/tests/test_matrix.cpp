#include <catch2/catch_amalgamated.hpp>

#include "kgalign/linalg.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/rng.hpp"

using namespace kgalign;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, SplitRng& rng) {
    Matrix m(r, c);
    for (double& v : m.flat()) v = rng.next_uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("matmul matches hand computation") {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{5, 6}, {7, 8}};
    const Matrix c = matmul(a, b);
    REQUIRE(c.at(0, 0) == 19);
    REQUIRE(c.at(0, 1) == 22);
    REQUIRE(c.at(1, 0) == 43);
    REQUIRE(c.at(1, 1) == 50);
}

TEST_CASE("transpose products agree with explicit transposition") {
    SplitRng rng(1);
    const Matrix a = random_matrix(7, 4, rng);
    const Matrix b = random_matrix(7, 5, rng);
    REQUIRE(max_abs_diff(matmul_tn(a, b), matmul(a.transposed(), b)) == 0.0);
    const Matrix c = random_matrix(6, 4, rng);
    const Matrix d = random_matrix(5, 4, rng);
    REQUIRE(max_abs_diff(matmul_nt(c, d), matmul(c, d.transposed())) < 1e-15);
}

TEST_CASE("matmul rejects mismatched shapes") {
    const Matrix a(2, 3);
    const Matrix b(2, 3);
    REQUIRE_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("cholesky solves SPD systems") {
    SplitRng rng(2);
    const Matrix x = random_matrix(40, 6, rng);
    Matrix a = matmul_tn(x, x);
    for (std::size_t i = 0; i < 6; ++i) a.at(i, i) += 0.1;
    const Matrix truth = random_matrix(6, 3, rng);
    const Matrix b = matmul(a, truth);
    const Matrix solved = cholesky_solve(a, b);
    REQUIRE(max_abs_diff(solved, truth) < 1e-10);
}

TEST_CASE("cholesky reports rank deficiency") {
    Matrix a(3, 3);
    a.at(0, 0) = 1.0;
    a.at(1, 1) = 1.0;  // third row/col all zero
    const Matrix b(3, 1, 1.0);
    REQUIRE_THROWS_AS(cholesky_solve(a, b), SingularMatrixError);
}

TEST_CASE("jacobi svd reconstructs the input") {
    SplitRng rng(3);
    const Matrix a = random_matrix(8, 8, rng);
    const SvdResult svd = jacobi_svd(a);
    Matrix us(8, 8);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) us.at(i, j) = svd.u.at(i, j) * svd.sigma[j];
    REQUIRE(max_abs_diff(matmul_nt(us, svd.v), a) < 1e-10);
    REQUIRE(orthogonality_defect(svd.u) < 1e-10);
    REQUIRE(orthogonality_defect(svd.v) < 1e-10);
}

TEST_CASE("jacobi svd handles rank deficiency with an orthonormal U") {
    SplitRng rng(4);
    Matrix a = random_matrix(6, 2, rng);
    const Matrix low_rank = matmul_nt(a, random_matrix(6, 2, rng));  // rank <= 2, 6x6
    const SvdResult svd = jacobi_svd(low_rank);
    REQUIRE(orthogonality_defect(svd.u) < 1e-8);
    std::size_t tiny = 0;
    for (double s : svd.sigma) tiny += s < 1e-10 ? 1 : 0;
    REQUIRE(tiny >= 4);
}

TEST_CASE("svd completion survives near-full-rank deficiency in higher dims") {
    // rank n-1: the best canonical completion residual is only ~1/sqrt(n)
    SplitRng rng(6);
    const std::size_t n = 40;
    const Matrix a = random_matrix(n, n - 1, rng);
    const Matrix b = random_matrix(n, n - 1, rng);
    const Matrix low_rank = matmul_nt(a, b);
    const SvdResult svd = jacobi_svd(low_rank);
    REQUIRE(orthogonality_defect(svd.u) < 1e-10);
    REQUIRE(orthogonality_defect(svd.v) < 1e-10);
}

TEST_CASE("jacobi svd degenerate edges") {
    SECTION("1x1 matrices") {
        const SvdResult pos = jacobi_svd(Matrix{{3.0}});
        REQUIRE(pos.sigma[0] == 3.0);
        REQUIRE(pos.u.at(0, 0) * pos.v.at(0, 0) == 1.0);
        const SvdResult neg = jacobi_svd(Matrix{{-2.0}});
        REQUIRE(neg.sigma[0] == 2.0);
        REQUIRE(neg.u.at(0, 0) * neg.v.at(0, 0) == -1.0);
    }
    SECTION("zero matrix still yields orthonormal factors") {
        const SvdResult svd = jacobi_svd(Matrix(4, 4));
        REQUIRE(orthogonality_defect(svd.u) < 1e-12);
        REQUIRE(orthogonality_defect(svd.v) < 1e-12);
        for (double s : svd.sigma) REQUIRE(s == 0.0);
    }
}

TEST_CASE("orthonormalize_columns yields an orthogonal matrix") {
    SplitRng rng(5);
    const Matrix q = orthonormalize_columns(random_matrix(10, 10, rng));
    REQUIRE(orthogonality_defect(q) < 1e-12);
}
