#include <doctest.h>

#include "oracles.hpp"
#include "phaseless/analysis.hpp"
#include "phaseless/paving.hpp"
#include "phaseless/rng.hpp"

using namespace phaseless;

namespace {

CMatrix block_matrix(const Ensemble& e, const Paving& p, std::size_t b) {
    return CMatrix(e.submatrix(p.block_rows(b)));
}

} // namespace

TEST_CASE("dense blocks: pinv is the minimum-norm right inverse") {
    Rng rng(31);
    std::mt19937_64 gen(31);
    const Ensemble e = sample_gaussian(16, 50, Field::Complex, rng);
    const Paving p = Paving::consecutive(e, 6);
    CHECK(p.size() == 9);   // 8 blocks of 6 and a final block of 2
    CHECK(p.block_rows(8).size() == 2);
    for (std::size_t b = 0; b < p.size(); ++b) {
        const CMatrix a = block_matrix(e, p, b);
        const CVector r = oracle::random_complex(static_cast<std::size_t>(a.rows()), gen);
        const CVector sol = p.pinv(e, b, r);
        CHECK((sol - oracle::pinv(a) * r).norm() < 1e-10 * r.norm());
        CHECK((a * sol - r).norm() < 1e-10 * r.norm());
        const CVector x = oracle::random_complex(16, gen);
        CHECK((p.apply(e, b, x) - a * x).norm() < 1e-10 * x.norm());
        CVector acc = x;
        p.add_pinv(e, b, r, acc);
        CHECK((acc - x - sol).norm() < 1e-12 * (1.0 + sol.norm()));

        const Eigen::JacobiSVD<CMatrix> svd(a);
        CHECK(p.sigma_min(b) == doctest::Approx(svd.singularValues().minCoeff()).epsilon(1e-9));
        CHECK(p.sigma_max(b) == doctest::Approx(svd.singularValues().maxCoeff()).epsilon(1e-9));
    }
}

TEST_CASE("paving constants bracket every block") {
    Rng rng(32);
    const Ensemble e = sample_gaussian(12, 48, Field::Real, rng);
    const Paving p = Paving::consecutive(e, 4);
    double lo = INFINITY, hi = 0.0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        lo = std::min(lo, p.sigma_min(b) * p.sigma_min(b));
        hi = std::max(hi, p.sigma_max(b) * p.sigma_max(b));
        CHECK(p.condition_number(b) == doctest::Approx(p.sigma_max(b) / p.sigma_min(b)));
    }
    CHECK(p.alpha() == doctest::Approx(lo));
    CHECK(p.beta() == doctest::Approx(hi));
    CHECK(p.condition_numbers().size() == static_cast<Eigen::Index>(p.size()));
}

TEST_CASE("invalid partitions are rejected") {
    Rng rng(33);
    const Ensemble e = sample_gaussian(4, 8, Field::Real, rng);
    CHECK_THROWS_AS(Paving::consecutive(e, 0), Error);
    CHECK_THROWS_AS(Paving::consecutive(e, 5), Error);   // taller than wide
    CHECK_THROWS_AS(Paving::from_partition(e, {{0, 1, 2}, {3, 4, 5, 6}}), Error);          // row 7 missing
    CHECK_THROWS_AS(Paving::from_partition(e, {{0, 1, 2, 3}, {3, 4, 5, 6, 7}}), Error);    // overlap
    CHECK_THROWS_AS(Paving::from_partition(e, {{0, 1, 2, 3}, {4, 5, 6, 8}, {7}}), Error);  // out of range
    CHECK_NOTHROW(Paving::from_partition(e, {{7, 0}, {1, 6, 2}, {3, 4, 5}}));
}

TEST_CASE("rank-deficient blocks are reported") {
    RowMatrix a = RowMatrix::Zero(4, 3);
    a.row(0) << 1.0, 2.0, 0.0;
    a.row(1) << 2.0, 4.0, 0.0;   // parallel to row 0
    a.row(2) << 0.0, 0.0, 1.0;
    a.row(3) << 1.0, 0.0, 1.0;
    const Ensemble e = Ensemble::from_matrix(a, Field::Real);
    try {
        (void)Paving::consecutive(e, 2);
        FAIL("expected a rank error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::RankDeficient);
    }
    CHECK_NOTHROW(Paving::from_partition(e, {{0, 2}, {1, 3}}));
}

TEST_CASE("unitary patterns pave with alpha = beta = 1") {
    Rng rng(34);
    const Ensemble e = sample_unitary(20, 60, Field::Complex, rng);
    const Paving p = Paving::per_pattern(e);
    CHECK(p.size() == 3);
    CHECK(p.alpha() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(p.beta() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cdp patterns use the FFT inverse with kappa at most sqrt(6)") {
    Rng rng(35);
    std::mt19937_64 gen(35);
    const Ensemble e = sample_cdp(Shape{16, 1}, 4, rng);
    const Paving p = Paving::per_pattern(e);
    const CMatrix full = e.materialize();
    REQUIRE(p.size() == 4);
    for (std::size_t b = 0; b < p.size(); ++b) {
        CHECK(p.uses_fft(b));
        CHECK(p.condition_number(b) <= std::sqrt(6.0) + 1e-12);
        const CMatrix a = full.middleRows(static_cast<Eigen::Index>(16 * b), 16);
        const Eigen::JacobiSVD<CMatrix> svd(a);
        CHECK(p.sigma_min(b) == doctest::Approx(svd.singularValues().minCoeff()).epsilon(1e-9));
        CHECK(p.sigma_max(b) == doctest::Approx(svd.singularValues().maxCoeff()).epsilon(1e-9));
        const CVector r = oracle::random_complex(16, gen);
        CHECK((p.pinv(e, b, r) - oracle::pinv(a) * r).norm() < 1e-10 * r.norm());
    }
}

TEST_CASE("partial cdp blocks are right inverses; mixed-pattern blocks are dense") {
    Rng rng(36);
    std::mt19937_64 gen(36);
    const Ensemble e = sample_cdp(Shape{12, 1}, 3, rng);
    const Paving p = Paving::consecutive(e, 8);   // blocks straddle patterns
    const CMatrix full = e.materialize();
    bool saw_fft = false, saw_dense = false;
    for (std::size_t b = 0; b < p.size(); ++b) {
        const auto& rows = p.block_rows(b);
        CMatrix a(static_cast<Eigen::Index>(rows.size()), 12);
        for (std::size_t i = 0; i < rows.size(); ++i)
            a.row(static_cast<Eigen::Index>(i)) = full.row(static_cast<Eigen::Index>(rows[i]));
        const CVector r = oracle::random_complex(rows.size(), gen);
        CHECK((a * p.pinv(e, b, r) - r).norm() < 1e-10 * r.norm());
        (p.uses_fft(b) ? saw_fft : saw_dense) = true;
    }
    CHECK(saw_fft);
    CHECK(saw_dense);
}

TEST_CASE("gaussian block conditioning follows the Bai-Yin prediction at n = 256") {
    Rng rng(37);
    const std::size_t n = 256;
    const Ensemble e = sample_gaussian(n, 4 * n, Field::Complex, rng);
    const Paving quarter = Paving::consecutive(e, n / 4);
    const Paving half = Paving::consecutive(e, n / 2);
    const double q = bai_yin_condition(n / 4, n), h = bai_yin_condition(n / 2, n);
    CHECK(q == doctest::Approx(3.0));
    CHECK(h == doctest::Approx(3.0 + 2.0 * std::sqrt(2.0)));
    CHECK(quarter.condition_numbers().mean() == doctest::Approx(q).epsilon(0.25));
    CHECK(half.condition_numbers().mean() == doctest::Approx(h).epsilon(0.30));
    CHECK(std::isinf(bai_yin_condition(n, n)));
}
