#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "phaseless/measurement.hpp"
#include "phaseless/rng.hpp"

using namespace phaseless;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

void check_adjoint(const Ensemble& e, std::mt19937_64& gen) {
    const CVector x = oracle::random_complex(e.cols(), gen);
    const CVector z = oracle::random_complex(e.rows(), gen);
    const Complex lhs = e.forward(x).dot(z);
    const Complex rhs = x.dot(e.adjoint(z));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
}

} // namespace

TEST_CASE("cdp 1d operator matches the dense DFT construction") {
    Rng rng(3);
    const Ensemble e = sample_cdp(Shape{16, 1}, 3, rng);
    const CMatrix ref = oracle::cdp_matrix(e.masks(), 16, 1);
    CHECK(e.rows() == 48);
    CHECK(max_abs(CMatrix(e.materialize()) - ref) < 1e-12);

    std::mt19937_64 gen(1);
    const CVector x = oracle::random_complex(16, gen);
    CHECK((e.forward(x) - ref * x).norm() < 1e-10 * x.norm());
    for (std::size_t r : {0UL, 17UL, 47UL}) {
        CHECK(std::abs(e.row_dot(r, x) - (ref * x)[static_cast<Eigen::Index>(r)]) < 1e-10);
        CHECK((e.row(r) - ref.row(static_cast<Eigen::Index>(r)).adjoint()).norm() < 1e-12);
    }
}

TEST_CASE("cdp 2d operator matches the dense 2D DFT construction") {
    Rng rng(4);
    const Ensemble e = sample_cdp(Shape{4, 6}, 2, rng);
    const CMatrix ref = oracle::cdp_matrix(e.masks(), 4, 6);
    CHECK(max_abs(CMatrix(e.materialize()) - ref) < 1e-12);
    std::mt19937_64 gen(2);
    const CVector x = oracle::random_complex(24, gen);
    CHECK((e.forward(x) - ref * x).norm() < 1e-10 * x.norm());
    CHECK((e.pattern_forward(1, x) - ref.middleRows(24, 24) * x).norm() < 1e-10 * x.norm());
}

TEST_CASE("adjoint is consistent with forward for every model") {
    std::mt19937_64 gen(5);
    Rng rng(5);
    check_adjoint(sample_gaussian(12, 40, Field::Real, rng), gen);
    check_adjoint(sample_gaussian(12, 40, Field::Complex, rng), gen);
    check_adjoint(sample_unitary(12, 30, Field::Complex, rng), gen);
    check_adjoint(sample_cdp(Shape{10, 1}, 4, rng), gen);
    check_adjoint(sample_cdp(Shape{6, 5}, 3, rng), gen);
}

TEST_CASE("add_row adds a multiple of a_r") {
    Rng rng(6);
    std::mt19937_64 gen(6);
    for (const Ensemble& e : {sample_gaussian(8, 20, Field::Complex, rng), sample_cdp(Shape{8, 1}, 2, rng)}) {
        CVector x = oracle::random_complex(8, gen);
        const CVector before = x;
        const Complex c(0.3, -1.2);
        e.add_row(5, c, x);
        CHECK((x - before - c * e.row(5)).norm() < 1e-12);
        CHECK(std::abs(e.row_norm_sq(5) - e.row(5).squaredNorm()) < 1e-10);
    }
}

TEST_CASE("octonary masks draw from the 8-point alphabet with the stated weights") {
    Rng rng(7);
    const double lo = std::sqrt(2.0) / 2.0, hi = std::sqrt(3.0);
    std::size_t high = 0, real_axis = 0;
    double energy = 0.0;
    const std::size_t draws = 40000;
    for (std::size_t i = 0; i < draws; ++i) {
        const Complex d = sample_octonary(rng);
        const double mag = std::abs(d);
        REQUIRE((std::abs(mag - lo) < 1e-15 || std::abs(mag - hi) < 1e-15));
        REQUIRE((d.real() == 0.0 || d.imag() == 0.0));
        high += mag > 1.0;
        real_axis += d.imag() == 0.0;
        energy += mag * mag;
    }
    const double n = static_cast<double>(draws);
    CHECK(static_cast<double>(high) / n == doctest::Approx(0.2).epsilon(0.05));
    CHECK(static_cast<double>(real_axis) / n == doctest::Approx(0.5).epsilon(0.05));
    CHECK(energy / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("gaussian entries have unit second moment") {
    Rng rng(8);
    for (Field f : {Field::Real, Field::Complex}) {
        const Ensemble e = sample_gaussian(50, 400, f, rng);
        const double mean_sq = e.matrix().cwiseAbs2().mean();
        CHECK(mean_sq == doctest::Approx(1.0).epsilon(0.03));
        if (f == Field::Real) CHECK(e.matrix().imag().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("stacked unitary blocks are orthonormal") {
    Rng rng(9);
    const Ensemble e = sample_unitary(10, 30, Field::Complex, rng);
    const CMatrix a = e.matrix();
    CHECK((a.adjoint() * a - 3.0 * CMatrix::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.topRows(10) * a.topRows(10).adjoint() - CMatrix::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-12);
    const Ensemble partial = sample_unitary(10, 25, Field::Real, rng);
    CHECK(partial.rows() == 25);
    CHECK(partial.matrix().imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standardized ensembles have unit rows") {
    Rng rng(10);
    const Ensemble s = sample_gaussian(9, 30, Field::Complex, rng).standardized();
    for (std::size_t r = 0; r < s.rows(); ++r) CHECK(s.row(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
    const Ensemble c = sample_cdp(Shape{8, 1}, 2, rng).standardized();
    CHECK((c.row_norms().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("cdp inverses agree with the dense pseudo-inverse") {
    Rng rng(11);
    std::mt19937_64 gen(11);
    const Ensemble e = sample_cdp(Shape{12, 1}, 3, rng);
    const CMatrix a = e.materialize();
    const CVector z = oracle::random_complex(e.rows(), gen);
    CHECK((e.cdp_full_pinv_apply(z) - oracle::pinv(a) * z).norm() < 1e-10 * z.norm());

    const CVector x = oracle::random_complex(12, gen);
    CHECK((e.cdp_full_pinv_apply(e.forward(x)) - x).norm() < 1e-10 * x.norm());

    // Whole pattern: the pseudo-inverse.
    std::vector<std::size_t> all(12);
    for (std::size_t i = 0; i < 12; ++i) all[i] = i;
    const CVector zp = oracle::random_complex(12, gen);
    CHECK((e.cdp_block_pinv_apply(1, all, zp) - oracle::pinv(a.middleRows(12, 12)) * zp).norm() < 1e-10 * zp.norm());

    // Partial pattern: a right inverse.
    const std::vector<std::size_t> part{0, 3, 4, 9};
    CMatrix sub(4, 12);
    for (std::size_t i = 0; i < part.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = a.row(24 + static_cast<Eigen::Index>(part[i]));
    const CVector zq = oracle::random_complex(4, gen);
    CHECK((sub * e.cdp_block_pinv_apply(2, part, zq) - zq).norm() < 1e-10 * zq.norm());
}

TEST_CASE("submatrix returns the requested rows of A") {
    Rng rng(12);
    const Ensemble e = sample_cdp(Shape{6, 1}, 2, rng);
    const std::vector<std::size_t> rows{1, 7, 11};
    const RowMatrix sub = e.submatrix(rows);
    const RowMatrix full = e.materialize();
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK((sub.row(static_cast<Eigen::Index>(i)) - full.row(static_cast<Eigen::Index>(rows[i]))).norm() < 1e-14);
}

TEST_CASE("measurements are squared magnitudes") {
    Rng rng(13);
    std::mt19937_64 gen(13);
    const Ensemble e = sample_gaussian(6, 20, Field::Complex, rng);
    const CVector x = oracle::random_complex(6, gen);
    const Measurements m = measure(e, x);
    const CVector z = e.matrix() * x;
    for (Eigen::Index r = 0; r < z.size(); ++r) {
        CHECK(m.y[r] == doctest::Approx(std::norm(z[r])).epsilon(1e-12));
        CHECK(m.sqrt_y[r] == doctest::Approx(std::abs(z[r])).epsilon(1e-12));
    }
}

TEST_CASE("invalid inputs are rejected with typed errors") {
    Rng rng(14);
    RowMatrix bad = RowMatrix::Ones(3, 2);
    bad(1, 1) = Complex(NAN, 0.0);
    CHECK_THROWS_AS(Ensemble::from_matrix(bad, Field::Complex), Error);

    const Ensemble e = sample_gaussian(4, 8, Field::Real, rng);
    try {
        (void)e.forward(CVector::Zero(5));
        FAIL("expected a dimension error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::DimensionMismatch);
    }
    RVector y = RVector::Ones(3);
    y[1] = -1.0;
    CHECK_THROWS_AS(Measurements::from_intensities(y), Error);
    CHECK_THROWS_AS(sample_cdp(Shape{4, 1}, 0, rng), Error);
    std::vector<CVector> masks{CVector::Zero(4)};
    CHECK_THROWS_AS(Ensemble::from_masks(masks, Shape{4, 1}), Error);
    CHECK_THROWS_AS((void)e.row(8), Error);
}

TEST_CASE("seed derivation is order independent and sensitive to every coordinate") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 20; ++a)
        for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(7, {a, b}));
    CHECK(seen.size() == 400);
    CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
    CHECK(derive_seed(7, {1, 2}) != derive_seed(8, {1, 2}));
    CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
}
