#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "phaseless/rng.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

enum class ModelKind { GaussianReal, GaussianComplex, Unitary, Cdp1D, Cdp2D, Custom };

const char* to_string(ModelKind kind);

// A measurement operator A (m x n). Rows of A are a_r^*, so that
// (Ax)_r = <a_r, x>. Two payloads are supported: an explicit dense matrix,
// or a set of coded diffraction masks d_1..d_L combined with an
// unnormalized DFT, (Ax) = stack_l F(conj(d_l) .* x).
//
// Ensembles are immutable after construction.
class Ensemble {
public:
    static Ensemble from_matrix(RowMatrix matrix, Field field, ModelKind kind = ModelKind::Custom);
    static Ensemble from_masks(std::vector<CVector> masks, Shape shape);

    ModelKind kind() const { return kind_; }
    Field field() const { return field_; }
    bool is_cdp() const { return !masks_.empty(); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return shape_.size(); }
    const Shape& signal_shape() const { return shape_; }

    // Number of diffraction patterns (CDP) or stacked unitary blocks.
    std::size_t patterns() const;

    CVector forward(const CVector& x) const;
    CVector adjoint(const CVector& z) const;

    // a_r, i.e. the conjugate of the r-th row of A.
    CVector row(std::size_t r) const;
    Complex row_dot(std::size_t r, const CVector& x) const;
    // x += coef * a_r
    void add_row(std::size_t r, Complex coef, CVector& x) const;
    double row_norm_sq(std::size_t r) const;
    RVector row_norms() const;

    // Rows of A (not conjugated), i.e. the submatrix A_Gamma.
    RowMatrix submatrix(std::span<const std::size_t> rows) const;
    RowMatrix materialize() const;

    // Copy with every row scaled to unit Euclidean norm.
    Ensemble standardized() const;

    const RowMatrix& matrix() const;
    const std::vector<CVector>& masks() const { return masks_; }

    // A_l x for the full diffraction pattern l.
    CVector pattern_forward(std::size_t pattern, const CVector& x) const;

    // Right inverse of the CDP row block A_Gamma, Gamma being rows
    // `local_rows` (indices within pattern l). Equals the pseudo-inverse
    // when Gamma is the whole pattern.
    CVector cdp_block_pinv_apply(std::size_t pattern, std::span<const std::size_t> local_rows,
                                 const CVector& z) const;
    CVector cdp_full_pinv_apply(const CVector& z) const;

private:
    Ensemble() = default;

    void check_signal(const CVector& x) const;
    void check_measurement(const CVector& z) const;
    Complex cdp_entry(std::size_t r, std::size_t j) const;

    ModelKind kind_ = ModelKind::Custom;
    Field field_ = Field::Complex;
    std::size_t rows_ = 0;
    Shape shape_;
    RowMatrix matrix_;
    RVector row_norm_sq_;

    std::vector<CVector> masks_;
    RVector mask_energy_;         // sum_l |d_l|^2, elementwise
    std::vector<Complex> twiddle_rows_;
    std::vector<Complex> twiddle_cols_;
};

Ensemble sample_gaussian(std::size_t n, std::size_t m, Field field, Rng& rng);
Ensemble sample_unitary(std::size_t n, std::size_t m, Field field, Rng& rng);
Ensemble sample_cdp(Shape shape, std::size_t patterns, Rng& rng);

// Octonary mask entry: b1 * b2, b1 uniform on {1,-1,i,-i},
// b2 = sqrt(2)/2 w.p. 4/5 and sqrt(3) w.p. 1/5.
Complex sample_octonary(Rng& rng);

struct Measurements {
    RVector y;
    RVector sqrt_y;

    static Measurements from_intensities(RVector y);
    std::size_t size() const { return static_cast<std::size_t>(y.size()); }
};

Measurements measure(const Ensemble& ensemble, const CVector& x);

} // namespace phaseless
