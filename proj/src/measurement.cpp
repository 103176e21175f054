#include "phaseless/measurement.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/QR>

#include "fft.hpp"

namespace phaseless {

const char* to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::GaussianReal: return "gaussian-real";
    case ModelKind::GaussianComplex: return "gaussian-complex";
    case ModelKind::Unitary: return "unitary";
    case ModelKind::Cdp1D: return "cdp-1d";
    case ModelKind::Cdp2D: return "cdp-2d";
    case ModelKind::Custom: return "custom";
    }
    return "unknown";
}

namespace {

std::vector<Complex> make_twiddles(std::size_t n) {
    std::vector<Complex> tw(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n);
        tw[t] = std::polar(1.0, angle);
    }
    return tw;
}

bool all_finite(const RowMatrix& m) {
    return m.array().real().isFinite().all() && m.array().imag().isFinite().all();
}

} // namespace

Ensemble Ensemble::from_matrix(RowMatrix matrix, Field field, ModelKind kind) {
    require(matrix.rows() > 0 && matrix.cols() > 0, ErrorCode::InvalidArgument,
            "ensemble: matrix must be non-empty");
    require(all_finite(matrix), ErrorCode::InvalidArgument, "ensemble: matrix has non-finite entries");
    require(kind != ModelKind::Cdp1D && kind != ModelKind::Cdp2D, ErrorCode::InvalidArgument,
            "ensemble: coded diffraction ensembles are built from masks");
    Ensemble e;
    e.kind_ = kind;
    e.field_ = field;
    e.rows_ = static_cast<std::size_t>(matrix.rows());
    e.shape_ = Shape{static_cast<std::size_t>(matrix.cols()), 1};
    e.row_norm_sq_ = matrix.rowwise().squaredNorm();
    e.matrix_ = std::move(matrix);
    return e;
}

Ensemble Ensemble::from_masks(std::vector<CVector> masks, Shape shape) {
    require(!masks.empty(), ErrorCode::InvalidArgument, "cdp: at least one pattern is required");
    require(shape.size() > 0, ErrorCode::InvalidArgument, "cdp: empty signal shape");
    RVector energy = RVector::Zero(static_cast<Eigen::Index>(shape.size()));
    for (const auto& d : masks) {
        require(static_cast<std::size_t>(d.size()) == shape.size(), ErrorCode::DimensionMismatch,
                "cdp: mask length does not match signal size");
        for (Eigen::Index j = 0; j < d.size(); ++j) {
            require(std::isfinite(d[j].real()) && std::isfinite(d[j].imag()) && std::abs(d[j]) > 0.0,
                    ErrorCode::InvalidArgument, "cdp: mask entries must be finite and nonzero");
        }
        energy += d.cwiseAbs2();
    }
    Ensemble e;
    e.kind_ = shape.is_2d() ? ModelKind::Cdp2D : ModelKind::Cdp1D;
    e.field_ = Field::Complex;
    e.shape_ = shape;
    e.rows_ = masks.size() * shape.size();
    e.row_norm_sq_.resize(static_cast<Eigen::Index>(masks.size()));
    for (std::size_t l = 0; l < masks.size(); ++l) e.row_norm_sq_[l] = masks[l].squaredNorm();
    e.mask_energy_ = std::move(energy);
    e.masks_ = std::move(masks);
    e.twiddle_rows_ = make_twiddles(shape.rows);
    e.twiddle_cols_ = make_twiddles(shape.cols);
    return e;
}

std::size_t Ensemble::patterns() const {
    if (is_cdp()) return masks_.size();
    if (kind_ == ModelKind::Unitary) return (rows_ + cols() - 1) / cols();
    return 1;
}

void Ensemble::check_signal(const CVector& x) const {
    require(static_cast<std::size_t>(x.size()) == cols(), ErrorCode::DimensionMismatch,
            "signal length " + std::to_string(x.size()) + " does not match ensemble width " +
                std::to_string(cols()));
}

void Ensemble::check_measurement(const CVector& z) const {
    require(static_cast<std::size_t>(z.size()) == rows_, ErrorCode::DimensionMismatch,
            "measurement length " + std::to_string(z.size()) + " does not match ensemble height " +
                std::to_string(rows_));
}

CVector Ensemble::pattern_forward(std::size_t pattern, const CVector& x) const {
    require(is_cdp() && pattern < masks_.size(), ErrorCode::InvalidArgument,
            "pattern_forward: invalid pattern index");
    check_signal(x);
    CVector out = masks_[pattern].conjugate().cwiseProduct(x);
    detail::fft_forward(shape_, out);
    return out;
}

CVector Ensemble::forward(const CVector& x) const {
    check_signal(x);
    if (!is_cdp()) return matrix_ * x;
    const auto n = static_cast<Eigen::Index>(cols());
    CVector out(static_cast<Eigen::Index>(rows_));
    CVector work(n);
    for (std::size_t l = 0; l < masks_.size(); ++l) {
        work = masks_[l].conjugate().cwiseProduct(x);
        detail::fft_forward(shape_, work);
        out.segment(static_cast<Eigen::Index>(l) * n, n) = work;
    }
    return out;
}

CVector Ensemble::adjoint(const CVector& z) const {
    check_measurement(z);
    if (!is_cdp()) return matrix_.adjoint() * z;
    const auto n = static_cast<Eigen::Index>(cols());
    CVector out = CVector::Zero(n);
    CVector work(n);
    for (std::size_t l = 0; l < masks_.size(); ++l) {
        work = z.segment(static_cast<Eigen::Index>(l) * n, n);
        detail::fft_inverse(shape_, work);
        out += masks_[l].cwiseProduct(work);
    }
    return out * static_cast<double>(n);
}

Complex Ensemble::cdp_entry(std::size_t r, std::size_t j) const {
    const std::size_t n = cols();
    const std::size_t l = r / n;
    const std::size_t k = r % n;
    Complex w;
    if (shape_.is_2d()) {
        const std::size_t n1 = shape_.rows, n2 = shape_.cols;
        w = twiddle_rows_[((k / n2) * (j / n2)) % n1] * twiddle_cols_[((k % n2) * (j % n2)) % n2];
    } else {
        w = twiddle_rows_[(k * j) % n];
    }
    return w * std::conj(masks_[l][static_cast<Eigen::Index>(j)]);
}

CVector Ensemble::row(std::size_t r) const {
    require(r < rows_, ErrorCode::InvalidArgument, "row index out of range");
    if (!is_cdp()) return matrix_.row(static_cast<Eigen::Index>(r)).adjoint();
    CVector a(static_cast<Eigen::Index>(cols()));
    for (std::size_t j = 0; j < cols(); ++j) a[static_cast<Eigen::Index>(j)] = std::conj(cdp_entry(r, j));
    return a;
}

Complex Ensemble::row_dot(std::size_t r, const CVector& x) const {
    if (!is_cdp())
        return (matrix_.row(static_cast<Eigen::Index>(r)).transpose().array() * x.array()).sum();
    Complex acc{};
    for (std::size_t j = 0; j < cols(); ++j) acc += cdp_entry(r, j) * x[static_cast<Eigen::Index>(j)];
    return acc;
}

void Ensemble::add_row(std::size_t r, Complex coef, CVector& x) const {
    if (!is_cdp()) {
        x.noalias() += coef * matrix_.row(static_cast<Eigen::Index>(r)).adjoint();
        return;
    }
    for (std::size_t j = 0; j < cols(); ++j)
        x[static_cast<Eigen::Index>(j)] += coef * std::conj(cdp_entry(r, j));
}

double Ensemble::row_norm_sq(std::size_t r) const {
    if (!is_cdp()) return row_norm_sq_[static_cast<Eigen::Index>(r)];
    return row_norm_sq_[static_cast<Eigen::Index>(r / cols())];
}

RVector Ensemble::row_norms() const {
    RVector out(static_cast<Eigen::Index>(rows_));
    for (std::size_t r = 0; r < rows_; ++r) out[static_cast<Eigen::Index>(r)] = std::sqrt(row_norm_sq(r));
    return out;
}

RowMatrix Ensemble::submatrix(std::span<const std::size_t> rows) const {
    const auto n = static_cast<Eigen::Index>(cols());
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < rows_, ErrorCode::InvalidArgument, "submatrix: row index out of range");
        if (!is_cdp()) {
            out.row(static_cast<Eigen::Index>(i)) = matrix_.row(static_cast<Eigen::Index>(rows[i]));
        } else {
            for (Eigen::Index j = 0; j < n; ++j)
                out(static_cast<Eigen::Index>(i), j) = cdp_entry(rows[i], static_cast<std::size_t>(j));
        }
    }
    return out;
}

RowMatrix Ensemble::materialize() const {
    if (!is_cdp()) return matrix_;
    std::vector<std::size_t> all(rows_);
    for (std::size_t r = 0; r < rows_; ++r) all[r] = r;
    return submatrix(all);
}

Ensemble Ensemble::standardized() const {
    if (is_cdp()) {
        std::vector<CVector> scaled = masks_;
        for (auto& d : scaled) d /= d.norm();
        return from_masks(std::move(scaled), shape_);
    }
    require((row_norm_sq_.array() > 0.0).all(), ErrorCode::InvalidArgument,
            "standardize: ensemble has a zero row");
    RowMatrix scaled = matrix_;
    for (Eigen::Index r = 0; r < scaled.rows(); ++r) scaled.row(r) /= std::sqrt(row_norm_sq_[r]);
    return from_matrix(std::move(scaled), field_, kind_);
}

const RowMatrix& Ensemble::matrix() const {
    require(!is_cdp(), ErrorCode::InvalidArgument, "ensemble has no explicit matrix payload");
    return matrix_;
}

CVector Ensemble::cdp_block_pinv_apply(std::size_t pattern, std::span<const std::size_t> local_rows,
                                       const CVector& z) const {
    require(is_cdp() && pattern < masks_.size(), ErrorCode::InvalidArgument,
            "cdp_block_pinv_apply: invalid pattern index");
    require(static_cast<std::size_t>(z.size()) == local_rows.size(), ErrorCode::DimensionMismatch,
            "cdp_block_pinv_apply: z length does not match block size");
    CVector work = CVector::Zero(static_cast<Eigen::Index>(cols()));
    for (std::size_t i = 0; i < local_rows.size(); ++i) {
        require(local_rows[i] < cols(), ErrorCode::InvalidArgument,
                "cdp_block_pinv_apply: rows must lie within one pattern");
        work[static_cast<Eigen::Index>(local_rows[i])] = z[static_cast<Eigen::Index>(i)];
    }
    detail::fft_inverse(shape_, work);
    const CVector& d = masks_[pattern];
    // 1 / conj(d) = d / |d|^2
    return work.cwiseProduct(d).cwiseQuotient(d.cwiseAbs2().cast<Complex>());
}

CVector Ensemble::cdp_full_pinv_apply(const CVector& z) const {
    require(is_cdp(), ErrorCode::InvalidArgument, "cdp_full_pinv_apply: not a coded diffraction ensemble");
    check_measurement(z);
    const auto n = static_cast<Eigen::Index>(cols());
    CVector out = CVector::Zero(n);
    CVector work(n);
    for (std::size_t l = 0; l < masks_.size(); ++l) {
        work = z.segment(static_cast<Eigen::Index>(l) * n, n);
        detail::fft_inverse(shape_, work);
        out += work.cwiseProduct(masks_[l]);
    }
    return out.cwiseQuotient(mask_energy_.cast<Complex>());
}

namespace {

RowMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Field field, Rng& rng) {
    RowMatrix a(rows, cols);
    const double scale = field == Field::Real ? 1.0 : std::sqrt(0.5);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double re = rng.normal();
            const double im = field == Field::Real ? 0.0 : rng.normal();
            a(r, c) = Complex(re, im) * scale;
        }
    }
    return a;
}

} // namespace

Ensemble sample_gaussian(std::size_t n, std::size_t m, Field field, Rng& rng) {
    require(n >= 1 && m >= 1, ErrorCode::InvalidArgument, "sample_gaussian: zero dimension");
    return Ensemble::from_matrix(
        gaussian_matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n), field, rng), field,
        field == Field::Real ? ModelKind::GaussianReal : ModelKind::GaussianComplex);
}

Ensemble sample_unitary(std::size_t n, std::size_t m, Field field, Rng& rng) {
    require(n >= 1 && m >= 1, ErrorCode::InvalidArgument, "sample_unitary: zero dimension");
    const auto nn = static_cast<Eigen::Index>(n);
    RowMatrix a(static_cast<Eigen::Index>(m), nn);
    Eigen::Index filled = 0;
    while (filled < a.rows()) {
        CMatrix g = gaussian_matrix(nn, nn, field, rng);
        Eigen::HouseholderQR<CMatrix> qr(g);
        CMatrix q = qr.householderQ();
        const Eigen::Index take = std::min<Eigen::Index>(nn, a.rows() - filled);
        a.middleRows(filled, take) = q.topRows(take);
        filled += take;
    }
    return Ensemble::from_matrix(std::move(a), field, ModelKind::Unitary);
}

Complex sample_octonary(Rng& rng) {
    static const Complex units[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    const Complex b1 = units[rng.index(4)];
    const double b2 = rng.uniform() < 0.8 ? std::sqrt(2.0) / 2.0 : std::sqrt(3.0);
    return b1 * b2;
}

Ensemble sample_cdp(Shape shape, std::size_t patterns, Rng& rng) {
    require(patterns >= 1, ErrorCode::InvalidArgument, "sample_cdp: need at least one pattern");
    require(shape.size() >= 1, ErrorCode::InvalidArgument, "sample_cdp: zero dimension");
    std::vector<CVector> masks(patterns, CVector(static_cast<Eigen::Index>(shape.size())));
    for (auto& d : masks)
        for (Eigen::Index j = 0; j < d.size(); ++j) d[j] = sample_octonary(rng);
    return Ensemble::from_masks(std::move(masks), shape);
}

Measurements Measurements::from_intensities(RVector y) {
    require((y.array() >= 0.0).all() && y.array().isFinite().all(), ErrorCode::InvalidArgument,
            "measurements must be finite and nonnegative");
    Measurements out;
    out.sqrt_y = y.cwiseSqrt();
    out.y = std::move(y);
    return out;
}

Measurements measure(const Ensemble& ensemble, const CVector& x) {
    return Measurements::from_intensities(ensemble.forward(x).cwiseAbs2());
}

} // namespace phaseless
