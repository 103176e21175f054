#include "phaseless/paving.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace phaseless {

namespace {

// Pattern index when every row of the block belongs to the same diffraction
// pattern, -1 otherwise.
long single_pattern(const Ensemble& ensemble, const std::vector<std::size_t>& rows) {
    if (!ensemble.is_cdp()) return -1;
    const std::size_t n = ensemble.cols();
    const std::size_t pattern = rows.front() / n;
    for (auto r : rows)
        if (r / n != pattern) return -1;
    return static_cast<long>(pattern);
}

// Extreme singular values of a wide (or square) matrix. The Gram eigenvalues
// are cheap and accurate unless the block is badly conditioned, in which case
// the SVD decides.
std::pair<double, double> singular_range(const CMatrix& m) {
    const CMatrix gram = m * m.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmax > 0.0 && lmin > 1e-8 * lmax) return {std::sqrt(lmin), std::sqrt(lmax)};
    Eigen::JacobiSVD<CMatrix> svd(m);
    return {svd.singularValues().minCoeff(), svd.singularValues().maxCoeff()};
}

} // namespace

Paving::Block Paving::build_block(const Ensemble& ensemble, std::vector<std::size_t> rows) {
    const std::size_t n = ensemble.cols();
    require(!rows.empty(), ErrorCode::InvalidArgument, "paving: empty block");
    require(rows.size() <= n, ErrorCode::InvalidArgument,
            "paving: block of " + std::to_string(rows.size()) + " rows exceeds signal dimension " +
                std::to_string(n));
    Block block;
    block.fft_pattern = single_pattern(ensemble, rows);
    if (block.fft_pattern >= 0) {
        const std::size_t base = static_cast<std::size_t>(block.fft_pattern) * n;
        for (auto r : rows) block.local.push_back(r - base);
        const CVector& d = ensemble.masks()[static_cast<std::size_t>(block.fft_pattern)];
        if (rows.size() == n) {
            // A_l = F diag(conj d_l) and F / sqrt(n) is unitary.
            const double root_n = std::sqrt(static_cast<double>(n));
            block.sigma_min = root_n * d.cwiseAbs().minCoeff();
            block.sigma_max = root_n * d.cwiseAbs().maxCoeff();
        } else if (n <= kMaxMaterializedWidth) {
            std::tie(block.sigma_min, block.sigma_max) = singular_range(CMatrix(ensemble.submatrix(rows)));
        } else {
            block.sigma_min = block.sigma_max = std::numeric_limits<double>::quiet_NaN();
        }
        block.rows = std::move(rows);
        return block;
    }

    const auto k = static_cast<Eigen::Index>(rows.size());
    block.a = ensemble.submatrix(rows);
    Eigen::HouseholderQR<CMatrix> qr(block.a.adjoint());
    block.q = qr.householderQ() * CMatrix::Identity(static_cast<Eigen::Index>(n), k);
    block.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    std::tie(block.sigma_min, block.sigma_max) = singular_range(block.r);
    require(block.sigma_max > 0.0 && block.sigma_min > 1e-10 * block.sigma_max, ErrorCode::RankDeficient,
            "paving: block starting at row " + std::to_string(rows.front()) + " is rank deficient");
    block.rows = std::move(rows);
    return block;
}

Paving Paving::from_partition(const Ensemble& ensemble, std::vector<std::vector<std::size_t>> blocks) {
    require(!blocks.empty(), ErrorCode::InvalidArgument, "paving: no blocks");
    std::vector<char> seen(ensemble.rows(), 0);
    for (const auto& b : blocks) {
        for (auto r : b) {
            require(r < ensemble.rows(), ErrorCode::InvalidArgument, "paving: row index out of range");
            require(!seen[r], ErrorCode::InvalidArgument, "paving: blocks overlap at row " + std::to_string(r));
            seen[r] = 1;
        }
    }
    require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }), ErrorCode::InvalidArgument,
            "paving: blocks do not cover every row");

    Paving p;
    p.rows_ = ensemble.rows();
    p.cols_ = ensemble.cols();
    p.blocks_.reserve(blocks.size());
    for (auto& b : blocks) p.blocks_.push_back(build_block(ensemble, std::move(b)));
    p.alpha_ = std::numeric_limits<double>::infinity();
    p.beta_ = 0.0;
    for (const auto& b : p.blocks_) {
        if (std::isnan(b.sigma_min)) {
            p.alpha_ = p.beta_ = std::numeric_limits<double>::quiet_NaN();
            break;
        }
        p.alpha_ = std::min(p.alpha_, b.sigma_min * b.sigma_min);
        p.beta_ = std::max(p.beta_, b.sigma_max * b.sigma_max);
    }
    return p;
}

Paving Paving::consecutive(const Ensemble& ensemble, std::size_t block_size) {
    require(block_size >= 1, ErrorCode::InvalidArgument, "paving: block size must be positive");
    require(block_size <= ensemble.cols(), ErrorCode::InvalidArgument,
            "paving: block size " + std::to_string(block_size) + " exceeds signal dimension " +
                std::to_string(ensemble.cols()));
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t start = 0; start < ensemble.rows(); start += block_size) {
        const std::size_t stop = std::min(ensemble.rows(), start + block_size);
        std::vector<std::size_t> rows(stop - start);
        std::iota(rows.begin(), rows.end(), start);
        blocks.push_back(std::move(rows));
    }
    return from_partition(ensemble, std::move(blocks));
}

Paving Paving::per_pattern(const Ensemble& ensemble) { return consecutive(ensemble, ensemble.cols()); }

RVector Paving::condition_numbers() const {
    RVector out(static_cast<Eigen::Index>(blocks_.size()));
    for (std::size_t b = 0; b < blocks_.size(); ++b) out[static_cast<Eigen::Index>(b)] = condition_number(b);
    return out;
}

CVector Paving::apply(const Ensemble& ensemble, std::size_t b, const CVector& x) const {
    const Block& block = blocks_[b];
    if (block.fft_pattern < 0) return block.a * x;
    CVector full = ensemble.pattern_forward(static_cast<std::size_t>(block.fft_pattern), x);
    if (block.local.size() == ensemble.cols()) return full;
    CVector out(static_cast<Eigen::Index>(block.local.size()));
    for (std::size_t i = 0; i < block.local.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = full[static_cast<Eigen::Index>(block.local[i])];
    return out;
}

void Paving::add_pinv(const Ensemble& ensemble, std::size_t b, const CVector& r, CVector& x) const {
    const Block& block = blocks_[b];
    if (block.fft_pattern >= 0) {
        x += ensemble.cdp_block_pinv_apply(static_cast<std::size_t>(block.fft_pattern), block.local, r);
        return;
    }
    // A_Gamma = r^* q^*, so A_Gamma^+ = q r^{-*}.
    const CVector w = block.r.adjoint().triangularView<Eigen::Lower>().solve(r);
    x.noalias() += block.q * w;
}

CVector Paving::pinv(const Ensemble& ensemble, std::size_t b, const CVector& r) const {
    CVector x = CVector::Zero(static_cast<Eigen::Index>(cols_));
    add_pinv(ensemble, b, r, x);
    return x;
}

} // namespace phaseless
