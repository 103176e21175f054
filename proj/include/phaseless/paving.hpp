#pragma once

#include <cstddef>
#include <vector>

#include "phaseless/measurement.hpp"

namespace phaseless {

// A partition T = {Gamma_1..Gamma_Nb} of the row indices of an ensemble,
// with a cached minimum-norm solver per block and the paving constants
// alpha = min sigma_min^2(A_Gamma), beta = max sigma_max^2(A_Gamma).
//
// Every block must be fat (|Gamma| <= n) with full row rank. Blocks whose rows
// lie in one diffraction pattern are inverted with the FFT formula
// (1/conj(d_l)) .* F_Gamma^+ z, exact for a whole pattern and a right inverse
// otherwise. All other blocks are materialized and factorized once
// (A_Gamma^* = QR) for minimum-norm solves.
class Paving {
public:
    static Paving consecutive(const Ensemble& ensemble, std::size_t block_size);
    static Paving from_partition(const Ensemble& ensemble, std::vector<std::vector<std::size_t>> blocks);
    // One block per diffraction pattern (CDP) or per stacked unitary (unitary).
    static Paving per_pattern(const Ensemble& ensemble);

    std::size_t size() const { return blocks_.size(); }
    std::size_t cols() const { return cols_; }
    std::size_t rows() const { return rows_; }
    const std::vector<std::size_t>& block_rows(std::size_t b) const { return blocks_[b].rows; }
    bool uses_fft(std::size_t b) const { return blocks_[b].fft_pattern >= 0; }

    // Spectra of CDP blocks that are not a whole pattern are computed by
    // materialization only up to this signal size; above it they are NaN.
    static constexpr std::size_t kMaxMaterializedWidth = 1024;

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double sigma_min(std::size_t b) const { return blocks_[b].sigma_min; }
    double sigma_max(std::size_t b) const { return blocks_[b].sigma_max; }
    double condition_number(std::size_t b) const { return blocks_[b].sigma_max / blocks_[b].sigma_min; }
    RVector condition_numbers() const;

    // A_Gamma x for block b. `ensemble` must be the one the paving was built for.
    CVector apply(const Ensemble& ensemble, std::size_t b, const CVector& x) const;
    // x += A_Gamma^+ r
    void add_pinv(const Ensemble& ensemble, std::size_t b, const CVector& r, CVector& x) const;
    CVector pinv(const Ensemble& ensemble, std::size_t b, const CVector& r) const;

private:
    struct Block {
        std::vector<std::size_t> rows;
        long fft_pattern = -1;
        std::vector<std::size_t> local;   // rows within the pattern (FFT blocks)
        RowMatrix a;      // A_Gamma, k x n
        CMatrix q;        // n x k, orthonormal columns
        CMatrix r;        // k x k upper triangular, A_Gamma^* = q r
        double sigma_min = 0.0;
        double sigma_max = 0.0;
    };

    static Block build_block(const Ensemble& ensemble, std::vector<std::size_t> rows);

    std::vector<Block> blocks_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    double alpha_ = 0.0;
    double beta_ = 0.0;
};

} // namespace phaseless
