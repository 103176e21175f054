#pragma once

#include <cstddef>

#include "phaseless/measurement.hpp"

namespace phaseless {

enum class InitMode { Spectral, Random, UserSupplied };

const char* to_string(InitMode mode);

struct PowerIterationBudget {
    std::size_t max_sweeps = 200;
    double tolerance = 1e-10;   // on successive Rayleigh quotients, relative
};

struct SpectralResult {
    Signal x0;
    double eigenvalue = 0.0;    // Rayleigh quotient of z under sum_r y_r a_r a_r^*
    std::size_t sweeps = 0;
};

// x0 = sqrt(sum_r y_r / m) z, z the unit leading eigenvector of
// Y = sum_{r=1}^{m} y_r a_r a_r^*. Y is applied as A^*(y .* Ax) and never
// formed. The start vector is drawn from `rng` (real for real ensembles).
SpectralResult spectral_init_detailed(const Ensemble& ensemble, const RVector& y,
                                      const PowerIterationBudget& budget, Rng& rng);
Signal spectral_init(const Ensemble& ensemble, const RVector& y, const PowerIterationBudget& budget, Rng& rng);

// i.i.d. standard Gaussian entries; complex draws have independent N(0,1)
// real and imaginary parts.
Signal random_init(std::size_t n, Field field, Rng& rng);

} // namespace phaseless
