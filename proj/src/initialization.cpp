#include "phaseless/initialization.hpp"

#include <cmath>

namespace phaseless {

const char* to_string(InitMode mode) {
    switch (mode) {
    case InitMode::Spectral: return "spectral";
    case InitMode::Random: return "random";
    case InitMode::UserSupplied: return "user";
    }
    return "unknown";
}

Signal random_init(std::size_t n, Field field, Rng& rng) {
    require(n >= 1, ErrorCode::InvalidArgument, "random_init: zero dimension");
    Signal x(static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double re = rng.normal();
        const double im = field == Field::Real ? 0.0 : rng.normal();
        x[j] = Complex(re, im);
    }
    return x;
}

SpectralResult spectral_init_detailed(const Ensemble& ensemble, const RVector& y,
                                      const PowerIterationBudget& budget, Rng& rng) {
    require(static_cast<std::size_t>(y.size()) == ensemble.rows(), ErrorCode::DimensionMismatch,
            "spectral_init: measurement count does not match ensemble rows");
    require((y.array() >= 0.0).all(), ErrorCode::InvalidArgument, "spectral_init: y must be nonnegative");
    const double total = y.sum();
    require(total > 0.0, ErrorCode::InvalidArgument, "spectral_init: y is identically zero");
    require(budget.max_sweeps > 0 && budget.tolerance > 0.0, ErrorCode::InvalidArgument,
            "spectral_init: budget must be positive");

    const CVector weight = y.cast<Complex>();
    auto apply = [&](const CVector& v) { return ensemble.adjoint(weight.cwiseProduct(ensemble.forward(v))); };

    SpectralResult out;
    CVector z = random_init(ensemble.cols(), ensemble.field(), rng);
    z.normalize();
    CVector w = apply(z);
    double rayleigh = z.dot(w).real();
    for (out.sweeps = 1; out.sweeps <= budget.max_sweeps; ++out.sweeps) {
        const double norm = w.norm();
        if (norm == 0.0) break;
        z = w / norm;
        w = apply(z);
        const double next = z.dot(w).real();
        const bool settled = std::abs(next - rayleigh) <= budget.tolerance * std::abs(next);
        rayleigh = next;
        if (settled) break;
    }
    out.sweeps = std::min(out.sweeps, budget.max_sweeps);
    out.eigenvalue = rayleigh;
    out.x0 = std::sqrt(total / static_cast<double>(ensemble.rows())) * z;
    return out;
}

Signal spectral_init(const Ensemble& ensemble, const RVector& y, const PowerIterationBudget& budget, Rng& rng) {
    return spectral_init_detailed(ensemble, y, budget, rng).x0;
}

} // namespace phaseless
