#include "phaseless/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace phaseless {

double dist(const CVector& x, const CVector& truth) {
    require(x.size() == truth.size(), ErrorCode::DimensionMismatch, "dist: dimension mismatch");
    // Align the phase, then take the norm; the expanded form
    // ||x||^2 + ||t||^2 - 2|<t,x>| cancels catastrophically near the optimum.
    const Complex inner = truth.dot(x);
    const double magnitude = std::abs(inner);
    const Complex phase = magnitude > 0.0 ? inner / magnitude : Complex(1.0, 0.0);
    return (x - phase * truth).norm();
}

double relative_error(const CVector& x, const CVector& truth) {
    const double scale = truth.norm();
    require(scale > 0.0, ErrorCode::InvalidArgument, "relative_error: zero reference signal");
    return dist(x, truth) / scale;
}

double relative_residual(const Ensemble& ensemble, const RVector& y, const CVector& x) {
    require(static_cast<std::size_t>(y.size()) == ensemble.rows(), ErrorCode::DimensionMismatch,
            "relative_residual: measurement length mismatch");
    const double scale = y.norm();
    require(scale > 0.0, ErrorCode::InvalidArgument, "relative_residual: y is zero");
    return (ensemble.forward(x).cwiseAbs2() - y).norm() / scale;
}

void TerminationPolicy::validate() const {
    require(max_iterations > 0 && max_cycles > 0, ErrorCode::Config,
            "termination: iteration and cycle budgets must be positive");
    require(rel_residual_tol > 0.0 && cycle_residual_tol > 0.0, ErrorCode::Config,
            "termination: thresholds must be positive");
}

void CycleMonitor::observe(double deviation, double scale) {
    if (scale == 0.0) {
        ++excluded_;
        return;
    }
    max_ratio_ = std::max(max_ratio_, deviation / std::abs(scale));
}

void CycleMonitor::reset() {
    max_ratio_ = 0.0;
    excluded_ = 0;
}

bool cycle_residual_check(std::span<const ResidualSample> cycle, double tolerance, std::size_t* excluded) {
    CycleMonitor monitor;
    for (const auto& s : cycle) monitor.observe(s.deviation, s.scale);
    if (excluded) *excluded = monitor.excluded();
    return monitor.passes(tolerance);
}

} // namespace phaseless
