#include "phaseless/solvers.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace phaseless {

double angle_of(Complex v) {
    if (v == Complex{}) return 0.0;
    double a = std::arg(v);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a;
}

RVector angle_of(const CVector& v) {
    RVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = angle_of(v[i]);
    return out;
}

Complex unit_phase(Complex v) {
    const double magnitude = std::abs(v);
    return magnitude > 0.0 ? v / magnitude : Complex{1.0, 0.0};
}

CVector unit_phase(const CVector& v) {
    CVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = unit_phase(v[i]);
    return out;
}

const char* to_string(Selection s) {
    switch (s) {
    case Selection::Cyclic: return "cyclic";
    case Selection::Uniform: return "uniform";
    case Selection::NormWeighted: return "norm-weighted";
    }
    return "unknown";
}

const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::BudgetExhausted: return "budget-exhausted";
    case SolveStatus::ReachedTarget: return "reached-target";
    case SolveStatus::Diverged: return "diverged";
    }
    return "unknown";
}

double StepSchedule::operator()(std::size_t iteration) const {
    if (constant) return *constant;
    return std::min(1.0 - std::exp(-static_cast<double>(iteration + 1) / tau0), mu_max);
}

namespace {

void check_problem(const Ensemble& ensemble, const Measurements& meas, const CVector& x0) {
    require(meas.size() == ensemble.rows(), ErrorCode::DimensionMismatch,
            "solver: measurement count does not match ensemble rows");
    require(static_cast<std::size_t>(x0.size()) == ensemble.cols(), ErrorCode::DimensionMismatch,
            "solver: initial point does not match ensemble width");
    require(x0.array().isFinite().all(), ErrorCode::InvalidArgument, "solver: initial point is not finite");
}

double truth_distance(const SolveOptions& options, const CVector& x) {
    return options.truth ? dist(x, *options.truth) : std::numeric_limits<double>::quiet_NaN();
}

bool reached_target(const SolveOptions& options, const CVector& x) {
    return options.truth && options.target_relative_error &&
           relative_error(x, *options.truth) <= *options.target_relative_error;
}

void record(SolverState& state, const SolveOptions& options, std::size_t iteration, double residual) {
    if (options.record_history) state.history.push_back({iteration, residual, truth_distance(options, state.x)});
}

// Minimizes ||Ax - b||_2 by conjugate gradients on the normal equations
// (CGLS), warm-started from x. Every step decreases ||Ax - b||_2.
void least_squares_cgls(const RowMatrix& a, const CVector& b, CVector& x) {
    constexpr double kTolerance = 1e-13;
    const Eigen::Index max_steps = 2 * a.cols() + 10;
    CVector r = b - a * x;
    CVector s = a.adjoint() * r;
    const double target = kTolerance * (a.adjoint() * b).norm();
    CVector p = s;
    double gamma = s.squaredNorm();
    CVector q(a.rows());
    for (Eigen::Index k = 0; k < max_steps && std::sqrt(gamma) > target; ++k) {
        q.noalias() = a * p;
        const double qq = q.squaredNorm();
        if (qq == 0.0) break;
        const double step = gamma / qq;
        x += step * p;
        r -= step * q;
        s.noalias() = a.adjoint() * r;
        const double gamma_next = s.squaredNorm();
        p = s + (gamma_next / gamma) * p;
        gamma = gamma_next;
    }
}

class RowPicker {
public:
    RowPicker(Selection mode, const RVector& weights, std::uint64_t seed)
        : mode_(mode), count_(static_cast<std::size_t>(weights.size())), rng_(seed) {
        if (mode_ == Selection::NormWeighted) {
            require(weights.sum() > 0.0, ErrorCode::InvalidArgument, "selection: all weights are zero");
            weighted_ = std::discrete_distribution<std::size_t>(weights.data(), weights.data() + weights.size());
        }
    }

    std::size_t next(std::size_t t) {
        switch (mode_) {
        case Selection::Cyclic: return t;
        case Selection::Uniform: return rng_.index(count_);
        case Selection::NormWeighted: return weighted_(rng_.engine());
        }
        return t;
    }

private:
    Selection mode_;
    std::size_t count_;
    Rng rng_;
    std::discrete_distribution<std::size_t> weighted_;
};

} // namespace

SolverState error_reduction(const Ensemble& ensemble, const Measurements& meas, CVector x0,
                            const SolveOptions& options) {
    check_problem(ensemble, meas, x0);
    options.termination.validate();
    const double y_norm = meas.y.norm();
    require(y_norm > 0.0, ErrorCode::InvalidArgument, "error_reduction: y is zero");

    SolverState state;
    state.x = std::move(x0);
    CVector z = ensemble.forward(state.x);
    for (;;) {
        const double magnitude_residual = (z.cwiseAbs() - meas.sqrt_y).norm();
        record(state, options, state.iterations, magnitude_residual);
        if ((z.cwiseAbs2() - meas.y).norm() / y_norm <= options.termination.rel_residual_tol) {
            state.status = SolveStatus::Converged;
            break;
        }
        if (reached_target(options, state.x)) {
            state.status = SolveStatus::ReachedTarget;
            break;
        }
        if (state.iterations >= options.termination.max_iterations) break;

        const CVector target = meas.sqrt_y.cast<Complex>().cwiseProduct(unit_phase(z));
        if (ensemble.is_cdp()) {
            state.x = ensemble.cdp_full_pinv_apply(target);
        } else {
            least_squares_cgls(ensemble.matrix(), target, state.x);
        }
        require(state.x.array().isFinite().all(), ErrorCode::Numeric,
                "error_reduction: least-squares update is not finite (rank-deficient A?)");
        z = ensemble.forward(state.x);
        ++state.iterations;
    }
    return state;
}

double wirtinger_loss(const Ensemble& ensemble, const RVector& y, const CVector& x) {
    const double m = static_cast<double>(ensemble.rows());
    return (ensemble.forward(x).cwiseAbs2() - y).squaredNorm() / (4.0 * m);
}

CVector wirtinger_gradient(const Ensemble& ensemble, const RVector& y, const CVector& x) {
    const CVector z = ensemble.forward(x);
    const RVector weight = z.cwiseAbs2() - y;
    const CVector scaled = weight.cast<Complex>().cwiseProduct(z);
    return ensemble.adjoint(scaled) / static_cast<double>(ensemble.rows());
}

SolverState wirtinger_flow(const Ensemble& ensemble, const Measurements& meas, CVector x0,
                           const SolveOptions& options) {
    check_problem(ensemble, meas, x0);
    options.termination.validate();
    const double x0_norm = x0.norm();
    require(x0_norm > 0.0, ErrorCode::InvalidArgument, "wirtinger_flow: initial point must be nonzero");
    const double y_norm = meas.y.norm();
    require(y_norm > 0.0, ErrorCode::InvalidArgument, "wirtinger_flow: y is zero");
    const double m = static_cast<double>(ensemble.rows());
    const double inv_norm_sq = 1.0 / (x0_norm * x0_norm);

    SolverState state;
    state.x = std::move(x0);
    CVector z = ensemble.forward(state.x);
    for (;;) {
        const RVector weight = z.cwiseAbs2() - meas.y;
        const double rel_residual = weight.norm() / y_norm;
        record(state, options, state.iterations, rel_residual);
        if (rel_residual <= options.termination.rel_residual_tol) {
            state.status = SolveStatus::Converged;
            break;
        }
        if (reached_target(options, state.x)) {
            state.status = SolveStatus::ReachedTarget;
            break;
        }
        if (state.iterations >= options.termination.max_iterations) break;

        const CVector gradient = ensemble.adjoint(weight.cast<Complex>().cwiseProduct(z)) / m;
        state.x -= (options.step(state.iterations) * inv_norm_sq) * gradient;
        ++state.iterations;
        const double norm = state.x.norm();
        if (!std::isfinite(norm) || norm > 1e8 * x0_norm) {
            state.status = SolveStatus::Diverged;
            break;
        }
        z = ensemble.forward(state.x);
    }
    return state;
}

Complex kaczmarz_row_step(const Ensemble& ensemble, const Measurements& meas, std::size_t r, double lambda,
                          CVector& x) {
    const double norm_sq = ensemble.row_norm_sq(r);
    const Complex inner = ensemble.row_dot(r, x);
    if (norm_sq == 0.0) return inner;
    const Complex target = meas.sqrt_y[static_cast<Eigen::Index>(r)] * unit_phase(inner);
    ensemble.add_row(r, lambda * (target - inner) / norm_sq, x);
    return inner;
}

SolverState simple_kaczmarz(const Ensemble& ensemble, const Measurements& meas, CVector x0,
                            const SolveOptions& options) {
    check_problem(ensemble, meas, x0);
    options.termination.validate();
    const std::size_t m = ensemble.rows();
    RVector weights(static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) weights[static_cast<Eigen::Index>(r)] = ensemble.row_norm_sq(r);
    RowPicker picker(options.selection, weights, options.seed);

    SolverState state;
    state.x = std::move(x0);
    CycleMonitor monitor;
    while (state.cycles < options.termination.max_cycles) {
        monitor.reset();
        for (std::size_t t = 0; t < m; ++t) {
            const std::size_t r = picker.next(t);
            if (weights[static_cast<Eigen::Index>(r)] == 0.0) {
                ++state.skipped_rows;
                continue;
            }
            const Complex inner = kaczmarz_row_step(ensemble, meas, r, options.relaxation, state.x);
            const double y_r = meas.y[static_cast<Eigen::Index>(r)];
            monitor.observe(std::abs(std::norm(inner) - y_r), y_r);
            ++state.iterations;
        }
        ++state.cycles;
        record(state, options, state.cycles, monitor.max_ratio());
        require(state.x.array().isFinite().all(), ErrorCode::Numeric, "simple_kaczmarz: iterate is not finite");
        if (monitor.passes(options.termination.cycle_residual_tol)) {
            state.status = SolveStatus::Converged;
            break;
        }
        if (reached_target(options, state.x)) {
            state.status = SolveStatus::ReachedTarget;
            break;
        }
    }
    return state;
}

namespace {

struct BlockData {
    RVector y;
    RVector sqrt_y;
};

BlockData gather(const Measurements& meas, const std::vector<std::size_t>& rows) {
    BlockData out{RVector(static_cast<Eigen::Index>(rows.size())), RVector(static_cast<Eigen::Index>(rows.size()))};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.y[static_cast<Eigen::Index>(i)] = meas.y[static_cast<Eigen::Index>(rows[i])];
        out.sqrt_y[static_cast<Eigen::Index>(i)] = meas.sqrt_y[static_cast<Eigen::Index>(rows[i])];
    }
    return out;
}

CVector block_update(const Ensemble& ensemble, const Paving& paving, std::size_t b, const BlockData& data,
                     CVector& x) {
    CVector inner = paving.apply(ensemble, b, x);
    const CVector correction = data.sqrt_y.cast<Complex>().cwiseProduct(unit_phase(inner)) - inner;
    paving.add_pinv(ensemble, b, correction, x);
    return inner;
}

void check_paving(const Ensemble& ensemble, const Paving& paving) {
    require(paving.rows() == ensemble.rows() && paving.cols() == ensemble.cols(), ErrorCode::DimensionMismatch,
            "block_kaczmarz: paving was built for a different ensemble");
}

} // namespace

CVector kaczmarz_block_step(const Ensemble& ensemble, const Measurements& meas, const Paving& paving,
                            std::size_t b, CVector& x) {
    check_paving(ensemble, paving);
    require(b < paving.size(), ErrorCode::InvalidArgument, "kaczmarz_block_step: block index out of range");
    return block_update(ensemble, paving, b, gather(meas, paving.block_rows(b)), x);
}

SolverState block_kaczmarz(const Ensemble& ensemble, const Measurements& meas, const Paving& paving, CVector x0,
                           const SolveOptions& options) {
    check_problem(ensemble, meas, x0);
    check_paving(ensemble, paving);
    options.termination.validate();

    const std::size_t blocks = paving.size();
    std::vector<BlockData> data;
    data.reserve(blocks);
    RVector weights(static_cast<Eigen::Index>(blocks));
    for (std::size_t b = 0; b < blocks; ++b) {
        data.push_back(gather(meas, paving.block_rows(b)));
        double w = 0.0;
        for (auto r : paving.block_rows(b)) w += ensemble.row_norm_sq(r);
        weights[static_cast<Eigen::Index>(b)] = w;
    }
    RowPicker picker(options.selection, weights, options.seed);

    SolverState state;
    state.x = std::move(x0);
    CycleMonitor monitor;
    while (state.cycles < options.termination.max_cycles) {
        monitor.reset();
        for (std::size_t t = 0; t < blocks; ++t) {
            const std::size_t b = picker.next(t);
            const CVector inner = block_update(ensemble, paving, b, data[b], state.x);
            monitor.observe((inner.cwiseAbs2() - data[b].y).norm(), data[b].y.norm());
            ++state.iterations;
        }
        ++state.cycles;
        record(state, options, state.cycles, monitor.max_ratio());
        require(state.x.array().isFinite().all(), ErrorCode::Numeric, "block_kaczmarz: iterate is not finite");
        if (monitor.passes(options.termination.cycle_residual_tol)) {
            state.status = SolveStatus::Converged;
            break;
        }
        if (reached_target(options, state.x)) {
            state.status = SolveStatus::ReachedTarget;
            break;
        }
    }
    return state;
}

} // namespace phaseless
