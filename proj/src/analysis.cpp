#include "phaseless/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "phaseless/initialization.hpp"
#include "phaseless/metrics.hpp"

namespace phaseless {

double bai_yin_condition(std::size_t block_rows, std::size_t n) {
    const double ratio = std::sqrt(static_cast<double>(block_rows) / static_cast<double>(n));
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    return (1.0 + ratio) / (1.0 - ratio);
}

MatrixStats matrix_stats(const Ensemble& ensemble, const Paving* paving) {
    require(ensemble.cols() <= kMaxDenseDimension, ErrorCode::InvalidArgument,
            "matrix_stats: signal dimension exceeds dense decomposition cap");
    const CMatrix a = ensemble.materialize();
    Eigen::BDCSVD<CMatrix> svd(a);
    MatrixStats out;
    out.singular_values = svd.singularValues();
    out.sigma_max = out.singular_values.maxCoeff();
    out.sigma_min = out.singular_values.minCoeff();
    out.frobenius = a.norm();
    out.scaled_condition = out.sigma_min > 0.0 ? out.frobenius / out.sigma_min
                                               : std::numeric_limits<double>::infinity();
    if (paving) {
        out.block_conditions = paving->condition_numbers();
        out.mean_block_condition = out.block_conditions.mean();
        out.max_block_condition = out.block_conditions.maxCoeff();
        out.paving_alpha = paving->alpha();
        out.paving_beta = paving->beta();
        out.bai_yin_prediction = bai_yin_condition(paving->block_rows(0).size(), ensemble.cols());
    }
    return out;
}

namespace {

CMatrix pseudo_inverse(const RowMatrix& a) {
    return CMatrix(a).completeOrthogonalDecomposition().pseudoInverse();
}

CVector heuristic_step(const RowMatrix& a, const CMatrix& pinv, const RVector& sqrt_y, const CVector& x) {
    const CVector inner = a * x;
    return x + pinv * (sqrt_y.cast<Complex>().cwiseProduct(unit_phase(inner)) - inner);
}

RowMatrix gaussian_block(Rng& rng, std::size_t rows, std::size_t n, Field field) {
    return sample_gaussian(n, rows, field, rng).matrix();
}

std::vector<std::size_t> shuffled_indices(Rng& rng, std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    return idx;
}

double circular_gap(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
    return std::min(d, 2.0 * std::numbers::pi - d);
}

} // namespace

double two_step_deviation(const RowMatrix& block_i, const RowMatrix& block_j, const RVector& sqrt_y_i,
                          const RVector& sqrt_y_j, const CVector& x0) {
    require(block_i.rows() > 0, ErrorCode::InvalidArgument, "two_step_deviation: first block is empty");
    const CMatrix pinv_i = pseudo_inverse(block_i);
    const CVector x1 = heuristic_step(block_i, pinv_i, sqrt_y_i, x0);
    if (block_j.rows() == 0) return 0.0;

    const CVector x2 = heuristic_step(block_j, pseudo_inverse(block_j), sqrt_y_j, x1);
    RowMatrix joint(block_i.rows() + block_j.rows(), block_i.cols());
    joint << block_i, block_j;
    RVector sqrt_y(joint.rows());
    sqrt_y << sqrt_y_i, sqrt_y_j;
    const CVector x12 = heuristic_step(joint, pseudo_inverse(joint), sqrt_y, x0);
    return (x2 - x12).norm();
}

Proposition1Report verify_proposition1(Rng& rng, std::size_t n, std::size_t rows_i, std::size_t rows_j,
                                       std::size_t instances) {
    require(rows_i >= 1 && rows_i + rows_j <= n, ErrorCode::InvalidArgument,
            "verify_proposition1: need 1 <= |G_i| and |G_i| + |G_j| <= n");
    Proposition1Report report;
    report.instances = instances;
    report.min_control_deviation = std::numeric_limits<double>::infinity();
    std::size_t controls_above = 0;
    for (std::size_t t = 0; t < instances; ++t) {
        const Ensemble q = sample_unitary(n, n, Field::Complex, rng);
        const auto order = shuffled_indices(rng, n);
        const std::vector<std::size_t> gi(order.begin(), order.begin() + static_cast<long>(rows_i));
        const std::vector<std::size_t> gj(order.begin() + static_cast<long>(rows_i),
                                          order.begin() + static_cast<long>(rows_i + rows_j));
        const CVector truth = random_init(n, Field::Complex, rng);
        const CVector x0 = random_init(n, Field::Complex, rng);

        const RowMatrix ai = q.submatrix(gi);
        const RowMatrix aj = q.submatrix(gj);
        const double deviation =
            two_step_deviation(ai, aj, (ai * truth).cwiseAbs(), (aj * truth).cwiseAbs(), x0);
        report.max_deviation = std::max(report.max_deviation, deviation);

        if (rows_j == 0) continue;
        const RowMatrix bi = gaussian_block(rng, rows_i, n, Field::Complex);
        const RowMatrix bj = gaussian_block(rng, rows_j, n, Field::Complex);
        const double control = two_step_deviation(bi, bj, (bi * truth).cwiseAbs(), (bj * truth).cwiseAbs(), x0);
        report.min_control_deviation = std::min(report.min_control_deviation, control);
        if (control > 1e-3) ++controls_above;
    }
    if (rows_j == 0) {
        report.min_control_deviation = 0.0;
        report.control_fraction_above = 0.0;
        report.passed = report.max_deviation < 1e-9;
    } else {
        report.control_fraction_above =
            instances ? static_cast<double>(controls_above) / static_cast<double>(instances) : 0.0;
        report.passed = report.max_deviation < 1e-9 && report.control_fraction_above >= 0.95;
    }
    return report;
}

double block_projection_objective(const CMatrix& pinv, const RVector& sqrt_y, const CVector& current,
                                  const CVector& phases) {
    return (pinv * (sqrt_y.cast<Complex>().cwiseProduct(phases) - current)).norm();
}

PhaseSearchResult brute_force_block_projection(const CMatrix& pinv, const RVector& sqrt_y, const CVector& current,
                                               Field field, std::size_t resolution) {
    const auto k = current.size();
    require(k >= 1 && sqrt_y.size() == k && pinv.cols() == k, ErrorCode::DimensionMismatch,
            "brute_force_block_projection: inconsistent block sizes");
    // ||P w||^2 = w^* G w with G = P^* P, so each candidate costs O(k^2).
    const CMatrix gram = pinv.adjoint() * pinv;
    const CVector shift = -current;
    CVector w(k);
    auto objective_sq = [&](const CVector& phases) {
        w = sqrt_y.cast<Complex>().cwiseProduct(phases) + shift;
        return std::max(w.dot(gram * w).real(), 0.0);
    };

    PhaseSearchResult best;
    best.theta = RVector::Zero(k);
    double best_value = std::numeric_limits<double>::infinity();
    CVector phases(k);
    if (field == Field::Real) {
        require(k <= 20, ErrorCode::InvalidArgument, "brute_force_block_projection: too many signs to enumerate");
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
            for (Eigen::Index i = 0; i < k; ++i) phases[i] = (mask >> i) & 1U ? -1.0 : 1.0;
            const double value = objective_sq(phases);
            if (value < best_value) {
                best_value = value;
                for (Eigen::Index i = 0; i < k; ++i) best.theta[i] = (mask >> i) & 1U ? std::numbers::pi : 0.0;
            }
        }
    } else {
        require(k <= 3, ErrorCode::InvalidArgument, "brute_force_block_projection: grid search supports <= 3 phases");
        require(resolution >= 2, ErrorCode::InvalidArgument, "brute_force_block_projection: resolution too small");
        // Plain arrays: this loop runs resolution^k times.
        Complex g[3][3], c[3];
        double s[3];
        for (Eigen::Index i = 0; i < k; ++i) {
            s[i] = sqrt_y[i];
            c[i] = current[i];
            for (Eigen::Index j = 0; j < k; ++j) g[i][j] = gram(i, j);
        }
        auto value_at = [&](const double* theta) {
            Complex v[3];
            for (Eigen::Index i = 0; i < k; ++i) v[i] = std::polar(s[i], theta[i]) - c[i];
            double total = 0.0;
            for (Eigen::Index i = 0; i < k; ++i) {
                Complex row = 0.0;
                for (Eigen::Index j = 0; j < k; ++j) row += g[i][j] * v[j];
                total += (std::conj(v[i]) * row).real();
            }
            return std::max(total, 0.0);
        };

        const double step0 = 2.0 * std::numbers::pi / static_cast<double>(resolution);
        // Grid values of s_i e^{i theta} - c_i, so the scan does no trigonometry.
        std::vector<Complex> table(static_cast<std::size_t>(k) * resolution);
        for (Eigen::Index i = 0; i < k; ++i)
            for (std::size_t t = 0; t < resolution; ++t)
                table[static_cast<std::size_t>(i) * resolution + t] =
                    std::polar(s[i], step0 * static_cast<double>(t)) - c[i];
        std::vector<std::size_t> index(static_cast<std::size_t>(k), 0);
        double theta[3] = {0.0, 0.0, 0.0};
        for (;;) {
            Complex v[3];
            for (Eigen::Index i = 0; i < k; ++i)
                v[i] = table[static_cast<std::size_t>(i) * resolution + index[static_cast<std::size_t>(i)]];
            double value = 0.0;
            for (Eigen::Index i = 0; i < k; ++i) {
                value += g[i][i].real() * std::norm(v[i]);
                for (Eigen::Index j = i + 1; j < k; ++j) value += 2.0 * (std::conj(v[i]) * g[i][j] * v[j]).real();
            }
            if (value < best_value) {
                best_value = std::max(value, 0.0);
                for (Eigen::Index i = 0; i < k; ++i)
                    best.theta[i] = step0 * static_cast<double>(index[static_cast<std::size_t>(i)]);
            }
            std::size_t pos = 0;
            while (pos < index.size() && ++index[pos] == resolution) index[pos++] = 0;
            if (pos == index.size()) break;
        }

        // Compass search around the grid winner, halving the step down to ~1e-12 rad.
        for (Eigen::Index i = 0; i < k; ++i) theta[i] = best.theta[i];
        for (double step = step0 / 2; step > 1e-12; step /= 2) {
            bool moved = true;
            while (moved) {
                moved = false;
                for (Eigen::Index i = 0; i < k; ++i) {
                    for (double dir : {-1.0, 1.0}) {
                        const double keep = theta[i];
                        theta[i] = keep + dir * step;
                        const double value = value_at(theta);
                        if (value < best_value) {
                            best_value = value;
                            moved = true;
                        } else {
                            theta[i] = keep;
                        }
                    }
                }
            }
        }
        for (Eigen::Index i = 0; i < k; ++i) best.theta[i] = angle_of(std::polar(1.0, theta[i]));
    }
    best.objective = std::sqrt(best_value);
    return best;
}

Example1Report verify_example1() {
    CMatrix pinv(2, 2);
    pinv << 2.0, 1.0, 1.0, 0.0;
    RVector sqrt_y(2);
    sqrt_y << 2.0, 1.0;
    CVector current(2);
    current << 1.0, 1.0;
    CVector alternative(2);
    alternative << 1.0, -1.0;

    Example1Report report;
    report.heuristic_objective = block_projection_objective(pinv, sqrt_y, current, unit_phase(current));
    report.alternative_objective = block_projection_objective(pinv, sqrt_y, current, alternative);
    const auto oracle = brute_force_block_projection(pinv, sqrt_y, current, Field::Real);
    report.oracle_signs = oracle.theta.unaryExpr([](double t) { return std::cos(t); });
    report.oracle_objective = oracle.objective;
    return report;
}

Theorem1Report verify_theorem1(Rng& rng, std::size_t instances, std::size_t n, std::size_t block_rows, Field field,
                               double condition, double slack) {
    require(block_rows >= 1 && block_rows <= n, ErrorCode::InvalidArgument, "verify_theorem1: block must be fat");
    require(condition == 0.0 || condition >= 1.0, ErrorCode::InvalidArgument,
            "verify_theorem1: condition must be 0 (Gaussian) or >= 1");
    Theorem1Report report;
    report.instances = instances;
    double gap_sum = 0.0;
    const auto k = static_cast<Eigen::Index>(block_rows);
    for (std::size_t t = 0; t < instances; ++t) {
        RowMatrix a;
        if (condition == 0.0) {
            a = gaussian_block(rng, block_rows, n, field);
        } else {
            const CMatrix u = sample_unitary(block_rows, block_rows, field, rng).matrix();
            const CMatrix v = CMatrix(sample_unitary(n, n, field, rng).matrix()).leftCols(k);
            RVector sigma = RVector::LinSpaced(k, 1.0, 1.0 / condition);
            a = u * sigma.cast<Complex>().asDiagonal() * v.adjoint();
        }
        const CVector truth = random_init(n, field, rng);
        const CVector x = random_init(n, field, rng);
        const RVector sqrt_y = (a * truth).cwiseAbs();
        const CVector current = a * x;
        const CMatrix pinv = pseudo_inverse(a);
        Eigen::JacobiSVD<CMatrix> svd{CMatrix(a)};
        const double kappa = svd.singularValues().maxCoeff() / svd.singularValues().minCoeff();

        const CVector heuristic = unit_phase(current);
        const auto oracle = brute_force_block_projection(pinv, sqrt_y, current, field);
        CVector optimal(k);
        for (Eigen::Index i = 0; i < k; ++i) optimal[i] = std::polar(1.0, oracle.theta[i]);
        if (field == Field::Real) optimal = optimal.real().cast<Complex>();

        const double lhs = (pinv * sqrt_y.cast<Complex>().cwiseProduct(optimal - heuristic)).norm();
        const double rhs = kappa * (optimal - heuristic).cwiseAbs().maxCoeff() * truth.norm();
        if (lhs > rhs + slack) ++report.violations;
        if (rhs > 0.0) report.max_ratio = std::max(report.max_ratio, lhs / rhs);
        gap_sum += rhs - lhs;
        report.condition = std::max(report.condition, kappa);
    }
    report.mean_gap = instances ? gap_sum / static_cast<double>(instances) : 0.0;
    return report;
}

ProjectionOptimalityReport verify_simple_projection_optimality(Rng& rng, std::size_t instances, std::size_t n,
                                                               std::size_t grid) {
    ProjectionOptimalityReport report;
    report.instances = instances;
    for (std::size_t t = 0; t < instances; ++t) {
        const Ensemble row = sample_gaussian(n, 1, Field::Complex, rng);
        const CVector a = row.row(0);
        const CVector truth = random_init(n, Field::Complex, rng);
        const CVector x = random_init(n, Field::Complex, rng);
        const Measurements meas = measure(row, truth);

        CVector next = x;
        kaczmarz_row_step(row, meas, 0, 1.0, next);
        const double moved = (next - x).norm();
        const double chosen_angle = angle_of(row.row_dot(0, next));

        // ||x^theta - x|| = |sqrt(y) e^{i theta} - <a, x>| / ||a||
        const Complex inner = a.dot(x);
        const double sqrt_y = meas.sqrt_y[0];
        const double a_norm = a.norm();
        double best = std::numeric_limits<double>::infinity();
        double best_angle = 0.0;
        for (std::size_t g = 0; g < grid; ++g) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(g) / static_cast<double>(grid);
            const double value = std::abs(std::polar(sqrt_y, theta) - inner) / a_norm;
            if (value < best) {
                best = value;
                best_angle = theta;
            }
        }
        const double improvement = moved - best;
        report.max_improvement = std::max(report.max_improvement, improvement);
        report.max_angle_gap = std::max(report.max_angle_gap, circular_gap(best_angle, chosen_angle));
        if (improvement > 1e-12 * std::max(1.0, moved)) ++report.mismatches;
    }
    return report;
}

namespace {

struct EnvelopeInputs {
    double sigma_min = 0.0;
    double contraction = 0.0;
    double floor = 0.0;
};

void require_standardized(const Ensemble& ensemble) {
    for (std::size_t r = 0; r < ensemble.rows(); ++r)
        require(std::abs(ensemble.row_norm_sq(r) - 1.0) < 1e-8, ErrorCode::InvalidArgument,
                "convergence envelope: ensemble is not standardized");
}

double full_rank_sigma_min(const Ensemble& ensemble) {
    const MatrixStats stats = matrix_stats(ensemble);
    require(ensemble.rows() >= ensemble.cols() && stats.sigma_min > 1e-10 * stats.sigma_max,
            ErrorCode::RankDeficient, "convergence envelope: ensemble must have full column rank");
    return stats.sigma_min;
}

template <typename Step>
BoundTrace run_envelope(const CVector& truth, const CVector& x0, std::size_t runs, std::size_t horizon,
                        std::uint64_t seed, std::size_t stride, const EnvelopeInputs& inputs, Step&& step) {
    require(runs >= 1 && stride >= 1, ErrorCode::InvalidArgument, "convergence envelope: runs and stride >= 1");
    BoundTrace trace;
    trace.sigma_min = inputs.sigma_min;
    trace.contraction = inputs.contraction;
    trace.floor = inputs.floor;
    for (std::size_t l = 0; l <= horizon; l += stride) trace.iterations.push_back(l);
    std::vector<double> sums(trace.iterations.size(), 0.0);

    for (std::size_t run = 0; run < runs; ++run) {
        Rng rng(derive_seed(seed, {run}));
        CVector x = x0;
        sums[0] += std::pow(dist(x, truth), 2);
        std::size_t slot = 1;
        for (std::size_t l = 1; l <= horizon; ++l) {
            step(rng, x);
            if (l % stride == 0) sums[slot++] += std::pow(dist(x, truth), 2);
        }
    }
    const double d0 = std::pow(dist(x0, truth), 2);
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        const double mean = sums[i] / static_cast<double>(runs);
        const double bound =
            std::pow(inputs.contraction, static_cast<double>(trace.iterations[i])) * d0 + inputs.floor;
        trace.empirical.push_back(mean);
        trace.envelope.push_back(bound);
        if (mean > bound) ++trace.crossings;
    }
    trace.crossing_fraction = static_cast<double>(trace.crossings) / static_cast<double>(trace.iterations.size());
    return trace;
}

} // namespace

BoundTrace verify_theorem2(const Ensemble& ensemble, const CVector& truth, const CVector& x0, std::size_t runs,
                           std::size_t horizon, std::uint64_t seed, std::size_t stride) {
    require_standardized(ensemble);
    const Measurements meas = measure(ensemble, truth);
    const double m = static_cast<double>(ensemble.rows());
    EnvelopeInputs inputs;
    inputs.sigma_min = full_rank_sigma_min(ensemble);
    const double s2 = inputs.sigma_min * inputs.sigma_min;
    inputs.contraction = 1.0 - s2 / m;
    inputs.floor = 4.0 * m * meas.y.maxCoeff() / s2;
    return run_envelope(truth, x0, runs, horizon, seed, stride, inputs, [&](Rng& rng, CVector& x) {
        kaczmarz_row_step(ensemble, meas, rng.index(ensemble.rows()), 1.0, x);
    });
}

BoundTrace verify_theorem3(const Ensemble& ensemble, const Paving& paving, const CVector& truth, const CVector& x0,
                           std::size_t runs, std::size_t horizon, std::uint64_t seed, std::size_t stride) {
    require_standardized(ensemble);
    const Measurements meas = measure(ensemble, truth);
    EnvelopeInputs inputs;
    inputs.sigma_min = full_rank_sigma_min(ensemble);
    const double s2 = inputs.sigma_min * inputs.sigma_min;
    const double blocks = static_cast<double>(paving.size());
    inputs.contraction = 1.0 - s2 / (paving.beta() * blocks);
    inputs.floor = 4.0 * paving.beta() * meas.y.sum() / (paving.alpha() * s2);
    return run_envelope(truth, x0, runs, horizon, seed, stride, inputs, [&](Rng& rng, CVector& x) {
        kaczmarz_block_step(ensemble, meas, paving, rng.index(paving.size()), x);
    });
}

} // namespace phaseless
