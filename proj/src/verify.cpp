#include <algorithm>
#include <cmath>
#include <sstream>

#include "phaseless/harness.hpp"
#include "report.hpp"

namespace phaseless {

namespace {

std::string describe(std::initializer_list<std::pair<const char*, double>> fields) {
    std::ostringstream s;
    s.precision(6);
    bool first = true;
    for (const auto& [k, v] : fields) {
        s << (first ? "" : " ") << k << '=' << v;
        first = false;
    }
    return s.str();
}

// Central differences of the loss along each real coordinate direction
// (and the imaginary direction for complex ensembles).
double gradient_check(const Ensemble& ensemble, const RVector& y, const CVector& x) {
    const CVector analytic = wirtinger_gradient(ensemble, y, x);
    const double h = 1e-6;
    CVector numeric = CVector::Zero(x.size());
    const bool complex_field = ensemble.field() == Field::Complex;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        CVector xp = x, xm = x;
        xp[j] += h, xm[j] -= h;
        const double re = (wirtinger_loss(ensemble, y, xp) - wirtinger_loss(ensemble, y, xm)) / (2 * h);
        double im = 0.0;
        if (complex_field) {
            xp = x, xm = x;
            xp[j] += Complex(0, h), xm[j] -= Complex(0, h);
            im = (wirtinger_loss(ensemble, y, xp) - wirtinger_loss(ensemble, y, xm)) / (2 * h);
        }
        numeric[j] = Complex(re, im);
    }
    CVector expected = analytic;
    if (!complex_field) expected = analytic.real().cast<Complex>();
    return (expected - numeric).norm() / expected.norm();
}

} // namespace

VerificationResult run_verification(const VerifyConfig& config) {
    VerificationResult result;
    auto add = [&](std::string name, double value, double threshold, bool passed, std::string detail) {
        result.items.push_back({std::move(name), value, threshold, passed, std::move(detail)});
    };

    {
        Rng rng(derive_seed(config.seed, {1}));
        const auto r = verify_proposition1(rng, 16, 4, 4, config.instances);
        add("proposition1_orthogonal", r.max_deviation, 1e-9, r.max_deviation < 1e-9,
            describe({{"instances", double(r.instances)}}));
        add("proposition1_control", r.control_fraction_above, 0.95, r.control_fraction_above >= 0.95,
            describe({{"min_control_deviation", r.min_control_deviation}}));
    }
    {
        const auto r = verify_example1();
        const double err = std::max(std::abs(r.heuristic_objective - std::sqrt(5.0)),
                                    std::abs(r.alternative_objective - 1.0));
        const bool oracle_ok = r.oracle_signs.size() == 2 && std::abs(r.oracle_signs[0] - 1.0) < 1e-12 &&
                               std::abs(r.oracle_signs[1] + 1.0) < 1e-12;
        add("example1", err, 1e-12, err <= 1e-12 && oracle_ok,
            describe({{"heuristic", r.heuristic_objective}, {"alternative", r.alternative_objective},
                      {"oracle", r.oracle_objective}}));
    }
    {
        const std::pair<Field, double> cases[] = {{Field::Real, 0.0}, {Field::Complex, 0.0}, {Field::Real, 100.0}};
        const char* names[] = {"theorem1_real", "theorem1_complex", "theorem1_kappa100"};
        for (std::size_t k = 0; k < std::size(cases); ++k) {
            Rng rng(derive_seed(config.seed, {2, k}));
            const auto r = verify_theorem1(rng, config.theorem1_instances, 8, 2, cases[k].first, cases[k].second);
            add(names[k], static_cast<double>(r.violations), 0.0, r.violations == 0,
                describe({{"instances", double(r.instances)}, {"max_ratio", r.max_ratio}, {"kappa", r.condition}}));
        }
    }
    {
        Rng rng(derive_seed(config.seed, {3}));
        const auto r = verify_simple_projection_optimality(rng, config.instances, 16);
        add("simple_projection_optimality", static_cast<double>(r.mismatches), 0.0, r.mismatches == 0,
            describe({{"max_improvement", r.max_improvement}, {"max_angle_gap", r.max_angle_gap}}));
    }
    {
        double worst = 0.0;
        for (std::uint64_t k = 0; k < 5; ++k) {
            Rng rng(derive_seed(config.seed, {4, k}));
            const Ensemble e = sample_gaussian(16, 96, Field::Real, rng);
            const CVector truth = random_init(16, Field::Real, rng);
            const CVector x = random_init(16, Field::Real, rng);
            worst = std::max(worst, gradient_check(e, measure(e, truth).y, x));
        }
        add("wf_gradient", worst, 1e-5, worst <= 1e-5, "central differences, real gaussian n=16");
    }
    {
        std::size_t increases = 0, runs = 0;
        for (std::uint64_t k = 0; k < 10; ++k) {
            Rng rng(derive_seed(config.seed, {5, k}));
            const Field f = k % 2 ? Field::Complex : Field::Real;
            const Ensemble e = sample_gaussian(32, 96, f, rng);
            const CVector truth = random_init(32, f, rng);
            const Measurements meas = measure(e, truth);
            SolveOptions opt;
            opt.termination.max_iterations = 200;
            opt.record_history = true;
            const auto state = error_reduction(e, meas, random_init(32, f, rng), opt);
            for (std::size_t i = 1; i < state.history.size(); ++i)
                if (state.history[i].residual > state.history[i - 1].residual * (1 + 1e-12) + 1e-300) ++increases;
            ++runs;
        }
        add("er_monotone", static_cast<double>(increases), 0.0, increases == 0,
            describe({{"runs", double(runs)}}));
    }
    {
        Rng rng(derive_seed(config.seed, {6}));
        const Ensemble e = sample_gaussian(config.envelope_n, config.envelope_m, Field::Real, rng).standardized();
        const CVector truth = random_init(config.envelope_n, Field::Real, rng);
        const Measurements meas = measure(e, truth);
        Rng init_rng(derive_seed(config.seed, {7}));
        const CVector x0 = spectral_init(e, meas.y, PowerIterationBudget{}, init_rng);
        const std::size_t horizon = config.envelope_horizon_cycles * config.envelope_m;
        result.theorem2 =
            verify_theorem2(e, truth, x0, config.envelope_runs, horizon, derive_seed(config.seed, {8}),
                            config.envelope_stride);
        add("theorem2_envelope", result.theorem2.crossing_fraction, 0.01, result.theorem2.crossing_fraction < 0.01,
            describe({{"crossings", double(result.theorem2.crossings)}, {"floor", result.theorem2.floor}}));
        const Paving paving = Paving::consecutive(e, config.envelope_block);
        result.theorem3 = verify_theorem3(e, paving, truth, x0, config.envelope_runs, horizon,
                                          derive_seed(config.seed, {9}), config.envelope_stride);
        add("theorem3_envelope", result.theorem3.crossing_fraction, 0.01, result.theorem3.crossing_fraction < 0.01,
            describe({{"crossings", double(result.theorem3.crossings)}, {"floor", result.theorem3.floor}}));
    }

    if (!config.out_dir.empty()) {
        detail::ensure_directory(config.out_dir);
        {
            detail::CsvWriter csv(detail::join_path(config.out_dir, "verify_summary.csv"),
                                  {"check", "value", "threshold", "passed", "detail"});
            for (const auto& i : result.items) {
                csv.cell(i.name).cell(i.value).cell(i.threshold).cell(i.passed).cell(i.detail);
                csv.end_row();
            }
        }
        for (const auto* trace : {&result.theorem2, &result.theorem3}) {
            const std::string name = trace == &result.theorem2 ? "envelope_simple.csv" : "envelope_block.csv";
            detail::CsvWriter csv(detail::join_path(config.out_dir, name), {"iteration", "mean_dist_sq", "envelope"});
            for (std::size_t k = 0; k < trace->iterations.size(); ++k) {
                csv.cell(trace->iterations[k]).cell(trace->empirical[k]).cell(trace->envelope[k]);
                csv.end_row();
            }
        }
    }
    return result;
}

} // namespace phaseless
