#include "phaseless/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "report.hpp"

namespace phaseless {

using nlohmann::json;

const char* to_string(SolverKind kind) {
    switch (kind) {
    case SolverKind::ErrorReduction: return "er";
    case SolverKind::WirtingerFlow: return "wf";
    case SolverKind::Kaczmarz: return "kaczmarz";
    case SolverKind::BlockKaczmarz: return "block-kaczmarz";
    }
    return "?";
}

SolverKind parse_solver(const std::string& name) {
    if (name == "er") return SolverKind::ErrorReduction;
    if (name == "wf") return SolverKind::WirtingerFlow;
    if (name == "kaczmarz" || name == "simple") return SolverKind::Kaczmarz;
    if (name == "block-kaczmarz" || name == "block") return SolverKind::BlockKaczmarz;
    throw Error(ErrorCode::Config, "unknown solver '" + name + "' (er, wf, kaczmarz, block-kaczmarz)");
}

ModelKind parse_model(const std::string& name) {
    if (name == "gaussian-real") return ModelKind::GaussianReal;
    if (name == "gaussian-complex") return ModelKind::GaussianComplex;
    if (name == "unitary") return ModelKind::Unitary;
    if (name == "cdp-1d") return ModelKind::Cdp1D;
    if (name == "cdp-2d") return ModelKind::Cdp2D;
    throw Error(ErrorCode::Config,
                "unknown model '" + name + "' (gaussian-real, gaussian-complex, unitary, cdp-1d, cdp-2d)");
}

Selection parse_selection(const std::string& name) {
    if (name == "cyclic") return Selection::Cyclic;
    if (name == "uniform") return Selection::Uniform;
    if (name == "norm-weighted") return Selection::NormWeighted;
    throw Error(ErrorCode::Config, "unknown selection '" + name + "' (cyclic, uniform, norm-weighted)");
}

InitMode parse_init(const std::string& name) {
    if (name == "spectral") return InitMode::Spectral;
    if (name == "random") return InitMode::Random;
    throw Error(ErrorCode::Config, "unknown init '" + name + "' (spectral, random)");
}

namespace {

bool is_cdp(ModelKind kind) { return kind == ModelKind::Cdp1D || kind == ModelKind::Cdp2D; }

Field parse_field(const std::string& name) {
    if (name == "real") return Field::Real;
    if (name == "complex") return Field::Complex;
    throw Error(ErrorCode::Config, "unknown field '" + name + "' (real, complex)");
}

template <class T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("config key '") + key + "': " + e.what());
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require(j.is_object(), ErrorCode::Config, where + " must be an object");
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
        require(known, ErrorCode::Config, "unknown key '" + item.key() + "' in " + where);
    }
}

} // namespace

Field ExperimentConfig::signal_field() const {
    switch (model) {
    case ModelKind::GaussianReal: return Field::Real;
    case ModelKind::Unitary: return field;
    default: return Field::Complex;
    }
}

Shape ExperimentConfig::signal_shape() const {
    if (model == ModelKind::Cdp2D) return Shape{n1, n2};
    return Shape{n, 1};
}

std::size_t ExperimentConfig::resolved_block_size() const {
    if (block_size > 0) return block_size;
    if (model == ModelKind::GaussianReal || model == ModelKind::GaussianComplex) return std::max<std::size_t>(1, n / 4);
    return signal_size();
}

void ExperimentConfig::validate() const {
    require(model != ModelKind::Custom, ErrorCode::Config, "config: model is required");
    require(signal_size() >= 1, ErrorCode::Config, "config: signal dimension must be positive");
    require(trials >= 1, ErrorCode::Config, "config: trials must be at least 1");
    if (is_cdp(model)) {
        require(!patterns.empty(), ErrorCode::Config, "config: CDP sweeps need a nonempty list of L");
        for (auto l : patterns) require(l >= 1, ErrorCode::Config, "config: L must be at least 1");
    } else {
        require(!deltas.empty(), ErrorCode::Config, "config: the oversampling grid is empty");
        for (double d : deltas)
            require(std::isfinite(d) && d > 0.0 && std::llround(d * static_cast<double>(n)) >= 1, ErrorCode::Config,
                    "config: oversampling values must give m >= 1");
    }
    require(init == InitMode::Spectral || init == InitMode::Random, ErrorCode::Config,
            "config: init must be spectral or random");
    require(std::isfinite(relaxation), ErrorCode::Config, "config: relaxation must be finite");
    require(success_tolerance > 0.0, ErrorCode::Config, "config: success tolerance must be positive");
    for (double e : noise_levels)
        require(std::isfinite(e) && e >= 0.0, ErrorCode::Config, "config: noise levels must be nonnegative");
    if (solver == SolverKind::BlockKaczmarz) {
        const std::size_t bs = resolved_block_size();
        require(bs >= 1 && bs <= signal_size(), ErrorCode::Config,
                "config: block size must lie in [1, n] so each block can have full row rank");
    }
    require(power.max_sweeps >= 1 && power.tolerance > 0.0, ErrorCode::Config, "config: invalid power budget");
    try {
        termination.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, e.what());
    }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    check_keys(j,
               {"experiment_id", "model", "field", "n", "n1", "n2", "deltas", "delta_range", "patterns", "solver",
                "block_size", "selection", "relaxation", "init", "power", "trials", "seed", "threads", "termination",
                "step", "success_tolerance", "stop_at_target", "noise_levels", "out_dir", "plots",
                "record_wall_time"},
               "config");
    ExperimentConfig c;
    if (j.contains("experiment_id")) c.experiment_id = get_as<std::string>(j, "experiment_id");
    if (j.contains("model")) c.model = parse_model(get_as<std::string>(j, "model"));
    if (j.contains("field")) c.field = parse_field(get_as<std::string>(j, "field"));
    if (j.contains("n")) c.n = get_as<std::size_t>(j, "n");
    if (j.contains("n1")) c.n1 = get_as<std::size_t>(j, "n1");
    if (j.contains("n2")) c.n2 = get_as<std::size_t>(j, "n2");
    if (j.contains("deltas")) c.deltas = get_as<std::vector<double>>(j, "deltas");
    if (j.contains("delta_range")) {
        const json& r = j.at("delta_range");
        check_keys(r, {"from", "to", "count"}, "delta_range");
        const double from = get_as<double>(r, "from"), to = get_as<double>(r, "to");
        const auto count = get_as<std::size_t>(r, "count");
        require(count >= 1, ErrorCode::Config, "delta_range: count must be at least 1");
        c.deltas.clear();
        for (std::size_t i = 0; i < count; ++i)
            c.deltas.push_back(count == 1 ? from
                                          : from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    if (j.contains("patterns")) {
        for (const auto& v : j.at("patterns")) {
            require(v.is_number_integer() || (v.is_number() && std::floor(v.get<double>()) == v.get<double>()),
                    ErrorCode::Config, "patterns: L takes integral values only");
            const double l = v.get<double>();
            require(l >= 1.0, ErrorCode::Config, "patterns: L must be at least 1");
            c.patterns.push_back(static_cast<std::size_t>(l));
        }
    }
    if (j.contains("solver")) c.solver = parse_solver(get_as<std::string>(j, "solver"));
    if (j.contains("block_size")) c.block_size = get_as<std::size_t>(j, "block_size");
    if (j.contains("selection")) c.selection = parse_selection(get_as<std::string>(j, "selection"));
    if (j.contains("relaxation")) {
        const json& r = j.at("relaxation");
        if (r.is_string()) {
            require(r.get<std::string>() == "auto", ErrorCode::Config, "relaxation: number or \"auto\"");
            c.relaxation_auto = true;
        } else {
            c.relaxation = get_as<double>(j, "relaxation");
        }
    }
    if (j.contains("init")) c.init = parse_init(get_as<std::string>(j, "init"));
    if (j.contains("power")) {
        const json& p = j.at("power");
        check_keys(p, {"max_sweeps", "tolerance"}, "power");
        if (p.contains("max_sweeps")) c.power.max_sweeps = get_as<std::size_t>(p, "max_sweeps");
        if (p.contains("tolerance")) c.power.tolerance = get_as<double>(p, "tolerance");
    }
    if (j.contains("trials")) c.trials = get_as<std::size_t>(j, "trials");
    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
    if (j.contains("threads")) c.threads = get_as<std::size_t>(j, "threads");
    if (j.contains("termination")) {
        const json& t = j.at("termination");
        check_keys(t, {"max_iterations", "max_cycles", "rel_residual_tol", "cycle_residual_tol"}, "termination");
        if (t.contains("max_iterations")) c.termination.max_iterations = get_as<std::size_t>(t, "max_iterations");
        if (t.contains("max_cycles")) c.termination.max_cycles = get_as<std::size_t>(t, "max_cycles");
        if (t.contains("rel_residual_tol")) c.termination.rel_residual_tol = get_as<double>(t, "rel_residual_tol");
        if (t.contains("cycle_residual_tol"))
            c.termination.cycle_residual_tol = get_as<double>(t, "cycle_residual_tol");
    }
    if (j.contains("step")) {
        const json& s = j.at("step");
        check_keys(s, {"tau0", "mu_max", "constant"}, "step");
        if (s.contains("tau0")) c.step.tau0 = get_as<double>(s, "tau0");
        if (s.contains("mu_max")) c.step.mu_max = get_as<double>(s, "mu_max");
        if (s.contains("constant")) c.step.constant = get_as<double>(s, "constant");
    }
    if (j.contains("success_tolerance")) c.success_tolerance = get_as<double>(j, "success_tolerance");
    if (j.contains("stop_at_target")) c.stop_at_target = get_as<bool>(j, "stop_at_target");
    if (j.contains("noise_levels")) c.noise_levels = get_as<std::vector<double>>(j, "noise_levels");
    if (j.contains("out_dir")) c.out_dir = get_as<std::string>(j, "out_dir");
    if (j.contains("plots")) c.write_plots = get_as<bool>(j, "plots");
    if (j.contains("record_wall_time")) c.record_wall_time = get_as<bool>(j, "record_wall_time");
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["experiment_id"] = experiment_id;
    j["model"] = phaseless::to_string(model);
    j["field"] = field == Field::Real ? "real" : "complex";
    j["n"] = n;
    j["n1"] = n1;
    j["n2"] = n2;
    j["deltas"] = deltas;
    j["patterns"] = patterns;
    j["solver"] = phaseless::to_string(solver);
    j["block_size"] = block_size;
    j["selection"] = phaseless::to_string(selection);
    if (relaxation_auto)
        j["relaxation"] = "auto";
    else
        j["relaxation"] = relaxation;
    j["init"] = phaseless::to_string(init);
    j["power"] = {{"max_sweeps", power.max_sweeps}, {"tolerance", power.tolerance}};
    j["trials"] = trials;
    j["seed"] = seed;
    j["threads"] = threads;
    j["termination"] = {{"max_iterations", termination.max_iterations},
                        {"max_cycles", termination.max_cycles},
                        {"rel_residual_tol", termination.rel_residual_tol},
                        {"cycle_residual_tol", termination.cycle_residual_tol}};
    j["step"] = {{"tau0", step.tau0}, {"mu_max", step.mu_max}};
    if (step.constant) j["step"]["constant"] = *step.constant;
    j["success_tolerance"] = success_tolerance;
    j["stop_at_target"] = stop_at_target;
    j["noise_levels"] = noise_levels;
    j["out_dir"] = out_dir;
    j["plots"] = write_plots;
    j["record_wall_time"] = record_wall_time;
    return j;
}

void apply_full_scale(ExperimentConfig& config) {
    if (config.block_size > 0 && config.n > 0) {
        // keep the block size as the same fraction of n
        config.block_size = config.block_size * 256 / config.n;
    }
    config.n = 256;
    config.n1 = 256;
    config.n2 = 256;
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
    std::vector<SweepPoint> points;
    const std::size_t n = config.signal_size();
    if (is_cdp(config.model)) {
        for (auto l : config.patterns) {
            SweepPoint p;
            p.index = points.size();
            p.m = l * n;
            p.m_or_L = l;
            p.delta = static_cast<double>(l);
            points.push_back(p);
        }
    } else {
        for (double d : config.deltas) {
            SweepPoint p;
            p.index = points.size();
            p.m = static_cast<std::size_t>(std::max<long long>(1, std::llround(d * static_cast<double>(n))));
            p.m_or_L = p.m;
            p.delta = d;
            points.push_back(p);
        }
    }
    return points;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t point_index, std::size_t trial_index) {
    return derive_seed(master, {static_cast<std::uint64_t>(point_index), static_cast<std::uint64_t>(trial_index)});
}

namespace {

// Stream coordinates under a trial seed.
enum Stream : std::uint64_t { kTruth = 1, kEnsemble, kNoise, kInit, kSolver };

Ensemble draw_ensemble(const ExperimentConfig& config, const SweepPoint& point, Rng& rng) {
    const std::size_t n = config.signal_size();
    switch (config.model) {
    case ModelKind::GaussianReal: return sample_gaussian(n, point.m, Field::Real, rng);
    case ModelKind::GaussianComplex: return sample_gaussian(n, point.m, Field::Complex, rng);
    case ModelKind::Unitary: return sample_unitary(n, point.m, config.field, rng);
    case ModelKind::Cdp1D:
    case ModelKind::Cdp2D: return sample_cdp(config.signal_shape(), point.m_or_L, rng);
    default: throw Error(ErrorCode::Config, "unsupported model");
    }
}

// y <- max(y + eps ||y||_2 e, 0), e uniform on the unit sphere.
RVector add_noise(const RVector& y, double eps, Rng& rng) {
    RVector e(y.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
    e /= e.norm();
    return (y + (eps * y.norm()) * e).cwiseMax(0.0);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

struct SolveOutcome {
    SolverState state;
    CVector x0;
};

SolveOutcome solve_instance(const ExperimentConfig& config, const SweepPoint& point, const Ensemble& ensemble,
                            const Measurements& meas, const CVector& truth, std::uint64_t seed, bool trace) {
    Rng init_rng(derive_seed(seed, {kInit}));
    CVector x0 = config.init == InitMode::Spectral
                     ? spectral_init(ensemble, meas.y, config.power, init_rng)
                     : random_init(ensemble.cols(), config.signal_field(), init_rng);

    SolveOptions options;
    options.termination = config.termination;
    options.selection = config.selection;
    options.relaxation =
        config.relaxation_auto
            ? 1.0 + static_cast<double>(config.signal_size()) / static_cast<double>(point.m)
            : config.relaxation;
    options.step = config.step;
    options.seed = derive_seed(seed, {kSolver});
    if (config.stop_at_target || trace) options.truth = truth;
    if (config.stop_at_target) options.target_relative_error = config.success_tolerance;
    options.record_history = trace;

    SolveOutcome out{SolverState{}, x0};
    switch (config.solver) {
    case SolverKind::ErrorReduction: out.state = error_reduction(ensemble, meas, std::move(x0), options); break;
    case SolverKind::WirtingerFlow: out.state = wirtinger_flow(ensemble, meas, std::move(x0), options); break;
    case SolverKind::Kaczmarz: out.state = simple_kaczmarz(ensemble, meas, std::move(x0), options); break;
    case SolverKind::BlockKaczmarz: {
        const std::size_t bs = config.resolved_block_size();
        const Paving paving = ensemble.is_cdp() && bs == ensemble.cols() ? Paving::per_pattern(ensemble)
                                                                         : Paving::consecutive(ensemble, bs);
        out.state = block_kaczmarz(ensemble, meas, paving, std::move(x0), options);
        break;
    }
    }
    return out;
}

bool counts_cycles(SolverKind s) { return s == SolverKind::Kaczmarz || s == SolverKind::BlockKaczmarz; }

} // namespace

TrialRecord run_trial(const ExperimentConfig& config, const SweepPoint& point, std::size_t trial_index,
                      bool trace_errors) {
    TrialRecord rec;
    rec.experiment_id = config.experiment_id;
    rec.point_index = point.index;
    rec.trial_index = trial_index;
    rec.seed = trial_seed(config.seed, point.index, trial_index);
    rec.model = phaseless::to_string(config.model);
    rec.solver = phaseless::to_string(config.solver);
    rec.n = config.signal_size();
    rec.m_or_L = point.m_or_L;
    rec.init = phaseless::to_string(config.init);

    Rng truth_rng(derive_seed(rec.seed, {kTruth}));
    const CVector truth = random_init(rec.n, config.signal_field(), truth_rng);
    Rng ensemble_rng(derive_seed(rec.seed, {kEnsemble}));
    const Ensemble ensemble = draw_ensemble(config, point, ensemble_rng);
    RVector y = measure(ensemble, truth).y;
    if (point.noise > 0.0) {
        Rng noise_rng(derive_seed(rec.seed, {kNoise}));
        y = add_noise(y, point.noise, noise_rng);
    }
    const Measurements meas = Measurements::from_intensities(std::move(y));

    const auto start = std::chrono::steady_clock::now();
    SolveOutcome out = solve_instance(config, point, ensemble, meas, truth, rec.seed, trace_errors);
    rec.wall_ms = config.record_wall_time ? elapsed_ms(start) : 0.0;

    rec.rel_err = relative_error(out.state.x, truth);
    rec.success = rec.rel_err <= config.success_tolerance;
    rec.iters_or_cycles = counts_cycles(config.solver) ? out.state.cycles : out.state.iterations;
    rec.status = out.state.status;
    if (trace_errors) {
        const double scale = truth.norm();
        rec.error_trace.push_back(relative_error(out.x0, truth));
        for (const auto& h : out.state.history) {
            // ER / WF record the starting point as entry 0
            if (!counts_cycles(config.solver) && h.iteration == 0) continue;
            rec.error_trace.push_back(h.distance / scale);
        }
    }
    return rec;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<CurvePoint> summarize_curve(const std::vector<SweepPoint>& points,
                                        const std::vector<TrialRecord>& trials) {
    std::vector<CurvePoint> curve;
    for (const auto& p : points) {
        CurvePoint c;
        c.point_index = p.index;
        c.m_or_L = p.m_or_L;
        c.delta = p.delta;
        std::size_t count = 0, successes = 0;
        double cycles = 0.0, wall = 0.0;
        for (const auto& t : trials) {
            if (t.point_index != p.index) continue;
            ++count;
            successes += t.success ? 1 : 0;
            cycles += static_cast<double>(t.iters_or_cycles);
            wall += t.wall_ms;
        }
        if (count > 0) {
            c.success_rate = static_cast<double>(successes) / static_cast<double>(count);
            c.mean_cycles = cycles / static_cast<double>(count);
            c.mean_wall_ms = wall / static_cast<double>(count);
        }
        curve.push_back(c);
    }
    return curve;
}

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& trials, bool wall_time) {
    detail::CsvWriter csv(path, {"experiment_id", "point_index", "trial_index", "seed", "model", "solver", "n",
                                 "m_or_L", "init", "success", "rel_err", "iters_or_cycles", "wall_ms"});
    for (const auto& t : trials) {
        csv.cell(t.experiment_id)
            .cell(t.point_index)
            .cell(t.trial_index)
            .cell(static_cast<std::size_t>(t.seed))
            .cell(t.model)
            .cell(t.solver)
            .cell(t.n)
            .cell(t.m_or_L)
            .cell(t.init)
            .cell(t.success)
            .cell(t.rel_err)
            .cell(t.iters_or_cycles)
            .cell(wall_time ? t.wall_ms : 0.0);
        csv.end_row();
    }
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve, bool wall_time) {
    detail::CsvWriter csv(path, {"point_index", "m_or_L", "delta", "success_rate", "mean_cycles", "mean_wall_ms"});
    for (const auto& c : curve) {
        csv.cell(c.point_index)
            .cell(c.m_or_L)
            .cell(c.delta)
            .cell(c.success_rate)
            .cell(c.mean_cycles)
            .cell(wall_time ? c.mean_wall_ms : 0.0);
        csv.end_row();
    }
}

namespace {

std::vector<TrialRecord> run_points(const ExperimentConfig& config, const std::vector<SweepPoint>& points,
                                    bool trace = false) {
    std::vector<TrialRecord> trials(points.size() * config.trials);
    parallel_for(trials.size(), config.threads, [&](std::size_t i) {
        trials[i] = run_trial(config, points[i / config.trials], i % config.trials, trace);
    });
    return trials;
}

std::string output_file(const ExperimentConfig& config, const std::string& suffix) {
    return detail::join_path(config.out_dir, config.experiment_id + suffix);
}

} // namespace

SweepResult run_recovery_sweep(const ExperimentConfig& config) {
    config.validate();
    SweepResult result;
    result.config = config;
    result.points = sweep_points(config);
    result.trials = run_points(config, result.points);
    result.curve = summarize_curve(result.points, result.trials);

    if (!config.out_dir.empty()) {
        detail::ensure_directory(config.out_dir);
        write_trials_csv(output_file(config, "_trials.csv"), result.trials, config.record_wall_time);
        write_curve_csv(output_file(config, "_curve.csv"), result.curve, config.record_wall_time);
        if (config.write_plots) {
            detail::Series s{std::string(to_string(config.solver)), {}, {}};
            for (const auto& c : result.curve) {
                s.x.push_back(is_cdp(config.model) ? static_cast<double>(c.m_or_L) : c.delta);
                s.y.push_back(c.success_rate);
            }
            detail::write_svg_plot(output_file(config, "_curve.svg"),
                                   {config.experiment_id + " (" + to_string(config.model) + ")",
                                    is_cdp(config.model) ? "L" : "m / n", "success rate", false, false},
                                   {s});
        }
    }
    return result;
}

void fit_log_log(const std::vector<double>& levels, const std::vector<double>& errors, double& slope,
                 double& intercept, double& r_squared) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < std::min(levels.size(), errors.size()); ++i) {
        if (levels[i] > 0.0 && errors[i] > 0.0) {
            xs.push_back(std::log10(levels[i]));
            ys.push_back(std::log10(errors[i]));
        }
    }
    require(xs.size() >= 2, ErrorCode::InvalidArgument, "fit_log_log: need two positive points");
    const double k = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= k, my /= k;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    require(sxx > 0.0, ErrorCode::InvalidArgument, "fit_log_log: levels are all equal");
    slope = sxy / sxx;
    intercept = my - slope * mx;
    r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
}

NoiseResult run_noise_study(const ExperimentConfig& config) {
    config.validate();
    require(!config.noise_levels.empty(), ErrorCode::Config, "noise study: no noise levels");
    NoiseResult result;
    result.sweep.config = config;
    const SweepPoint base = sweep_points(config).front();
    for (std::size_t i = 0; i < config.noise_levels.size(); ++i) {
        SweepPoint p = base;
        p.index = i;
        p.noise = config.noise_levels[i];
        result.sweep.points.push_back(p);
    }
    result.sweep.trials = run_points(config, result.sweep.points);
    result.sweep.curve = summarize_curve(result.sweep.points, result.sweep.trials);

    result.levels = config.noise_levels;
    result.mean_rel_err.assign(result.levels.size(), 0.0);
    std::vector<std::vector<double>> per_level(result.levels.size());
    for (const auto& t : result.sweep.trials) {
        result.mean_rel_err[t.point_index] += t.rel_err / static_cast<double>(config.trials);
        per_level[t.point_index].push_back(t.rel_err);
    }
    for (auto& v : per_level) {
        std::sort(v.begin(), v.end());
        const std::size_t k = v.size();
        result.median_rel_err.push_back(k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]));
    }
    std::size_t positive = 0;
    for (double e : result.levels) positive += e > 0.0 ? 1 : 0;
    if (positive >= 2)
        fit_log_log(result.levels, result.median_rel_err, result.slope, result.intercept, result.r_squared);

    if (!config.out_dir.empty()) {
        detail::ensure_directory(config.out_dir);
        write_trials_csv(output_file(config, "_trials.csv"), result.sweep.trials, config.record_wall_time);
        {
            detail::CsvWriter csv(output_file(config, "_noise.csv"),
                                  {"point_index", "epsilon", "mean_rel_err", "median_rel_err", "log10_epsilon",
                                   "log10_median_rel_err"});
            for (std::size_t i = 0; i < result.levels.size(); ++i) {
                const double e = result.levels[i], r = result.median_rel_err[i];
                csv.cell(i).cell(e).cell(result.mean_rel_err[i]).cell(r);
                csv.cell(e > 0 ? std::log10(e) : NAN).cell(r > 0 ? std::log10(r) : NAN);
                csv.end_row();
            }
        }
        {
            detail::CsvWriter csv(output_file(config, "_fit.csv"), {"slope", "intercept", "r_squared"});
            csv.cell(result.slope).cell(result.intercept).cell(result.r_squared);
            csv.end_row();
        }
        if (config.write_plots) {
            detail::Series s{std::string(to_string(config.solver)), result.levels, result.median_rel_err};
            detail::write_svg_plot(output_file(config, "_noise.svg"),
                                   {config.experiment_id, "noise level", "median relative error", true, true}, {s});
        }
    }
    return result;
}

std::vector<TimingCell> default_timing_cells(const ExperimentConfig& base) {
    std::vector<TimingCell> cells;
    const ModelKind models[] = {ModelKind::GaussianReal, ModelKind::GaussianComplex, ModelKind::Cdp1D,
                                ModelKind::Cdp2D};
    const SolverKind solvers[] = {SolverKind::ErrorReduction, SolverKind::WirtingerFlow, SolverKind::Kaczmarz,
                                  SolverKind::BlockKaczmarz};
    for (auto model : models) {
        for (auto solver : solvers) {
            ExperimentConfig c = base;
            c.model = model;
            c.solver = solver;
            c.init = InitMode::Spectral;
            c.noise_levels.clear();
            c.deltas = {6.0};
            c.patterns = {model == ModelKind::Cdp2D ? std::size_t{12} : std::size_t{6}};
            c.block_size = 0;
            c.experiment_id = base.experiment_id + "-" + to_string(model) + "-" + to_string(solver);
            switch (solver) {
            case SolverKind::ErrorReduction:
            case SolverKind::WirtingerFlow: c.termination.rel_residual_tol = 1e-10; break;
            case SolverKind::Kaczmarz: c.termination.cycle_residual_tol = 1e-8; break;
            case SolverKind::BlockKaczmarz: c.termination.cycle_residual_tol = 1e-9; break;
            }
            cells.push_back({c, model == ModelKind::Cdp2D && solver == SolverKind::Kaczmarz});
        }
    }
    return cells;
}

std::vector<TimingRow> run_timing_table(const std::vector<TimingCell>& cells, const std::string& out_dir,
                                        const std::string& experiment_id) {
    std::vector<TimingRow> rows;
    std::vector<TrialRecord> all;
    bool wall_time = true;
    for (const auto& cell : cells) {
        const ExperimentConfig& c = cell.config;
        wall_time = wall_time && c.record_wall_time;
        TimingRow row;
        row.model = to_string(c.model);
        row.solver = to_string(c.solver);
        row.trials = c.trials;
        row.skipped = cell.skip;
        if (cell.skip) {
            row.m_or_L = is_cdp(c.model) ? c.patterns.front() : 0;
            rows.push_back(row);
            continue;
        }
        c.validate();
        const auto points = sweep_points(c);
        require(points.size() == 1, ErrorCode::Config, "timing: each cell must have a single sweep point");
        row.m_or_L = points.front().m_or_L;
        const auto trials = run_points(c, points);
        for (const auto& t : trials) {
            row.successes += t.success ? 1 : 0;
            row.mean_iters_or_cycles += static_cast<double>(t.iters_or_cycles) / static_cast<double>(trials.size());
            row.mean_wall_ms += t.wall_ms / static_cast<double>(trials.size());
            row.mean_rel_err += t.rel_err / static_cast<double>(trials.size());
        }
        all.insert(all.end(), trials.begin(), trials.end());
        rows.push_back(row);
    }
    if (!out_dir.empty()) {
        detail::ensure_directory(out_dir);
        detail::CsvWriter csv(detail::join_path(out_dir, experiment_id + "_table.csv"),
                              {"model", "solver", "m_or_L", "trials", "successes", "mean_iters_or_cycles",
                               "mean_wall_ms", "mean_rel_err", "status"});
        for (const auto& r : rows) {
            csv.cell(r.model).cell(r.solver).cell(r.m_or_L).cell(r.trials);
            if (r.skipped) {
                csv.cell("").cell("").cell("").cell("").cell("skipped");
            } else {
                csv.cell(r.successes)
                    .cell(r.mean_iters_or_cycles)
                    .cell(r.mean_wall_ms)
                    .cell(r.mean_rel_err)
                    .cell(r.successes == r.trials ? "ok" : "failures");
            }
            csv.end_row();
        }
        write_trials_csv(detail::join_path(out_dir, experiment_id + "_trials.csv"), all, wall_time);
    }
    return rows;
}

namespace {

// Mean relative error per cycle; runs that stopped early hold their last value.
std::vector<double> mean_trace(const std::vector<TrialRecord>& trials) {
    std::size_t length = 0;
    for (const auto& t : trials) length = std::max(length, t.error_trace.size());
    std::vector<double> mean(length, 0.0);
    for (const auto& t : trials) {
        if (t.error_trace.empty()) continue;
        for (std::size_t c = 0; c < length; ++c)
            mean[c] += t.error_trace[std::min(c, t.error_trace.size() - 1)] / static_cast<double>(trials.size());
    }
    return mean;
}

double mean_iterations(const std::vector<TrialRecord>& trials) {
    double s = 0.0;
    for (const auto& t : trials) s += static_cast<double>(t.iters_or_cycles);
    return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

} // namespace

RelaxationResult run_relaxation_comparison(const ExperimentConfig& config) {
    config.validate();
    require(config.solver == SolverKind::Kaczmarz, ErrorCode::Config,
            "relaxation comparison: relaxation applies to simple Kaczmarz");
    RelaxationResult result;
    ExperimentConfig plain = config;
    plain.relaxation_auto = false;
    plain.relaxation = 1.0;
    plain.stop_at_target = true;
    plain.experiment_id = config.experiment_id + "-lambda1";
    ExperimentConfig relaxed = plain;
    relaxed.relaxation_auto = true;
    relaxed.experiment_id = config.experiment_id + "-relaxed";

    const auto points = sweep_points(config);
    const std::vector<SweepPoint> first{points.front()};
    for (auto* pair : {&result.plain, &result.relaxed}) {
        const ExperimentConfig& c = pair == &result.plain ? plain : relaxed;
        pair->config = c;
        pair->points = first;
        pair->trials = run_points(c, first, true);
        pair->curve = summarize_curve(first, pair->trials);
    }
    result.mean_error_plain = mean_trace(result.plain.trials);
    result.mean_error_relaxed = mean_trace(result.relaxed.trials);
    result.mean_cycles_plain = mean_iterations(result.plain.trials);
    result.mean_cycles_relaxed = mean_iterations(result.relaxed.trials);

    if (!config.out_dir.empty()) {
        detail::ensure_directory(config.out_dir);
        std::vector<TrialRecord> all = result.plain.trials;
        all.insert(all.end(), result.relaxed.trials.begin(), result.relaxed.trials.end());
        write_trials_csv(output_file(config, "_trials.csv"), all, config.record_wall_time);
        const std::size_t length = std::max(result.mean_error_plain.size(), result.mean_error_relaxed.size());
        auto at = [](const std::vector<double>& v, std::size_t c) { return v.empty() ? NAN : v[std::min(c, v.size() - 1)]; };
        detail::CsvWriter csv(output_file(config, "_trace.csv"), {"cycle", "mean_rel_err_lambda1", "mean_rel_err_relaxed"});
        for (std::size_t c = 0; c < length; ++c) {
            csv.cell(c).cell(at(result.mean_error_plain, c)).cell(at(result.mean_error_relaxed, c));
            csv.end_row();
        }
        if (config.write_plots) {
            auto series = [&](const std::string& label, const std::vector<double>& v) {
                detail::Series s{label, {}, v};
                for (std::size_t c = 0; c < v.size(); ++c) s.x.push_back(static_cast<double>(c));
                return s;
            };
            detail::write_svg_plot(output_file(config, "_trace.svg"),
                                   {config.experiment_id, "cycle", "mean relative error", false, true},
                                   {series("lambda = 1", result.mean_error_plain),
                                    series("lambda = 1 + n/m", result.mean_error_relaxed)});
        }
    }
    return result;
}

bool VerificationResult::all_passed() const {
    return std::all_of(items.begin(), items.end(), [](const VerificationItem& i) { return i.passed; });
}

MatrixStats run_stats(const ExperimentConfig& config, std::size_t point_index) {
    config.validate();
    const auto points = sweep_points(config);
    require(point_index < points.size(), ErrorCode::InvalidArgument, "stats: point index out of range");
    Rng rng(derive_seed(trial_seed(config.seed, point_index, 0), {kEnsemble}));
    const Ensemble ensemble = draw_ensemble(config, points[point_index], rng);
    const std::size_t bs = config.resolved_block_size();
    const Paving paving = ensemble.is_cdp() && bs == ensemble.cols() ? Paving::per_pattern(ensemble)
                                                                     : Paving::consecutive(ensemble, bs);
    MatrixStats stats = matrix_stats(ensemble, &paving);

    if (!config.out_dir.empty()) {
        detail::ensure_directory(config.out_dir);
        {
            detail::CsvWriter csv(output_file(config, "_stats.csv"),
                                  {"model", "n", "m", "block_size", "sigma_min", "sigma_max", "frobenius",
                                   "scaled_condition", "mean_block_condition", "max_block_condition", "alpha",
                                   "beta", "bai_yin_prediction"});
            csv.cell(std::string(to_string(config.model)))
                .cell(ensemble.cols())
                .cell(ensemble.rows())
                .cell(bs)
                .cell(stats.sigma_min)
                .cell(stats.sigma_max)
                .cell(stats.frobenius)
                .cell(stats.scaled_condition)
                .cell(stats.mean_block_condition)
                .cell(stats.max_block_condition)
                .cell(stats.paving_alpha)
                .cell(stats.paving_beta)
                .cell(stats.bai_yin_prediction);
            csv.end_row();
        }
        detail::CsvWriter csv(output_file(config, "_blocks.csv"), {"block", "condition"});
        for (Eigen::Index b = 0; b < stats.block_conditions.size(); ++b) {
            csv.cell(static_cast<std::size_t>(b)).cell(stats.block_conditions[b]);
            csv.end_row();
        }
    }
    return stats;
}

} // namespace phaseless
