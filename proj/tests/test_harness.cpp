#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "phaseless/harness.hpp"

using namespace phaseless;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("phaseless_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Plain comma split; the harness never emits quoted cells for these files.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    const auto header = split(line);
    std::vector<std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        const auto cells = split(line);
        REQUIRE(cells.size() == header.size());
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < cells.size(); ++i) row[header[i]] = cells[i];
        rows.push_back(row);
    }
    return rows;
}

ExperimentConfig small_sweep() {
    ExperimentConfig c;
    c.experiment_id = "t";
    c.model = ModelKind::GaussianReal;
    c.n = 16;
    c.deltas = {2.0, 4.0, 6.0};
    c.trials = 4;
    c.seed = 11;
    c.threads = 1;
    c.record_wall_time = false;
    c.write_plots = false;
    return c;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST_CASE("config parsing is strict and round-trips") {
    const json j = {{"model", "cdp-2d"},   {"n1", 8},        {"n2", 4},
                    {"patterns", {3, 5}},  {"solver", "block-kaczmarz"},
                    {"trials", 7},         {"seed", 99},     {"relaxation", "auto"},
                    {"termination", {{"max_cycles", 40}}}, {"noise_levels", {0.0, 1e-3}}};
    const ExperimentConfig c = ExperimentConfig::from_json(j);
    CHECK(c.model == ModelKind::Cdp2D);
    CHECK(c.signal_shape() == Shape{8, 4});
    CHECK(c.signal_field() == Field::Complex);
    CHECK(c.resolved_block_size() == 32);
    CHECK(c.relaxation_auto);
    CHECK(c.termination.max_cycles == 40);
    const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());

    CHECK(code_of([] { (void)ExperimentConfig::from_json({{"modle", "cdp-1d"}}); }) == ErrorCode::Config);
    CHECK(code_of([] { (void)ExperimentConfig::from_json({{"model", "fourier"}}); }) == ErrorCode::Config);
    CHECK(code_of([] { (void)ExperimentConfig::from_json({{"patterns", {2.5}}}); }) == ErrorCode::Config);
    CHECK(code_of([] { (void)ExperimentConfig::from_json({{"n", "many"}}); }) == ErrorCode::Config);
    CHECK(code_of([] { (void)ExperimentConfig::from_json({{"termination", {{"cycles", 3}}}}); }) ==
          ErrorCode::Config);
}

TEST_CASE("config validation") {
    ExperimentConfig c = small_sweep();
    CHECK_NOTHROW(c.validate());
    c.trials = 0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
    c = small_sweep();
    c.deltas.clear();
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
    c = small_sweep();
    c.solver = SolverKind::BlockKaczmarz;
    c.block_size = 17;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
    c.block_size = 0;
    CHECK(c.resolved_block_size() == 4);
    c = small_sweep();
    c.noise_levels = {-1.0};
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
}

TEST_CASE("sweep points") {
    ExperimentConfig c = small_sweep();
    c.deltas = {2.0, 2.5, 3.03};
    const auto p = sweep_points(c);
    REQUIRE(p.size() == 3);
    CHECK(p[0].m == 32);
    CHECK(p[1].m == 40);
    CHECK(p[2].m == 48);   // round(3.03 * 16)
    CHECK(p[2].index == 2);
    c.model = ModelKind::Cdp2D;
    c.n1 = 4, c.n2 = 8;
    c.patterns = {2, 6};
    const auto q = sweep_points(c);
    CHECK(q[1].m == 6 * 32);
    CHECK(q[1].m_or_L == 6);
}

TEST_CASE("full scale uses the published sizes") {
    ExperimentConfig c = small_sweep();
    apply_full_scale(c);
    CHECK(c.n == 256);
    CHECK(c.n1 == 256);
    CHECK(c.n2 == 256);
}

TEST_CASE("trials are deterministic and independent of execution order") {
    const ExperimentConfig c = small_sweep();
    const auto points = sweep_points(c);
    const TrialRecord late = run_trial(c, points[2], 3);
    for (std::size_t t = 0; t < 3; ++t) (void)run_trial(c, points[1], t);
    const TrialRecord again = run_trial(c, points[2], 3);
    CHECK(late.seed == trial_seed(c.seed, 2, 3));
    CHECK(again.rel_err == late.rel_err);
    CHECK(again.iters_or_cycles == late.iters_or_cycles);
    CHECK(again.seed == late.seed);
    CHECK(trial_seed(1, 0, 1) != trial_seed(1, 1, 0));
}

TEST_CASE("curve summaries are recomputable from the trials file") {
    const fs::path dir = scratch("curve");
    ExperimentConfig c = small_sweep();
    c.out_dir = dir.string();
    const SweepResult r = run_recovery_sweep(c);
    const auto trials = read_csv(dir / "t_trials.csv");
    const auto curve = read_csv(dir / "t_curve.csv");
    REQUIRE(trials.size() == 12);
    REQUIRE(curve.size() == 3);
    for (std::size_t p = 0; p < 3; ++p) {
        double succ = 0, cycles = 0;
        for (const auto& t : trials) {
            if (std::stoul(t.at("point_index")) != p) continue;
            const bool s = t.at("success") == "1";
            CHECK(s == (std::stod(t.at("rel_err")) <= kSuccessTolerance));
            succ += s;
            cycles += std::stod(t.at("iters_or_cycles"));
            CHECK(t.at("wall_ms") == "0");
        }
        CHECK(std::stod(curve[p].at("success_rate")) == doctest::Approx(succ / 4.0));
        CHECK(std::stod(curve[p].at("mean_cycles")) == doctest::Approx(cycles / 4.0));
        CHECK(r.curve[p].success_rate == doctest::Approx(succ / 4.0));
    }
    CHECK(std::stoul(curve[2].at("m_or_L")) == 96);
}

TEST_CASE("thread count does not change any output byte") {
    ExperimentConfig c = small_sweep();
    c.deltas = {3.0, 5.0};
    c.trials = 6;
    const fs::path a = scratch("threads1"), b = scratch("threads2");
    c.out_dir = a.string();
    c.threads = 1;
    (void)run_recovery_sweep(c);
    c.out_dir = b.string();
    c.threads = 3;
    (void)run_recovery_sweep(c);
    CHECK(slurp(a / "t_trials.csv") == slurp(b / "t_trials.csv"));
    CHECK(slurp(a / "t_curve.csv") == slurp(b / "t_curve.csv"));
}

TEST_CASE("parallel_for runs every job once and propagates failures") {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 2,
                                 [](std::size_t i) {
                                     if (i == 7) throw Error(ErrorCode::Numeric, "boom");
                                 }),
                    Error);
}

TEST_CASE("log-log fit is exact on a power law") {
    const std::vector<double> levels{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> errors;
    for (double e : levels) errors.push_back(3.0 * std::pow(e, 0.9));
    double slope = 0, intercept = 0, r2 = 0;
    fit_log_log(levels, errors, slope, intercept, r2);
    CHECK(slope == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(intercept == doctest::Approx(std::log10(3.0)).epsilon(1e-12));
    CHECK(r2 == doctest::Approx(1.0).epsilon(1e-12));

    // A zero level is skipped rather than sent to log(0).
    std::vector<double> with_zero = levels, err_zero = errors;
    with_zero.insert(with_zero.begin(), 0.0);
    err_zero.insert(err_zero.begin(), 1e-15);
    fit_log_log(with_zero, err_zero, slope, intercept, r2);
    CHECK(slope == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("noise study: error grows with the noise level") {
    ExperimentConfig c = small_sweep();
    c.n = 32;
    c.deltas = {6.0};
    c.noise_levels = {1e-4, 1e-3, 1e-2};
    c.trials = 3;
    c.solver = SolverKind::WirtingerFlow;
    c.model = ModelKind::GaussianComplex;
    const NoiseResult r = run_noise_study(c);
    REQUIRE(r.median_rel_err.size() == 3);
    CHECK(r.median_rel_err[0] < r.median_rel_err[1]);
    CHECK(r.median_rel_err[1] < r.median_rel_err[2]);
    CHECK(r.slope > 0.5);
}

TEST_CASE("PGM round trip, 8 and 16 bit") {
    const fs::path dir = scratch("pgm");
    Image img;
    img.rows = 3, img.cols = 5;
    for (std::size_t i = 0; i < 15; ++i) img.pixels.push_back(static_cast<double>(i * 17) / 255.0);
    write_pgm((dir / "a.pgm").string(), img);
    const Image back = read_pgm((dir / "a.pgm").string());
    CHECK(back.rows == 3);
    CHECK(back.cols == 5);
    for (std::size_t i = 0; i < 15; ++i) CHECK(back.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-12));

    {
        std::ofstream out(dir / "b.pgm", std::ios::binary);
        out << "P5\n# a comment\n2 1\n65535\n";
        const unsigned char px[] = {0xFF, 0xFF, 0x80, 0x00};
        out.write(reinterpret_cast<const char*>(px), 4);
    }
    const Image wide = read_pgm((dir / "b.pgm").string());
    CHECK(wide.pixels[0] == doctest::Approx(1.0));
    CHECK(wide.pixels[1] == doctest::Approx(32768.0 / 65535.0));
}

TEST_CASE("malformed and oversized PGM files are rejected") {
    const fs::path dir = scratch("pgm_bad");
    auto write = [&](const char* name, const std::string& header, std::size_t payload) {
        std::ofstream out(dir / name, std::ios::binary);
        out << header << std::string(payload, '\x10');
    };
    write("magic.pgm", "P2\n2 2\n255\n", 4);
    write("short.pgm", "P5\n4 4\n255\n", 10);
    write("huge.pgm", "P5\n513 2\n255\n", 1026);
    write("maxval.pgm", "P5\n2 2\n0\n", 4);
    for (const char* f : {"magic.pgm", "short.pgm", "huge.pgm", "maxval.pgm"}) {
        CAPTURE(f);
        CHECK_THROWS_AS(read_pgm((dir / f).string()), Error);
    }
    CHECK(code_of([&] { (void)read_pgm((dir / "missing.pgm").string()); }) == ErrorCode::Io);
}

TEST_CASE("synthetic images reconstruct through 2D coded diffraction") {
    ExperimentConfig c;
    c.experiment_id = "img";
    c.model = ModelKind::Cdp2D;
    c.solver = SolverKind::BlockKaczmarz;
    c.patterns = {4};
    c.trials = 1;
    c.seed = 3;
    c.threads = 1;
    for (const char* kind : {"gradient", "constant"}) {
        const Image img = synthetic_image(kind, 16, 16);
        CHECK(img.pixels.size() == 256);
        const ImageResult r = run_image_reconstruction({img}, c);
        CAPTURE(kind);
        CHECK(r.trials == 1);
        CHECK(r.successes == 1);
        REQUIRE(r.reconstructions.size() == 1);
        double worst = 0.0;
        for (std::size_t i = 0; i < 256; ++i)
            worst = std::max(worst, std::abs(r.reconstructions[0].pixels[i] - img.pixels[i]));
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("relaxation comparison: the lambda = 1 arm is the plain solver") {
    ExperimentConfig c = small_sweep();
    c.model = ModelKind::GaussianComplex;
    c.deltas = {4.0};
    c.trials = 3;
    const RelaxationResult r = run_relaxation_comparison(c);
    REQUIRE(r.plain.trials.size() == 3);
    // Both arms count cycles to the success tolerance.
    ExperimentConfig direct_config = c;
    direct_config.stop_at_target = true;
    for (std::size_t t = 0; t < 3; ++t) {
        const TrialRecord direct = run_trial(direct_config, r.plain.points[0], t);
        CHECK(direct.rel_err == r.plain.trials[t].rel_err);
        CHECK(direct.iters_or_cycles == r.plain.trials[t].iters_or_cycles);
        CHECK(r.plain.trials[t].seed == r.relaxed.trials[t].seed);   // paired
    }
    CHECK(r.mean_error_plain.size() >= 1);
}

TEST_CASE("timing table marks the skipped cell") {
    ExperimentConfig base = small_sweep();
    const auto cells = default_timing_cells(base);
    CHECK(cells.size() == 16);
    std::size_t skipped = 0;
    for (const auto& cell : cells) {
        if (!cell.skip) continue;
        ++skipped;
        CHECK(cell.config.model == ModelKind::Cdp2D);
        CHECK(cell.config.solver == SolverKind::Kaczmarz);
    }
    CHECK(skipped == 1);

    std::vector<TimingCell> few{cells[2], cells[15]};   // gaussian-real Kaczmarz, a skipped cell
    few[0].config.trials = 2;
    few[1].skip = true;
    const auto rows = run_timing_table(few, "", "tt");
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].skipped);
    CHECK(rows[0].trials == 2);
    CHECK(rows[1].skipped);
}

TEST_CASE("command defaults") {
    const ExperimentConfig relax = resolve_config("relax", json::object());
    CHECK(relax.model == ModelKind::GaussianComplex);
    CHECK(relax.deltas == std::vector<double>{4.0});
    CHECK(relax.experiment_id == "relax");
    const ExperimentConfig sweep = resolve_config("sweep", {{"model", "cdp-1d"}});
    CHECK(sweep.patterns.size() == 7);
    const ExperimentConfig noise = resolve_config("noise", json::object());
    CHECK(noise.noise_levels.size() == 9);
    CHECK(noise.noise_levels.front() == doctest::Approx(1e-5));
    CHECK(noise.noise_levels.back() == doctest::Approx(1e-1));
    CHECK(noise.deltas == std::vector<double>{6.0});
    CHECK(resolve_config("stats", {{"model", "cdp-2d"}}).patterns == std::vector<std::size_t>{12});
    CHECK(resolve_config("sweep", {{"full_scale", true}}).n == 256);
    CHECK(code_of([] { (void)run_command("dance", json::object()); }) == ErrorCode::Config);
}

TEST_CASE("stats command reports the paving of one ensemble") {
    const json s = run_command("stats", {{"model", "gaussian-complex"}, {"n", 32}, {"block_size", 8}});
    CHECK(s.at("block_size") == 8);
    CHECK(s.at("bai_yin_prediction").get<double>() == doctest::Approx(bai_yin_condition(8, 32)));
    CHECK(s.at("sigma_min").get<double>() > 0.0);
}
