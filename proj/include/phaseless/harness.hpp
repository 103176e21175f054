#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaseless/analysis.hpp"
#include "phaseless/initialization.hpp"
#include "phaseless/measurement.hpp"
#include "phaseless/solvers.hpp"

namespace phaseless {

enum class SolverKind { ErrorReduction, WirtingerFlow, Kaczmarz, BlockKaczmarz };

const char* to_string(SolverKind kind);
SolverKind parse_solver(const std::string& name);
ModelKind parse_model(const std::string& name);
Selection parse_selection(const std::string& name);
InitMode parse_init(const std::string& name);

struct ExperimentConfig {
    std::string experiment_id = "sweep";
    ModelKind model = ModelKind::GaussianReal;
    Field field = Field::Complex;        // unitary model only; the others imply their field
    std::size_t n = 64;                  // 1D length
    std::size_t n1 = 64, n2 = 64;        // cdp-2d image shape
    std::vector<double> deltas;          // m = round(delta * n)
    std::vector<std::size_t> patterns;   // L for the CDP models
    SolverKind solver = SolverKind::Kaczmarz;
    std::size_t block_size = 0;          // 0: n/4 for Gaussian, one pattern / unitary otherwise
    Selection selection = Selection::Cyclic;
    double relaxation = 1.0;
    bool relaxation_auto = false;        // lambda = 1 + n/m
    InitMode init = InitMode::Spectral;
    PowerIterationBudget power;
    std::size_t trials = 50;
    std::uint64_t seed = 1;
    std::size_t threads = 0;             // 0: hardware concurrency
    TerminationPolicy termination;
    StepSchedule step;
    double success_tolerance = kSuccessTolerance;
    bool stop_at_target = false;         // stop once rel.err <= success_tolerance
    std::vector<double> noise_levels;
    std::string out_dir;                 // empty: no files written
    bool write_plots = true;
    bool record_wall_time = true;        // false writes 0 into every wall-time cell

    Field signal_field() const;
    Shape signal_shape() const;
    std::size_t signal_size() const { return signal_shape().size(); }
    std::size_t resolved_block_size() const;
    void validate() const;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Scales the dimensions of a desk-scale config to the published sizes
// (n = 256, 256 x 256 images).
void apply_full_scale(ExperimentConfig& config);

struct SweepPoint {
    std::size_t index = 0;
    std::size_t m = 0;
    std::size_t m_or_L = 0;   // L for CDP, m otherwise
    double delta = 0.0;       // m / n
    double noise = 0.0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);

struct TrialRecord {
    std::string experiment_id;
    std::size_t point_index = 0;
    std::size_t trial_index = 0;
    std::uint64_t seed = 0;
    std::string model;
    std::string solver;
    std::size_t n = 0;
    std::size_t m_or_L = 0;
    std::string init;
    bool success = false;
    double rel_err = 0.0;
    std::size_t iters_or_cycles = 0;
    double wall_ms = 0.0;
    SolveStatus status = SolveStatus::BudgetExhausted;
    std::vector<double> error_trace;   // rel.err per cycle / iteration when traced
};

std::uint64_t trial_seed(std::uint64_t master, std::size_t point_index, std::size_t trial_index);

// Draws the planted signal, ensemble, measurements (with the point's noise
// level), initial point, and solves. Deterministic in (config, point, trial).
TrialRecord run_trial(const ExperimentConfig& config, const SweepPoint& point, std::size_t trial_index,
                      bool trace_errors = false);

// Runs `count` jobs on a bounded pool; job i writes only its own slot.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job);

struct CurvePoint {
    std::size_t point_index = 0;
    std::size_t m_or_L = 0;
    double delta = 0.0;
    double success_rate = 0.0;
    double mean_cycles = 0.0;
    double mean_wall_ms = 0.0;
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<SweepPoint> points;
    std::vector<TrialRecord> trials;   // point-major, trial-minor
    std::vector<CurvePoint> curve;
};

std::vector<CurvePoint> summarize_curve(const std::vector<SweepPoint>& points, const std::vector<TrialRecord>& trials);

SweepResult run_recovery_sweep(const ExperimentConfig& config);

struct NoiseResult {
    SweepResult sweep;
    std::vector<double> levels;
    std::vector<double> mean_rel_err;
    std::vector<double> median_rel_err;
    // Fit of log10(median rel.err) on log10(level); the median keeps an
    // occasional non-converged trial from bending the line.
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Least-squares fit of log10(err) on log10(level), over positive levels.
void fit_log_log(const std::vector<double>& levels, const std::vector<double>& errors, double& slope,
                 double& intercept, double& r_squared);

NoiseResult run_noise_study(const ExperimentConfig& config);

struct TimingRow {
    std::string model;
    std::string solver;
    std::size_t m_or_L = 0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double mean_iters_or_cycles = 0.0;
    double mean_wall_ms = 0.0;
    double mean_rel_err = 0.0;
    bool skipped = false;
};

struct TimingCell {
    ExperimentConfig config;
    bool skip = false;   // emitted as a marked row, never run
};

// Cells of the timing table at m = 6n (Gaussian, CDP-1D) and L = 12 (CDP-2D).
// Takes sizes, seed, trials and threads from `base`.
std::vector<TimingCell> default_timing_cells(const ExperimentConfig& base);
std::vector<TimingRow> run_timing_table(const std::vector<TimingCell>& cells, const std::string& out_dir,
                                        const std::string& experiment_id = "timing");

struct RelaxationResult {
    SweepResult plain;       // lambda = 1
    SweepResult relaxed;     // lambda = 1 + n/m
    std::vector<double> mean_error_plain;     // per cycle
    std::vector<double> mean_error_relaxed;
    double mean_cycles_plain = 0.0;
    double mean_cycles_relaxed = 0.0;
};

RelaxationResult run_relaxation_comparison(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Images

struct Image {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels;   // row-major, in [0, 1]
};

inline constexpr std::size_t kMaxImageSide = 512;

Image read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Image& image);
Image synthetic_image(const std::string& kind, std::size_t rows, std::size_t cols);

struct ImageTrial {
    std::size_t trial_index = 0;
    std::size_t channel = 0;
    std::uint64_t seed = 0;
    double rel_err = 0.0;
    std::size_t iters_or_cycles = 0;
    double wall_ms = 0.0;
    bool success = false;
};

struct ImageResult {
    std::vector<ImageTrial> runs;
    std::size_t trials = 0;
    std::size_t successes = 0;     // trials where every channel succeeded
    std::vector<Image> reconstructions;   // first trial, one per channel
};

ImageResult run_image_reconstruction(const std::vector<Image>& channels, const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Theory checks and matrix statistics

struct VerificationItem {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::string detail;
};

struct VerificationResult {
    std::vector<VerificationItem> items;
    BoundTrace theorem2;
    BoundTrace theorem3;
    bool all_passed() const;
};

struct VerifyConfig {
    std::uint64_t seed = 1;
    std::size_t instances = 100;         // Proposition 1 / projection optimality
    std::size_t theorem1_instances = 1000;
    std::size_t envelope_runs = 200;
    std::size_t envelope_n = 32;
    std::size_t envelope_m = 256;
    std::size_t envelope_block = 8;
    std::size_t envelope_horizon_cycles = 50;   // horizon = cycles * m iterations
    std::size_t envelope_stride = 16;
    std::string out_dir;
};

VerificationResult run_verification(const VerifyConfig& config);

MatrixStats run_stats(const ExperimentConfig& config, std::size_t point_index = 0);

// Dispatches a harness command ("sweep", "noise", "timing", "relax", "image",
// "verify", "stats") on a JSON configuration, filling in that command's
// defaults for absent keys. Returns a JSON summary.
nlohmann::json run_command(const std::string& command, const nlohmann::json& config);

// The configuration `run_command` would use, after defaults and scaling.
ExperimentConfig resolve_config(const std::string& command, const nlohmann::json& config);

// CSV/SVG emission used by the experiment runners.
void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& trials, bool wall_time);
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve, bool wall_time);

} // namespace phaseless
