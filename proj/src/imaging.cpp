#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>

#include "phaseless/harness.hpp"
#include "report.hpp"

namespace phaseless {

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    for (;;) {
        const int c = in.get();
        if (c == EOF) break;
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
            if (!tok.empty()) break;
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

std::size_t pgm_number(std::istream& in, const std::string& path, const char* what) {
    const std::string tok = pgm_token(in);
    require(!tok.empty() && std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); }),
            ErrorCode::Io, path + ": malformed PGM header (" + what + ")");
    return std::stoul(tok);
}

} // namespace

Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open image " + path);
    require(pgm_token(in) == "P5", ErrorCode::Io, path + ": not a binary PGM (P5) file");
    Image img;
    img.cols = pgm_number(in, path, "width");
    img.rows = pgm_number(in, path, "height");
    const std::size_t maxval = pgm_number(in, path, "maxval");
    require(img.rows >= 1 && img.cols >= 1, ErrorCode::Io, path + ": empty image");
    require(img.rows <= kMaxImageSide && img.cols <= kMaxImageSide, ErrorCode::InvalidArgument,
            path + ": image larger than 512 x 512");
    require(maxval >= 1 && maxval <= 65535, ErrorCode::Io, path + ": maxval out of range");

    const std::size_t bytes = maxval < 256 ? 1 : 2;
    const std::size_t count = img.rows * img.cols;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<std::size_t>(in.gcount()) == raw.size(), ErrorCode::Io, path + ": truncated pixel data");

    img.pixels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t v = bytes == 1 ? raw[i] : (std::size_t{raw[2 * i]} << 8) | raw[2 * i + 1];
        require(v <= maxval, ErrorCode::Io, path + ": pixel exceeds maxval");
        img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return img;
}

void write_pgm(const std::string& path, const Image& image) {
    require(image.pixels.size() == image.rows * image.cols, ErrorCode::DimensionMismatch, "write_pgm: bad image");
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path + " for writing");
    out << "P5\n" << image.cols << ' ' << image.rows << "\n255\n";
    for (double p : image.pixels) {
        const double c = std::clamp(std::isfinite(p) ? p : 0.0, 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
    require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path);
}

Image synthetic_image(const std::string& kind, std::size_t rows, std::size_t cols) {
    require(rows >= 1 && cols >= 1 && rows <= kMaxImageSide && cols <= kMaxImageSide, ErrorCode::InvalidArgument,
            "synthetic_image: size must be within 1..512");
    Image img{rows, cols, std::vector<double>(rows * cols)};
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double v;
            if (kind == "gradient") {
                v = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / static_cast<double>(rows + cols);
            } else if (kind == "constant") {
                v = 0.5;
            } else if (kind == "disk") {
                const double di = (static_cast<double>(i) + 0.5) / static_cast<double>(rows) - 0.5;
                const double dj = (static_cast<double>(j) + 0.5) / static_cast<double>(cols) - 0.5;
                v = di * di + dj * dj < 0.1 ? 0.9 : 0.2;
            } else {
                throw Error(ErrorCode::InvalidArgument, "synthetic_image: unknown kind '" + kind +
                                                            "' (gradient, constant, disk)");
            }
            img.pixels[i * cols + j] = v;
        }
    }
    return img;
}

ImageResult run_image_reconstruction(const std::vector<Image>& channels, const ExperimentConfig& config) {
    require(!channels.empty(), ErrorCode::InvalidArgument, "image: no channels");
    const std::size_t rows = channels.front().rows, cols = channels.front().cols;
    for (const auto& c : channels)
        require(c.rows == rows && c.cols == cols && c.pixels.size() == rows * cols, ErrorCode::DimensionMismatch,
                "image: channels must share one size");

    ExperimentConfig c = config;
    c.model = ModelKind::Cdp2D;
    c.n1 = rows;
    c.n2 = cols;
    if (c.patterns.empty()) c.patterns = {4};
    c.validate();
    const std::size_t n = rows * cols;
    const std::size_t patterns = c.patterns.front();
    SweepPoint point;
    point.m = patterns * n;
    point.m_or_L = patterns;
    point.delta = static_cast<double>(patterns);

    ImageResult result;
    result.trials = c.trials;
    result.runs.resize(c.trials * channels.size());
    result.reconstructions.resize(channels.size());
    parallel_for(result.runs.size(), c.threads, [&](std::size_t job) {
        const std::size_t trial = job / channels.size(), channel = job % channels.size();
        ImageTrial& run = result.runs[job];
        run.trial_index = trial;
        run.channel = channel;
        run.seed = trial_seed(c.seed, channel, trial);

        CVector truth(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) truth[static_cast<Eigen::Index>(i)] = channels[channel].pixels[i];
        Rng mask_rng(derive_seed(run.seed, {2}));
        const Ensemble ensemble = sample_cdp(Shape{rows, cols}, patterns, mask_rng);
        const Measurements meas = measure(ensemble, truth);

        Rng init_rng(derive_seed(run.seed, {4}));
        const auto start = std::chrono::steady_clock::now();
        CVector x0 = c.init == InitMode::Spectral ? spectral_init(ensemble, meas.y, c.power, init_rng)
                                                  : random_init(n, Field::Complex, init_rng);
        SolveOptions options;
        options.termination = c.termination;
        options.selection = c.selection;
        options.relaxation = c.relaxation_auto ? 1.0 + 1.0 / static_cast<double>(patterns) : c.relaxation;
        options.step = c.step;
        options.seed = derive_seed(run.seed, {5});
        if (c.stop_at_target) {
            options.truth = truth;
            options.target_relative_error = c.success_tolerance;
        }
        SolverState state;
        switch (c.solver) {
        case SolverKind::ErrorReduction: state = error_reduction(ensemble, meas, std::move(x0), options); break;
        case SolverKind::WirtingerFlow: state = wirtinger_flow(ensemble, meas, std::move(x0), options); break;
        case SolverKind::Kaczmarz: state = simple_kaczmarz(ensemble, meas, std::move(x0), options); break;
        case SolverKind::BlockKaczmarz: {
            const std::size_t bs = c.resolved_block_size();
            const Paving paving =
                bs == n ? Paving::per_pattern(ensemble) : Paving::consecutive(ensemble, bs);
            state = block_kaczmarz(ensemble, meas, paving, std::move(x0), options);
            break;
        }
        }
        run.wall_ms = c.record_wall_time
                          ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()
                          : 0.0;
        run.rel_err = relative_error(state.x, truth);
        run.success = run.rel_err <= c.success_tolerance;
        run.iters_or_cycles =
            c.solver == SolverKind::Kaczmarz || c.solver == SolverKind::BlockKaczmarz ? state.cycles : state.iterations;

        if (trial == 0) {
            // undo the global phase before display
            const Complex inner = truth.dot(state.x);
            const Complex phase = std::abs(inner) > 0 ? inner / std::abs(inner) : Complex(1.0);
            const CVector aligned = state.x / phase;
            Image out{rows, cols, std::vector<double>(n)};
            for (std::size_t i = 0; i < n; ++i) out.pixels[i] = aligned[static_cast<Eigen::Index>(i)].real();
            result.reconstructions[channel] = std::move(out);
        }
    });

    for (std::size_t t = 0; t < c.trials; ++t) {
        bool all = true;
        for (std::size_t ch = 0; ch < channels.size(); ++ch) all = all && result.runs[t * channels.size() + ch].success;
        result.successes += all ? 1 : 0;
    }

    if (!c.out_dir.empty()) {
        detail::ensure_directory(c.out_dir);
        detail::CsvWriter csv(detail::join_path(c.out_dir, c.experiment_id + "_image.csv"),
                              {"trial_index", "channel", "seed", "L", "solver", "rel_err", "iters_or_cycles",
                               "wall_ms", "success"});
        for (const auto& r : result.runs) {
            csv.cell(r.trial_index)
                .cell(r.channel)
                .cell(static_cast<std::size_t>(r.seed))
                .cell(patterns)
                .cell(std::string(to_string(c.solver)))
                .cell(r.rel_err)
                .cell(r.iters_or_cycles)
                .cell(r.wall_ms)
                .cell(r.success);
            csv.end_row();
        }
        for (std::size_t ch = 0; ch < channels.size(); ++ch)
            write_pgm(detail::join_path(c.out_dir, c.experiment_id + "_recon_" + std::to_string(ch) + ".pgm"),
                      result.reconstructions[ch]);
    }
    return result;
}

} // namespace phaseless
