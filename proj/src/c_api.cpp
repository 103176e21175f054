#include "phaseless/phaseless.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <memory>
#include <string>

#include "phaseless/harness.hpp"

using namespace phaseless;

struct phl_ensemble {
    Ensemble ensemble;
};

namespace {

thread_local std::string last_error;

phl_status status_of(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return PHL_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return PHL_DIMENSION_MISMATCH;
    case ErrorCode::RankDeficient: return PHL_RANK_DEFICIENT;
    case ErrorCode::Numeric: return PHL_NUMERIC;
    case ErrorCode::Io: return PHL_IO;
    case ErrorCode::Config: return PHL_CONFIG;
    }
    return PHL_INTERNAL;
}

template <class F>
phl_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return PHL_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const nlohmann::json::exception& e) {
        last_error = std::string("config: ") + e.what();
        return PHL_CONFIG;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return PHL_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return PHL_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return PHL_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    require(p != nullptr, ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

CVector read_complex(const double* data, std::size_t count) {
    CVector v(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) v[static_cast<Eigen::Index>(i)] = Complex(data[2 * i], data[2 * i + 1]);
    return v;
}

void write_complex(const CVector& v, double* out) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out[2 * i] = v[i].real();
        out[2 * i + 1] = v[i].imag();
    }
}

RVector read_real(const double* data, std::size_t count) {
    return Eigen::Map<const RVector>(data, static_cast<Eigen::Index>(count));
}

Field field_of(int complex_field) { return complex_field ? Field::Complex : Field::Real; }

void emit(Ensemble e, phl_ensemble** out) {
    need(out, "out");
    *out = new phl_ensemble{std::move(e)};
}

} // namespace

extern "C" {

const char* phl_version(void) { return "1.0.0"; }

const char* phl_status_string(phl_status status) {
    switch (status) {
    case PHL_OK: return "ok";
    case PHL_INVALID_ARGUMENT: return "invalid argument";
    case PHL_DIMENSION_MISMATCH: return "dimension mismatch";
    case PHL_RANK_DEFICIENT: return "rank deficient";
    case PHL_NUMERIC: return "numeric failure";
    case PHL_IO: return "i/o error";
    case PHL_CONFIG: return "configuration error";
    case PHL_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* phl_last_error(void) { return last_error.c_str(); }

phl_status phl_ensemble_gaussian(size_t n, size_t m, int complex_field, uint64_t seed, phl_ensemble** out) {
    return guarded([&] {
        Rng rng(seed);
        emit(sample_gaussian(n, m, field_of(complex_field), rng), out);
    });
}

phl_status phl_ensemble_unitary(size_t n, size_t m, int complex_field, uint64_t seed, phl_ensemble** out) {
    return guarded([&] {
        Rng rng(seed);
        emit(sample_unitary(n, m, field_of(complex_field), rng), out);
    });
}

phl_status phl_ensemble_cdp(size_t n1, size_t n2, size_t patterns, uint64_t seed, phl_ensemble** out) {
    return guarded([&] {
        Rng rng(seed);
        emit(sample_cdp(Shape{n1, n2}, patterns, rng), out);
    });
}

phl_status phl_ensemble_from_matrix(size_t m, size_t n, const double* entries, int complex_field,
                                    phl_ensemble** out) {
    return guarded([&] {
        need(entries, "entries");
        require(m >= 1 && n >= 1, ErrorCode::InvalidArgument, "matrix dimensions must be positive");
        RowMatrix a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const std::size_t k = r * n + c;
                a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    Complex(entries[2 * k], complex_field ? entries[2 * k + 1] : 0.0);
                require(complex_field || entries[2 * k + 1] == 0.0, ErrorCode::InvalidArgument,
                        "real-field matrix has a nonzero imaginary part");
            }
        emit(Ensemble::from_matrix(std::move(a), field_of(complex_field)), out);
    });
}

void phl_ensemble_free(phl_ensemble* ensemble) { delete ensemble; }

size_t phl_ensemble_rows(const phl_ensemble* ensemble) { return ensemble ? ensemble->ensemble.rows() : 0; }

size_t phl_ensemble_cols(const phl_ensemble* ensemble) { return ensemble ? ensemble->ensemble.cols() : 0; }

phl_status phl_forward(const phl_ensemble* ensemble, const double* x, double* z) {
    return guarded([&] {
        need(ensemble, "ensemble"), need(x, "x"), need(z, "z");
        write_complex(ensemble->ensemble.forward(read_complex(x, ensemble->ensemble.cols())), z);
    });
}

phl_status phl_measure(const phl_ensemble* ensemble, const double* x, double* y) {
    return guarded([&] {
        need(ensemble, "ensemble"), need(x, "x"), need(y, "y");
        const RVector v = measure(ensemble->ensemble, read_complex(x, ensemble->ensemble.cols())).y;
        std::memcpy(y, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    });
}

void phl_solver_options_default(phl_solver_options* options) {
    if (!options) return;
    const TerminationPolicy t;
    options->solver = PHL_SOLVER_KACZMARZ;
    options->selection = PHL_SELECT_CYCLIC;
    options->relaxation = 1.0;
    options->block_size = 0;
    options->max_iterations = t.max_iterations;
    options->max_cycles = t.max_cycles;
    options->rel_residual_tol = t.rel_residual_tol;
    options->cycle_residual_tol = t.cycle_residual_tol;
    options->seed = 0;
}

phl_status phl_solve(const phl_ensemble* ensemble, const double* y, const double* x0,
                     const phl_solver_options* options, double* x_out, phl_solve_report* report) {
    return guarded([&] {
        need(ensemble, "ensemble"), need(y, "y"), need(x0, "x0"), need(options, "options"), need(x_out, "x_out");
        const Ensemble& e = ensemble->ensemble;
        const Measurements meas = Measurements::from_intensities(read_real(y, e.rows()));
        CVector start = read_complex(x0, e.cols());

        SolveOptions opt;
        opt.termination.max_iterations = options->max_iterations;
        opt.termination.max_cycles = options->max_cycles;
        opt.termination.rel_residual_tol = options->rel_residual_tol;
        opt.termination.cycle_residual_tol = options->cycle_residual_tol;
        switch (options->selection) {
        case PHL_SELECT_CYCLIC: opt.selection = Selection::Cyclic; break;
        case PHL_SELECT_UNIFORM: opt.selection = Selection::Uniform; break;
        case PHL_SELECT_NORM_WEIGHTED: opt.selection = Selection::NormWeighted; break;
        default: throw Error(ErrorCode::InvalidArgument, "unknown selection rule");
        }
        opt.relaxation = options->relaxation;
        opt.seed = options->seed;

        SolverState state;
        switch (options->solver) {
        case PHL_SOLVER_ER: state = error_reduction(e, meas, std::move(start), opt); break;
        case PHL_SOLVER_WF: state = wirtinger_flow(e, meas, std::move(start), opt); break;
        case PHL_SOLVER_KACZMARZ: state = simple_kaczmarz(e, meas, std::move(start), opt); break;
        case PHL_SOLVER_BLOCK_KACZMARZ: {
            std::size_t bs = options->block_size;
            if (bs == 0) bs = e.is_cdp() ? e.cols() : std::max<std::size_t>(1, e.cols() / 4);
            const Paving paving =
                e.is_cdp() && bs == e.cols() ? Paving::per_pattern(e) : Paving::consecutive(e, bs);
            state = block_kaczmarz(e, meas, paving, std::move(start), opt);
            break;
        }
        default: throw Error(ErrorCode::InvalidArgument, "unknown solver");
        }
        write_complex(state.x, x_out);
        if (report) {
            report->iterations = state.iterations;
            report->cycles = state.cycles;
            report->status = static_cast<phl_solve_status>(static_cast<int>(state.status));
        }
    });
}

phl_status phl_spectral_init(const phl_ensemble* ensemble, const double* y, uint64_t seed, double* x0_out) {
    return guarded([&] {
        need(ensemble, "ensemble"), need(y, "y"), need(x0_out, "x0_out");
        const Ensemble& e = ensemble->ensemble;
        Rng rng(seed);
        write_complex(spectral_init(e, read_real(y, e.rows()), PowerIterationBudget{}, rng), x0_out);
    });
}

phl_status phl_dist(size_t n, const double* x, const double* truth, double* out) {
    return guarded([&] {
        need(x, "x"), need(truth, "truth"), need(out, "out");
        *out = dist(read_complex(x, n), read_complex(truth, n));
    });
}

phl_status phl_run_experiment(const char* command, const char* config_json, char** summary_json) {
    return guarded([&] {
        need(command, "command"), need(summary_json, "summary_json");
        *summary_json = nullptr;
        const nlohmann::json config =
            config_json && *config_json ? nlohmann::json::parse(config_json) : nlohmann::json::object();
        const std::string text = run_command(command, config).dump(2);
        auto* buffer = static_cast<char*>(std::malloc(text.size() + 1));
        if (!buffer) throw std::bad_alloc();
        std::memcpy(buffer, text.c_str(), text.size() + 1);
        *summary_json = buffer;
    });
}

void phl_string_free(char* s) { std::free(s); }

} // extern "C"
