// Command-line front end for the experiment harness. Talks to the library
// only through the C interface.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phaseless/phaseless.h"

using nlohmann::json;

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::string> out_dir;
    std::optional<std::string> model;
    std::optional<std::string> solver;
    std::optional<std::size_t> block_size;
    std::optional<std::string> init;
    std::optional<std::size_t> n;
    std::optional<std::size_t> threads;
    std::optional<std::string> id;
    std::vector<double> deltas;
    std::vector<std::size_t> patterns;
    std::vector<double> noise;
    std::vector<std::string> images;
    std::optional<std::string> synthetic;
    bool full_scale = false;
    bool no_wall_time = false;
    bool raw_json = false;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("-c,--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "master seed");
    app->add_option("--trials", o.trials, "trials per point");
    app->add_option("--out-dir", o.out_dir, "directory for CSV / SVG output");
    app->add_option("--id", o.id, "experiment id (file prefix)");
    app->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    app->add_flag("--full-scale", o.full_scale, "use n = 256 / 256x256 instead of desk scale");
    app->add_flag("--no-wall-time", o.no_wall_time, "write 0 in wall-time cells (bitwise-reproducible CSVs)");
    app->add_flag("--json", o.raw_json, "print the raw JSON summary");
}

void add_problem(CLI::App* app, Overrides& o) {
    app->add_option("--model", o.model, "gaussian-real | gaussian-complex | unitary | cdp-1d | cdp-2d");
    app->add_option("--solver", o.solver, "er | wf | kaczmarz | block-kaczmarz");
    app->add_option("--block-size", o.block_size, "rows per block for block Kaczmarz");
    app->add_option("--init", o.init, "spectral | random")->check(CLI::IsMember({"spectral", "random"}));
    app->add_option("--n", o.n, "signal length");
    app->add_option("--deltas", o.deltas, "oversampling grid m/n")->delimiter(',');
    app->add_option("--patterns", o.patterns, "CDP pattern counts L")->delimiter(',');
}

json build_config(const Overrides& o) {
    json j = json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        try {
            j = json::parse(in, nullptr, true, true);
        } catch (const json::exception& e) {
            throw std::runtime_error(o.config_path + ": " + e.what());
        }
        if (!j.is_object()) throw std::runtime_error(o.config_path + ": top level must be an object");
    }
    if (o.seed) j["seed"] = *o.seed;
    if (o.trials) j["trials"] = *o.trials;
    if (o.out_dir) j["out_dir"] = *o.out_dir;
    if (o.id) j["experiment_id"] = *o.id;
    if (o.threads) j["threads"] = *o.threads;
    if (o.model) j["model"] = *o.model;
    if (o.solver) j["solver"] = *o.solver;
    if (o.block_size) j["block_size"] = *o.block_size;
    if (o.init) j["init"] = *o.init;
    if (o.n) j["n"] = *o.n;
    if (!o.deltas.empty()) {
        j.erase("delta_range");
        j["deltas"] = o.deltas;
    }
    if (!o.patterns.empty()) j["patterns"] = o.patterns;
    if (!o.noise.empty()) j["noise_levels"] = o.noise;
    if (!o.images.empty()) j["images"] = o.images;
    if (o.synthetic) j["synthetic"] = {{"kind", *o.synthetic}};
    if (o.full_scale) j["full_scale"] = true;
    if (o.no_wall_time) j["record_wall_time"] = false;
    return j;
}

std::string fmt(double v, const char* spec = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Returns the process exit code.
int report(const std::string& command, const json& s) {
    if (command == "sweep") {
        std::cout << "point  m_or_L  delta   success  mean_cycles  mean_ms\n";
        for (const auto& c : s["curve"])
            std::cout << fmt(c["point_index"].get<double>(), "%5.0f") << "  " << fmt(c["m_or_L"].get<double>(), "%6.0f")
                      << "  " << fmt(c["delta"].get<double>(), "%5.2f") << "  "
                      << fmt(c["success_rate"].get<double>(), "%7.2f") << "  "
                      << fmt(c["mean_cycles"].get<double>(), "%11.1f") << "  "
                      << fmt(c["mean_wall_ms"].get<double>(), "%7.1f") << "\n";
    } else if (command == "noise") {
        const auto& levels = s["levels"];
        const auto& mean = s["mean_rel_err"];
        const auto& median = s["median_rel_err"];
        std::cout << "epsilon      mean_rel_err  median_rel_err\n";
        for (std::size_t i = 0; i < levels.size(); ++i)
            std::cout << fmt(levels[i].get<double>(), "%-12.3e") << " " << fmt(mean[i].get<double>(), "%-13.3e") << " "
                      << fmt(median[i].get<double>(), "%.3e") << "\n";
        std::cout << "log-log slope " << fmt(s["slope"].get<double>()) << ", R^2 " << fmt(s["r_squared"].get<double>())
                  << "\n";
    } else if (command == "timing") {
        std::cout << "model             solver          m_or_L  succ  its/cycles   ms        rel_err\n";
        for (const auto& r : s["rows"]) {
            std::printf("%-17s %-15s %6zu  ", r["model"].get<std::string>().c_str(),
                        r["solver"].get<std::string>().c_str(), r["m_or_L"].get<std::size_t>());
            if (r["skipped"].get<bool>()) {
                std::printf("-     -            -         -\n");
                continue;
            }
            std::printf("%2zu/%-2zu %10.1f %9.2f  %9.2e\n", r["successes"].get<std::size_t>(),
                        r["trials"].get<std::size_t>(), r["mean_iters_or_cycles"].get<double>(),
                        r["mean_wall_ms"].get<double>(), r["mean_rel_err"].get<double>());
        }
        std::fflush(stdout);
    } else if (command == "relax") {
        std::cout << "mean cycles to tolerance: lambda=1 " << fmt(s["mean_cycles_lambda1"].get<double>())
                  << ", lambda=1+n/m " << fmt(s["mean_cycles_relaxed"].get<double>()) << "\n";
        std::cout << "success rate: lambda=1 " << fmt(s["success_rate_lambda1"].get<double>()) << ", lambda=1+n/m "
                  << fmt(s["success_rate_relaxed"].get<double>()) << "\n";
    } else if (command == "image") {
        std::cout << s["rows"].get<std::size_t>() << "x" << s["cols"].get<std::size_t>() << ", "
                  << s["channels"].get<std::size_t>() << " channel(s), L=" << s["L"].get<std::size_t>() << ", "
                  << s["solver"].get<std::string>() << ": " << s["successes"].get<std::size_t>() << "/"
                  << s["trials"].get<std::size_t>() << " trials recovered\n";
    } else if (command == "verify") {
        for (const auto& i : s["items"])
            std::cout << (i["passed"].get<bool>() ? "PASS " : "FAIL ") << i["name"].get<std::string>() << "  value="
                      << fmt(i["value"].is_number() ? i["value"].get<double>() : NAN) << "  "
                      << i["detail"].get<std::string>() << "\n";
        return s["all_passed"].get<bool>() ? 0 : 1;
    } else if (command == "stats") {
        for (const char* k : {"sigma_min", "sigma_max", "frobenius", "scaled_condition", "block_size",
                              "mean_block_condition", "max_block_condition", "paving_alpha", "paving_beta",
                              "bai_yin_prediction"})
            std::cout << k << " = " << (s[k].is_number() ? fmt(s[k].get<double>(), "%.6g") : std::string("n/a"))
                      << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kaczmarz-type phase retrieval experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(phl_version()));

    Overrides o;
    struct Sub {
        const char* name;
        const char* help;
        bool problem;
    };
    const Sub subs[] = {
        {"sweep", "success rate versus m/n (or L)", true},
        {"noise", "relative error versus noise level", true},
        {"timing", "iterations, cycles and time for every model and solver", false},
        {"relax", "simple Kaczmarz with and without relaxation", true},
        {"image", "2D coded-diffraction reconstruction of PGM images", false},
        {"verify", "numerical checks of the projection and convergence results", false},
        {"stats", "singular values and block conditioning of one ensemble", true},
    };
    for (const auto& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
        add_common(cmd, o);
        if (sub.problem) add_problem(cmd, o);
        if (std::string(sub.name) == "noise")
            cmd->add_option("--noise", o.noise, "noise levels")->delimiter(',');
        if (std::string(sub.name) == "image") {
            cmd->add_option("--image", o.images, "PGM file, one per channel")->check(CLI::ExistingFile);
            cmd->add_option("--synthetic", o.synthetic, "gradient | constant | disk (64x64)");
            cmd->add_option("--solver", o.solver, "er | wf | kaczmarz | block-kaczmarz");
            cmd->add_option("--patterns", o.patterns, "number of patterns L")->delimiter(',');
            cmd->add_option("--init", o.init, "spectral | random");
        }
        if (std::string(sub.name) == "timing") {
            cmd->add_option("--n", o.n, "signal length");
        }
    }
    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    json config;
    try {
        config = build_config(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    char* summary = nullptr;
    const phl_status st = phl_run_experiment(command.c_str(), config.dump().c_str(), &summary);
    if (st != PHL_OK) {
        std::cerr << "error (" << phl_status_string(st) << "): " << phl_last_error() << "\n";
        return 2;
    }
    const json s = json::parse(summary);
    phl_string_free(summary);
    if (o.raw_json) {
        std::cout << s.dump(2) << "\n";
        return command == "verify" && !s["all_passed"].get<bool>() ? 1 : 0;
    }
    return report(command, s);
}
