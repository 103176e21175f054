#include <cmath>

#include "phaseless/harness.hpp"

namespace phaseless {

using nlohmann::json;

namespace {

// Keys consumed here rather than by ExperimentConfig.
const char* const kCommandKeys[] = {"full_scale", "images", "synthetic", "verify"};

bool is_cdp_model(ModelKind m) { return m == ModelKind::Cdp1D || m == ModelKind::Cdp2D; }

json log_spaced(double from, double to, std::size_t count) {
    json out = json::array();
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        out.push_back(std::pow(10.0, std::log10(from) + t * (std::log10(to) - std::log10(from))));
    }
    return out;
}

json curve_json(const std::vector<CurvePoint>& curve) {
    json out = json::array();
    for (const auto& c : curve)
        out.push_back({{"point_index", c.point_index},
                       {"m_or_L", c.m_or_L},
                       {"delta", c.delta},
                       {"success_rate", c.success_rate},
                       {"mean_cycles", c.mean_cycles},
                       {"mean_wall_ms", c.mean_wall_ms}});
    return out;
}

std::vector<Image> load_images(const json& config) {
    std::vector<Image> images;
    if (config.contains("images")) {
        for (const auto& p : config.at("images")) images.push_back(read_pgm(p.get<std::string>()));
    }
    if (config.contains("synthetic")) {
        const json& s = config.at("synthetic");
        images.push_back(synthetic_image(s.value("kind", std::string("gradient")), s.value("rows", std::size_t{64}),
                                         s.value("cols", std::size_t{64})));
    }
    if (images.empty()) images.push_back(synthetic_image("gradient", 64, 64));
    return images;
}

VerifyConfig verify_config(const json& config) {
    VerifyConfig v;
    if (config.contains("seed")) v.seed = config.at("seed").get<std::uint64_t>();
    if (config.contains("out_dir")) v.out_dir = config.at("out_dir").get<std::string>();
    if (config.contains("verify")) {
        const json& j = config.at("verify");
        for (const auto& item : j.items()) {
            const auto& k = item.key();
            const auto val = item.value().get<std::size_t>();
            if (k == "instances") v.instances = val;
            else if (k == "theorem1_instances") v.theorem1_instances = val;
            else if (k == "envelope_runs") v.envelope_runs = val;
            else if (k == "envelope_n") v.envelope_n = val;
            else if (k == "envelope_m") v.envelope_m = val;
            else if (k == "envelope_block") v.envelope_block = val;
            else if (k == "envelope_horizon_cycles") v.envelope_horizon_cycles = val;
            else if (k == "envelope_stride") v.envelope_stride = val;
            else throw Error(ErrorCode::Config, "unknown key '" + k + "' in verify");
        }
    }
    return v;
}

} // namespace

ExperimentConfig resolve_config(const std::string& command, const json& input) {
    require(input.is_object() || input.is_null(), ErrorCode::Config, "config must be a JSON object");
    json j = input.is_null() ? json::object() : input;
    for (const char* k : kCommandKeys) j.erase(k);

    auto absent = [&](const char* k) { return !j.contains(k); };
    if (absent("experiment_id")) j["experiment_id"] = command;

    if (command == "relax") {
        if (absent("model")) j["model"] = "gaussian-complex";
        if (absent("deltas") && absent("delta_range")) j["deltas"] = {4.0};
        if (absent("solver")) j["solver"] = "kaczmarz";
    } else if (command == "noise") {
        if (absent("noise_levels")) j["noise_levels"] = log_spaced(1e-5, 1e-1, 9);
    } else if (command == "image") {
        if (absent("solver")) j["solver"] = "block-kaczmarz";
        if (absent("trials")) j["trials"] = 10;
        if (absent("patterns")) j["patterns"] = {4};
    } else if (command == "timing") {
        if (absent("trials")) j["trials"] = 10;
    }

    ExperimentConfig c = ExperimentConfig::from_json(j);
    const bool fixed_m = command == "noise" || command == "stats" || command == "timing";
    if (is_cdp_model(c.model)) {
        if (c.patterns.empty()) {
            if (fixed_m)
                c.patterns = {c.model == ModelKind::Cdp2D ? std::size_t{12} : std::size_t{6}};
            else
                c.patterns = {2, 3, 4, 5, 6, 7, 8};
        }
    } else if (c.deltas.empty()) {
        if (fixed_m) {
            c.deltas = {6.0};
        } else {
            for (std::size_t i = 0; i < 20; ++i) c.deltas.push_back(2.0 + 4.0 * static_cast<double>(i) / 19.0);
        }
    }
    if (input.is_object() && input.value("full_scale", false)) apply_full_scale(c);
    return c;
}

json run_command(const std::string& command, const json& input) {
    if (command == "verify") {
        const VerifyConfig v = verify_config(input);
        const auto r = run_verification(v);
        json items = json::array();
        for (const auto& i : r.items)
            items.push_back({{"name", i.name},
                             {"value", i.value},
                             {"threshold", i.threshold},
                             {"passed", i.passed},
                             {"detail", i.detail}});
        return {{"command", command}, {"all_passed", r.all_passed()}, {"items", items}};
    }

    if (command == "image") {
        const ExperimentConfig c = resolve_config(command, input);
        const auto images = load_images(input);
        const auto r = run_image_reconstruction(images, c);
        json runs = json::array();
        for (const auto& t : r.runs)
            runs.push_back({{"trial_index", t.trial_index},
                            {"channel", t.channel},
                            {"seed", t.seed},
                            {"rel_err", t.rel_err},
                            {"iters_or_cycles", t.iters_or_cycles},
                            {"wall_ms", t.wall_ms},
                            {"success", t.success}});
        return {{"command", command},
                {"channels", images.size()},
                {"rows", images.front().rows},
                {"cols", images.front().cols},
                {"L", c.patterns.front()},
                {"solver", to_string(c.solver)},
                {"trials", r.trials},
                {"successes", r.successes},
                {"runs", runs}};
    }

    const ExperimentConfig c = resolve_config(command, input);
    json summary{{"command", command}, {"config", c.to_json()}};

    if (command == "sweep") {
        const auto r = run_recovery_sweep(c);
        summary["curve"] = curve_json(r.curve);
    } else if (command == "noise") {
        const auto r = run_noise_study(c);
        summary["levels"] = r.levels;
        summary["mean_rel_err"] = r.mean_rel_err;
        summary["median_rel_err"] = r.median_rel_err;
        summary["slope"] = r.slope;
        summary["intercept"] = r.intercept;
        summary["r_squared"] = r.r_squared;
    } else if (command == "timing") {
        const auto rows = run_timing_table(default_timing_cells(c), c.out_dir, c.experiment_id);
        json table = json::array();
        for (const auto& row : rows)
            table.push_back({{"model", row.model},
                             {"solver", row.solver},
                             {"m_or_L", row.m_or_L},
                             {"trials", row.trials},
                             {"successes", row.successes},
                             {"mean_iters_or_cycles", row.mean_iters_or_cycles},
                             {"mean_wall_ms", row.mean_wall_ms},
                             {"mean_rel_err", row.mean_rel_err},
                             {"skipped", row.skipped}});
        summary["rows"] = table;
    } else if (command == "relax") {
        const auto r = run_relaxation_comparison(c);
        summary["mean_cycles_lambda1"] = r.mean_cycles_plain;
        summary["mean_cycles_relaxed"] = r.mean_cycles_relaxed;
        summary["success_rate_lambda1"] = r.plain.curve.front().success_rate;
        summary["success_rate_relaxed"] = r.relaxed.curve.front().success_rate;
        summary["trace_cycles"] = std::max(r.mean_error_plain.size(), r.mean_error_relaxed.size());
    } else if (command == "stats") {
        const auto s = run_stats(c);
        summary["sigma_min"] = s.sigma_min;
        summary["sigma_max"] = s.sigma_max;
        summary["frobenius"] = s.frobenius;
        summary["scaled_condition"] = s.scaled_condition;
        summary["block_size"] = c.resolved_block_size();
        summary["mean_block_condition"] = s.mean_block_condition;
        summary["max_block_condition"] = s.max_block_condition;
        summary["paving_alpha"] = s.paving_alpha;
        summary["paving_beta"] = s.paving_beta;
        summary["bai_yin_prediction"] = s.bai_yin_prediction;
    } else {
        throw Error(ErrorCode::Config,
                    "unknown command '" + command + "' (sweep, noise, timing, relax, image, verify, stats)");
    }
    return summary;
}

} // namespace phaseless
