// Command-line driver for the directional-split exponential ADR solver:
// single runs with field snapshots and indicator series, convergence and
// splitting-defect studies, and the model catalog.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "adr/integrate.hpp"
#include "adr/models.hpp"
#include "adr/snapshot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBlowUp = 3;
constexpr int kExitIo = 4;

struct Options {
    std::string model;
    std::vector<int> n;
    std::vector<std::int64_t> steps;
    double tfinal = 0.0;
    std::string scheme = "etd2rkds";
    std::optional<std::uint64_t> seed;
    std::string out;
    std::int64_t snapshot_every = 0;
    std::int64_t ref_mult = 4;
    std::vector<double> taus = {1e-3, 5e-4, 2.5e-4};
    std::string config_path;
};

// Fills options the user did not pass on the command line from a JSON file;
// explicit flags win.
void apply_config_file(const CLI::App& cmd, Options& opt) {
    if (opt.config_path.empty()) return;
    std::ifstream in(opt.config_path);
    if (!in) throw adr::IoError("cannot open config file: " + opt.config_path);
    json cfg = json::parse(in);

    auto unset = [&](const char* flag) {
        const CLI::Option* o = cmd.get_option_no_throw(flag);
        return o == nullptr || o->count() == 0;
    };
    if (cfg.contains("model") && unset("--model")) opt.model = cfg["model"].get<std::string>();
    if (cfg.contains("n") && unset("--n")) {
        if (cfg["n"].is_array()) opt.n = cfg["n"].get<std::vector<int>>();
        else opt.n = {cfg["n"].get<int>()};
    }
    if (cfg.contains("steps") && unset("--steps")) {
        if (cfg["steps"].is_array()) opt.steps = cfg["steps"].get<std::vector<std::int64_t>>();
        else opt.steps = {cfg["steps"].get<std::int64_t>()};
    }
    if (cfg.contains("tfinal") && unset("--tfinal")) opt.tfinal = cfg["tfinal"].get<double>();
    if (cfg.contains("scheme") && unset("--scheme")) opt.scheme = cfg["scheme"].get<std::string>();
    if (cfg.contains("seed") && unset("--seed")) opt.seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("out") && unset("--out")) opt.out = cfg["out"].get<std::string>();
    if (cfg.contains("snapshot_every") && unset("--snapshot-every"))
        opt.snapshot_every = cfg["snapshot_every"].get<std::int64_t>();
    if (cfg.contains("ref_mult") && unset("--ref-mult")) opt.ref_mult = cfg["ref_mult"].get<std::int64_t>();
    if (cfg.contains("taus") && unset("--taus")) opt.taus = cfg["taus"].get<std::vector<double>>();
}

adr::GridSpec make_grid(const adr::ModelSpec& model, const std::vector<int>& n) {
    if (n.empty()) throw std::invalid_argument("missing grid size --n");
    adr::GridSpec grid;
    grid.intervals = model.intervals;
    if (n.size() == 1) {
        grid.points.assign(static_cast<std::size_t>(model.dim), n[0]);
    } else if (static_cast<int>(n.size()) == model.dim) {
        grid.points = n;
    } else {
        throw std::invalid_argument("--n needs 1 value or one per axis (model is " +
                                    std::to_string(model.dim) + "D)");
    }
    for (int p : grid.points)
        if (p < 3) throw std::invalid_argument("--n values must be >= 3");
    return grid;
}

json grid_to_json(const adr::GridSpec& grid) {
    json j;
    j["points"] = grid.points;
    j["intervals"] = json::array();
    for (const auto& iv : grid.intervals) j["intervals"].push_back({iv[0], iv[1]});
    return j;
}

void write_metadata(const fs::path& dir, const json& meta) {
    std::ofstream out(dir / "metadata.json");
    if (!out) throw adr::IoError("cannot write metadata: " + (dir / "metadata.json").string());
    out << meta.dump(2) << "\n";
}

fs::path prepare_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw adr::IoError("cannot create output directory: " + out);
    return out;
}

int cmd_run(const CLI::App& cmd, Options opt) {
    apply_config_file(cmd, opt);
    const adr::ModelSpec& model = adr::find_model(opt.model);
    const adr::GridSpec grid = make_grid(model, opt.n);
    const adr::Scheme scheme = adr::scheme_from_string(opt.scheme);
    if (opt.steps.size() != 1 || opt.steps[0] < 1)
        throw std::invalid_argument("run needs a single --steps value >= 1");
    if (!(opt.tfinal > 0.0)) throw std::invalid_argument("run needs --tfinal > 0");
    if (opt.out.empty()) throw std::invalid_argument("run needs --out");
    const std::int64_t steps = opt.steps[0];
    const double tau = opt.tfinal / static_cast<double>(steps);
    const std::uint64_t seed = opt.seed.value_or(model.default_seed);

    const fs::path dir = prepare_out_dir(opt.out);
    adr::RunObservers obs;
    obs.indicator_stride = 1;
    obs.snapshot_stride = opt.snapshot_every;
    obs.on_snapshot = [&](const adr::SimState& s) {
        adr::write_snapshot(dir / ("u_" + std::to_string(s.n) + ".adrf"), s.U);
        adr::write_snapshot(dir / ("v_" + std::to_string(s.n) + ".adrf"), s.V);
    };

    const adr::RunResult res = adr::run_steps(model, grid, scheme, tau, steps, obs, seed);
    adr::write_indicators_csv(dir / "indicators.csv", res.indicators);

    json meta;
    meta["command"] = "run";
    meta["model"] = model.name;
    meta["scheme"] = std::string(adr::to_string(scheme));
    meta["grid"] = grid_to_json(grid);
    meta["tau"] = tau;
    meta["steps"] = steps;
    meta["tfinal"] = opt.tfinal;
    meta["seed"] = seed;
    meta["snapshot_every"] = opt.snapshot_every;
    meta["wall_seconds"] = res.wall_seconds;
    meta["per_step_seconds"] = res.per_step_seconds;
    meta["formats"] = {{"snapshot", adr::kSnapshotFormatVersion},
                       {"indicators_csv", adr::kIndicatorsFormatVersion}};
    write_metadata(dir, meta);

    std::printf("%s %s: %lld steps, tau = %.6g, T = %.6g\n", model.name.c_str(),
                adr::to_string(scheme).data(), static_cast<long long>(steps), tau, opt.tfinal);
    std::printf("wall %.3f s (%.3e s/step), final <U> = %.9g, final increment = %.6e\n",
                res.wall_seconds, res.per_step_seconds, adr::spatial_mean(res.state.U),
                res.indicators.final_increment);
    std::printf("outputs in %s\n", dir.string().c_str());
    return kExitOk;
}

int cmd_convergence(const CLI::App& cmd, Options opt) {
    apply_config_file(cmd, opt);
    const adr::ModelSpec& model = adr::find_model(opt.model);
    const adr::GridSpec grid = make_grid(model, opt.n);
    const adr::Scheme scheme = adr::scheme_from_string(opt.scheme);
    if (opt.steps.size() < 2)
        throw std::invalid_argument("convergence needs --steps with at least 2 values");
    if (!(opt.tfinal > 0.0)) throw std::invalid_argument("convergence needs --tfinal > 0");
    if (opt.ref_mult < 2) throw std::invalid_argument("--ref-mult must be >= 2");
    const std::uint64_t seed = opt.seed.value_or(model.default_seed);
    const std::int64_t ref_steps = opt.ref_mult * opt.steps.back();

    const adr::ConvergenceStudy study =
        adr::convergence_study(model, grid, scheme, opt.tfinal, opt.steps, ref_steps, seed);

    std::string csv = "steps,time_s,error,order\n";
    char line[160];
    for (const adr::ConvergenceRow& row : study.rows) {
        if (std::isnan(row.order))
            std::snprintf(line, sizeof line, "%lld,%.3f,%.6e,\n", static_cast<long long>(row.steps),
                          row.seconds, row.error);
        else
            std::snprintf(line, sizeof line, "%lld,%.3f,%.6e,%.4f\n",
                          static_cast<long long>(row.steps), row.seconds, row.error, row.order);
        csv += line;
    }
    std::printf("# %s, %s, n = %d^%d, T = %g, reference = %lld steps\n", model.name.c_str(),
                adr::to_string(scheme).data(), grid.points[0], model.dim, opt.tfinal,
                static_cast<long long>(ref_steps));
    std::fputs(csv.c_str(), stdout);

    if (!opt.out.empty()) {
        const fs::path dir = prepare_out_dir(opt.out);
        std::ofstream out(dir / "convergence.csv");
        if (!out) throw adr::IoError("cannot write convergence.csv");
        out << csv;
        json meta;
        meta["command"] = "convergence";
        meta["model"] = model.name;
        meta["scheme"] = std::string(adr::to_string(scheme));
        meta["grid"] = grid_to_json(grid);
        meta["steps"] = opt.steps;
        meta["tfinal"] = opt.tfinal;
        meta["seed"] = seed;
        meta["reference_steps"] = ref_steps;
        meta["formats"] = {{"snapshot", adr::kSnapshotFormatVersion},
                           {"indicators_csv", adr::kIndicatorsFormatVersion}};
        write_metadata(dir, meta);
    }
    return kExitOk;
}

int cmd_splitting_test(const CLI::App& cmd, Options opt) {
    apply_config_file(cmd, opt);
    const adr::ModelSpec& model = adr::find_model(opt.model);
    if (opt.n.empty()) opt.n = {12};
    const adr::GridSpec grid = make_grid(model, opt.n);
    if (opt.taus.empty()) throw std::invalid_argument("splitting-test needs --taus");
    const std::uint64_t seed = opt.seed.value_or(model.default_seed);

    const adr::SplittingStudy study = adr::splitting_study(model, grid, opt.taus, seed);

    std::printf("# one-step defect vs dense two-stage exponential oracle, %s, n = %d^%d\n",
                model.name.c_str(), grid.points[0], model.dim);
    std::printf("tau,defect,note\n");
    for (const adr::SplittingRow& row : study.rows)
        std::printf("%.6e,%.6e,%s\n", row.tau, row.defect,
                    row.roundoff ? "roundoff" : row.pre_asymptotic ? "outside asymptotic range" : "");
    if (std::isnan(study.slope))
        std::printf("# slope: n/a (fewer than 2 defects above roundoff)\n");
    else
        std::printf("# fitted log-log slope: %.3f\n", study.slope);
    return kExitOk;
}

int cmd_list_models() {
    for (const adr::ModelSpec& m : adr::model_catalog()) {
        std::string domain;
        for (std::size_t mu = 0; mu < m.intervals.size(); ++mu) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%s[%g,%g]", mu ? "x" : "", m.intervals[mu][0],
                          m.intervals[mu][1]);
            domain += buf;
        }
        std::printf("%-19s d=%d  domain=%s  seed=%llu\n", m.name.c_str(), m.dim, domain.c_str(),
                    static_cast<unsigned long long>(m.default_seed));
        std::printf("    %s\n", m.description.c_str());
        std::string params;
        for (const auto& [key, value] : m.parameters) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s%s=%.15g", params.empty() ? "" : " ", key.c_str(), value);
            params += buf;
        }
        std::printf("    %s\n", params.c_str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    adr::configure_blas_runtime();
    if (const char* env = std::getenv("ADR_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) adr::set_parallelism(t);
    }

    CLI::App app{"Directional-split exponential integrator for two-component ADR systems"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--model", opt.model, "registered model name");
        cmd->add_option("--n", opt.n, "grid points per axis (single value or one per axis)")
            ->delimiter(',');
        cmd->add_option("--steps", opt.steps, "time step count(s)")->delimiter(',');
        cmd->add_option("--tfinal", opt.tfinal, "final time");
        cmd->add_option("--scheme", opt.scheme,
                        "etd2rkds | lawson2b | etd2rk-dense-oracle | rk4-oracle");
        cmd->add_option("--seed", opt.seed, "noise seed (default: model's documented seed)");
        cmd->add_option("--out", opt.out, "output directory");
        cmd->add_option("--snapshot-every", opt.snapshot_every, "also snapshot every k steps");
        cmd->add_option("--ref-mult", opt.ref_mult, "reference steps = ref-mult * max(steps)");
        cmd->add_option("--taus", opt.taus, "time step sizes for the splitting test")->delimiter(',');
        cmd->add_option("--config", opt.config_path, "JSON config file (flags override it)");
    };

    CLI::App* run = app.add_subcommand("run", "integrate one configuration and write outputs");
    CLI::App* conv = app.add_subcommand("convergence", "time-step sweep against a fine reference");
    CLI::App* split = app.add_subcommand("splitting-test", "one-step defect vs the dense oracle");
    app.add_subcommand("list-models", "print the model catalog");
    add_common(run);
    add_common(conv);
    add_common(split);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(*run, opt);
        if (conv->parsed()) return cmd_convergence(*conv, opt);
        if (split->parsed()) return cmd_splitting_test(*split, opt);
        return cmd_list_models();
    } catch (const adr::BlowUpError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBlowUp;
    } catch (const adr::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    }
}
