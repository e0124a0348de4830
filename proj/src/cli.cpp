#include "gridshield/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "gridshield/attackgen.hpp"
#include "gridshield/config.hpp"
#include "gridshield/eval.hpp"
#include "gridshield/grid.hpp"
#include "gridshield/io.hpp"
#include "gridshield/rng.hpp"

namespace gridshield::cli {

namespace fs = std::filesystem;

namespace {

int thread_cap() {
    if (const char* env = std::getenv("GRIDSHIELD_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct Options {
    std::string config_path;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    std::string out_override;
    std::string in_path;
    std::string method = "cecd-as";
    std::string channels;
    std::string kind;
    std::string suite;
    std::string betas = "10,30,60,90,150,300";
};

config::ExperimentConfig load(const Options& opt) {
    config::ExperimentConfig cfg = config::load_config(opt.config_path);
    if (opt.seed_given) config::apply_seed_override(cfg, opt.seed_override);
    if (!opt.out_override.empty()) cfg.out_dir = opt.out_override;
    return cfg;
}

detect::EnsembleConfig with_adapt(detect::EnsembleConfig d, bool adapt) {
    d.adapt = adapt;
    return d;
}

std::string trace_path(const config::ExperimentConfig& cfg, const std::string& kind) {
    return (fs::path(cfg.out_dir) / ("trace_" + kind + ".csv")).string();
}

grid::LoadProfile profile_for(const config::ExperimentConfig& cfg) {
    if (cfg.profile_path.empty()) return grid::default_profile(cfg.samples);
    return grid::load_profile(cfg.profile_path);
}

attack::LabeledDataset build_clean(const config::ExperimentConfig& cfg,
                                   const grid::GridCase& c) {
    const grid::LoadProfile profile = profile_for(cfg);
    const grid::DayStream day =
        grid::simulate_day(c, profile, cfg.samples, derive_seed(cfg.seed, "grid"));
    return attack::assemble_clean(c, day.z, cfg.queue,
                                  derive_seed(cfg.seed, "clean-net"));
}

attack::LabeledDataset read_trace_checked(const std::string& path) {
    if (!fs::exists(path))
        throw io::IoError("trace not found: " + path +
                          " (run `gridshield simulate`/`attack` first)");
    return io::read_trace(path);
}

detect::EnsembleConfig detector_for(const config::ExperimentConfig& cfg,
                                    const attack::LabeledDataset& ds) {
    detect::EnsembleConfig d = cfg.detector;
    if (cfg.eta_auto) {
        d.eta = 7.0;
        if (ds.scenario_name != "none")
            d.eta = eval::default_eta(attack::scenario_kind_from_string(ds.scenario_name));
    }
    return d;
}

int cmd_simulate(const Options& opt) {
    const config::ExperimentConfig cfg = load(opt);
    const grid::GridCase c = grid::load_case(cfg.case_path);
    const attack::LabeledDataset clean = build_clean(cfg, c);
    const std::string path = trace_path(cfg, "clean");
    io::write_trace(path, clean, cfg.fingerprint);
    std::cout << "case " << c.id << ": d=" << c.meas_dim() << " N=" << c.state_dim()
              << " buses=" << c.buses.size() << "\n"
              << "channels: sg/iat/td/pc x " << c.meas_dim() << " measurements, "
              << clean.samples() << " samples\n"
              << "wrote " << path << "\n";
    return 0;
}

int cmd_attack(const Options& opt) {
    config::ExperimentConfig cfg = load(opt);
    if (!opt.kind.empty())
        cfg.scenario.kind = attack::scenario_kind_from_string(opt.kind);
    const grid::GridCase c = grid::load_case(cfg.case_path);
    const std::string in =
        opt.in_path.empty() ? trace_path(cfg, "clean") : opt.in_path;
    const attack::LabeledDataset clean = read_trace_checked(in);
    if (clean.meta.case_id != c.id || clean.meta.d != c.meas_dim())
        throw io::IoError("trace " + in + " does not match case " + c.id);

    attack::AttackScenario sc = cfg.scenario;
    if (sc.seed == 0)
        sc.seed = derive_seed(cfg.seed, "attack-" + attack::to_string(sc.kind));
    const attack::LabeledDataset ds = attack::make_dataset(clean, c, sc);

    const std::string kind = attack::to_string(sc.kind);
    const std::string out = trace_path(cfg, kind);
    io::write_trace(out, ds, cfg.fingerprint);
    const std::string manifest =
        (fs::path(cfg.out_dir) / ("manifest_" + kind + ".json")).string();
    io::write_manifest(manifest, ds, cfg.fingerprint);
    std::cout << kind << ": " << ds.attacked_count << "/" << ds.samples()
              << " samples attacked, " << ds.events.size() << " events\n"
              << "wrote " << out << " and " << manifest << "\n";
    return 0;
}

attack::Layout layout_for(const Options& opt, const attack::LabeledDataset& ds) {
    if (!opt.channels.empty()) return attack::layout_from_string(opt.channels);
    return ds.layout;
}

int cmd_detect(const Options& opt) {
    const config::ExperimentConfig cfg = load(opt);
    const std::string in = opt.in_path.empty()
                               ? trace_path(cfg, attack::to_string(cfg.scenario.kind))
                               : opt.in_path;
    const attack::LabeledDataset ds = read_trace_checked(in);
    const detect::EnsembleConfig det = detector_for(cfg, ds);
    const int threads = thread_cap();

    eval::EvalReport rep;
    if (opt.method == "se") {
        const grid::GridCase c = grid::load_case(cfg.case_path);
        rep = eval::evaluate_se(ds, c, 0.95, cfg.protocol, threads, /*keep_logs=*/true);
    } else if (opt.method == "cd") {
        rep = eval::evaluate_ensemble(ds, layout_for(opt, ds), with_adapt(det, false),
                                      cfg.protocol, threads, /*global=*/true,
                                      /*keep_logs=*/true);
    } else if (opt.method == "ecd-as") {
        attack::Layout l = layout_for(opt, ds);
        if (l == attack::Layout::Cross) l = attack::Layout::Sg;
        rep = eval::evaluate_ensemble(ds, l, det, cfg.protocol, threads, false, true);
    } else {  // cecd-as
        rep = eval::evaluate_ensemble(ds, attack::Layout::Cross, det, cfg.protocol,
                                      threads, false, true);
    }

    const std::string out =
        (fs::path(cfg.out_dir) / ("detect_" + opt.method + "_" + ds.scenario_name + ".csv"))
            .string();
    io::write_detect_log(out, rep, cfg.fingerprint);
    std::cout << opt.method << " on " << ds.scenario_name << ": F1 " << rep.mean.f1
              << " +- " << rep.stddev.f1 << " over " << rep.folds.size() << " folds\n"
              << "wrote " << out << "\n";
    return 0;
}

int cmd_evaluate(const Options& opt) {
    const config::ExperimentConfig cfg = load(opt);
    const grid::GridCase c = grid::load_case(cfg.case_path);
    const int threads = thread_cap();

    std::vector<std::string> kinds;
    if (opt.suite == "paper")
        kinds = {"mfdi", "c_mfdi", "mdos", "mfdi_mdos", "mitm"};
    else if (!opt.in_path.empty())
        kinds = {""};
    else
        kinds = {attack::to_string(cfg.scenario.kind)};

    for (const std::string& kind : kinds) {
        const std::string in = kind.empty() ? opt.in_path : trace_path(cfg, kind);
        const attack::LabeledDataset ds = read_trace_checked(in);
        const detect::EnsembleConfig det = detector_for(cfg, ds);
        const auto reports = eval::compare_methods(ds, c, det, cfg.protocol, threads);
        const std::string name = ds.scenario_name;
        const std::string report_path =
            (fs::path(cfg.out_dir) / ("report_" + name + ".csv")).string();
        const std::string summary_path =
            (fs::path(cfg.out_dir) / ("summary_" + name + ".json")).string();
        io::write_report_csv(report_path, reports, cfg.fingerprint);
        io::write_summary_json(summary_path, reports, cfg.fingerprint);
        std::cout << name << ":\n";
        for (const auto& r : reports)
            std::cout << "  " << r.method << " / " << r.layer << " / " << r.information
                      << ": F1 " << r.mean.f1 << " +- " << r.stddev.f1 << "\n";
        std::cout << "wrote " << report_path << " and " << summary_path << "\n";
    }
    return 0;
}

int cmd_sweep(const Options& opt) {
    const config::ExperimentConfig cfg = load(opt);
    const std::string in = opt.in_path.empty()
                               ? trace_path(cfg, attack::to_string(cfg.scenario.kind))
                               : opt.in_path;
    const attack::LabeledDataset ds = read_trace_checked(in);
    const detect::EnsembleConfig det = detector_for(cfg, ds);

    std::vector<int> betas;
    {
        std::stringstream ss(opt.betas);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) betas.push_back(std::stoi(tok));
    }

    const auto rows = eval::sweep_beta(ds, ds.layout == attack::Layout::Pc
                                               ? attack::Layout::Pc
                                               : attack::Layout::Cross,
                                       det, cfg.protocol, betas, thread_cap());
    const std::string out =
        (fs::path(cfg.out_dir) / ("sweep_" + ds.scenario_name + ".csv")).string();
    io::write_sweep_csv(out, rows, cfg.fingerprint);
    for (const auto& r : rows)
        std::cout << "beta " << r.beta << ": F1 " << r.f1_mean << " (" << r.wall_ms
                  << " ms)" << (r.knee ? "  <- knee" : "") << "\n";
    std::cout << "wrote " << out << "\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"gridshield: cross-layer smart-grid attack simulation and detection"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    CLI::Option* seed_opt =
        app.add_option("--seed", opt.seed_override, "override the config seed");
    app.add_option("--out", opt.out_override, "override the output directory");

    CLI::App* sim = app.add_subcommand("simulate", "generate the clean trace");
    CLI::App* atk = app.add_subcommand("attack", "inject a labeled attack scenario");
    atk->add_option("--in", opt.in_path, "clean trace path");
    atk->add_option("--kind", opt.kind, "scenario kind override")
        ->check(CLI::IsMember({"mfdi", "c_mfdi", "mdos", "mfdi_mdos", "mitm"}));
    CLI::App* det = app.add_subcommand("detect", "run one detector, write the log");
    det->add_option("--in", opt.in_path, "labeled trace path");
    det->add_option("--method", opt.method, "detector")
        ->check(CLI::IsMember({"se", "cd", "ecd-as", "cecd-as"}));
    det->add_option("--channels", opt.channels, "channel layout")
        ->check(CLI::IsMember({"sg", "iat", "td", "pc", "all"}));
    CLI::App* ev = app.add_subcommand("evaluate", "score methods, write reports");
    ev->add_option("--in", opt.in_path, "labeled trace path");
    ev->add_option("--suite", opt.suite, "evaluation suite")
        ->check(CLI::IsMember({"paper"}));
    CLI::App* sw = app.add_subcommand("sweep", "window-size study");
    sw->add_option("--in", opt.in_path, "labeled trace path");
    sw->add_option("--betas", opt.betas, "comma-separated window sizes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    opt.seed_given = seed_opt->count() > 0;

    try {
        if (sim->parsed()) return cmd_simulate(opt);
        if (atk->parsed()) return cmd_attack(opt);
        if (det->parsed()) return cmd_detect(opt);
        if (ev->parsed()) return cmd_evaluate(opt);
        if (sw->parsed()) return cmd_sweep(opt);
        return 2;
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace gridshield::cli
