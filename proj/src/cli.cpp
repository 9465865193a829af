#include "rhsmm/cli.hpp"

#include "rhsmm/pipeline.hpp"
#include "rhsmm/sim_study.hpp"

#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <optional>

namespace rhsmm {

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string output = ".";
    std::string model;
    std::optional<double> tau;
    bool quiet = false;
};

RunConfig resolve_config(const GlobalOptions& g) {
    RunConfig cfg;
    if (!g.config.empty()) load_config_file(g.config, cfg);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.model.empty()) cfg.hyper.robust = g.model == "robust";
    if (g.tau) cfg.hyper.tau = *g.tau;
    cfg.output_dir = g.output;
    cfg.quiet = g.quiet;
    return cfg;
}

std::ofstream open_file(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw FileError("cannot write " + p.string());
    return out;
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
    CLI::App app{"Segmentation with hidden semi-Markov models and redundant-state merging", "rhsmm"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config, "Run configuration file (key = value)");
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--output", g.output, "Output directory");
    app.add_option("--model", g.model, "Sampler variant")->check(CLI::IsMember({"baseline", "robust"}));
    app.add_option("--tau", g.tau, "Merge threshold")->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", g.quiet, "Suppress progress output");

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
    std::string kind = "reference";
    int sim_segments = 30;
    sim->add_option("--kind", kind, "reference: 3-state scalar series; trip: 3-channel 10 Hz trip")
        ->check(CLI::IsMember({"reference", "trip"}));
    sim->add_option("--segments", sim_segments, "Segments in the reference series")->check(CLI::PositiveNumber);

    auto* fit = app.add_subcommand("fit", "Fit one dataset");
    std::string input;
    int factor = 1;
    bool do_normalize = false;
    std::string emission;
    fit->add_option("input", input, "Input CSV (header t,<channels...>)")->required();
    fit->add_option("--downsample", factor, "Average blocks of this many samples")->check(CLI::PositiveNumber);
    fit->add_flag("--normalize", do_normalize, "Z-score each channel after downsampling");
    fit->add_option("--emission", emission, "Emission family")->check(CLI::IsMember({"scalar", "multivariate"}));

    auto* rep = app.add_subcommand("replicate", "Run the baseline vs robust replication study");
    int reps = 20;
    int rep_segments = 30;
    unsigned threads = 0;
    rep->add_option("--reps", reps, "Number of replications")->check(CLI::PositiveNumber);
    rep->add_option("--segments", rep_segments, "Segments per generated sequence")->check(CLI::PositiveNumber);
    rep->add_option("--threads", threads, "Worker threads (0: all cores)");

    auto* exp = app.add_subcommand("export-segments", "Re-export segment tables from a saved model summary");
    std::string summary_path;
    exp->add_option("summary", summary_path, "model_summary.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = resolve_config(g);
        std::filesystem::create_directories(cfg.output_dir);
        auto say = [&](const std::string& msg) {
            if (!cfg.quiet) std::cerr << msg << '\n';
        };

        if (*sim) {
            Rng rng(cfg.seed);
            if (kind == "trip") {
                const auto trip = synthetic_trip({}, rng);
                auto out = open_file(cfg.output_dir / "trip.csv");
                write_trip_csv(out, trip);
                say("wrote " + (cfg.output_dir / "trip.csv").string());
            } else {
                const auto data = generate_sequence(GroundTruth::three_state_reference(sim_segments), rng);
                auto out = open_file(cfg.output_dir / "simulated.csv");
                write_series_csv(out, data.y);
                auto truth = open_file(cfg.output_dir / "truth_segments.csv");
                write_segments_csv(truth, data.truth);
                say("wrote " + (cfg.output_dir / "simulated.csv").string());
            }
        } else if (*fit) {
            cfg.input = input;
            cfg.downsample_factor = factor;
            cfg.normalize = do_normalize;
            if (emission == "scalar") cfg.emission = EmissionFamily::Scalar;
            if (emission == "multivariate") cfg.emission = EmissionFamily::Multivariate;
            const auto s = fit_command(cfg);
            say(s.model + ": " + std::to_string(s.states.size()) + " states, " + std::to_string(s.iterations) +
                " iterations, converged=" + (s.converged ? "yes" : "no"));
        } else if (*rep) {
            finalize_emission_prior(cfg, 1);
            Hyperparams baseline = cfg.hyper;
            baseline.robust = false;
            Hyperparams robust = cfg.hyper;
            robust.robust = true;
            StudyOptions opts;
            opts.threads = threads;
            if (!cfg.quiet) {
                opts.on_record = [](const ReplicationRecord& r) {
                    std::cerr << "rep " << r.rep << ' ' << r.model << ": K=" << r.n_states << " iterations=" << r.iterations
                              << (r.error.empty() ? "" : " error: " + r.error) << '\n';
                };
            }
            const auto summary = run_replication_study(baseline, robust, GroundTruth::three_state_reference(rep_segments),
                                                       reps, cfg.seed, opts);
            auto rec_out = open_file(cfg.output_dir / "replications.csv");
            write_replication_csv(rec_out, summary.records);
            auto sum_out = open_file(cfg.output_dir / "summary.csv");
            write_summary_csv(sum_out, summary);
            if (!cfg.quiet) std::cout << format_summary_table(summary);
        } else if (*exp) {
            export_segments(summary_path, cfg.output_dir);
            say("wrote segment tables to " + cfg.output_dir.string());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace rhsmm
