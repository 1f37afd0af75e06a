#include "rffhsmm/cli.hpp"

#include "rffhsmm/bench.hpp"
#include "rffhsmm/evaluation.hpp"
#include "rffhsmm/model_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#ifndef RFFHSMM_DATA_DIR
#define RFFHSMM_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace rffhsmm {

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j = rffhsmm::to_json(trainer);
    j["downsample"] = downsample;
    j["normalize"] = normalize;
    j["inputs"] = inputs;
    j["synthetic_spec"] = synthetic_spec;
    j["synthetic_seed"] = synthetic_seed;
    j["delimiter"] = delimiter;
    j["columns"] = columns;
    j["label_column"] = label_column;
    j["header"] = header;
    return j;
}

LoadOptions RunConfig::load_options() const {
    LoadOptions o;
    if (delimiter == "tab" || delimiter == "\\t") {
        o.delimiter = '\t';
    } else if (delimiter == "space" || delimiter == "whitespace" || delimiter == " ") {
        o.delimiter = ' ';
    } else if (delimiter.size() == 1) {
        o.delimiter = delimiter.front();
    } else {
        throw std::invalid_argument("delimiter must be a single character, 'tab' or 'space'");
    }
    o.header = header;
    o.columns = columns;
    o.label_column = label_column;
    return o;
}

SequenceStore load_corpus(const RunConfig& config) {
    SequenceStore raw;
    if (!config.synthetic_spec.empty()) {
        if (!config.inputs.empty()) throw std::invalid_argument("give either input files or --synthetic, not both");
        raw = generate_synthetic(SyntheticSpec::from_json(read_json(config.synthetic_spec)), config.synthetic_seed);
    } else {
        if (config.inputs.empty()) throw std::invalid_argument("no input files (use --input or --synthetic)");
        std::vector<fs::path> paths(config.inputs.begin(), config.inputs.end());
        raw = load_sequences(paths, config.load_options());
    }
    return preprocess(raw, config.downsample, config.normalize);
}

namespace {

struct Options {
    RunConfig run;
    std::string backend = "rff";
    // segment / eval
    std::string model_path;
    std::string labels_path;
    std::string truth_path;
    std::string report_path;
    // bench
    std::vector<int> duplications{1, 10, 20, 40, 80};
    std::vector<std::string> bench_backends{"rff", "exact-gp"};
    int trials = 5;
    long max_gp_frames = 10000;
};

void add_trainer_options(CLI::App& cmd, Options& o) {
    auto& t = o.run.trainer;
    cmd.add_option("--backend", o.backend, "Emission model: rff or exact-gp")->capture_default_str();
    cmd.add_option("--M,--num-features", t.num_features, "Number of random Fourier features")->capture_default_str();
    cmd.add_option("--lengthscale", t.lengthscale, "RBF lengthscale (time-index units)")->capture_default_str();
    cmd.add_option("--beta", t.beta, "Observation noise precision")->capture_default_str();
    cmd.add_option("--psi", t.psi, "Prior precision of the regression weights")->capture_default_str();
    cmd.add_option("--C,--classes", t.num_classes, "Number of segment classes")->capture_default_str();
    cmd.add_option("--K-min", t.min_duration, "Minimum segment length (frames)")->capture_default_str();
    cmd.add_option("--K-max", t.max_duration, "Maximum segment length (frames)")->capture_default_str();
    cmd.add_option("--lambda", t.lambda, "Poisson mean segment length")->capture_default_str();
    cmd.add_option("--alpha", t.alpha, "Dirichlet smoothing of transitions")->capture_default_str();
    cmd.add_option("--iterations", t.iterations, "Blocked Gibbs sweeps")->capture_default_str();
    cmd.add_option("--restarts", t.restarts, "Independent chains; the most likely one is kept")
        ->capture_default_str();
    cmd.add_option("--seed", t.seed, "Master random seed")->capture_default_str();
    cmd.add_option("--threads", t.threads, "Worker threads for per-class work")
        ->envname("RFFHSMM_THREADS")
        ->capture_default_str();
    cmd.add_flag("--shuffle", t.shuffle, "Visit sequences in random order each sweep");
    cmd.add_flag("--audit", t.audit, "Check statistics against a batch rebuild after every sweep");
}

void add_input_options(CLI::App& cmd, Options& o) {
    auto& r = o.run;
    cmd.add_option("--input,-i", r.inputs, "Delimited input files, one frame per row");
    cmd.add_option("--synthetic", r.synthetic_spec, "Synthetic corpus spec (JSON) instead of input files");
    cmd.add_option("--synthetic-seed", r.synthetic_seed, "Seed for the synthetic generator")->capture_default_str();
    cmd.add_option("--delimiter", r.delimiter, "Field delimiter (single char, 'tab' or 'space')")
        ->capture_default_str();
    cmd.add_option("--columns", r.columns, "0-based data columns (default: all but the label column)")
        ->delimiter(',');
    cmd.add_option("--label-column", r.label_column, "0-based ground-truth label column")->capture_default_str();
    cmd.add_flag("--header", r.header, "Skip the first non-comment row of each file");
    cmd.add_option("--downsample", r.downsample, "Keep every k-th frame")->capture_default_str();
    cmd.add_flag("--normalize,!--no-normalize", r.normalize, "Min-max normalize to [-1, 1]");
    cmd.add_option("--out,-o", r.out_dir, "Output directory")->capture_default_str();
}

void finish_config(Options& o) {
    o.run.trainer.backend = parse_backend(o.backend);
    o.run.trainer.validate();
    if (o.run.downsample < 1) throw std::invalid_argument("downsample must be >= 1");
}

nlohmann::json spans_json(const std::vector<std::vector<Segment>>& spans, const SequenceStore& data) {
    nlohmann::json seqs = nlohmann::json::array();
    for (std::size_t n = 0; n < spans.size(); ++n) {
        nlohmann::json segs = nlohmann::json::array();
        for (const auto& s : spans[n]) segs.push_back({{"start", s.start}, {"length", s.length}, {"label", s.label}});
        seqs.push_back({{"name", n < data.names.size() ? data.names[n] : std::to_string(n)},
                        {"frames", data.sequences[n].cols()},
                        {"segments", segs}});
    }
    return seqs;
}

std::vector<int> flatten(const std::vector<std::vector<int>>& labels) {
    std::vector<int> flat;
    for (const auto& l : labels) flat.insert(flat.end(), l.begin(), l.end());
    return flat;
}

nlohmann::json timing_json(const PhaseTimes& t) {
    return {{"init", t.init},   {"emission", t.emission}, {"dp", t.dp},
            {"stats", t.stats}, {"refresh", t.refresh},   {"total", t.total}};
}

int cmd_train(const Options& o, std::ostream& out) {
    const RunConfig& cfg = o.run;
    const SequenceStore data = load_corpus(cfg);
    for (const auto& w : HsmmParams::make(cfg.trainer.num_classes, cfg.trainer.min_duration, cfg.trainer.max_duration,
                                          cfg.trainer.lambda, cfg.trainer.alpha)
                             .warnings())
        out << "warning: " << w << '\n';

    const auto start = std::chrono::steady_clock::now();
    const SegmentationResult result = train(data.sequences, cfg.trainer);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    const nlohmann::json echo = cfg.to_json();
    const nlohmann::json build = build_info();

    write_json(dir / "model.json", snapshot_to_json(*result.state, data.record, echo));
    write_labels(dir / "labels.txt", result.labels, "config " + echo.dump() + " build " + build.dump());

    nlohmann::json spans = {{"config", echo},
                            {"build", build},
                            {"final_loglik", result.final_loglik},
                            {"best_restart", result.best_restart},
                            {"restart_seeds", result.restart_seeds},
                            {"restart_logliks", result.restart_logliks},
                            {"sequences", spans_json(result.spans, data)}};
    write_json(dir / "spans.json", spans);

    {
        std::ofstream trace(dir / "loglik.csv");
        trace << "# config " << echo.dump() << " build " << build.dump() << '\n';
        trace << "iteration,loglik\n" << std::setprecision(17);
        for (std::size_t i = 0; i < result.loglik_trace.size(); ++i)
            trace << i + 1 << ',' << result.loglik_trace[i] << '\n';
    }
    write_json(dir / "timing.json",
               {{"config", echo}, {"build", build}, {"wall_seconds", wall}, {"phases", timing_json(result.timing)}});

    out << "trained " << data.sequences.size() << " sequences (" << data.total_frames() << " frames) with "
        << to_string(cfg.trainer.backend) << " in " << wall << " s\n";
    for (std::size_t r = 0; r < result.restart_logliks.size(); ++r)
        out << "  restart " << r << " seed " << result.restart_seeds[r] << " loglik " << result.restart_logliks[r]
            << (static_cast<int>(r) == result.best_restart ? "  <- best" : "") << '\n';
    if (data.has_truth()) {
        EvalReport report = evaluate_nhd(flatten(result.labels), flatten(data.truth));
        nlohmann::json j = report.to_json();
        j["config"] = echo;
        j["build"] = build;
        write_json(dir / "eval.json", j);
        out << "  NHD vs ground truth: " << report.nhd << '\n';
    }
    out << "wrote " << dir.string() << "/{model.json,labels.txt,spans.json,loglik.csv,timing.json}\n";
    return kExitOk;
}

int cmd_segment(const Options& o, std::ostream& out) {
    LoadedModel model = snapshot_from_json(read_json(o.model_path));
    RunConfig cfg = o.run;
    SequenceStore raw;
    if (!cfg.synthetic_spec.empty()) {
        raw = generate_synthetic(SyntheticSpec::from_json(read_json(cfg.synthetic_spec)), cfg.synthetic_seed);
    } else {
        if (cfg.inputs.empty()) throw std::invalid_argument("no input files (use --input or --synthetic)");
        raw = load_sequences(std::vector<fs::path>(cfg.inputs.begin(), cfg.inputs.end()), cfg.load_options());
    }
    // Same preprocessing as training.
    SequenceStore data = preprocess(raw, model.preprocessing.downsample, false);
    if (model.preprocessing.normalized)
        data = apply_normalization(data, model.preprocessing.mins, model.preprocessing.maxs);
    if (data.dims() != model.emissions->dims())
        throw DataError("input has " + std::to_string(data.dims()) + " dimensions, model expects " +
                        std::to_string(model.emissions->dims()));

    refresh_all(*model.emissions, cfg.trainer.threads);
    std::mt19937_64 rng(cfg.trainer.seed);
    std::vector<std::vector<Segment>> spans;
    std::vector<std::vector<int>> labels;
    double loglik = 0.0;
    for (const auto& seq : data.sequences) {
        const EmissionTable table =
            build_emission_table(*model.emissions, seq, model.hsmm.max_duration, cfg.trainer.threads);
        const ForwardLattice lattice = forward_filter(table, model.hsmm);
        loglik += lattice.log_likelihood();
        spans.push_back(backward_sample(lattice, model.hsmm, rng));
        labels.push_back(frame_labels(spans.back()));
    }

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    nlohmann::json echo = cfg.to_json();
    echo["model"] = o.model_path;
    echo["model_config"] = model.run_config;
    const nlohmann::json build = build_info();
    write_labels(dir / "labels.txt", labels, "config " + echo.dump() + " build " + build.dump());
    write_json(dir / "spans.json",
               {{"config", echo}, {"build", build}, {"loglik", loglik}, {"sequences", spans_json(spans, data)}});
    out << "segmented " << data.sequences.size() << " sequences, loglik " << loglik << '\n';
    if (data.has_truth()) {
        EvalReport report = evaluate_nhd(flatten(labels), flatten(data.truth));
        nlohmann::json j = report.to_json();
        j["config"] = echo;
        j["build"] = build;
        write_json(dir / "eval.json", j);
        out << "  NHD vs ground truth: " << report.nhd << '\n';
    }
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const EvalReport report = evaluate_nhd(read_labels(o.labels_path), read_labels(o.truth_path));
    nlohmann::json j = report.to_json();
    j["config"] = {{"labels", o.labels_path}, {"truth", o.truth_path}};
    j["build"] = build_info();
    if (!o.report_path.empty()) write_json(o.report_path, j);
    out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
    RunConfig cfg = o.run;
    if (cfg.inputs.empty() && cfg.synthetic_spec.empty())
        cfg.synthetic_spec = (fs::path(RFFHSMM_DATA_DIR) / "bench_base.json").string();
    const SequenceStore base = load_corpus(cfg);

    BenchOptions bench;
    bench.config = cfg.trainer;
    bench.duplications = o.duplications;
    bench.backends.clear();
    for (const auto& b : o.bench_backends) bench.backends.push_back(parse_backend(b));
    bench.trials = o.trials;
    bench.max_gp_frames = o.max_gp_frames;
    for (int d : bench.duplications)
        if (d < 1) throw std::invalid_argument("duplication factors must be positive");

    BenchReport report = run_bench(base, bench, &out);
    report.config["run_config"] = cfg.to_json();

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_json(dir / "bench.json", report.to_json());
    {
        std::ofstream csv(dir / "bench.csv");
        csv << "# config " << report.config.dump() << '\n' << report.to_csv();
    }
    {
        std::ofstream gp(dir / "bench.gp");
        gp << "# config " << report.config.dump() << '\n' << report.gnuplot_script("bench.csv");
    }
    out << "frames,backend,mean_seconds\n";
    for (const auto& p : report.points)
        if (!p.skipped) out << p.frames << ',' << to_string(p.backend) << ',' << p.mean_seconds << '\n';
    for (const auto& s : report.speedups) out << "speed-up at " << s.frames << " frames: " << s.ratio << "x\n";
    out << "wrote " << dir.string() << "/{bench.json,bench.csv,bench.gp}\n";
    return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
    const RunConfig& cfg = o.run;
    if (cfg.synthetic_spec.empty()) throw std::invalid_argument("synth requires --synthetic <spec.json>");
    const SyntheticSpec spec = SyntheticSpec::from_json(read_json(cfg.synthetic_spec));
    const SequenceStore store = generate_synthetic(spec, cfg.synthetic_seed);
    const fs::path dir(cfg.out_dir);
    const auto paths = write_sequences(store, dir);
    const nlohmann::json echo = cfg.to_json();
    write_labels(dir / "truth.txt", store.truth, "config " + echo.dump());
    write_json(dir / "synthetic_spec.json", {{"config", echo}, {"spec", spec.to_json()}});
    out << "wrote " << paths.size() << " sequences (" << store.total_frames() << " frames, label in last column) to "
        << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Unsupervised time-series segmentation with an RFF Gaussian-process HSMM"};
    app.require_subcommand(1);
    Options o;

    auto* train_cmd = app.add_subcommand("train", "Train on a corpus and write model, labels, spans and traces");
    add_trainer_options(*train_cmd, o);
    add_input_options(*train_cmd, o);

    auto* segment_cmd = app.add_subcommand("segment", "Label new data with a saved model (one FFBS pass)");
    segment_cmd->add_option("--model,-m", o.model_path, "Model snapshot (model.json)")->required();
    segment_cmd->add_option("--seed", o.run.trainer.seed, "Sampling seed")->capture_default_str();
    segment_cmd->add_option("--threads", o.run.trainer.threads)->envname("RFFHSMM_THREADS");
    add_input_options(*segment_cmd, o);

    auto* eval_cmd = app.add_subcommand("eval", "Normalized Hamming distance between two label files");
    eval_cmd->add_option("labels", o.labels_path, "Predicted labels, one integer per line")->required();
    eval_cmd->add_option("truth", o.truth_path, "Ground-truth labels, one integer per line")->required();
    eval_cmd->add_option("--out,-o", o.report_path, "Write the report JSON here");

    auto* bench_cmd = app.add_subcommand("bench", "Duplication-scaling timing of the rff and exact-gp backends");
    add_trainer_options(*bench_cmd, o);
    add_input_options(*bench_cmd, o);
    bench_cmd->add_option("--duplications", o.duplications, "Duplication factors of the base corpus")
        ->delimiter(',')
        ->capture_default_str();
    bench_cmd->add_option("--backends", o.bench_backends, "Backends to time")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--trials", o.trials, "Trials per point")->capture_default_str();
    bench_cmd->add_option("--max-gp-frames", o.max_gp_frames, "Skip exact-gp above this many frames")
        ->capture_default_str();

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
    synth_cmd->add_option("--spec,--synthetic", o.run.synthetic_spec, "Synthetic spec (JSON)")->required();
    synth_cmd->add_option("--seed,--synthetic-seed", o.run.synthetic_seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--out,-o", o.run.out_dir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (train_cmd->parsed() || bench_cmd->parsed()) finish_config(o);
        if (train_cmd->parsed()) return cmd_train(o, out);
        if (segment_cmd->parsed()) return cmd_segment(o, out);
        if (eval_cmd->parsed()) return cmd_eval(o, out);
        if (bench_cmd->parsed()) return cmd_bench(o, out);
        if (synth_cmd->parsed()) return cmd_synth(o, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InfeasibleSequence& e) {
        err << "error: infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const DataError& e) {
        err << "error: data: " << e.what() << '\n';
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        err << "error: json: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace rffhsmm
