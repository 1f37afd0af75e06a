#include "rffhsmm/bench.hpp"

#include "rffhsmm/model_io.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace rffhsmm {

const BenchPoint* BenchReport::find(long frames, Backend backend) const {
    for (const auto& p : points)
        if (p.frames == frames && p.backend == backend && !p.skipped) return &p;
    return nullptr;
}

nlohmann::json capture_environment(int threads) {
    std::string cpu = "unknown";
    std::ifstream info("/proc/cpuinfo");
    for (std::string line; std::getline(info, line);)
        if (line.rfind("model name", 0) == 0) {
            cpu = line.substr(line.find(':') + 2);
            break;
        }
    return {{"cpu", cpu}, {"build", build_info()}, {"threads", threads}};
}

nlohmann::json BenchReport::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points)
        pts.push_back({{"duplication", p.duplication},
                       {"frames", p.frames},
                       {"backend", to_string(p.backend)},
                       {"skipped", p.skipped},
                       {"trials", p.seconds.size()},
                       {"seconds", p.seconds},
                       {"mean_seconds", p.mean_seconds},
                       {"mean_phases",
                        {{"init", p.mean_phases.init},
                         {"emission", p.mean_phases.emission},
                         {"dp", p.mean_phases.dp},
                         {"stats", p.mean_phases.stats},
                         {"refresh", p.mean_phases.refresh},
                         {"total", p.mean_phases.total}}}});
    nlohmann::json sp = nlohmann::json::array();
    for (const auto& s : speedups)
        sp.push_back({{"frames", s.frames}, {"t_gp", s.gp_seconds}, {"t_rff", s.rff_seconds}, {"ratio", s.ratio}});
    return {{"config", config}, {"environment", environment}, {"trials", trials}, {"points", pts}, {"speedups", sp}};
}

std::string BenchReport::to_csv() const {
    std::ostringstream out;
    out << std::setprecision(9);
    out << "frames,duplication,backend,trials,mean_seconds,speedup\n";
    for (const auto& p : points) {
        if (p.skipped) continue;
        out << p.frames << ',' << p.duplication << ',' << to_string(p.backend) << ',' << p.seconds.size() << ','
            << p.mean_seconds << ',';
        for (const auto& s : speedups)
            if (s.frames == p.frames) out << s.ratio;
        out << '\n';
    }
    return out.str();
}

std::string BenchReport::gnuplot_script(const std::string& csv_name) const {
    std::ostringstream out;
    out << "set datafile separator ','\n"
        << "set key autotitle columnhead\n"
        << "set xlabel 'frames'\n"
        << "set ylabel 'seconds'\n"
        << "set logscale y\n"
        << "set terminal pngcairo size 800,500\n"
        << "set output 'bench_time.png'\n"
        << "plot '" << csv_name << "' using 1:(stringcolumn(3) eq 'rff' ? $5 : 1/0) with linespoints title 'rff', \\\n"
        << "     '" << csv_name << "' using 1:(stringcolumn(3) eq 'exact-gp' ? $5 : 1/0) with linespoints title 'exact-gp'\n"
        << "unset logscale y\n"
        << "set output 'bench_time_rff.png'\n"
        << "plot '" << csv_name << "' using 1:(stringcolumn(3) eq 'rff' ? $5 : 1/0) with linespoints title 'rff'\n";
    return out.str();
}

BenchReport run_bench(const SequenceStore& base, const BenchOptions& options, std::ostream* log) {
    options.config.validate();
    if (options.trials < 1) throw std::invalid_argument("bench: trials must be >= 1");
    BenchReport report;
    report.config = to_json(options.config);
    report.config["duplications"] = options.duplications;
    report.config["max_gp_frames"] = options.max_gp_frames;
    report.environment = capture_environment(options.config.threads);
    report.trials = options.trials;

    for (int dup : options.duplications) {
        const SequenceStore data = duplicate(base, dup);
        const long frames = data.total_frames();
        for (Backend backend : options.backends) {
            BenchPoint point;
            point.duplication = dup;
            point.frames = frames;
            point.backend = backend;
            if (backend == Backend::exact_gp && frames > options.max_gp_frames) {
                point.skipped = true;
                report.points.push_back(point);
                if (log) *log << "bench: " << frames << " frames, exact-gp skipped (--max-gp-frames)\n";
                continue;
            }
            TrainerConfig config = options.config;
            config.backend = backend;
            config.restarts = 1;
            for (int trial = 0; trial < options.trials; ++trial) {
                const auto start = std::chrono::steady_clock::now();
                const SegmentationResult run = train_single(data.sequences, config, restart_seed(config.seed, trial));
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                point.seconds.push_back(secs);
                point.mean_phases += run.timing;
                if (log)
                    *log << "bench: " << frames << " frames, " << to_string(backend) << ", trial " << trial << ": "
                         << secs << " s\n";
            }
            double sum = 0.0;
            for (double s : point.seconds) sum += s;
            const double n = static_cast<double>(point.seconds.size());
            point.mean_seconds = sum / n;
            auto& m = point.mean_phases;
            m.init /= n;
            m.emission /= n;
            m.dp /= n;
            m.stats /= n;
            m.refresh /= n;
            m.total /= n;
            report.points.push_back(std::move(point));
        }
        const auto* gp = report.find(frames, Backend::exact_gp);
        const auto* rff = report.find(frames, Backend::rff);
        if (gp && rff)
            report.speedups.push_back(
                Speedup{frames, gp->mean_seconds, rff->mean_seconds, gp->mean_seconds / rff->mean_seconds});
    }
    return report;
}

}  // namespace rffhsmm
