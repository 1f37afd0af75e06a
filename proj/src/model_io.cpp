#include "rffhsmm/model_io.hpp"

#include <fstream>
#include <stdexcept>

#ifndef RFFHSMM_BUILD_ID
#define RFFHSMM_BUILD_ID "unknown"
#endif
#ifndef RFFHSMM_BUILD_FLAGS
#define RFFHSMM_BUILD_FLAGS ""
#endif

namespace rffhsmm {

nlohmann::json build_info() {
    return {{"id", RFFHSMM_BUILD_ID}, {"flags", RFFHSMM_BUILD_FLAGS}, {"compiler", __VERSION__}};
}

nlohmann::json to_json(const FeatureBank& bank) {
    return {{"M", bank.size()},
            {"lengthscale", bank.lengthscale()},
            {"seed", bank.seed()},
            {"omegas", bank.omegas()},
            {"phases", bank.phases()}};
}

FeatureBank feature_bank_from_json(const nlohmann::json& j) {
    FeatureBank bank(j.at("omegas").get<std::vector<double>>(), j.at("phases").get<std::vector<double>>(),
                     j.at("lengthscale").get<double>(), j.at("seed").get<std::uint64_t>());
    if (bank.size() != j.at("M").get<int>()) throw std::runtime_error("snapshot: bank M disagrees with arrays");
    return bank;
}

nlohmann::json to_json(const TrainerConfig& c) {
    return {{"backend", to_string(c.backend)},
            {"M", c.num_features},
            {"lengthscale", c.lengthscale},
            {"beta", c.beta},
            {"psi", c.psi},
            {"C", c.num_classes},
            {"K_min", c.min_duration},
            {"K_max", c.max_duration},
            {"lambda", c.lambda},
            {"alpha", c.alpha},
            {"iterations", c.iterations},
            {"restarts", c.restarts},
            {"seed", c.seed},
            {"shuffle", c.shuffle},
            {"audit", c.audit},
            {"threads", c.threads}};
}

TrainerConfig trainer_config_from_json(const nlohmann::json& j) {
    TrainerConfig c;
    c.backend = parse_backend(j.value("backend", std::string("rff")));
    c.num_features = j.value("M", c.num_features);
    c.lengthscale = j.value("lengthscale", c.lengthscale);
    c.beta = j.value("beta", c.beta);
    c.psi = j.value("psi", c.psi);
    c.num_classes = j.value("C", c.num_classes);
    c.min_duration = j.value("K_min", c.min_duration);
    c.max_duration = j.value("K_max", c.max_duration);
    c.lambda = j.value("lambda", c.lambda);
    c.alpha = j.value("alpha", c.alpha);
    c.iterations = j.value("iterations", c.iterations);
    c.restarts = j.value("restarts", c.restarts);
    c.seed = j.value("seed", c.seed);
    c.shuffle = j.value("shuffle", c.shuffle);
    c.audit = j.value("audit", c.audit);
    c.threads = j.value("threads", c.threads);
    return c;
}

nlohmann::json to_json(const HsmmParams& p) {
    return {{"num_classes", p.num_classes},
            {"min_duration", p.min_duration},
            {"max_duration", p.max_duration},
            {"lambda", p.lambda},
            {"alpha", p.alpha},
            {"transition_counts", p.transition_counts},
            {"class_counts", p.class_counts}};
}

HsmmParams hsmm_params_from_json(const nlohmann::json& j) {
    HsmmParams p = HsmmParams::make(j.at("num_classes").get<int>(), j.at("min_duration").get<int>(),
                                    j.at("max_duration").get<int>(), j.at("lambda").get<double>(),
                                    j.at("alpha").get<double>());
    p.transition_counts = j.at("transition_counts").get<std::vector<long>>();
    p.class_counts = j.at("class_counts").get<std::vector<long>>();
    const auto C = static_cast<std::size_t>(p.num_classes);
    if (p.transition_counts.size() != C * C || p.class_counts.size() != C)
        throw std::runtime_error("snapshot: count arrays do not match num_classes");
    return p;
}

nlohmann::json to_json(const Preprocessing& r) {
    return {{"downsample", r.downsample}, {"normalized", r.normalized}, {"mins", r.mins}, {"maxs", r.maxs}};
}

Preprocessing preprocessing_from_json(const nlohmann::json& j) {
    Preprocessing r;
    r.downsample = j.value("downsample", 1);
    r.normalized = j.value("normalized", false);
    r.mins = j.value("mins", std::vector<double>{});
    r.maxs = j.value("maxs", std::vector<double>{});
    return r;
}

namespace {

nlohmann::json matrix_rows(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_rows(const nlohmann::json& rows) {
    const auto data = rows.get<std::vector<std::vector<double>>>();
    if (data.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.front().size()));
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (data[r].size() != data.front().size()) throw std::runtime_error("snapshot: ragged matrix");
        for (std::size_t c = 0; c < data[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r][c];
    }
    return m;
}

}  // namespace

nlohmann::json snapshot_to_json(const TrainerState& state, const Preprocessing& preprocessing,
                                const nlohmann::json& run_config) {
    nlohmann::json j;
    j["format"] = "rffhsmm-model";
    j["version"] = kSnapshotVersion;
    j["build"] = build_info();
    j["config"] = to_json(state.config);
    j["run_config"] = run_config;
    j["seed"] = state.rng_seed;
    j["iteration"] = state.iteration;
    j["preprocessing"] = to_json(preprocessing);
    j["hsmm"] = to_json(state.hsmm);
    j["backend"] = to_string(state.emissions->kind());
    j["dims"] = state.emissions->dims();

    nlohmann::json classes = nlohmann::json::array();
    if (const auto* rff = dynamic_cast<const RffBackend*>(state.emissions.get())) {
        j["bank"] = to_json(rff->bank());
        for (int c = 0; c < rff->num_classes(); ++c) {
            const auto& model = rff->model(c);
            nlohmann::json dims = nlohmann::json::array();
            for (int d = 0; d < model.dims(); ++d) {
                const auto& s = model.stats(d);
                std::vector<double> b(s.weighted_sum.data(), s.weighted_sum.data() + s.weighted_sum.size());
                dims.push_back({{"precision", matrix_rows(s.precision)}, {"weighted_sum", b}});
            }
            classes.push_back({{"class_id", c}, {"n_points", model.n_points()}, {"dims", dims}});
        }
    } else if (const auto* gp = dynamic_cast<const ExactGpBackend*>(state.emissions.get())) {
        for (int c = 0; c < gp->num_classes(); ++c) {
            nlohmann::json blocks = nlohmann::json::array();
            for (const auto& b : gp->data(c).blocks())
                blocks.push_back({{"times", b.times}, {"values", matrix_rows(b.values)}});
            classes.push_back({{"class_id", c}, {"n_points", gp->n_points(c)}, {"blocks", blocks}});
        }
    }
    j["classes"] = classes;
    return j;
}

LoadedModel snapshot_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != "rffhsmm-model") throw std::runtime_error("not an rffhsmm model snapshot");
    if (j.value("version", 0) != kSnapshotVersion)
        throw std::runtime_error("unsupported snapshot version " + std::to_string(j.value("version", 0)));

    LoadedModel out;
    out.config = trainer_config_from_json(j.at("config"));
    out.run_config = j.value("run_config", nlohmann::json::object());
    out.preprocessing = preprocessing_from_json(j.at("preprocessing"));
    out.hsmm = hsmm_params_from_json(j.at("hsmm"));
    const int dims = j.at("dims").get<int>();
    const Backend backend = parse_backend(j.at("backend").get<std::string>());
    const auto& classes = j.at("classes");
    if (static_cast<int>(classes.size()) != out.hsmm.num_classes)
        throw std::runtime_error("snapshot: class list does not match num_classes");

    if (backend == Backend::rff) {
        auto rff = std::make_unique<RffBackend>(feature_bank_from_json(j.at("bank")), out.hsmm.num_classes, dims,
                                                RegressionPrior{out.config.beta, out.config.psi});
        for (int c = 0; c < out.hsmm.num_classes; ++c) {
            const auto& cj = classes.at(c);
            const long n = cj.at("n_points").get<long>();
            const auto& dj = cj.at("dims");
            if (static_cast<int>(dj.size()) != dims) throw std::runtime_error("snapshot: class dims mismatch");
            for (int d = 0; d < dims; ++d) {
                RegressionStats stats(rff->bank().size(), out.config.psi);
                stats.precision = matrix_from_rows(dj.at(d).at("precision"));
                const auto b = dj.at(d).at("weighted_sum").get<std::vector<double>>();
                stats.weighted_sum = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
                stats.n_points = n;
                rff->model(c).set_stats(d, std::move(stats));
            }
        }
        out.emissions = std::move(rff);
    } else {
        auto gp = std::make_unique<ExactGpBackend>(out.hsmm.num_classes, dims, out.config.beta, out.config.lengthscale);
        for (int c = 0; c < out.hsmm.num_classes; ++c)
            for (const auto& bj : classes.at(c).at("blocks")) {
                const auto times = bj.at("times").get<std::vector<double>>();
                const Eigen::MatrixXd values = matrix_from_rows(bj.at("values"));
                for (std::size_t t = 0; t < times.size(); ++t)
                    gp->data(c).add_point(times[t], values.col(static_cast<Eigen::Index>(t)));
            }
        out.emissions = std::move(gp);
    }
    return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot write");
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    return nlohmann::json::parse(in);
}

}  // namespace rffhsmm
