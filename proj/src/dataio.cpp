#include "rffhsmm/dataio.hpp"

#include "rffhsmm/hsmm_ffbs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace rffhsmm {

long SequenceStore::total_frames() const {
    long total = 0;
    for (const auto& s : sequences) total += s.cols();
    return total;
}

void SequenceStore::check() const {
    if (truth.empty()) return;
    if (truth.size() != sequences.size())
        throw DataError("ground truth covers " + std::to_string(truth.size()) + " sequences, store holds " +
                        std::to_string(sequences.size()));
    for (std::size_t n = 0; n < truth.size(); ++n)
        if (static_cast<long>(truth[n].size()) != sequences[n].cols())
            throw DataError("sequence " + std::to_string(n) + ": " + std::to_string(truth[n].size()) +
                            " labels for " + std::to_string(sequences[n].cols()) + " frames");
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> fields;
    if (delimiter == ' ') {
        std::size_t pos = 0;
        while (true) {
            pos = line.find_first_not_of(" \t\r", pos);
            if (pos == std::string_view::npos) break;
            const auto end = line.find_first_of(" \t\r", pos);
            fields.push_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
            if (end == std::string_view::npos) break;
            pos = end;
        }
        return fields;
    }
    std::size_t pos = 0;
    while (true) {
        const auto end = line.find(delimiter, pos);
        fields.push_back(trim(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos)));
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return fields;
}

bool parse_double(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !text.empty();
}

std::string where(const std::filesystem::path& path, long line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

SequenceStore load_sequences(const std::vector<std::filesystem::path>& paths, const LoadOptions& options) {
    if (paths.empty()) throw DataError("no input files given");
    SequenceStore store;
    int dims = -1;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw DataError(path.string() + ": cannot open file");

        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        std::string line;
        long line_no = 0;
        std::size_t width = 0;
        bool header_pending = options.header;
        while (std::getline(in, line)) {
            ++line_no;
            const auto body = trim(line);
            if (body.empty() || body.front() == '#') continue;
            if (header_pending) {
                header_pending = false;
                continue;
            }
            const auto fields = split(body, options.delimiter);
            if (width == 0) {
                width = fields.size();
            } else if (fields.size() != width) {
                throw DataError(where(path, line_no) + "ragged row: expected " + std::to_string(width) +
                                " fields, found " + std::to_string(fields.size()));
            }

            std::vector<int> columns = options.columns;
            if (columns.empty())
                for (int c = 0; c < static_cast<int>(fields.size()); ++c)
                    if (c != options.label_column) columns.push_back(c);
            std::vector<double> row;
            row.reserve(columns.size());
            for (int c : columns) {
                if (c < 0 || c >= static_cast<int>(fields.size()))
                    throw DataError(where(path, line_no) + "column " + std::to_string(c) + " out of range (" +
                                    std::to_string(fields.size()) + " fields)");
                double v = 0.0;
                if (!parse_double(fields[c], v))
                    throw DataError(where(path, line_no) + "non-numeric value '" + std::string(fields[c]) +
                                    "' in column " + std::to_string(c));
                row.push_back(v);
            }
            if (options.label_column >= 0) {
                if (options.label_column >= static_cast<int>(fields.size()))
                    throw DataError(where(path, line_no) + "label column " + std::to_string(options.label_column) +
                                    " out of range");
                double v = 0.0;
                if (!parse_double(fields[options.label_column], v) || v != std::floor(v))
                    throw DataError(where(path, line_no) + "label '" +
                                    std::string(fields[options.label_column]) + "' is not an integer");
                labels.push_back(static_cast<int>(v));
            }
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw DataError(path.string() + ": file contains no frames");
        const int d = static_cast<int>(rows.front().size());
        if (d == 0) throw DataError(path.string() + ": no data columns selected");
        if (dims >= 0 && d != dims)
            throw DataError(path.string() + ": " + std::to_string(d) + " columns, previous files have " +
                            std::to_string(dims));
        dims = d;

        Eigen::MatrixXd seq(d, static_cast<Eigen::Index>(rows.size()));
        for (std::size_t t = 0; t < rows.size(); ++t)
            for (int k = 0; k < d; ++k) seq(k, static_cast<Eigen::Index>(t)) = rows[t][k];
        store.sequences.push_back(std::move(seq));
        store.names.push_back(path.filename().string());
        if (options.label_column >= 0) store.truth.push_back(std::move(labels));
    }
    store.check();
    return store;
}

SequenceStore preprocess(const SequenceStore& store, int downsample, bool normalize) {
    if (downsample < 1) throw std::invalid_argument("preprocess: downsample must be >= 1");
    SequenceStore out;
    out.names = store.names;
    out.record = store.record;
    out.record.downsample = store.record.downsample * downsample;
    for (std::size_t n = 0; n < store.sequences.size(); ++n) {
        const auto& seq = store.sequences[n];
        const Eigen::Index kept = (seq.cols() + downsample - 1) / downsample;
        Eigen::MatrixXd reduced(seq.rows(), kept);
        for (Eigen::Index t = 0; t < kept; ++t) reduced.col(t) = seq.col(t * downsample);
        out.sequences.push_back(std::move(reduced));
        if (store.has_truth()) {
            std::vector<int> labels;
            for (std::size_t t = 0; t < store.truth[n].size(); t += static_cast<std::size_t>(downsample))
                labels.push_back(store.truth[n][t]);
            out.truth.push_back(std::move(labels));
        }
    }
    if (!normalize || out.sequences.empty()) return out;

    const int D = out.dims();
    std::vector<double> mins(static_cast<std::size_t>(D), std::numeric_limits<double>::infinity());
    std::vector<double> maxs(static_cast<std::size_t>(D), -std::numeric_limits<double>::infinity());
    for (const auto& seq : out.sequences)
        for (int d = 0; d < D; ++d) {
            if (seq.cols() == 0) continue;
            mins[d] = std::min(mins[d], seq.row(d).minCoeff());
            maxs[d] = std::max(maxs[d], seq.row(d).maxCoeff());
        }
    return apply_normalization(out, mins, maxs);
}

SequenceStore apply_normalization(const SequenceStore& store, const std::vector<double>& mins,
                                  const std::vector<double>& maxs) {
    const int D = store.dims();
    if (static_cast<int>(mins.size()) != D || static_cast<int>(maxs.size()) != D)
        throw std::invalid_argument("apply_normalization: bounds do not match the data dimension");
    SequenceStore out = store;
    for (auto& seq : out.sequences)
        for (int d = 0; d < D; ++d) {
            const double range = maxs[d] - mins[d];
            if (!(range > 0.0)) {
                seq.row(d).setZero();
            } else {
                seq.row(d) = ((seq.row(d).array() - mins[d]) * (2.0 / range) - 1.0).matrix();
            }
        }
    out.record.normalized = true;
    out.record.mins = mins;
    out.record.maxs = maxs;
    return out;
}

SequenceStore duplicate(const SequenceStore& store, int factor) {
    if (factor < 1) throw std::invalid_argument("duplicate: factor must be >= 1");
    SequenceStore out;
    out.record = store.record;
    for (int copy = 0; copy < factor; ++copy) {
        out.sequences.insert(out.sequences.end(), store.sequences.begin(), store.sequences.end());
        for (const auto& name : store.names) out.names.push_back(name + "#" + std::to_string(copy));
        out.truth.insert(out.truth.end(), store.truth.begin(), store.truth.end());
    }
    return out;
}

double PatternTemplate::value(int dim, int tau, int block_length) const {
    const double amp = amplitude[dim];
    const double off = offset[dim];
    const double ph = phase[dim];
    const double x = static_cast<double>(tau - 1);
    if (kind == "sine") return off + amp * std::sin(2.0 * std::numbers::pi * x / period + ph);
    if (kind == "cosine") return off + amp * std::cos(2.0 * std::numbers::pi * x / period + ph);
    if (kind == "ramp") {
        const double frac = block_length > 1 ? x / static_cast<double>(block_length - 1) : 0.0;
        return off + amp * (2.0 * frac - 1.0);
    }
    return off;  // constant
}

namespace {

std::vector<double> per_dim(const nlohmann::json& j, const char* key, int dims, double fallback) {
    if (!j.contains(key)) return std::vector<double>(static_cast<std::size_t>(dims), fallback);
    const auto& v = j.at(key);
    if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(dims), v.get<double>());
    auto out = v.get<std::vector<double>>();
    if (static_cast<int>(out.size()) != dims)
        throw std::invalid_argument(std::string("template field '") + key + "' must have " + std::to_string(dims) +
                                    " entries");
    return out;
}

}  // namespace

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
    SyntheticSpec spec;
    spec.dims = j.value("dims", 2);
    if (spec.dims < 1) throw std::invalid_argument("synthetic spec: dims must be >= 1");
    if (j.contains("block_length")) {
        const auto range = j.at("block_length").get<std::vector<int>>();
        if (range.size() != 2) throw std::invalid_argument("synthetic spec: block_length must be [min, max]");
        spec.min_block = range[0];
        spec.max_block = range[1];
    }
    if (j.contains("lengths")) {
        spec.lengths = j.at("lengths").get<std::vector<int>>();
    } else {
        const int count = j.value("sequences", 1);
        const int length = j.value("length", 200);
        spec.lengths.assign(static_cast<std::size_t>(std::max(count, 0)), length);
    }
    for (const auto& t : j.at("templates")) {
        PatternTemplate p;
        p.kind = t.value("kind", std::string("sine"));
        p.name = t.value("name", p.kind);
        p.amplitude = per_dim(t, "amplitude", spec.dims, 1.0);
        p.offset = per_dim(t, "offset", spec.dims, 0.0);
        p.phase = per_dim(t, "phase", spec.dims, 0.0);
        p.period = t.value("period", 20.0);
        p.noise = t.value("noise", 0.0);
        spec.templates.push_back(std::move(p));
    }
    if (j.contains("transition")) spec.transition = j.at("transition").get<std::vector<std::vector<double>>>();
    spec.validate();
    return spec;
}

nlohmann::json SyntheticSpec::to_json() const {
    nlohmann::json j;
    j["dims"] = dims;
    j["block_length"] = {min_block, max_block};
    j["lengths"] = lengths;
    j["templates"] = nlohmann::json::array();
    for (const auto& t : templates)
        j["templates"].push_back({{"name", t.name},
                                  {"kind", t.kind},
                                  {"amplitude", t.amplitude},
                                  {"offset", t.offset},
                                  {"phase", t.phase},
                                  {"period", t.period},
                                  {"noise", t.noise}});
    if (!transition.empty()) j["transition"] = transition;
    return j;
}

void SyntheticSpec::validate() const {
    if (dims < 1) throw std::invalid_argument("synthetic spec: dims must be >= 1");
    if (templates.empty()) throw std::invalid_argument("synthetic spec: at least one template required");
    if (min_block < 1 || min_block > max_block)
        throw std::invalid_argument("synthetic spec: block_length must satisfy 1 <= min <= max");
    if (lengths.empty()) throw std::invalid_argument("synthetic spec: no sequences requested");
    for (const auto& t : templates) {
        if (t.kind != "sine" && t.kind != "cosine" && t.kind != "ramp" && t.kind != "constant")
            throw std::invalid_argument("synthetic spec: unknown template kind '" + t.kind + "'");
        if (!(t.period > 0.0)) throw std::invalid_argument("synthetic spec: template period must be > 0");
        if (!(t.noise >= 0.0)) throw std::invalid_argument("synthetic spec: template noise must be >= 0");
        if (static_cast<int>(t.amplitude.size()) != dims || static_cast<int>(t.offset.size()) != dims ||
            static_cast<int>(t.phase.size()) != dims)
            throw std::invalid_argument("synthetic spec: template '" + t.name + "' has the wrong dimension");
    }
    const auto ok = feasible_lengths(*std::max_element(lengths.begin(), lengths.end()), min_block, max_block);
    for (int len : lengths)
        if (len < 1 || !ok[len])
            throw std::invalid_argument("synthetic spec: sequence length " + std::to_string(len) +
                                        " cannot be tiled by blocks in [" + std::to_string(min_block) + ", " +
                                        std::to_string(max_block) + "]");
    if (!transition.empty()) {
        if (transition.size() != templates.size())
            throw std::invalid_argument("synthetic spec: transition matrix must be square in the template count");
        for (const auto& row : transition) {
            if (row.size() != templates.size())
                throw std::invalid_argument("synthetic spec: transition matrix must be square in the template count");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0) throw std::invalid_argument("synthetic spec: negative transition probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("synthetic spec: transition rows must sum to 1");
        }
    }
}

SequenceStore generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    const int P = static_cast<int>(spec.templates.size());
    std::uniform_int_distribution<int> first_pick(0, P - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto next_template = [&](int current) {
        if (!spec.transition.empty()) {
            std::discrete_distribution<int> row(spec.transition[current].begin(), spec.transition[current].end());
            return row(rng);
        }
        if (P == 1) return 0;
        std::uniform_int_distribution<int> other(0, P - 2);
        const int pick = other(rng);
        return pick >= current ? pick + 1 : pick;
    };

    SequenceStore store;
    for (std::size_t n = 0; n < spec.lengths.size(); ++n) {
        const int T = spec.lengths[n];
        const auto blocks = sample_tiling(T, spec.min_block, spec.max_block, rng);
        Eigen::MatrixXd seq(spec.dims, T);
        std::vector<int> labels;
        labels.reserve(static_cast<std::size_t>(T));
        int t = 0;
        int current = first_pick(rng);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (b > 0) current = next_template(current);
            const auto& tpl = spec.templates[current];
            for (int tau = 1; tau <= blocks[b]; ++tau, ++t) {
                for (int d = 0; d < spec.dims; ++d) {
                    double v = tpl.value(d, tau, blocks[b]);
                    if (tpl.noise > 0.0) v += tpl.noise * gauss(rng);
                    seq(d, t) = v;
                }
                labels.push_back(current);
            }
        }
        store.sequences.push_back(std::move(seq));
        store.names.push_back("synthetic_" + std::to_string(n));
        store.truth.push_back(std::move(labels));
    }
    return store;
}

std::vector<std::filesystem::path> write_sequences(const SequenceStore& store, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (std::size_t n = 0; n < store.sequences.size(); ++n) {
        const auto path = dir / (store.names[n] + ".csv");
        std::ofstream out(path);
        if (!out) throw DataError(path.string() + ": cannot write");
        out << std::setprecision(17);
        const auto& seq = store.sequences[n];
        for (Eigen::Index t = 0; t < seq.cols(); ++t) {
            for (Eigen::Index d = 0; d < seq.rows(); ++d) out << (d ? "," : "") << seq(d, t);
            if (store.has_truth()) out << ',' << store.truth[n][static_cast<std::size_t>(t)];
            out << '\n';
        }
        paths.push_back(path);
    }
    return paths;
}

std::vector<int> read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    std::vector<int> labels;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
        if (ec != std::errc() || ptr != body.data() + body.size())
            throw DataError(where(path, line_no) + "expected one integer label, found '" + std::string(body) + "'");
        labels.push_back(v);
    }
    return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<std::vector<int>>& labels,
                  const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw DataError(path.string() + ": cannot write");
    if (!comment.empty()) out << "# " << comment << '\n';
    for (const auto& seq : labels)
        for (int v : seq) out << v << '\n';
}

}  // namespace rffhsmm
