#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace rffhsmm {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Preprocessing {
    int downsample = 1;
    bool normalized = false;
    std::vector<double> mins;  // per dimension, as used for normalization
    std::vector<double> maxs;
};

struct SequenceStore {
    std::vector<Eigen::MatrixXd> sequences;  // D x T_n
    std::vector<std::string> names;
    std::vector<std::vector<int>> truth;     // empty, or one label per frame for every sequence
    Preprocessing record;

    int dims() const { return sequences.empty() ? 0 : static_cast<int>(sequences.front().rows()); }
    long total_frames() const;
    bool has_truth() const { return !truth.empty(); }
    // Throws DataError if labels and frames disagree in length.
    void check() const;
};

struct LoadOptions {
    // ' ' splits on any run of whitespace.
    char delimiter = ',';
    bool header = false;
    std::vector<int> columns;  // 0-based; empty selects every non-label column
    int label_column = -1;     // 0-based; -1 for none
};

// One frame per row. Blank lines and lines starting with '#' are skipped.
// Errors carry file:line.
SequenceStore load_sequences(const std::vector<std::filesystem::path>& paths, const LoadOptions& options);

// Keeps frames 0, k, 2k, ... then (optionally) maps every dimension's
// corpus-wide [min, max] onto [-1, 1]; constant dimensions map to 0.
SequenceStore preprocess(const SequenceStore& store, int downsample, bool normalize);

// Normalizes with previously recorded bounds (no clamping).
SequenceStore apply_normalization(const SequenceStore& store, const std::vector<double>& mins,
                                  const std::vector<double>& maxs);

// Duplicates the whole corpus `factor` times, in order.
SequenceStore duplicate(const SequenceStore& store, int factor);

struct PatternTemplate {
    std::string name;
    std::string kind = "sine";  // sine | cosine | ramp | constant
    std::vector<double> amplitude;  // per dimension
    std::vector<double> offset;
    std::vector<double> phase;
    double period = 20.0;  // frames per cycle (sine/cosine)
    double noise = 0.0;    // Gaussian noise std

    // Noise-free value at within-block index tau (1-based) of a block of
    // `block_length` frames.
    double value(int dim, int tau, int block_length) const;
};

struct SyntheticSpec {
    int dims = 2;
    std::vector<PatternTemplate> templates;
    int min_block = 15;
    int max_block = 30;
    std::vector<int> lengths;                     // frames per sequence
    std::vector<std::vector<double>> transition;  // rows sum to 1; empty = uniform over other templates

    // Accepts "lengths": [...] or "sequences" + "length". Scalar template
    // fields broadcast to every dimension.
    static SyntheticSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    // Throws std::invalid_argument describing the bad field.
    void validate() const;
};

// Blocks of templated patterns tiling each sequence exactly, with
// ground-truth labels (template index). Seed-deterministic.
SequenceStore generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Writes one delimited file per sequence (label in the last column) into
// `dir`; returns the paths.
std::vector<std::filesystem::path> write_sequences(const SequenceStore& store, const std::filesystem::path& dir);

// Labels: one integer per line, '#' lines are comments.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<std::vector<int>>& labels,
                  const std::string& comment = {});

}  // namespace rffhsmm
