#pragma once

#include <json.hpp>

#include <map>
#include <vector>

namespace rffhsmm {

struct EvalReport {
    double nhd = 0.0;
    long mismatches = 0;
    long total = 0;
    // predicted class -> truth class; -1 marks the null label (every frame
    // of that class counts as a mismatch).
    std::map<int, int> label_mapping;
    std::vector<int> predicted_ids;  // row order of the confusion matrix
    std::vector<int> truth_ids;      // column order
    std::vector<std::vector<long>> confusion;

    nlohmann::json to_json() const;
};

// Normalized Hamming distance after the predicted -> truth class mapping
// that minimizes mismatches (one-to-one). Throws std::invalid_argument on
// length mismatch or empty input.
EvalReport evaluate_nhd(const std::vector<int>& predicted, const std::vector<int>& truth);

// Minimum-cost one-to-one assignment of rows to columns (rows <= cols).
// Returns the column of every row.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace rffhsmm
