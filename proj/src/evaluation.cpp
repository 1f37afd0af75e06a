#include "rffhsmm/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace rffhsmm {

// Hungarian method with row/column potentials, O(n^2 m).
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    const int m = static_cast<int>(cost.front().size());
    if (n > m) throw std::invalid_argument("min_cost_assignment: more rows than columns");
    constexpr double inf = std::numeric_limits<double>::infinity();

    // 1-based arrays; column 0 is the virtual start.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> owner(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        owner[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const int i0 = owner[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (owner[j0] != 0);
        do {
            const int j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= m; ++j)
        if (owner[j] != 0) assignment[owner[j] - 1] = j - 1;
    return assignment;
}

EvalReport evaluate_nhd(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("evaluate_nhd: " + std::to_string(predicted.size()) + " predicted labels vs " +
                                    std::to_string(truth.size()) + " truth labels");
    if (predicted.empty()) throw std::invalid_argument("evaluate_nhd: no labels");

    EvalReport report;
    report.predicted_ids = predicted;
    report.truth_ids = truth;
    for (auto* ids : {&report.predicted_ids, &report.truth_ids}) {
        std::sort(ids->begin(), ids->end());
        ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
    }
    auto index_of = [](const std::vector<int>& ids, int id) {
        return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };
    const std::size_t P = report.predicted_ids.size();
    const std::size_t Q = report.truth_ids.size();
    report.confusion.assign(P, std::vector<long>(Q, 0));
    for (std::size_t t = 0; t < predicted.size(); ++t)
        ++report.confusion[index_of(report.predicted_ids, predicted[t])][index_of(report.truth_ids, truth[t])];

    // Maximize matched frames; the smaller side indexes the rows.
    const bool rows_are_predicted = P <= Q;
    const std::size_t rows = rows_are_predicted ? P : Q;
    const std::size_t cols = rows_are_predicted ? Q : P;
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            cost[i][j] = -static_cast<double>(rows_are_predicted ? report.confusion[i][j] : report.confusion[j][i]);
    const auto assignment = min_cost_assignment(cost);

    for (int p : report.predicted_ids) report.label_mapping[p] = -1;
    long matched = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        const auto j = static_cast<std::size_t>(assignment[i]);
        const std::size_t p = rows_are_predicted ? i : j;
        const std::size_t q = rows_are_predicted ? j : i;
        report.label_mapping[report.predicted_ids[p]] = report.truth_ids[q];
        matched += report.confusion[p][q];
    }
    report.total = static_cast<long>(predicted.size());
    report.mismatches = report.total - matched;
    report.nhd = static_cast<double>(report.mismatches) / static_cast<double>(report.total);
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json mapping = nlohmann::json::object();
    for (const auto& [p, q] : label_mapping) mapping[std::to_string(p)] = q;
    return {{"nhd", nhd},
            {"mismatches", mismatches},
            {"total_frames", total},
            {"label_mapping", mapping},
            {"predicted_ids", predicted_ids},
            {"truth_ids", truth_ids},
            {"confusion", confusion}};
}

}  // namespace rffhsmm
