#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rffhsmm/dataio.hpp"
#include "rffhsmm/evaluation.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

using namespace rffhsmm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("rffhsmm_io_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& body) const {
        std::ofstream(path / name) << body;
        return path / name;
    }
};

std::string load_error(const fs::path& p, LoadOptions o = {}) {
    try {
        load_sequences({p}, o);
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

// Minimum mismatches over every injective predicted -> truth map (unmapped = null).
long brute_force_mismatches(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::vector<int> p_ids(pred.begin(), pred.end()), t_ids(truth.begin(), truth.end());
    std::sort(p_ids.begin(), p_ids.end());
    p_ids.erase(std::unique(p_ids.begin(), p_ids.end()), p_ids.end());
    std::sort(t_ids.begin(), t_ids.end());
    t_ids.erase(std::unique(t_ids.begin(), t_ids.end()), t_ids.end());
    // pad truth ids with null slots so every predicted id gets a target
    std::vector<int> targets = t_ids;
    for (std::size_t i = 0; i < p_ids.size(); ++i) targets.push_back(-1000 - static_cast<int>(i));
    std::sort(targets.begin(), targets.end());
    long best = static_cast<long>(pred.size());
    std::set<std::vector<int>> seen;
    do {
        std::vector<int> head(targets.begin(), targets.begin() + static_cast<long>(p_ids.size()));
        if (!seen.insert(head).second) continue;
        long miss = 0;
        for (std::size_t f = 0; f < pred.size(); ++f) {
            const auto i = std::lower_bound(p_ids.begin(), p_ids.end(), pred[f]) - p_ids.begin();
            if (head[static_cast<std::size_t>(i)] != truth[f]) ++miss;
        }
        best = std::min(best, miss);
    } while (std::next_permutation(targets.begin(), targets.end()));
    return best;
}

}  // namespace

TEST_CASE("load a delimited file") {
    TempDir dir;
    std::string body = "# comment\n";
    for (int r = 0; r < 490; ++r) {
        for (int c = 0; c < 9; ++c) body += std::to_string(r * 0.5 + c) + ",";
        body += std::to_string(r % 3) + "\n";
    }
    const auto p = dir.write("walk.csv", body);
    LoadOptions o;
    o.columns = {0, 1, 2, 3, 4, 5, 6, 7};
    o.label_column = 9;
    const auto store = load_sequences({p}, o);
    REQUIRE(store.sequences.size() == 1);
    CHECK(store.sequences[0].rows() == 8);
    CHECK(store.sequences[0].cols() == 490);
    CHECK(store.sequences[0](3, 10) == doctest::Approx(8.0));
    REQUIRE(store.has_truth());
    CHECK(store.truth[0].size() == 490);
    CHECK(store.truth[0][5] == 2);
    CHECK(store.names[0] == "walk.csv");

    LoadOptions all;
    all.label_column = 9;
    CHECK(load_sequences({p}, all).sequences[0].rows() == 9);
}

TEST_CASE("whitespace and header options") {
    TempDir dir;
    const auto p = dir.write("a.txt", "x y\n1.0   2.0\n\n3.0\t4.0\n");
    LoadOptions o;
    o.delimiter = ' ';
    o.header = true;
    const auto s = load_sequences({p, p}, o);
    CHECK(s.sequences.size() == 2);
    CHECK(s.sequences[1].cols() == 2);
    CHECK(s.sequences[1](1, 1) == 4.0);
    CHECK_FALSE(s.has_truth());
}

TEST_CASE("load errors carry file and line") {
    TempDir dir;
    CHECK(load_error(dir.write("empty.csv", "")).find("empty.csv") != std::string::npos);
    CHECK(load_error(dir.write("only_comments.csv", "# nothing\n\n")).find("no frames") != std::string::npos);
    const std::string ragged = load_error(dir.write("ragged.csv", "1,2,3\n4,5\n"));
    CHECK(ragged.find("ragged.csv:2") != std::string::npos);
    const std::string text = load_error(dir.write("text.csv", "1,2\n3,abc\n"));
    CHECK(text.find("text.csv:2") != std::string::npos);
    LoadOptions o;
    o.columns = {0, 5};
    CHECK(load_error(dir.write("narrow.csv", "1,2\n"), o).find("narrow.csv:1") != std::string::npos);
    LoadOptions l;
    l.label_column = 1;
    CHECK(load_error(dir.write("badlabel.csv", "1,2.5\n"), l).find("badlabel.csv:1") != std::string::npos);
    CHECK_THROWS_AS(load_sequences({dir.path / "missing.csv"}, {}), DataError);
}

TEST_CASE("preprocess identity") {
    SequenceStore s;
    s.sequences = {Eigen::MatrixXd::Random(3, 10), Eigen::MatrixXd::Random(3, 7)};
    const auto out = preprocess(s, 1, false);
    CHECK(out.sequences[0] == s.sequences[0]);
    CHECK(out.sequences[1] == s.sequences[1]);
}

TEST_CASE("min-max endpoints and constant dimensions") {
    SequenceStore s;
    Eigen::MatrixXd a(2, 3), b(2, 2);
    a << 0, 5, 10, 7, 7, 7;
    b << 2.5, 10, 7, 7;
    s.sequences = {a, b};
    const auto out = preprocess(s, 1, true);
    CHECK(out.sequences[0](0, 0) == -1.0);
    CHECK(out.sequences[0](0, 2) == 1.0);
    CHECK(out.sequences[0](0, 1) == doctest::Approx(0.0));
    CHECK(out.sequences[1](0, 0) == doctest::Approx(-0.5));
    CHECK(out.sequences[0].row(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.sequences[1].row(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.record.normalized);
    CHECK(out.record.mins == std::vector<double>{0.0, 7.0});
    CHECK(out.record.maxs == std::vector<double>{10.0, 7.0});

    // reapplying the recorded bounds to the raw data is the same transform
    const auto again = apply_normalization(s, out.record.mins, out.record.maxs);
    CHECK((again.sequences[1] - out.sequences[1]).cwiseAbs().maxCoeff() < 1e-15);
    // normalizing already-normalized data is a no-op
    const auto twice = preprocess(out, 1, true);
    CHECK((twice.sequences[0] - out.sequences[0]).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((twice.sequences[1] - out.sequences[1]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("downsampling keeps every k-th frame with its label") {
    SequenceStore s;
    Eigen::MatrixXd a(1, 10);
    for (int t = 0; t < 10; ++t) a(0, t) = t;
    s.sequences = {a};
    s.truth = {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
    const auto out = preprocess(s, 3, false);
    REQUIRE(out.sequences[0].cols() == 4);
    CHECK(out.sequences[0](0, 3) == 9.0);
    CHECK(out.truth[0] == std::vector<int>{0, 3, 6, 9});
    CHECK(out.record.downsample == 3);
}

TEST_CASE("duplication") {
    SequenceStore s;
    s.sequences = {Eigen::MatrixXd::Random(2, 5), Eigen::MatrixXd::Random(2, 6)};
    s.names = {"a", "b"};
    const auto d = duplicate(s, 10);
    CHECK(d.sequences.size() == 20);
    CHECK(d.total_frames() == 110);
    CHECK(d.sequences[13] == s.sequences[1]);
}

TEST_CASE("synthetic corpora") {
    const auto spec = SyntheticSpec::from_json(nlohmann::json::parse(R"({
        "dims": 2, "sequences": 10, "length": 200, "block_length": [15, 30],
        "templates": [{"kind": "sine", "noise": 0.1}, {"kind": "ramp", "amplitude": [1, -1]}]})"));
    const auto a = generate_synthetic(spec, 3);
    const auto b = generate_synthetic(spec, 3);
    REQUIRE(a.sequences.size() == 10);
    for (std::size_t n = 0; n < 10; ++n) {
        CHECK(a.sequences[n].cols() == 200);
        CHECK(a.truth[n].size() == 200);
        CHECK(a.sequences[n] == b.sequences[n]);
        CHECK(a.truth[n] == b.truth[n]);
        for (int l : a.truth[n]) CHECK((l == 0 || l == 1));
    }
    CHECK_FALSE(generate_synthetic(spec, 4).sequences[0] == a.sequences[0]);

    // noiseless blocks reproduce the template exactly
    auto clean = spec;
    for (auto& t : clean.templates) t.noise = 0.0;
    const auto c = generate_synthetic(clean, 5);
    const auto& labels = c.truth[0];
    int start = 0;
    while (start < 200) {
        int end = start;
        while (end < 200 && labels[end] == labels[start] && end - start < 30) ++end;
        const auto& tmpl = clean.templates[static_cast<std::size_t>(labels[start])];
        if (tmpl.kind == "sine" && end - start >= 15) {
            CHECK(c.sequences[0](0, start) == doctest::Approx(tmpl.value(0, 1, end - start)));
            CHECK(c.sequences[0](1, start + 3) == doctest::Approx(tmpl.value(1, 4, end - start)));
        }
        start = end;
    }

    CHECK_THROWS_AS(SyntheticSpec::from_json(nlohmann::json::parse(R"({"templates": []})")), std::invalid_argument);
    CHECK_THROWS_AS(SyntheticSpec::from_json(nlohmann::json::parse(R"({"templates": [{"kind": "square"}]})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        SyntheticSpec::from_json(nlohmann::json::parse(R"({"block_length": [9, 3], "templates": [{"kind": "sine"}]})")),
        std::invalid_argument);
}

TEST_CASE("written corpora load back") {
    TempDir dir;
    const auto spec = SyntheticSpec::from_json(nlohmann::json::parse(R"({
        "dims": 3, "lengths": [40, 55], "block_length": [10, 12], "templates": [{"kind": "sine"}, {"kind": "constant", "offset": 0.2}]})"));
    const auto s = generate_synthetic(spec, 8);
    const auto paths = write_sequences(s, dir.path);
    REQUIRE(paths.size() == 2);
    LoadOptions o;
    o.label_column = 3;
    const auto back = load_sequences(paths, o);
    CHECK(back.truth == s.truth);
    CHECK((back.sequences[1] - s.sequences[1]).cwiseAbs().maxCoeff() < 1e-12);

    write_labels(dir.path / "labels.txt", s.truth, "config {}");
    auto flat = s.truth[0];
    flat.insert(flat.end(), s.truth[1].begin(), s.truth[1].end());
    CHECK(read_labels(dir.path / "labels.txt") == flat);
}

TEST_CASE("nhd examples") {
    CHECK(evaluate_nhd({1, 2, 2, 3}, {1, 2, 2, 3}).nhd == 0.0);
    const auto swap = evaluate_nhd({1, 0, 0, 1, 1}, {0, 1, 1, 0, 0});
    CHECK(swap.nhd == 0.0);
    CHECK(swap.label_mapping.at(1) == 0);

    const auto r = evaluate_nhd({3, 3, 3, 4}, {1, 1, 2, 2});
    CHECK(r.nhd == doctest::Approx(0.25));
    CHECK(r.mismatches == brute_force_mismatches({3, 3, 3, 4}, {1, 1, 2, 2}));
    CHECK(r.label_mapping.at(3) == 1);
    CHECK(r.label_mapping.at(4) == 2);

    // more predicted classes than truth classes: the extra one maps to null
    const auto extra = evaluate_nhd({0, 1, 2, 2}, {5, 5, 6, 6});
    CHECK(extra.mismatches == 1);
    int nulls = 0;
    for (const auto& [_, v] : extra.label_mapping) nulls += v == -1;
    CHECK(nulls == 1);

    CHECK_THROWS_AS(evaluate_nhd({1, 2}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_nhd({}, {}), std::invalid_argument);
}

TEST_CASE("nhd matches brute force and is permutation invariant") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 30);
        const int cp = 1 + static_cast<int>(rng() % 4), ct = 1 + static_cast<int>(rng() % 4);
        std::vector<int> pred(n), truth(n);
        for (auto& v : pred) v = static_cast<int>(rng() % cp);
        for (auto& v : truth) v = 10 + static_cast<int>(rng() % ct);
        const auto r = evaluate_nhd(pred, truth);
        CHECK(r.mismatches == brute_force_mismatches(pred, truth));
        CHECK(r.nhd >= 0.0);
        CHECK(r.nhd <= 1.0);
        CHECK(r.nhd == doctest::Approx(static_cast<double>(r.mismatches) / n));

        std::vector<int> perm(4);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<int> pp(n), tp(n);
        for (int i = 0; i < n; ++i) {
            pp[i] = 7 * perm[static_cast<std::size_t>(pred[i])];
            tp[i] = -perm[static_cast<std::size_t>(truth[i] - 10)];
        }
        CHECK(evaluate_nhd(pp, tp).mismatches == r.mismatches);
        CHECK(evaluate_nhd(pred, pred).nhd == 0.0);
    }
}

TEST_CASE("assignment solver") {
    const std::vector<std::vector<double>> cost{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
    const auto a = min_cost_assignment(cost);
    double total = 0.0;
    for (std::size_t r = 0; r < 3; ++r) total += cost[r][static_cast<std::size_t>(a[r])];
    CHECK(total == 5.0);
}
