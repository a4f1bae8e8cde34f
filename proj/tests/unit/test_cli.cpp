// Copyright 2026 The infolm-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "infolm/cli.hpp"
#include "infolm/dataset.hpp"
#include "infolm/infolm.hpp"
#include "support/fake_sidecar.hpp"
#include "support/oracles.hpp"

using namespace infolm;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = INFOLM_FIXTURES;
const std::string kGoldenDataset = kFixtures + "/golden_dataset.jsonl";
const std::string kCompareDataset = kFixtures + "/compare_dataset.jsonl";

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "infolm");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("infolm_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::vector<double> uniform_bag(const MockProvider& mock, const std::string& text) {
    const auto preds = mock.predict_masked(mock.tokenize({"x", text}));
    std::vector<double> out(mock.descriptor().vocab_size, 0.0);
    for (const auto& p : preds)
        for (std::size_t v = 0; v < out.size(); ++v) out[v] += p.distribution[v] / preds.size();
    return out;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream(p, std::ios::binary) << content;
}

} // namespace

TEST_CASE("golden scores match the oracle composition") {
    const auto ds = EvalDataset::load(kGoldenDataset);
    std::ifstream golden(kFixtures + "/golden_scores.csv");
    const auto table = read_score_csv(golden);
    MockProvider mock(MockConfig{});
    for (std::size_t i = 0; i < ds.text_count(); ++i) {
        const auto& e = ds.entries()[i];
        for (std::size_t s = 0; s < ds.system_count(); ++s) {
            const double expected = oracle::jeffreys(uniform_bag(mock, e.reference),
                                                     uniform_bag(mock, e.candidates[s].text), 1e-12);
            CHECK(table.divergence.at(i, s) == doctest::Approx(expected).epsilon(1e-11));
        }
    }
}

TEST_CASE("score command reproduces the golden file") {
    for (const char* workers : {"1", "3"}) {
        const auto dir = fresh_dir(std::string("golden") + workers);
        const auto r = run_cli({"score", "--dataset", kGoldenDataset, "--seed", "42",
                                "--vocab-size", "16", "--measure", "JeffreysKL", "--weighting",
                                "uniform", "--workers", workers, "--out", dir.string()});
        CHECK(r.code == 0);
        CHECK(slurp(dir / "scores.csv") == slurp(kFixtures + "/golden_scores.csv"));
    }
}

TEST_CASE("missing dataset exits 1 naming the path") {
    const auto r = run_cli({"score", "--dataset", "/nonexistent/d.jsonl", "--out",
                            fresh_dir("missing").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("/nonexistent/d.jsonl") != std::string::npos);
}

TEST_CASE("bad arguments exit 1") {
    CHECK(run_cli({"score"}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
    CHECK(run_cli({"score", "--dataset", kGoldenDataset, "--out", fresh_dir("bad").string(),
                   "--measure", "AlphaDiv"})
              .code == 1);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("candidate equal to reference scores zero") {
    const auto dir = fresh_dir("identity");
    fs::create_directories(dir);
    const auto data = dir / "same.jsonl";
    write_file(data,
               R"({"text_id":"a","reference":"x y z","candidates":[{"system_id":"s1","text":"x y z","human_scores":{"q":1}},{"system_id":"s2","text":"x y z","human_scores":{"q":2}}]}
)");
    const auto r = run_cli({"score", "--dataset", data.string(), "--preset", "summ-abs-ab",
                            "--out", (dir / "out").string()});
    CHECK(r.code == 0);
    const auto table = load_score_csv(dir / "out" / "scores.csv");
    for (double v : table.divergence.values()) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("evaluate writes correlations and rejects unknown criteria") {
    const auto dir = fresh_dir("evaluate");
    const auto r = run_cli({"evaluate", "--dataset", kGoldenDataset, "--measure", "fisher-rao",
                            "--level", "system,text", "--out", dir.string()});
    CHECK(r.code == 0);
    const auto csv = slurp(dir / "correlations.csv");
    CHECK(csv.rfind("criterion,coefficient,level,value,n_effective,warnings\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 1 + 2 * 3 * 2);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["config"]["measure"] == "FisherRao");

    const auto bad = run_cli({"evaluate", "--dataset", kGoldenDataset, "--criteria", "fluencyy",
                              "--out", fresh_dir("evaluate_bad").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("\"fluency\"") != std::string::npos);
}

TEST_CASE("evaluate with similarity equal to human gives 1") {
    // A compare run over a score file built from the human scores.
    const auto ds = EvalDataset::load(kCompareDataset);
    const auto dir = fresh_dir("self");
    fs::create_directories(dir);
    const auto human = human_matrix(ds, "fluency");
    {
        std::ofstream out(dir / "human.csv");
        write_score_csv(out, human.negated(), "human");
    }
    const auto r = run_cli({"compare", "--dataset", kCompareDataset, "--criteria", "fluency",
                            "--scores", (dir / "human.csv").string(), "--scores",
                            (dir / "human.csv").string(), "--names", "h1,h2", "--out",
                            (dir / "out").string()});
    CHECK(r.code == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    for (const auto& rep : summary["reports"]) CHECK(rep["value"].get<double>() == 1.0);
    // r = 1 lies outside the test's domain, so the pair is reported without a p-value.
    CHECK(slurp(dir / "out" / "williams.csv").find("must lie strictly inside") != std::string::npos);
}

TEST_CASE("compare reports matrices and williams p-values") {
    const auto dir = fresh_dir("compare");
    const auto fr = dir / "fr";
    const auto ab = dir / "ab";
    REQUIRE(run_cli({"score", "--dataset", kCompareDataset, "--measure", "FisherRao", "--out",
                     fr.string()})
                .code == 0);
    REQUIRE(run_cli({"score", "--dataset", kCompareDataset, "--preset", "d2t-ab", "--out",
                     ab.string()})
                .code == 0);
    const auto r = run_cli({"compare", "--dataset", kCompareDataset, "--scores",
                            (fr / "scores.csv").string(), "--scores", (ab / "scores.csv").string(),
                            "--names", "fr,ab", "--coefficients", "pearson", "--threshold", "3.5",
                            "--out", (dir / "out").string()});
    CHECK(r.code == 0);
    const auto m = slurp(dir / "out" / "metric_correlation.csv");
    CHECK(m.find("pearson,fr,fr,1\n") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "williams.csv"));
    const auto self = run_cli({"compare", "--dataset", kCompareDataset, "--scores",
                               (fr / "scores.csv").string(), "--scores",
                               (fr / "scores.csv").string(), "--names", "a,b", "--coefficients",
                               "pearson", "--criteria", "fluency", "--out", (dir / "self").string()});
    CHECK(self.code == 0);
    const auto sw = slurp(dir / "self" / "williams.csv");
    CHECK(sw.find(",0.500000,ok\n") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "score_distribution.csv"));

    // Layout mismatch names the offending file.
    const auto other = dir / "other.csv";
    write_file(other, "text_id,system_id,divergence,similarity,measure\nzz,sysA,1,-1,M\n");
    const auto bad = run_cli({"compare", "--dataset", kCompareDataset, "--scores",
                              (fr / "scores.csv").string(), "--scores", other.string(), "--out",
                              (dir / "bad").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("other.csv") != std::string::npos);
}

TEST_CASE("temperature sweep writes one finite row per temperature") {
    const auto dir = fresh_dir("sweep");
    const auto r = run_cli({"sweep", "--dataset", kGoldenDataset, "--kind", "temperature",
                            "--temperatures", "0.5,1,2", "--criteria", "fluency",
                            "--coefficients", "pearson", "--measure", "FisherRao", "--out",
                            dir.string()});
    CHECK(r.code == 0);
    std::istringstream csv(slurp(dir / "sweep.csv"));
    std::string line;
    std::getline(csv, line);
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        CHECK(line.find(",ok") != std::string::npos);
    }
    CHECK(rows == 3);
    CHECK(run_cli({"sweep", "--dataset", kGoldenDataset, "--temperatures", "1:0:1", "--out",
                   dir.string()})
              .code == 1);
}

TEST_CASE("ab-grid sweep flags invalid cells and exits 2") {
    const auto dir = fresh_dir("grid");
    const auto r = run_cli({"sweep", "--dataset", kGoldenDataset, "--kind", "ab-grid",
                            "--alphas", "1,2", "--betas", "-1,0.5", "--criteria", "fluency",
                            "--coefficients", "kendall", "--out", dir.string()});
    CHECK(r.code == 2);
    const auto csv = slurp(dir / "sweep.csv");
    CHECK(csv.find("invalid_domain") != std::string::npos);
}

TEST_CASE("skip-errors exits 2 with partial results") {
    const auto dir = fresh_dir("partial");
    fs::create_directories(dir);
    const auto data = dir / "d.jsonl";
    write_file(data,
               R"({"text_id":"a","reference":"x y z","candidates":[{"system_id":"s1","text":"x y","human_scores":{"q":1}},{"system_id":"s2","text":"  ","human_scores":{"q":2}}]}
)");
    const auto fail = run_cli({"score", "--dataset", data.string(), "--weighting", "uniform",
                               "--out", (dir / "o1").string()});
    CHECK(fail.code == 1);
    const auto partial = run_cli({"score", "--dataset", data.string(), "--weighting", "uniform",
                                  "--skip-errors", "--out", (dir / "o2").string()});
    CHECK(partial.code == 2);
    CHECK(slurp(dir / "o2" / "scores.csv").find("a,s2,,,") != std::string::npos);
}

TEST_CASE("idf and export-distributions round trip") {
    const auto dir = fresh_dir("export");
    fs::create_directories(dir);
    const auto corpus = dir / "corpus.txt";
    write_file(corpus, "the cat sat\nthe dog ran\n\n");
    CHECK(run_cli({"idf", "--corpus", corpus.string(), "--out", (dir / "idf.jsonl").string()})
              .code == 0);
    const auto idf = IdfTable::load(dir / "idf.jsonl");
    CHECK(idf.document_count() == 2);
    write_file(dir / "empty.txt", "\n");
    CHECK(run_cli({"idf", "--corpus", (dir / "empty.txt").string(), "--out",
                   (dir / "x.jsonl").string()})
              .code == 1);

    const auto store = dir / "store_T1.jsonl";
    CHECK(run_cli({"export-distributions", "--dataset", kGoldenDataset, "--top-k", "16", "--out",
                   store.string()})
              .code == 0);
    const auto live = dir / "live";
    const auto replay = dir / "replay";
    CHECK(run_cli({"score", "--dataset", kGoldenDataset, "--out", live.string()}).code == 0);
    CHECK(run_cli({"score", "--dataset", kGoldenDataset, "--backend", "store", "--store",
                   (dir / "store_T{T}.jsonl").string(), "--temperature", "1", "--out",
                   replay.string()})
              .code == 0);
    const auto a = load_score_csv(live / "scores.csv");
    const auto b = load_score_csv(replay / "scores.csv");
    for (std::size_t i = 0; i < a.divergence.values().size(); ++i) {
        CHECK(std::abs(a.divergence.values()[i] - b.divergence.values()[i]) < 1e-6);
    }
    const auto mismatch = run_cli({"score", "--dataset", kGoldenDataset, "--backend", "store",
                                   "--store", store.string(), "--temperature", "2", "--out",
                                   (dir / "mm").string()});
    CHECK(mismatch.code == 1);
}

TEST_CASE("config file supplies defaults") {
    const auto dir = fresh_dir("config");
    fs::create_directories(dir);
    const auto cfg = dir / "run.toml";
    write_file(cfg, "[score]\nmeasure = \"JeffreysKL\"\nweighting = \"uniform\"\n");
    const auto r = run_cli({"--config", cfg.string(), "score", "--dataset", kGoldenDataset,
                            "--out", (dir / "out").string()});
    CHECK(r.code == 0);
    CHECK(slurp(dir / "out" / "scores.csv") == slurp(kFixtures + "/golden_scores.csv"));
}

TEST_CASE("remote backend capture and replay through the command line") {
    testing::FakeSidecar sidecar;
    const auto dir = fresh_dir("remote");
    const auto store = dir / "captured.jsonl";
    CHECK(run_cli({"export-distributions", "--dataset", kGoldenDataset, "--backend", "remote",
                   "--endpoint", sidecar.endpoint(), "--batch-size", "2", "--out", store.string()})
              .code == 0);
    CHECK(sidecar.distribution_requests == 5);  // 9 texts in batches of 2
    const auto live = run_cli({"score", "--dataset", kGoldenDataset, "--backend", "remote",
                               "--endpoint", sidecar.endpoint(), "--measure", "FisherRao",
                               "--out", (dir / "live").string()});
    CHECK(live.code == 0);
    const auto replay = run_cli({"score", "--dataset", kGoldenDataset, "--backend", "store",
                                 "--store", store.string(), "--measure", "FisherRao", "--out",
                                 (dir / "replay").string()});
    CHECK(replay.code == 0);
    const auto a = load_score_csv(dir / "live" / "scores.csv");
    const auto b = load_score_csv(dir / "replay" / "scores.csv");
    for (std::size_t i = 0; i < a.divergence.values().size(); ++i) {
        CHECK(std::abs(a.divergence.values()[i] - b.divergence.values()[i]) < 1e-6);
    }
    const auto wrong_vocab = run_cli({"score", "--dataset", kGoldenDataset, "--backend", "remote",
                                      "--endpoint", sidecar.endpoint(), "--vocab-size", "16",
                                      "--out", (dir / "mm").string()});
    CHECK(wrong_vocab.code == 1);
    CHECK(wrong_vocab.err.find("vocabulary") != std::string::npos);
}
