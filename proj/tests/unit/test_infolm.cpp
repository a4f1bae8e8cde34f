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
#include <sstream>

#include "infolm/error.hpp"
#include "infolm/infolm.hpp"
#include "support/oracles.hpp"

using namespace infolm;
using doctest::Approx;

namespace {

std::vector<MeasureSpec> all_measures() {
    std::vector<MeasureSpec> out;
    for (const auto& p : preset_catalog()) out.push_back(p.measure);
    for (auto k : {MeasureKind::L1, MeasureKind::L2, MeasureKind::LInf, MeasureKind::KL,
                   MeasureKind::JeffreysKL, MeasureKind::FisherRao}) {
        out.push_back(MeasureSpec::of(k));
    }
    return out;
}

EvalDataset small_dataset() {
    std::vector<DatasetEntry> entries;
    const char* refs[] = {"the cat sat on the mat", "a storm hit the coast today"};
    const char* cands[2][2] = {{"the cat sat on a mat", "dogs bark loudly"},
                               {"a storm hit the coast", "the cat sat"}};
    for (int i = 0; i < 2; ++i) {
        DatasetEntry e{"t" + std::to_string(i), refs[i], {}};
        for (int s = 0; s < 2; ++s) {
            e.candidates.push_back({"s" + std::to_string(s), cands[i][s], {{"q", double(s + i)}}});
        }
        entries.push_back(e);
    }
    return EvalDataset(entries);
}

} // namespace

TEST_CASE("presets") {
    const auto ab = preset("summ-abs-ab");
    CHECK(ab.measure.kind == MeasureKind::ABDiv);
    CHECK(ab.measure.alpha == 3.0);
    CHECK(ab.measure.beta == 0.25);
    CHECK(ab.temperature == 1.0);
    const auto g = preset("d2t-gamma");
    CHECK(g.measure.kind == MeasureKind::GammaDiv);
    CHECK(g.measure.beta == 3.0);
    CHECK(preset("fisher-rao").measure.kind == MeasureKind::FisherRao);
    CHECK(preset("summ-ext-alpha").measure.alpha == 0.75);
    CHECK_THROWS_AS(preset("nope"), UnknownPreset);
}

TEST_CASE("perfect match scores zero for every measure") {
    MockProvider mock(MockConfig{});
    const TextRef x{"x", "the quick brown fox jumps"};
    const TextRef y{"y", "the quick brown fox jumps"};
    for (const auto& m : all_measures()) {
        for (auto w : {Weighting::Uniform, Weighting::Idf}) {
            IdfTable idf(2, {});
            const auto r = infolm_score(x, y, m, w, mock, &idf);
            CHECK(std::abs(r.divergence_value) <= 1e-10);
            CHECK(r.similarity_value == -r.divergence_value);
        }
    }
}

TEST_CASE("score composes aggregation and measure") {
    MockProvider mock(MockConfig{});
    const TextRef a{"a", "red green blue"};
    const TextRef b{"b", "one two three four"};
    auto avg = [&](const TextRef& t) {
        const auto preds = mock.predict_masked(mock.tokenize(t));
        std::vector<double> out(16, 0.0);
        for (const auto& p : preds)
            for (std::size_t v = 0; v < 16; ++v) out[v] += p.distribution[v] / preds.size();
        return out;
    };
    const double expected = oracle::jeffreys(avg(a), avg(b), 1e-12);
    const auto got = infolm_score(a, b, MeasureSpec::of(MeasureKind::JeffreysKL),
                                  Weighting::Uniform, mock, nullptr);
    CHECK(got.divergence_value == Approx(expected).epsilon(1e-12));
    const auto swapped = infolm_score(b, a, MeasureSpec::of(MeasureKind::JeffreysKL),
                                      Weighting::Uniform, mock, nullptr);
    CHECK(std::abs(swapped.divergence_value - got.divergence_value) < 1e-10);
}

TEST_CASE("negative parameters produce a warning") {
    MockProvider mock(MockConfig{});
    const auto r = infolm_score({"a", "x y"}, {"b", "y z"}, MeasureSpec::gamma_div(-0.5),
                                Weighting::Uniform, mock, nullptr);
    CHECK(!r.warnings.empty());
}

TEST_CASE("idf weighting requires a table") {
    MockProvider mock(MockConfig{});
    CHECK_THROWS(infolm_score({"a", "x y"}, {"b", "y z"}, MeasureSpec::of(MeasureKind::L1),
                              Weighting::Idf, mock, nullptr));
}

TEST_CASE("score_dataset equals independent cell scores") {
    MockProvider mock(MockConfig{});
    const auto ds = small_dataset();
    const auto idf = dataset_idf(ds, mock);
    const auto m = preset("summ-abs-ab").measure;
    ScoreOptions opts;
    const auto run = score_dataset(ds, m, mock, &idf, opts);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t s = 0; s < 2; ++s) {
            const auto& e = ds.entries()[i];
            const auto cell = infolm_score({"r", e.reference}, {"c", e.candidates[s].text}, m,
                                           Weighting::Idf, mock, &idf);
            CHECK(run.divergence.at(i, s) == cell.divergence_value);
        }
    }
    opts.workers = 4;
    CHECK(score_dataset(ds, m, mock, &idf, opts).divergence.values() == run.divergence.values());
}

TEST_CASE("single cell dataset") {
    MockProvider mock(MockConfig{});
    EvalDataset ds({{"t", "same words here", {{"s", "same words here", {}}}}});
    const auto run = score_dataset(ds, MeasureSpec::of(MeasureKind::FisherRao), mock, nullptr,
                                   {Weighting::Uniform, 1, false});
    CHECK(run.divergence.at(0, 0) == 0.0);
}

TEST_CASE("system permutation permutes columns") {
    MockProvider mock(MockConfig{});
    const auto ds = small_dataset();
    std::vector<DatasetEntry> swapped = ds.entries();
    for (auto& e : swapped) std::swap(e.candidates[0], e.candidates[1]);
    const auto m = MeasureSpec::of(MeasureKind::FisherRao);
    const ScoreOptions opts{Weighting::Uniform, 1, false};
    const auto a = score_dataset(ds, m, mock, nullptr, opts).divergence;
    const auto b = score_dataset(EvalDataset(swapped), m, mock, nullptr, opts).divergence;
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.at(i, 0) == b.at(i, 1));
        CHECK(a.at(i, 1) == b.at(i, 0));
    }
}

TEST_CASE("failing cells are reported or skipped") {
    MockProvider mock(MockConfig{});
    EvalDataset ds({{"t1", "a b", {{"s1", "a", {}}, {"s2", "   ", {}}}},
                    {"t2", "c d", {{"s1", "c", {}}, {"s2", "d", {}}}}});
    const auto m = MeasureSpec::of(MeasureKind::FisherRao);
    try {
        score_dataset(ds, m, mock, nullptr, {Weighting::Uniform, 1, false});
        FAIL("expected ScoringError");
    } catch (const ScoringError& e) {
        REQUIRE(e.failures().size() == 1);
        CHECK(e.failures()[0].text_id == "t1");
        CHECK(e.failures()[0].system_id == "s2");
    }
    const auto run = score_dataset(ds, m, mock, nullptr, {Weighting::Uniform, 2, true});
    CHECK(run.failures.size() == 1);
    CHECK(run.divergence.missing(0, 1));
    CHECK(!run.divergence.missing(1, 1));
}

TEST_CASE("score csv round trip") {
    ScoreMatrix div({"t1", "t2"}, {"s1", "s2"}, {0.5, 0.0, 1.0 / 3.0, ScoreMatrix::kMissing});
    std::stringstream ss;
    write_score_csv(ss, div, "FisherRao");
    const std::string text = ss.str();
    CHECK(text.rfind("text_id,system_id,divergence,similarity,measure\n", 0) == 0);
    CHECK(text.find("t1,s2,0,0,FisherRao") != std::string::npos);
    CHECK(text.find("t2,s2,,,FisherRao") != std::string::npos);
    const auto table = read_score_csv(ss);
    CHECK(table.measure_label == "FisherRao");
    CHECK(table.divergence.at(1, 0) == Approx(1.0 / 3.0).epsilon(1e-11));
    CHECK(table.similarity.at(0, 0) == -0.5);
    CHECK(table.divergence.missing(1, 1));

    std::istringstream bad("text_id,system_id,divergence,similarity,measure\nt1,s1,abc,1,M\n");
    try {
        read_score_csv(bad, "x.csv");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("x.csv:2") != std::string::npos);
    }
}
