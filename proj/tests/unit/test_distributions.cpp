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
#include <random>
#include <sstream>

#include "infolm/distributions.hpp"
#include "infolm/error.hpp"

using namespace infolm;
using doctest::Approx;

TEST_CASE("temperature softmax") {
    const std::vector<double> zero{0.0, 0.0};
    const auto u = temperature_softmax(zero, 1.0);
    CHECK(u[0] == 0.5);
    CHECK(u[1] == 0.5);
    const std::vector<double> l{3.0, 0.0};
    const auto hot = temperature_softmax(l, 1e6);
    CHECK(std::abs(hot[0] - 0.5) < 1e-3);
    const auto cold = temperature_softmax(l, 1e-6);
    CHECK(std::abs(cold[0] - 1.0) < 1e-6);
    CHECK(temperature_softmax(l, 1.0)[0] == Approx(std::exp(3.0) / (std::exp(3.0) + 1.0)));
    CHECK_THROWS_AS(temperature_softmax(l, 0.0), DomainError);
    CHECK_THROWS_AS(temperature_softmax(l, -1.0), DomainError);
    const std::vector<double> bad{1.0, INFINITY};
    CHECK_THROWS_AS(temperature_softmax(bad, 1.0), NumericError);
}

TEST_CASE("softmax entropy is nondecreasing in temperature") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> logits(20);
        for (double& v : logits) v = g(rng);
        double prev = -1.0;
        for (double t : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            const double h = temperature_softmax(logits, t).entropy();
            CHECK(h >= prev - 1e-12);
            prev = h;
        }
    }
}

TEST_CASE("idf table and weights") {
    const std::vector<std::vector<TokenId>> docs{{1, 2, 2}, {2, 3}, {2}};
    const auto table = IdfTable::from_documents(docs);
    CHECK(table.document_count() == 3);
    CHECK(table.df(2) == 3);
    CHECK(table.df(1) == 1);
    CHECK(table.df(99) == 0);
    CHECK(table.idf(1) == Approx(std::log(4.0 / 2.0) + 1.0));
    CHECK(table.idf(2) == Approx(1.0));

    const std::vector<TokenId> one{7};
    CHECK(idf_weights(one, table)[0] == 1.0);

    const std::vector<TokenId> same{2, 2, 2, 2};
    const auto same_w = idf_weights(same, table);
    for (double w : same_w.values()) CHECK(w == Approx(0.25));

    IdfTable t10(10, {{1, 1}, {2, 10}});
    const std::vector<TokenId> pair{1, 2};
    const auto w = idf_weights(pair, t10);
    const double raw1 = std::log(11.0 / 2.0) + 1.0;
    const double raw2 = std::log(11.0 / 11.0) + 1.0;
    CHECK(w[0] > w[1]);
    CHECK(w[0] == Approx(raw1 / (raw1 + raw2)).epsilon(1e-12));
    CHECK(w[1] == Approx(raw2 / (raw1 + raw2)).epsilon(1e-12));
    CHECK_THROWS_AS(idf_weights(std::span<const TokenId>{}, t10), EmptyInputError);
}

TEST_CASE("idf table serialization") {
    IdfTable t(4, {{9, 2}, {1, 4}, {5, 1}});
    std::stringstream ss;
    t.write(ss);
    const auto text = ss.str();
    CHECK(text.find("\"document_count\":4") != std::string::npos);
    CHECK(text.find("\"token_id\":1") < text.find("\"token_id\":9"));
    CHECK(IdfTable::read(ss) == t);

    std::istringstream bad("{\"document_count\":2}\n{\"token_id\":1}\n");
    try {
        IdfTable::read(bad, "t.jsonl");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("t.jsonl:2") != std::string::npos);
    }
    std::istringstream empty("");
    CHECK_THROWS_AS(IdfTable::read(empty), FormatError);
    CHECK_THROWS_AS(IdfTable(3, {{1, 4}}), DomainError);
}

TEST_CASE("uniform weights") {
    CHECK(uniform_weights(1)[0] == 1.0);
    const auto four = uniform_weights(4);
    for (double w : four.values()) CHECK(w == 0.25);
    for (std::size_t n = 1; n <= 100; ++n) {
        const auto weights = uniform_weights(n);
        double s = 0.0;
        for (double w : weights.values()) s += w;
        CHECK(s == Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(uniform_weights(0), EmptyInputError);
}

TEST_CASE("aggregate bag of distributions") {
    const TokenDistribution a({1.0, 0.0});
    const TokenDistribution b({0.0, 1.0});
    const std::vector<MaskedPrediction> ab{{0, a}, {1, b}};
    const auto half = aggregate(ab, ImportanceWeights({0.5, 0.5}));
    CHECK(half[0] == 0.5);
    CHECK(half[1] == 0.5);
    const auto skew = aggregate(ab, ImportanceWeights({0.75, 0.25}));
    CHECK(skew[0] == 0.75);
    CHECK(skew[1] == 0.25);

    const TokenDistribution c({0.2, 0.3, 0.5});
    const std::vector<MaskedPrediction> same{{0, c}, {1, c}, {2, c}};
    const auto agg = aggregate(same, ImportanceWeights({0.1, 0.6, 0.3}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(agg[i] == Approx(c[i]).epsilon(1e-15));

    CHECK_THROWS_AS(aggregate(ab, ImportanceWeights({1.0})), ShapeError);
    const std::vector<MaskedPrediction> mixed{{0, a}, {1, c}};
    CHECK_THROWS_AS(aggregate(mixed, ImportanceWeights({0.5, 0.5})), ShapeError);
    CHECK_THROWS_AS(aggregate(std::span<const MaskedPrediction>{}, ImportanceWeights({1.0})),
                    EmptyInputError);
    CHECK_THROWS_AS(ImportanceWeights({0.5, 0.4}), DomainError);
}
