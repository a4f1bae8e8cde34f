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

#include <chrono>
#include <cmath>
#include <sstream>

#include "infolm/backend.hpp"
#include "infolm/error.hpp"
#include "infolm/infolm.hpp"
#include "support/fake_sidecar.hpp"

using namespace infolm;
using doctest::Approx;

namespace {

RemoteConfig fast_config(const std::string& endpoint, std::size_t batch_size = 16) {
    RemoteConfig rc;
    rc.endpoint = endpoint;
    rc.batch_size = batch_size;
    rc.timeout = std::chrono::milliseconds(2000);
    rc.backoff = std::chrono::milliseconds(1);
    return rc;
}

std::vector<TextRef> five_texts() {
    return {{"a", "the cat sat"},
            {"b", "a dog ran far"},
            {"c", "birds sing"},
            {"d", "one"},
            {"e", "many small words here now"}};
}

} // namespace

TEST_CASE("mock provider contract") {
    MockProvider mock(MockConfig{});
    const auto tok = mock.tokenize({"t", "the quick brown fox"});
    CHECK(tok.size() == 4);
    const auto preds = mock.predict_masked(tok);
    REQUIRE(preds.size() == 4);
    for (std::size_t k = 0; k < preds.size(); ++k) {
        CHECK(preds[k].position == k);
        CHECK(preds[k].distribution.size() == 16);
        double s = 0.0;
        for (double p : preds[k].distribution.probs()) s += p;
        CHECK(s == Approx(1.0).epsilon(1e-12));
    }
    const auto again = mock.predict_masked(mock.tokenize({"t", "the quick brown fox"}));
    for (std::size_t k = 0; k < preds.size(); ++k) {
        CHECK(preds[k].distribution == again[k].distribution);
    }
    // At temperature 1 the peak carries (1 - s) + s/V.
    double peak = 0.0;
    for (double p : preds[0].distribution.probs()) peak = std::max(peak, p);
    CHECK(peak == Approx(0.9 + 0.1 / 16).epsilon(1e-12));
}

TEST_CASE("mock provider near-uniform limit and validation") {
    auto flat = mock_model(1, 8, 1.0 - 1.0 / 8.0);
    const auto preds = flat->predict_masked(flat->tokenize({"x", "a b c"}));
    for (const auto& p : preds) {
        CHECK(p.distribution.entropy() > 0.9 * std::log(8.0));
    }
    CHECK_THROWS_AS(mock_model(1, 8, 0.0), DomainError);
    CHECK_THROWS_AS(mock_model(1, 1, 0.5), DomainError);
    MockConfig small;
    small.context_window = 2;
    MockProvider m(small);
    const auto t = m.tokenize({"x", "a b c d"});
    CHECK(t.size() == 2);
    CHECK(t.truncated);
    CHECK_THROWS_AS(m.tokenize({"x", "   "}), TokenizationError);
}

TEST_CASE("densify spreads the residual") {
    SparsePosition sp{0, {{3, 0.9}, {7, 0.05}}, 0.05};
    const auto d = densify(sp, 10);
    CHECK(d[3] == Approx(0.9));
    CHECK(d[7] == Approx(0.05));
    for (std::size_t i : {0, 1, 2, 4, 5, 6, 8, 9}) CHECK(d[i] == Approx(0.00625).epsilon(1e-12));

    SparsePosition short_sum{0, {{0, 0.5 * 0.9997}, {1, 0.5 * 0.9997}}, 0.0};
    const auto r = densify(short_sum, 2);
    CHECK(r[0] == Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(densify({0, {{0, 1.1}, {1, -0.1}}, 0.0}, 2), ProtocolError);
    CHECK_THROWS_AS(densify({0, {{5, 1.0}}, 0.0}, 2), ProtocolError);
    CHECK_THROWS_AS(densify({0, {{0, 0.5}, {0, 0.5}}, 0.0}, 2), ProtocolError);
    CHECK_THROWS_AS(densify({0, {{0, 0.5}}, 0.1}, 2), ProtocolError);
}

TEST_CASE("sparsify keeps the head in order") {
    const TokenDistribution d({0.1, 0.4, 0.1, 0.3, 0.1});
    const auto sp = sparsify(d, 2, 3);
    CHECK(sp.position == 2);
    REQUIRE(sp.top.size() == 3);
    CHECK(sp.top[0].first == 1);
    CHECK(sp.top[1].first == 3);
    CHECK(sp.top[2].first == 0);
    CHECK(sp.residual == Approx(0.2));
    const auto back = densify(sparsify(d, 0, 5), 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(back[i] == Approx(d[i]).epsilon(1e-12));
}

TEST_CASE("store round trip reproduces the mock") {
    MockProvider mock(MockConfig{});
    const std::vector<TextRef> texts{{"r", "alpha beta gamma"}, {"c", "delta epsilon"}};
    std::vector<SparseText> captured;
    for (const auto& t : texts) {
        const auto tok = mock.tokenize(t);
        SparseText s{t.id, tok.token_ids, tok.token_strings, {}};
        for (const auto& p : mock.predict_masked(tok)) {
            s.positions.push_back(sparsify(p.distribution, p.position, 16));
        }
        captured.push_back(s);
    }
    std::stringstream ss;
    write_store(ss, mock.descriptor(), 16, captured);
    const auto store = DistributionStore::read(ss);
    CHECK(store->descriptor() == mock.descriptor());
    CHECK(store->text_count() == 2);
    for (const auto& t : texts) {
        const auto tok = store->tokenize(t);
        CHECK(tok.token_ids == mock.tokenize(t).token_ids);
        const auto live = mock.predict_masked(mock.tokenize(t));
        const auto replay = store->predict_masked(tok);
        REQUIRE(live.size() == replay.size());
        for (std::size_t k = 0; k < live.size(); ++k) {
            for (std::size_t v = 0; v < 16; ++v) {
                CHECK(std::abs(live[k].distribution[v] - replay[k].distribution[v]) < 1e-9);
            }
        }
    }
    CHECK_THROWS_AS(store->tokenize({"missing", "x"}), BackendUnavailable);
    auto wrong = store->descriptor();
    wrong.vocab_size = 32;
    CHECK_THROWS_AS(store->check_compatible(wrong), VocabMismatch);
    wrong = store->descriptor();
    wrong.temperature = 2.0;
    CHECK_THROWS_AS(store->check_compatible(wrong), VocabMismatch);
}

TEST_CASE("store errors carry a locus") {
    std::istringstream empty_store(
        "{\"vocab_size\":4,\"model_id\":\"m\",\"tokenizer_fingerprint\":\"f\","
        "\"temperature\":1,\"top_k\":4}\n");
    const auto store = DistributionStore::read(empty_store);
    CHECK_THROWS_AS(store->tokenize({"any", "x"}), BackendUnavailable);

    std::istringstream bad(
        "{\"vocab_size\":4,\"model_id\":\"m\",\"tokenizer_fingerprint\":\"f\","
        "\"temperature\":1,\"top_k\":4}\n{\"text_id\":\"a\"}\n");
    try {
        DistributionStore::read(bad, "s.jsonl");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("s.jsonl:2") != std::string::npos);
    }
    CHECK_THROWS_AS(DistributionStore::load("/nonexistent/store.jsonl"), BackendUnavailable);
}

TEST_CASE("remote client batches requests") {
    testing::FakeSidecar sidecar;
    RemoteClient client(fast_config(sidecar.endpoint(), 2));
    CHECK(client.descriptor().vocab_size == 10);
    CHECK(client.descriptor().model_id == "fake-mlm");
    const auto texts = five_texts();
    const auto got = client.fetch(texts);
    CHECK(client.requests_sent() == 3);
    CHECK(sidecar.distribution_requests == 3);
    REQUIRE(got.size() == 5);
    for (std::size_t i = 0; i < texts.size(); ++i) CHECK(got[i].text_id == texts[i].id);
    CHECK(got[4].positions.size() == 5);
}

TEST_CASE("remote client as a provider") {
    testing::FakeSidecar sidecar;
    auto client = remote_client(sidecar.endpoint(), std::chrono::milliseconds(2000), 2);
    const auto texts = five_texts();
    client->prefetch(texts);
    const auto before = client->requests_sent();
    CHECK(before == 3);
    const auto tok = client->tokenize(texts[0]);
    CHECK(tok.token_ids == std::vector<TokenId>{3, 3, 3});
    const auto preds = client->predict_masked(tok);
    REQUIRE(preds.size() == 3);
    CHECK(preds[0].distribution[3] == Approx(testing::FakeSidecar::peak_mass(1.0)));
    CHECK(client->requests_sent() == before);
}

TEST_CASE("remote client validates distributions") {
    testing::FakeSidecar sidecar;
    sidecar.scale = 0.9997;
    RemoteClient client(fast_config(sidecar.endpoint()));
    const auto preds = client.predict_masked(client.tokenize({"x", "hello world"}));
    double s = 0.0;
    for (double p : preds[0].distribution.probs()) s += p;
    CHECK(s == Approx(1.0).epsilon(1e-12));

    testing::FakeSidecar negative;
    negative.negative = true;
    RemoteClient bad(fast_config(negative.endpoint()));
    const std::vector<TextRef> one{{"x", "hello world"}};
    CHECK_THROWS_AS(bad.fetch(one), ProtocolError);
}

TEST_CASE("remote client retries transient failures") {
    testing::FakeSidecar sidecar;
    RemoteClient client(fast_config(sidecar.endpoint()));
    sidecar.fail_next = 2;
    const std::vector<TextRef> one{{"x", "hello world"}};
    CHECK(client.fetch(one).size() == 1);
    CHECK(sidecar.distribution_requests == 3);

    sidecar.fail_next = 10;
    CHECK_THROWS_AS(client.fetch(one), BackendUnavailable);
    CHECK(sidecar.distribution_requests == 3 + 4);

    sidecar.fail_next = 0;
    sidecar.hard_status = 400;
    CHECK_THROWS_AS(client.fetch(one), ProtocolError);
}

TEST_CASE("remote client checks the model descriptor") {
    testing::FakeSidecar sidecar;
    auto rc = fast_config(sidecar.endpoint());
    rc.expected_vocab_size = 30522;
    CHECK_THROWS_AS(RemoteClient{rc}, VocabMismatch);
    rc.expected_vocab_size = 0;
    rc.expected_fingerprint = "other";
    CHECK_THROWS_AS(RemoteClient{rc}, VocabMismatch);
    auto dead = fast_config("http://127.0.0.1:1");
    dead.max_retries = 1;
    CHECK_THROWS_AS(RemoteClient{dead}, BackendUnavailable);
}

TEST_CASE("capture and replay through a store") {
    testing::FakeSidecar sidecar;
    RemoteClient client(fast_config(sidecar.endpoint(), 2));
    const auto texts = five_texts();
    std::stringstream ss;
    write_store(ss, client.descriptor(), 256, client.fetch(texts));
    const auto store = DistributionStore::read(ss);
    const auto measure = MeasureSpec::of(MeasureKind::FisherRao);
    for (std::size_t i = 1; i < texts.size(); ++i) {
        const auto live =
            infolm_score(texts[0], texts[i], measure, Weighting::Uniform, client, nullptr);
        const auto replay =
            infolm_score(texts[0], texts[i], measure, Weighting::Uniform, *store, nullptr);
        CHECK(std::abs(live.divergence_value - replay.divergence_value) < 1e-6);
    }
}
