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

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "infolm/distributions.hpp"

namespace infolm {

/// Identity of the model that produced a set of distributions.
struct BackendDescriptor {
    std::size_t vocab_size = 0;
    std::string model_id;
    std::string tokenizer_fingerprint;
    double temperature = 1.0;

    void validate() const;
    friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

struct TokenizedText {
    std::string text_id;
    std::vector<TokenId> token_ids;
    std::vector<std::string> token_strings;
    /// Set when the text was cut at the backend context window.
    bool truncated = false;

    std::size_t size() const noexcept { return token_ids.size(); }
};

/// A raw text and the stable key under which its distributions are stored.
struct TextRef {
    std::string id;
    std::string text;
};

/// Source of per-position masked-token distributions.
///
/// Implementations are safe to share between scoring threads.
class Provider {
public:
    virtual ~Provider() = default;

    virtual const BackendDescriptor& descriptor() const = 0;

    virtual TokenizedText tokenize(const TextRef& text) const = 0;

    /// One prediction per token position, in position order. Position k is
    /// predicted from the text with token k masked.
    virtual std::vector<MaskedPrediction> predict_masked(const TokenizedText& text) const = 0;

    /// Hint that the given texts will be requested. Remote providers batch here.
    virtual void prefetch(std::span<const TextRef> texts) const;
};

// ---------------------------------------------------------------------------
// Deterministic test double.

struct MockConfig {
    std::uint64_t seed = 42;
    std::size_t vocab_size = 16;
    double smoothing = 0.1;
    double temperature = 1.0;
    std::size_t context_window = 512;
};

/// Whitespace tokenizer plus a peaked predictor.
///
/// The token at each position is a hash of the word. The prediction for
/// masked position k puts 1 - smoothing on a token derived from (seed, left
/// neighbour, right neighbour) and spreads smoothing uniformly, before
/// temperature scaling.
class MockProvider final : public Provider {
public:
    explicit MockProvider(MockConfig config);

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    TokenizedText tokenize(const TextRef& text) const override;
    std::vector<MaskedPrediction> predict_masked(const TokenizedText& text) const override;

    const MockConfig& config() const noexcept { return config_; }

    /// Token the mock predicts for position k of the given sequence.
    TokenId peak_token(std::span<const TokenId> tokens, std::size_t k) const;

private:
    MockConfig config_;
    BackendDescriptor descriptor_;
};

std::unique_ptr<Provider> mock_model(std::uint64_t seed, std::size_t vocab_size, double smoothing,
                                     double temperature = 1.0);

// ---------------------------------------------------------------------------
// Sparse storage shared by the file store and the remote client.

struct SparsePosition {
    std::size_t position = 0;
    std::vector<std::pair<TokenId, double>> top;
    double residual = 0.0;
};

struct SparseText {
    std::string text_id;
    std::vector<TokenId> token_ids;
    std::vector<std::string> token_strings;
    std::vector<SparsePosition> positions;
};

/// Dense vector with the residual mass spread uniformly over unlisted tokens.
/// Probabilities and residual must sum to one within `tolerance`; the result
/// is renormalized. Throws ProtocolError on negative or out-of-range entries.
TokenDistribution densify(const SparsePosition& sparse, std::size_t vocab_size,
                          double tolerance = 1e-3);

/// Keeps the top_k largest probabilities, ties broken by token id.
SparsePosition sparsify(const TokenDistribution& dist, std::size_t position, std::size_t top_k);

/// Distribution store file: one JSON header line, then one line per
/// (text_id, position). Token ids appear on the first record of each text.
void write_store(std::ostream& out, const BackendDescriptor& descriptor, std::size_t top_k,
                 std::span<const SparseText> texts);

class DistributionStore final : public Provider {
public:
    DistributionStore(BackendDescriptor descriptor, std::size_t top_k,
                      std::vector<SparseText> texts);

    static std::unique_ptr<DistributionStore> read(std::istream& in,
                                                   const std::string& source = "<stream>");
    static std::unique_ptr<DistributionStore> load(const std::filesystem::path& path);

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    TokenizedText tokenize(const TextRef& text) const override;
    std::vector<MaskedPrediction> predict_masked(const TokenizedText& text) const override;

    std::size_t top_k() const noexcept { return top_k_; }
    std::size_t text_count() const noexcept { return texts_.size(); }

    /// Throws VocabMismatch unless vocab size, fingerprint and temperature agree.
    void check_compatible(const BackendDescriptor& requested) const;

private:
    const SparseText& find(const std::string& text_id) const;

    BackendDescriptor descriptor_;
    std::size_t top_k_;
    std::unordered_map<std::string, SparseText> texts_;
};

std::unique_ptr<DistributionStore> load_distribution_store(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// HTTP client for the model sidecar.

struct RemoteConfig {
    std::string endpoint;
    std::chrono::milliseconds timeout{30000};
    std::size_t batch_size = 16;
    std::size_t max_in_flight = 4;
    std::size_t top_k = 256;
    double temperature = 1.0;
    int max_retries = 3;
    std::chrono::milliseconds backoff{200};
    /// When set, model_info must agree with these fields.
    std::size_t expected_vocab_size = 0;
    std::string expected_fingerprint;
};

class RemoteClient final : public Provider {
public:
    /// Queries GET /v1/model_info. Throws BackendUnavailable or VocabMismatch.
    explicit RemoteClient(RemoteConfig config);
    ~RemoteClient() override;

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    TokenizedText tokenize(const TextRef& text) const override;
    std::vector<MaskedPrediction> predict_masked(const TokenizedText& text) const override;
    void prefetch(std::span<const TextRef> texts) const override;

    /// Raw sparse responses, batched. Used to capture stores.
    std::vector<SparseText> fetch(std::span<const TextRef> texts) const;

    std::size_t requests_sent() const noexcept;

private:
    struct State;

    std::vector<SparseText> request_batch(std::span<const TextRef> texts) const;
    const SparseText& lookup(const TextRef& text) const;

    RemoteConfig config_;
    BackendDescriptor descriptor_;
    std::unique_ptr<State> state_;
};

std::unique_ptr<RemoteClient> remote_client(const std::string& endpoint,
                                            std::chrono::milliseconds timeout,
                                            std::size_t batch_size);

} // namespace infolm
