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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "infolm/measures.hpp"

namespace infolm {

using TokenId = std::uint32_t;

/// The model's distribution for one masked position of a text.
struct MaskedPrediction {
    std::size_t position = 0;
    TokenDistribution distribution;
};

/// Per-token aggregation weights summing to one.
class ImportanceWeights {
public:
    ImportanceWeights() = default;
    explicit ImportanceWeights(std::vector<double> weights);

    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t i) const noexcept { return weights_[i]; }
    std::span<const double> values() const noexcept { return weights_; }

private:
    std::vector<double> weights_;
};

/// Document frequencies over a corpus. Immutable once built.
class IdfTable {
public:
    IdfTable() = default;
    IdfTable(std::size_t document_count, std::unordered_map<TokenId, std::size_t> doc_frequency);

    /// Counts, for each token id, the number of documents containing it.
    static IdfTable from_documents(std::span<const std::vector<TokenId>> documents);

    std::size_t document_count() const noexcept { return document_count_; }
    std::size_t df(TokenId token) const noexcept;
    const std::unordered_map<TokenId, std::size_t>& doc_frequency() const noexcept {
        return doc_frequency_;
    }

    /// Smoothed idf: ln((1 + N) / (1 + df)) + 1. Always positive.
    double idf(TokenId token) const noexcept;

    /// Line-delimited JSON: {"document_count": N}, then {"token_id": t, "df": n}
    /// sorted by token id.
    void write(std::ostream& out) const;
    static IdfTable read(std::istream& in, const std::string& source = "<stream>");
    static IdfTable load(const std::filesystem::path& path);

    friend bool operator==(const IdfTable&, const IdfTable&) = default;

private:
    std::size_t document_count_ = 0;
    std::unordered_map<TokenId, std::size_t> doc_frequency_;
};

/// softmax(logits / temperature) with max subtraction.
TokenDistribution temperature_softmax(std::span<const double> logits, double temperature);

ImportanceWeights idf_weights(std::span<const TokenId> tokens, const IdfTable& table);

ImportanceWeights uniform_weights(std::size_t length);

/// Weighted bag of distributions: sum_k w_k * p_k.
TokenDistribution aggregate(std::span<const MaskedPrediction> predictions,
                            const ImportanceWeights& weights);

} // namespace infolm
