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

#include "infolm/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "infolm/error.hpp"

namespace infolm {

ImportanceWeights::ImportanceWeights(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) {
        throw EmptyInputError("importance weights are empty");
    }
    double sum = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) {
            throw DomainError("importance weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw DomainError("importance weights must sum to 1");
    }
}

IdfTable::IdfTable(std::size_t document_count,
                   std::unordered_map<TokenId, std::size_t> doc_frequency)
    : document_count_(document_count), doc_frequency_(std::move(doc_frequency)) {
    if (document_count_ < 1) {
        throw DomainError("idf table needs at least one document");
    }
    for (const auto& [token, count] : doc_frequency_) {
        if (count > document_count_) {
            throw DomainError("document frequency of token " + std::to_string(token) +
                              " exceeds the document count");
        }
    }
}

IdfTable IdfTable::from_documents(std::span<const std::vector<TokenId>> documents) {
    if (documents.empty()) {
        throw EmptyInputError("idf corpus is empty");
    }
    std::unordered_map<TokenId, std::size_t> df;
    for (const auto& doc : documents) {
        std::unordered_set<TokenId> seen(doc.begin(), doc.end());
        for (TokenId t : seen) {
            ++df[t];
        }
    }
    return IdfTable(documents.size(), std::move(df));
}

std::size_t IdfTable::df(TokenId token) const noexcept {
    auto it = doc_frequency_.find(token);
    return it == doc_frequency_.end() ? 0 : it->second;
}

double IdfTable::idf(TokenId token) const noexcept {
    const double n = static_cast<double>(document_count_);
    const double d = static_cast<double>(df(token));
    return std::log((1.0 + n) / (1.0 + d)) + 1.0;
}

void IdfTable::write(std::ostream& out) const {
    out << nlohmann::json{{"document_count", document_count_}}.dump() << '\n';
    std::vector<std::pair<TokenId, std::size_t>> rows(doc_frequency_.begin(),
                                                      doc_frequency_.end());
    std::sort(rows.begin(), rows.end());
    for (const auto& [token, count] : rows) {
        out << nlohmann::json{{"token_id", token}, {"df", count}}.dump() << '\n';
    }
}

IdfTable IdfTable::read(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t document_count = 0;
    bool have_header = false;
    std::unordered_map<TokenId, std::size_t> df;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto locus = source + ":" + std::to_string(line_no);
        try {
            const auto rec = nlohmann::json::parse(line);
            if (!have_header) {
                document_count = rec.at("document_count").get<std::size_t>();
                have_header = true;
            } else {
                df[rec.at("token_id").get<TokenId>()] = rec.at("df").get<std::size_t>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(locus + ": " + e.what());
        }
    }
    if (!have_header) {
        throw FormatError(source + ": missing idf header record");
    }
    try {
        return IdfTable(document_count, std::move(df));
    } catch (const DomainError& e) {
        throw FormatError(source + ": " + e.what());
    }
}

IdfTable IdfTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw BackendUnavailable("cannot open idf table " + path.string());
    }
    return read(in, path.string());
}

TokenDistribution temperature_softmax(std::span<const double> logits, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw DomainError("temperature must be positive");
    }
    if (logits.empty()) {
        throw EmptyInputError("no logits");
    }
    double top = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite logit");
        }
        top = std::max(top, v);
    }
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp((logits[i] - top) / temperature);
        sum += probs[i];
    }
    for (double& v : probs) {
        v /= sum;
    }
    return TokenDistribution::from_trusted(std::move(probs));
}

ImportanceWeights idf_weights(std::span<const TokenId> tokens, const IdfTable& table) {
    if (tokens.empty()) {
        throw EmptyInputError("cannot weight an empty token sequence");
    }
    if (table.document_count() < 1) {
        throw DomainError("idf table has no documents");
    }
    std::vector<double> raw(tokens.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        raw[k] = table.idf(tokens[k]);
        sum += raw[k];
    }
    for (double& w : raw) {
        w /= sum;
    }
    return ImportanceWeights(std::move(raw));
}

ImportanceWeights uniform_weights(std::size_t length) {
    if (length == 0) {
        throw EmptyInputError("uniform weights over zero tokens");
    }
    return ImportanceWeights(std::vector<double>(length, 1.0 / static_cast<double>(length)));
}

TokenDistribution aggregate(std::span<const MaskedPrediction> predictions,
                            const ImportanceWeights& weights) {
    if (predictions.empty()) {
        throw EmptyInputError("no predictions to aggregate");
    }
    if (predictions.size() != weights.size()) {
        throw ShapeError("got " + std::to_string(predictions.size()) + " predictions but " +
                         std::to_string(weights.size()) + " weights");
    }
    const std::size_t vocab = predictions.front().distribution.size();
    std::vector<double> bag(vocab, 0.0);
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        const auto& dist = predictions[k].distribution;
        if (dist.size() != vocab) {
            throw ShapeError("prediction " + std::to_string(k) + " has vocabulary size " +
                             std::to_string(dist.size()) + ", expected " + std::to_string(vocab));
        }
        const double w = weights[k];
        for (std::size_t i = 0; i < vocab; ++i) {
            bag[i] += w * dist[i];
        }
    }
    return TokenDistribution::from_trusted(std::move(bag));
}

} // namespace infolm
