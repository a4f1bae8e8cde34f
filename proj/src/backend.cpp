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

#include "infolm/backend.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <istream>
#include <map>
#include <ostream>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "infolm/error.hpp"

namespace infolm {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint_of(std::string_view kind, std::size_t vocab_size) {
    std::ostringstream os;
    os << kind << "-" << std::hex << fnv1a(std::string(kind) + ":" + std::to_string(vocab_size));
    return os.str();
}

} // namespace

void BackendDescriptor::validate() const {
    if (vocab_size < 2) {
        throw DomainError("vocabulary size must be at least 2");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw DomainError("temperature must be positive");
    }
}

void Provider::prefetch(std::span<const TextRef>) const {}

// ---------------------------------------------------------------------------

MockProvider::MockProvider(MockConfig config) : config_(config) {
    if (!(config_.smoothing > 0.0 && config_.smoothing < 1.0)) {
        throw DomainError("mock smoothing must lie in (0, 1)");
    }
    if (config_.context_window < 1) {
        throw DomainError("mock context window must be positive");
    }
    descriptor_.vocab_size = config_.vocab_size;
    descriptor_.model_id = "mock-seed" + std::to_string(config_.seed);
    descriptor_.tokenizer_fingerprint = fingerprint_of("mock-ws", config_.vocab_size);
    descriptor_.temperature = config_.temperature;
    descriptor_.validate();
}

TokenizedText MockProvider::tokenize(const TextRef& text) const {
    TokenizedText out;
    out.text_id = text.id;
    std::istringstream words(text.text);
    std::string word;
    while (words >> word) {
        if (out.token_ids.size() == config_.context_window) {
            out.truncated = true;
            break;
        }
        out.token_ids.push_back(static_cast<TokenId>(fnv1a(word) % config_.vocab_size));
        out.token_strings.push_back(word);
    }
    if (out.token_ids.empty()) {
        throw TokenizationError("text '" + text.id + "' has no tokens");
    }
    return out;
}

TokenId MockProvider::peak_token(std::span<const TokenId> tokens, std::size_t k) const {
    constexpr std::uint64_t kBoundary = 0xffffffffULL + 1;
    const std::uint64_t left = k > 0 ? tokens[k - 1] : kBoundary;
    const std::uint64_t right = k + 1 < tokens.size() ? tokens[k + 1] : kBoundary + 1;
    std::uint64_t h = splitmix64(config_.seed);
    h = splitmix64(h ^ left);
    h = splitmix64(h ^ (right << 1));
    return static_cast<TokenId>(h % config_.vocab_size);
}

std::vector<MaskedPrediction> MockProvider::predict_masked(const TokenizedText& text) const {
    if (text.token_ids.empty()) {
        throw EmptyInputError("cannot predict over an empty text");
    }
    const std::size_t vocab = config_.vocab_size;
    for (TokenId t : text.token_ids) {
        if (t >= vocab) {
            throw TokenizationError("token id " + std::to_string(t) + " outside vocabulary of '" +
                                    text.text_id + "'");
        }
    }
    // At temperature 1 these logits give exactly (1 - s) + s/V on the peak and s/V elsewhere.
    const double s = config_.smoothing;
    const double floor_logit = std::log(s / static_cast<double>(vocab));
    const double peak_logit = std::log((1.0 - s) + s / static_cast<double>(vocab));

    std::vector<MaskedPrediction> out;
    out.reserve(text.size());
    std::vector<double> logits(vocab);
    for (std::size_t k = 0; k < text.size(); ++k) {
        std::fill(logits.begin(), logits.end(), floor_logit);
        logits[peak_token(text.token_ids, k)] = peak_logit;
        out.push_back({k, temperature_softmax(logits, config_.temperature)});
    }
    return out;
}

std::unique_ptr<Provider> mock_model(std::uint64_t seed, std::size_t vocab_size, double smoothing,
                                     double temperature) {
    MockConfig config;
    config.seed = seed;
    config.vocab_size = vocab_size;
    config.smoothing = smoothing;
    config.temperature = temperature;
    return std::make_unique<MockProvider>(config);
}

// ---------------------------------------------------------------------------

TokenDistribution densify(const SparsePosition& sparse, std::size_t vocab_size, double tolerance) {
    if (sparse.top.size() > vocab_size) {
        throw ProtocolError("more listed tokens than the vocabulary holds");
    }
    if (!std::isfinite(sparse.residual) || sparse.residual < 0.0) {
        throw ProtocolError("residual mass must be finite and nonnegative");
    }
    std::vector<double> dense(vocab_size, 0.0);
    std::vector<bool> listed(vocab_size, false);
    double total = sparse.residual;
    for (const auto& [token, prob] : sparse.top) {
        if (token >= vocab_size) {
            throw ProtocolError("token id " + std::to_string(token) + " outside vocabulary");
        }
        if (listed[token]) {
            throw ProtocolError("token id " + std::to_string(token) + " listed twice");
        }
        if (!std::isfinite(prob) || prob < 0.0) {
            throw ProtocolError("negative or non-finite probability for token " +
                                std::to_string(token));
        }
        listed[token] = true;
        dense[token] = prob;
        total += prob;
    }
    if (std::abs(total - 1.0) > tolerance) {
        throw ProtocolError("probabilities sum to " + std::to_string(total));
    }
    const std::size_t unlisted = vocab_size - sparse.top.size();
    if (unlisted > 0) {
        const double fill = sparse.residual / static_cast<double>(unlisted);
        for (std::size_t i = 0; i < vocab_size; ++i) {
            if (!listed[i]) {
                dense[i] = fill;
            }
        }
    }
    double sum = 0.0;
    for (double v : dense) {
        sum += v;
    }
    if (!(sum > 0.0)) {
        throw ProtocolError("distribution has no mass");
    }
    for (double& v : dense) {
        v /= sum;
    }
    return TokenDistribution::from_trusted(std::move(dense));
}

SparsePosition sparsify(const TokenDistribution& dist, std::size_t position, std::size_t top_k) {
    std::vector<TokenId> order(dist.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<TokenId>(i);
    }
    const std::size_t keep = std::min(top_k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                      order.end(), [&](TokenId a, TokenId b) {
                          return dist[a] != dist[b] ? dist[a] > dist[b] : a < b;
                      });
    SparsePosition out;
    out.position = position;
    double listed = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        out.top.emplace_back(order[i], dist[order[i]]);
        listed += dist[order[i]];
    }
    out.residual = std::max(0.0, 1.0 - listed);
    return out;
}

void write_store(std::ostream& out, const BackendDescriptor& descriptor, std::size_t top_k,
                 std::span<const SparseText> texts) {
    out << json{{"vocab_size", descriptor.vocab_size},
                {"model_id", descriptor.model_id},
                {"tokenizer_fingerprint", descriptor.tokenizer_fingerprint},
                {"temperature", descriptor.temperature},
                {"top_k", top_k}}
               .dump()
        << '\n';
    for (const auto& text : texts) {
        bool first = true;
        for (const auto& pos : text.positions) {
            json rec;
            rec["text_id"] = text.text_id;
            rec["position"] = pos.position;
            if (first) {
                rec["token_ids"] = text.token_ids;
                if (!text.token_strings.empty()) {
                    rec["token_strings"] = text.token_strings;
                }
                first = false;
            }
            json top = json::array();
            for (const auto& [token, prob] : pos.top) {
                top.push_back(json::array({token, prob}));
            }
            rec["top"] = std::move(top);
            rec["residual"] = pos.residual;
            out << rec.dump() << '\n';
        }
    }
}

DistributionStore::DistributionStore(BackendDescriptor descriptor, std::size_t top_k,
                                     std::vector<SparseText> texts)
    : descriptor_(std::move(descriptor)), top_k_(top_k) {
    descriptor_.validate();
    for (auto& text : texts) {
        if (text.token_ids.empty()) {
            throw FormatError("text '" + text.text_id + "' has no tokens");
        }
        if (!text.token_strings.empty() && text.token_strings.size() != text.token_ids.size()) {
            throw FormatError("text '" + text.text_id + "' token strings do not match token ids");
        }
        std::sort(text.positions.begin(), text.positions.end(),
                  [](const auto& a, const auto& b) { return a.position < b.position; });
        if (text.positions.size() != text.token_ids.size()) {
            throw FormatError("text '" + text.text_id + "' has " +
                              std::to_string(text.positions.size()) + " position records for " +
                              std::to_string(text.token_ids.size()) + " tokens");
        }
        for (std::size_t k = 0; k < text.positions.size(); ++k) {
            if (text.positions[k].position != k) {
                throw FormatError("text '" + text.text_id + "' is missing position " +
                                  std::to_string(k));
            }
        }
        for (TokenId t : text.token_ids) {
            if (t >= descriptor_.vocab_size) {
                throw FormatError("text '" + text.text_id + "' has token id " + std::to_string(t) +
                                  " outside the vocabulary");
            }
        }
        std::string key = text.text_id;
        if (!texts_.emplace(std::move(key), std::move(text)).second) {
            throw FormatError("duplicate text id in store");
        }
    }
}

std::unique_ptr<DistributionStore> DistributionStore::read(std::istream& in,
                                                           const std::string& source) {
    BackendDescriptor descriptor;
    std::size_t top_k = 0;
    bool have_header = false;
    std::map<std::string, SparseText> texts;
    std::vector<std::string> order;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto locus = source + ":" + std::to_string(line_no);
        try {
            const auto rec = json::parse(line);
            if (!have_header) {
                descriptor.vocab_size = rec.at("vocab_size").get<std::size_t>();
                descriptor.model_id = rec.at("model_id").get<std::string>();
                descriptor.tokenizer_fingerprint = rec.at("tokenizer_fingerprint").get<std::string>();
                descriptor.temperature = rec.at("temperature").get<double>();
                top_k = rec.at("top_k").get<std::size_t>();
                have_header = true;
                continue;
            }
            const auto text_id = rec.at("text_id").get<std::string>();
            auto [it, inserted] = texts.try_emplace(text_id);
            SparseText& text = it->second;
            if (inserted) {
                text.text_id = text_id;
                if (!rec.contains("token_ids")) {
                    throw FormatError(locus + ": first record of '" + text_id +
                                      "' lacks token_ids");
                }
                text.token_ids = rec.at("token_ids").get<std::vector<TokenId>>();
                if (rec.contains("token_strings")) {
                    text.token_strings = rec.at("token_strings").get<std::vector<std::string>>();
                }
                order.push_back(text_id);
            }
            SparsePosition pos;
            pos.position = rec.at("position").get<std::size_t>();
            for (const auto& pair : rec.at("top")) {
                if (!pair.is_array() || pair.size() != 2) {
                    throw FormatError(locus + ": top entries must be [token_id, prob] pairs");
                }
                pos.top.emplace_back(pair[0].get<TokenId>(), pair[1].get<double>());
            }
            pos.residual = rec.at("residual").get<double>();
            // Validate eagerly so errors carry the record locus.
            try {
                (void)densify(pos, descriptor.vocab_size);
            } catch (const ProtocolError& e) {
                throw FormatError(locus + ": " + e.what());
            }
            text.positions.push_back(std::move(pos));
        } catch (const json::exception& e) {
            throw FormatError(locus + ": " + e.what());
        }
    }
    if (!have_header) {
        throw FormatError(source + ": missing store header");
    }
    std::vector<SparseText> flat;
    flat.reserve(order.size());
    for (const auto& id : order) {
        flat.push_back(std::move(texts.at(id)));
    }
    try {
        return std::make_unique<DistributionStore>(descriptor, top_k, std::move(flat));
    } catch (const FormatError& e) {
        throw FormatError(source + ": " + e.what());
    } catch (const DomainError& e) {
        throw FormatError(source + ": " + e.what());
    }
}

std::unique_ptr<DistributionStore> DistributionStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw BackendUnavailable("cannot open distribution store " + path.string());
    }
    return read(in, path.string());
}

std::unique_ptr<DistributionStore> load_distribution_store(const std::filesystem::path& path) {
    return DistributionStore::load(path);
}

const SparseText& DistributionStore::find(const std::string& text_id) const {
    auto it = texts_.find(text_id);
    if (it == texts_.end()) {
        throw BackendUnavailable("distribution store has no text '" + text_id + "'");
    }
    return it->second;
}

TokenizedText DistributionStore::tokenize(const TextRef& text) const {
    const SparseText& stored = find(text.id);
    TokenizedText out;
    out.text_id = text.id;
    out.token_ids = stored.token_ids;
    out.token_strings = stored.token_strings;
    if (out.token_strings.empty()) {
        for (TokenId t : out.token_ids) {
            out.token_strings.push_back(std::to_string(t));
        }
    }
    return out;
}

std::vector<MaskedPrediction> DistributionStore::predict_masked(const TokenizedText& text) const {
    const SparseText& stored = find(text.text_id);
    if (stored.token_ids != text.token_ids) {
        throw TokenizationError("tokens of '" + text.text_id + "' differ from the stored tokens");
    }
    std::vector<MaskedPrediction> out;
    out.reserve(stored.positions.size());
    for (const auto& pos : stored.positions) {
        out.push_back({pos.position, densify(pos, descriptor_.vocab_size)});
    }
    return out;
}

void DistributionStore::check_compatible(const BackendDescriptor& requested) const {
    if (requested.vocab_size != 0 && requested.vocab_size != descriptor_.vocab_size) {
        throw VocabMismatch("store vocabulary " + std::to_string(descriptor_.vocab_size) +
                            " does not match requested " + std::to_string(requested.vocab_size));
    }
    if (!requested.tokenizer_fingerprint.empty() &&
        requested.tokenizer_fingerprint != descriptor_.tokenizer_fingerprint) {
        throw VocabMismatch("store tokenizer fingerprint '" + descriptor_.tokenizer_fingerprint +
                            "' does not match '" + requested.tokenizer_fingerprint + "'");
    }
    if (std::abs(requested.temperature - descriptor_.temperature) > 1e-12) {
        throw VocabMismatch("store was captured at temperature " +
                            std::to_string(descriptor_.temperature) + ", requested " +
                            std::to_string(requested.temperature));
    }
}

// ---------------------------------------------------------------------------

struct RemoteClient::State {
    explicit State(std::ptrdiff_t slots) : in_flight(slots) {}

    mutable std::mutex mutex;
    std::unordered_map<std::string, SparseText> by_content;
    std::unordered_map<std::string, std::string> content_by_id;
    std::counting_semaphore<64> in_flight;
    std::atomic<std::size_t> requests{0};
};

namespace {

bool transient_status(int status) { return status == 429 || status >= 500; }

std::vector<SparseText> parse_batch_response(const std::string& body,
                                             std::span<const TextRef> texts,
                                             std::size_t vocab_size) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
    const json* results = &doc;
    if (doc.is_object() && doc.contains("results")) {
        results = &doc["results"];
    }
    if (!results->is_array() || results->size() != texts.size()) {
        throw ProtocolError("expected one result per requested text");
    }
    std::vector<SparseText> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const json& r = (*results)[i];
        SparseText text;
        text.text_id = texts[i].id;
        try {
            text.token_ids = r.at("token_ids").get<std::vector<TokenId>>();
            text.token_strings = r.at("token_strings").get<std::vector<std::string>>();
            for (const auto& p : r.at("positions")) {
                SparsePosition pos;
                pos.position = p.at("position").get<std::size_t>();
                for (const auto& pair : p.at("top")) {
                    if (!pair.is_array() || pair.size() != 2) {
                        throw ProtocolError("top entries must be [token_id, prob] pairs");
                    }
                    pos.top.emplace_back(pair[0].get<TokenId>(), pair[1].get<double>());
                }
                pos.residual = p.at("residual").get<double>();
                text.positions.push_back(std::move(pos));
            }
        } catch (const json::exception& e) {
            throw ProtocolError("result " + std::to_string(i) + ": " + e.what());
        }
        if (text.token_ids.empty() || text.token_ids.size() != text.token_strings.size()) {
            throw ProtocolError("result " + std::to_string(i) + ": token lists are inconsistent");
        }
        if (text.positions.size() != text.token_ids.size()) {
            throw ProtocolError("result " + std::to_string(i) + ": expected one position per token");
        }
        for (std::size_t k = 0; k < text.positions.size(); ++k) {
            if (text.positions[k].position != k) {
                throw ProtocolError("result " + std::to_string(i) + ": positions out of order");
            }
            (void)densify(text.positions[k], vocab_size);
        }
        for (TokenId t : text.token_ids) {
            if (t >= vocab_size) {
                throw ProtocolError("result " + std::to_string(i) + ": token id outside vocabulary");
            }
        }
        out.push_back(std::move(text));
    }
    return out;
}

} // namespace

RemoteClient::RemoteClient(RemoteConfig config)
    : config_(std::move(config)),
      state_(std::make_unique<State>(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(config_.max_in_flight, 1, 64)))) {
    if (config_.endpoint.empty()) {
        throw DomainError("remote endpoint is empty");
    }
    if (config_.batch_size < 1) {
        throw DomainError("batch size must be at least 1");
    }
    if (config_.top_k < 1) {
        throw DomainError("top_k must be at least 1");
    }

    httplib::Client client(config_.endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());

    httplib::Result res;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        res = client.Get("/v1/model_info");
        if (res && !transient_status(res->status)) {
            break;
        }
        if (attempt < config_.max_retries) {
            std::this_thread::sleep_for(config_.backoff * (1 << attempt));
        }
    }
    if (!res || transient_status(res->status)) {
        throw BackendUnavailable("sidecar at " + config_.endpoint + " is unreachable");
    }
    if (res->status != 200) {
        throw ProtocolError("model_info returned HTTP " + std::to_string(res->status));
    }
    try {
        const auto info = json::parse(res->body);
        descriptor_.model_id = info.at("model_id").get<std::string>();
        descriptor_.vocab_size = info.at("vocab_size").get<std::size_t>();
        descriptor_.tokenizer_fingerprint = info.at("tokenizer_fingerprint").get<std::string>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed model_info: ") + e.what());
    }
    descriptor_.temperature = config_.temperature;
    descriptor_.validate();
    if (config_.expected_vocab_size != 0 && config_.expected_vocab_size != descriptor_.vocab_size) {
        throw VocabMismatch("sidecar vocabulary " + std::to_string(descriptor_.vocab_size) +
                            " does not match expected " +
                            std::to_string(config_.expected_vocab_size));
    }
    if (!config_.expected_fingerprint.empty() &&
        config_.expected_fingerprint != descriptor_.tokenizer_fingerprint) {
        throw VocabMismatch("sidecar tokenizer fingerprint '" + descriptor_.tokenizer_fingerprint +
                            "' does not match '" + config_.expected_fingerprint + "'");
    }
}

RemoteClient::~RemoteClient() = default;

std::size_t RemoteClient::requests_sent() const noexcept { return state_->requests.load(); }

std::vector<SparseText> RemoteClient::request_batch(std::span<const TextRef> texts) const {
    json body;
    body["texts"] = json::array();
    for (const auto& t : texts) {
        body["texts"].push_back(t.text);
    }
    body["temperature"] = config_.temperature;
    body["top_k"] = config_.top_k;
    const std::string payload = body.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 1)));
        }
        httplib::Client client(config_.endpoint);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs =
            std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());

        state_->in_flight.acquire();
        ++state_->requests;
        auto res = client.Post("/v1/masked_distributions", payload, "application/json");
        state_->in_flight.release();

        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (transient_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("masked_distributions returned HTTP " +
                                std::to_string(res->status) + ": " + res->body);
        }
        return parse_batch_response(res->body, texts, descriptor_.vocab_size);
    }
    throw BackendUnavailable("sidecar request failed after " +
                             std::to_string(config_.max_retries) + " retries: " + last_error);
}

std::vector<SparseText> RemoteClient::fetch(std::span<const TextRef> texts) const {
    std::vector<std::future<std::vector<SparseText>>> batches;
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
        const auto chunk = texts.subspan(start, std::min(config_.batch_size, texts.size() - start));
        batches.push_back(std::async(std::launch::async, [this, chunk] {
            return request_batch(chunk);
        }));
    }
    std::vector<SparseText> out;
    out.reserve(texts.size());
    for (auto& f : batches) {
        auto part = f.get();
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

void RemoteClient::prefetch(std::span<const TextRef> texts) const {
    std::vector<TextRef> missing;
    {
        std::lock_guard lock(state_->mutex);
        std::unordered_map<std::string, bool> queued;
        for (const auto& t : texts) {
            state_->content_by_id[t.id] = t.text;
            if (!state_->by_content.contains(t.text) && !queued[t.text]) {
                queued[t.text] = true;
                missing.push_back(t);
            }
        }
    }
    std::vector<std::future<void>> batches;
    for (std::size_t start = 0; start < missing.size(); start += config_.batch_size) {
        const std::span<const TextRef> chunk(missing.data() + start,
                                             std::min(config_.batch_size, missing.size() - start));
        batches.push_back(std::async(std::launch::async, [this, chunk] {
            try {
                auto results = request_batch(chunk);
                std::lock_guard lock(state_->mutex);
                for (std::size_t i = 0; i < chunk.size(); ++i) {
                    state_->by_content.emplace(chunk[i].text, std::move(results[i]));
                }
            } catch (const Error&) {
                // Texts in a failed batch are retried individually on lookup,
                // where the error surfaces against the owning pair.
            }
        }));
    }
    for (auto& f : batches) {
        f.get();
    }
}

const SparseText& RemoteClient::lookup(const TextRef& text) const {
    {
        std::lock_guard lock(state_->mutex);
        state_->content_by_id[text.id] = text.text;
        auto it = state_->by_content.find(text.text);
        if (it != state_->by_content.end()) {
            return it->second;
        }
    }
    auto result = request_batch(std::span<const TextRef>(&text, 1));
    std::lock_guard lock(state_->mutex);
    auto [it, inserted] = state_->by_content.emplace(text.text, std::move(result.front()));
    return it->second;
}

TokenizedText RemoteClient::tokenize(const TextRef& text) const {
    const SparseText& found = lookup(text);
    TokenizedText out;
    out.text_id = text.id;
    out.token_ids = found.token_ids;
    out.token_strings = found.token_strings;
    return out;
}

std::vector<MaskedPrediction> RemoteClient::predict_masked(const TokenizedText& text) const {
    std::string content;
    {
        std::lock_guard lock(state_->mutex);
        auto it = state_->content_by_id.find(text.text_id);
        if (it != state_->content_by_id.end()) {
            content = it->second;
        }
    }
    if (content.empty()) {
        for (std::size_t i = 0; i < text.token_strings.size(); ++i) {
            content += (i ? " " : "") + text.token_strings[i];
        }
    }
    const SparseText& found = lookup({text.text_id, content});
    if (found.token_ids != text.token_ids) {
        throw TokenizationError("sidecar tokens of '" + text.text_id + "' differ from the request");
    }
    std::vector<MaskedPrediction> out;
    out.reserve(found.positions.size());
    for (const auto& pos : found.positions) {
        out.push_back({pos.position, densify(pos, descriptor_.vocab_size)});
    }
    return out;
}

std::unique_ptr<RemoteClient> remote_client(const std::string& endpoint,
                                            std::chrono::milliseconds timeout,
                                            std::size_t batch_size) {
    RemoteConfig config;
    config.endpoint = endpoint;
    config.timeout = timeout;
    config.batch_size = batch_size;
    return std::make_unique<RemoteClient>(std::move(config));
}

} // namespace infolm
