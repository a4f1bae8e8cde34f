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
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infolm/backend.hpp"
#include "infolm/dataset.hpp"
#include "infolm/distributions.hpp"
#include "infolm/error.hpp"
#include "infolm/measures.hpp"

namespace infolm {

enum class Weighting : std::uint8_t { Idf, Uniform };

std::string_view to_string(Weighting w) noexcept;
Weighting parse_weighting(std::string_view name);

struct ScoreRequest {
    TokenizedText reference;
    TokenizedText candidate;
    MeasureSpec measure;
    Weighting weighting = Weighting::Idf;
};

struct ScoreResult {
    /// Raw measure value, lower means more similar.
    double divergence_value = 0.0;
    /// -divergence_value; the orientation used for every correlation.
    double similarity_value = 0.0;
    MeasureSpec measure;
    std::vector<std::string> warnings;
};

/// Aggregated distribution of one text plus anything worth flagging.
struct TextBag {
    TokenDistribution distribution;
    std::vector<std::string> warnings;
};

/// Masks every position of the text, weights the predictions and aggregates.
/// `idf` is required for Weighting::Idf and ignored otherwise.
TextBag bag_of_distributions(const TokenizedText& text, const Provider& provider,
                             Weighting weighting, const IdfTable* idf);

/// Compares the reference bag against the candidate bag with the request's measure.
ScoreResult infolm_score(const ScoreRequest& request, const Provider& provider,
                         const IdfTable* idf);

/// Convenience overload that tokenizes raw texts first.
ScoreResult infolm_score(const TextRef& reference, const TextRef& candidate,
                         const MeasureSpec& measure, Weighting weighting,
                         const Provider& provider, const IdfTable* idf);

// ---------------------------------------------------------------------------

/// Keys under which dataset texts are looked up in a provider or store.
std::string reference_key(const std::string& text_id);
std::string candidate_key(const std::string& text_id, const std::string& system_id);

/// Every text of the dataset, references first, in dataset order.
std::vector<TextRef> dataset_texts(const EvalDataset& dataset);

enum class IdfCorpus : std::uint8_t { References, Union };

/// Document frequencies over the dataset texts as tokenized by the provider.
IdfTable dataset_idf(const EvalDataset& dataset, const Provider& provider,
                     IdfCorpus corpus = IdfCorpus::Union);

struct ScoreOptions {
    Weighting weighting = Weighting::Idf;
    std::size_t workers = 1;
    bool skip_errors = false;
};

struct CellFailure {
    std::size_t row = 0;
    std::size_t col = 0;
    std::string text_id;
    std::string system_id;
    std::string message;
};

/// Raised by score_dataset when cells fail and skip_errors is off.
class ScoringError : public Error {
public:
    explicit ScoringError(std::vector<CellFailure> failures);
    const std::vector<CellFailure>& failures() const noexcept { return failures_; }

private:
    std::vector<CellFailure> failures_;
};

/// Aggregated distribution for every text of a dataset. Bags do not depend
/// on the measure, so sweeps over measures reuse one instance.
struct DatasetBags {
    std::vector<std::string> text_ids;
    std::vector<std::string> system_ids;
    std::vector<std::optional<TokenDistribution>> references;            // N
    std::vector<std::optional<TokenDistribution>> candidates;            // N*S, row-major
    std::vector<std::string> reference_errors;                           // N
    std::vector<std::string> candidate_errors;                           // N*S
    std::vector<std::string> warnings;
};

DatasetBags compute_bags(const EvalDataset& dataset, const Provider& provider,
                         const IdfTable* idf, const ScoreOptions& options);

struct ScoreRun {
    ScoreMatrix divergence;
    MeasureSpec measure;
    std::vector<CellFailure> failures;
    std::vector<std::string> warnings;

    ScoreMatrix similarity() const { return divergence.negated(); }
};

ScoreRun score_bags(const DatasetBags& bags, const MeasureSpec& measure,
                    const ScoreOptions& options);

/// values[i][s] = InfoLM(reference_i, candidate_i^s).
ScoreRun score_dataset(const EvalDataset& dataset, const MeasureSpec& measure,
                       const Provider& provider, const IdfTable* idf,
                       const ScoreOptions& options);

/// Mean entropy of every available bag, references and candidates.
double mean_bag_entropy(const DatasetBags& bags);

// ---------------------------------------------------------------------------

struct Preset {
    std::string name;
    MeasureSpec measure;
    double temperature = 1.0;
};

/// Tuned parameter sets, e.g. "summ-abs-ab" or "d2t-gamma". Throws UnknownPreset.
Preset preset(std::string_view name);
const std::vector<Preset>& preset_catalog();

// ---------------------------------------------------------------------------

/// "text_id,system_id,divergence,similarity,measure" with 12 significant
/// digits. Missing cells leave the numeric fields empty.
void write_score_csv(std::ostream& out, const ScoreMatrix& divergence,
                     const std::string& measure_label);

struct ScoreTable {
    ScoreMatrix divergence;
    ScoreMatrix similarity;
    std::string measure_label;
};

/// Reads a CSV in the score schema. Rows may come in any order; every
/// (text, system) pair must appear exactly once.
ScoreTable read_score_csv(std::istream& in, const std::string& source = "<stream>");
ScoreTable load_score_csv(const std::filesystem::path& path);

/// printf("%.12g") with negative zero folded to zero.
std::string format_g12(double v);

} // namespace infolm
