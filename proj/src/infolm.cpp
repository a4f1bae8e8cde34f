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

#include "infolm/infolm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "parallel.hpp"

namespace infolm {

std::string_view to_string(Weighting w) noexcept {
    return w == Weighting::Idf ? "idf" : "uniform";
}

Weighting parse_weighting(std::string_view name) {
    if (name == "idf" || name == "IDF") {
        return Weighting::Idf;
    }
    if (name == "uniform" || name == "Uniform") {
        return Weighting::Uniform;
    }
    throw DomainError("unknown weighting '" + std::string(name) + "'");
}

TextBag bag_of_distributions(const TokenizedText& text, const Provider& provider,
                             Weighting weighting, const IdfTable* idf) {
    if (text.token_ids.empty()) {
        throw EmptyInputError("text '" + text.text_id + "' is empty");
    }
    auto predictions = provider.predict_masked(text);
    if (predictions.size() != text.size()) {
        throw ShapeError("provider returned " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(text.size()) + " tokens of '" +
                         text.text_id + "'");
    }
    const std::size_t vocab = provider.descriptor().vocab_size;
    for (const auto& p : predictions) {
        if (p.distribution.size() != vocab) {
            throw VocabMismatch("prediction over " + std::to_string(p.distribution.size()) +
                                " tokens, backend vocabulary is " + std::to_string(vocab));
        }
    }
    ImportanceWeights weights;
    if (weighting == Weighting::Idf) {
        if (idf == nullptr) {
            throw DomainError("idf weighting requested without an idf table");
        }
        weights = idf_weights(text.token_ids, *idf);
    } else {
        weights = uniform_weights(text.size());
    }
    TextBag bag{aggregate(predictions, weights), {}};
    if (text.truncated) {
        bag.warnings.push_back("truncated:" + text.text_id);
    }
    return bag;
}

ScoreResult infolm_score(const ScoreRequest& request, const Provider& provider,
                         const IdfTable* idf) {
    request.measure.validate();
    const auto ref = bag_of_distributions(request.reference, provider, request.weighting, idf);
    const auto cand = bag_of_distributions(request.candidate, provider, request.weighting, idf);
    ScoreResult result;
    result.measure = request.measure;
    result.divergence_value = evaluate_measure(request.measure, ref.distribution, cand.distribution);
    if (!std::isfinite(result.divergence_value)) {
        throw NumericError("measure " + request.measure.label() + " is not finite");
    }
    result.similarity_value = result.divergence_value == 0.0 ? 0.0 : -result.divergence_value;
    result.warnings = ref.warnings;
    result.warnings.insert(result.warnings.end(), cand.warnings.begin(), cand.warnings.end());
    if (request.measure.has_negative_parameter()) {
        result.warnings.push_back("negative_parameter");
    }
    return result;
}

ScoreResult infolm_score(const TextRef& reference, const TextRef& candidate,
                         const MeasureSpec& measure, Weighting weighting,
                         const Provider& provider, const IdfTable* idf) {
    ScoreRequest request{provider.tokenize(reference), provider.tokenize(candidate), measure,
                         weighting};
    return infolm_score(request, provider, idf);
}

// ---------------------------------------------------------------------------

std::string reference_key(const std::string& text_id) { return "ref:" + text_id; }

std::string candidate_key(const std::string& text_id, const std::string& system_id) {
    return "cand:" + text_id + ":" + system_id;
}

std::vector<TextRef> dataset_texts(const EvalDataset& dataset) {
    std::vector<TextRef> texts;
    texts.reserve(dataset.text_count() * (1 + dataset.system_count()));
    for (const auto& e : dataset.entries()) {
        texts.push_back({reference_key(e.text_id), e.reference});
    }
    for (const auto& e : dataset.entries()) {
        for (const auto& c : e.candidates) {
            texts.push_back({candidate_key(e.text_id, c.system_id), c.text});
        }
    }
    return texts;
}

IdfTable dataset_idf(const EvalDataset& dataset, const Provider& provider, IdfCorpus corpus) {
    auto texts = dataset_texts(dataset);
    if (corpus == IdfCorpus::References) {
        texts.resize(dataset.text_count());
    }
    provider.prefetch(texts);
    std::vector<std::vector<TokenId>> documents;
    documents.reserve(texts.size());
    for (const auto& t : texts) {
        try {
            documents.push_back(provider.tokenize(t).token_ids);
        } catch (const Error&) {
            // Untokenizable texts fail again, with a locus, when scored.
        }
    }
    return IdfTable::from_documents(documents);
}

ScoringError::ScoringError(std::vector<CellFailure> failures)
    : Error([&] {
          std::ostringstream os;
          os << failures.size() << " cell(s) failed:";
          for (const auto& f : failures) {
              os << "\n  (" << f.text_id << ", " << f.system_id << "): " << f.message;
          }
          return os.str();
      }()),
      failures_(std::move(failures)) {}

DatasetBags compute_bags(const EvalDataset& dataset, const Provider& provider,
                         const IdfTable* idf, const ScoreOptions& options) {
    const auto texts = dataset_texts(dataset);
    provider.prefetch(texts);

    std::vector<std::optional<TokenDistribution>> bags(texts.size());
    std::vector<std::string> errors(texts.size());
    std::vector<std::vector<std::string>> warnings(texts.size());
    detail::parallel_for(texts.size(), options.workers, [&](std::size_t i) {
        try {
            auto bag = bag_of_distributions(provider.tokenize(texts[i]), provider,
                                            options.weighting, idf);
            bags[i] = std::move(bag.distribution);
            warnings[i] = std::move(bag.warnings);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    const std::size_t n = dataset.text_count();
    DatasetBags out;
    out.text_ids = dataset.text_ids();
    out.system_ids = dataset.system_ids();
    out.references.assign(std::make_move_iterator(bags.begin()),
                          std::make_move_iterator(bags.begin() + static_cast<std::ptrdiff_t>(n)));
    out.candidates.assign(std::make_move_iterator(bags.begin() + static_cast<std::ptrdiff_t>(n)),
                          std::make_move_iterator(bags.end()));
    out.reference_errors.assign(errors.begin(), errors.begin() + static_cast<std::ptrdiff_t>(n));
    out.candidate_errors.assign(errors.begin() + static_cast<std::ptrdiff_t>(n), errors.end());
    for (auto& w : warnings) {
        out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    }
    return out;
}

ScoreRun score_bags(const DatasetBags& bags, const MeasureSpec& measure,
                    const ScoreOptions& options) {
    measure.validate();
    const std::size_t n = bags.text_ids.size();
    const std::size_t s_count = bags.system_ids.size();
    ScoreRun run{ScoreMatrix(bags.text_ids, bags.system_ids), measure, {}, bags.warnings};
    if (measure.has_negative_parameter()) {
        run.warnings.push_back("negative_parameter");
    }

    std::vector<std::string> errors(n * s_count);
    detail::parallel_for(n * s_count, options.workers, [&](std::size_t cell) {
        const std::size_t i = cell / s_count;
        if (!bags.references[i]) {
            errors[cell] = "reference: " + bags.reference_errors[i];
            return;
        }
        if (!bags.candidates[cell]) {
            errors[cell] = "candidate: " + bags.candidate_errors[cell];
            return;
        }
        try {
            const double d = evaluate_measure(measure, *bags.references[i], *bags.candidates[cell]);
            if (!std::isfinite(d)) {
                throw NumericError("measure " + measure.label() + " is not finite");
            }
            run.divergence.at(i, cell % s_count) = d;
        } catch (const std::exception& e) {
            errors[cell] = e.what();
        }
    });

    for (std::size_t cell = 0; cell < errors.size(); ++cell) {
        if (!errors[cell].empty()) {
            const std::size_t i = cell / s_count;
            const std::size_t s = cell % s_count;
            run.failures.push_back({i, s, bags.text_ids[i], bags.system_ids[s], errors[cell]});
        }
    }
    if (!run.failures.empty() && !options.skip_errors) {
        throw ScoringError(run.failures);
    }
    return run;
}

ScoreRun score_dataset(const EvalDataset& dataset, const MeasureSpec& measure,
                       const Provider& provider, const IdfTable* idf,
                       const ScoreOptions& options) {
    measure.validate();
    return score_bags(compute_bags(dataset, provider, idf, options), measure, options);
}

double mean_bag_entropy(const DatasetBags& bags) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto* group : {&bags.references, &bags.candidates}) {
        for (const auto& b : *group) {
            if (b) {
                total += b->entropy();
                ++count;
            }
        }
    }
    if (count == 0) {
        throw EmptyInputError("no bags available");
    }
    return total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------

const std::vector<Preset>& preset_catalog() {
    static const std::vector<Preset> kCatalog = {
        {"summ-ext-alpha", MeasureSpec::alpha_div(0.75), 1.0},
        {"summ-ext-gamma", MeasureSpec::gamma_div(0.5), 1.0},
        {"summ-ext-ab", MeasureSpec::ab_div(0.5, 0.25), 1.0},
        {"summ-abs-alpha", MeasureSpec::alpha_div(3.0), 1.0},
        {"summ-abs-gamma", MeasureSpec::gamma_div(0.5), 1.0},
        {"summ-abs-ab", MeasureSpec::ab_div(3.0, 0.25), 1.0},
        {"d2t-alpha", MeasureSpec::alpha_div(0.75), 1.0},
        {"d2t-gamma", MeasureSpec::gamma_div(3.0), 1.0},
        {"d2t-ab", MeasureSpec::ab_div(3.0, 0.25), 1.0},
        {"fisher-rao", MeasureSpec::of(MeasureKind::FisherRao), 1.0},
    };
    return kCatalog;
}

Preset preset(std::string_view name) {
    for (const auto& p : preset_catalog()) {
        if (p.name == name) {
            return p;
        }
    }
    std::string known;
    for (const auto& p : preset_catalog()) {
        known += (known.empty() ? "" : ", ") + p.name;
    }
    throw UnknownPreset("unknown preset '" + std::string(name) + "'; known: " + known);
}

// ---------------------------------------------------------------------------

std::string format_g12(double v) {
    if (v == 0.0) {
        v = 0.0;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {

constexpr std::string_view kScoreHeader = "text_id,system_id,divergence,similarity,measure";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

} // namespace

void write_score_csv(std::ostream& out, const ScoreMatrix& divergence,
                     const std::string& measure_label) {
    out << kScoreHeader << '\n';
    for (std::size_t i = 0; i < divergence.rows(); ++i) {
        for (std::size_t s = 0; s < divergence.cols(); ++s) {
            out << divergence.text_ids()[i] << ',' << divergence.system_ids()[s] << ',';
            if (divergence.missing(i, s)) {
                out << ",";
            } else {
                const double d = divergence.at(i, s);
                out << format_g12(d) << ',' << format_g12(-d);
            }
            out << ',' << measure_label << '\n';
        }
    }
}

ScoreTable read_score_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw FormatError(source + ": empty score file");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kScoreHeader) {
        throw FormatError(source + ":1: expected header '" + std::string(kScoreHeader) + "'");
    }

    struct Row {
        std::size_t line;
        std::string text, system;
        double divergence, similarity;
    };
    std::vector<Row> rows;
    std::vector<std::string> text_order, system_order;
    std::map<std::string, std::size_t> text_index, system_index;
    std::string label;

    auto parse_number = [&](const std::string& field, const std::string& locus) {
        if (field.empty()) {
            return ScoreMatrix::kMissing;
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(field, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != field.size()) {
            throw FormatError(locus + ": '" + field + "' is not a number");
        }
        return v;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto locus = source + ":" + std::to_string(line_no);
        auto fields = split_csv(line);
        if (fields.size() != 5) {
            throw FormatError(locus + ": expected 5 fields, found " + std::to_string(fields.size()));
        }
        Row r{line_no, fields[0], fields[1], parse_number(fields[2], locus + " column divergence"),
              parse_number(fields[3], locus + " column similarity")};
        if (label.empty()) {
            label = fields[4];
        }
        if (text_index.emplace(r.text, text_order.size()).second) {
            text_order.push_back(r.text);
        }
        if (system_index.emplace(r.system, system_order.size()).second) {
            system_order.push_back(r.system);
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) {
        throw FormatError(source + ": no score rows");
    }

    ScoreTable table{ScoreMatrix(text_order, system_order), ScoreMatrix(text_order, system_order),
                     label};
    std::vector<bool> seen(text_order.size() * system_order.size(), false);
    for (const auto& r : rows) {
        const std::size_t i = text_index[r.text];
        const std::size_t s = system_index[r.system];
        const std::size_t cell = i * system_order.size() + s;
        if (seen[cell]) {
            throw FormatError(source + ":" + std::to_string(r.line) + ": duplicate row for (" +
                              r.text + ", " + r.system + ")");
        }
        seen[cell] = true;
        table.divergence.at(i, s) = r.divergence;
        table.similarity.at(i, s) = r.similarity;
    }
    for (std::size_t cell = 0; cell < seen.size(); ++cell) {
        if (!seen[cell]) {
            throw FormatError(source + ": no row for (" + text_order[cell / system_order.size()] +
                              ", " + system_order[cell % system_order.size()] + ")");
        }
    }
    return table;
}

ScoreTable load_score_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw BackendUnavailable("cannot open score file " + path.string());
    }
    return read_score_csv(in, path.string());
}

} // namespace infolm
