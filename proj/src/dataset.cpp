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

#include "infolm/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "infolm/error.hpp"

namespace infolm {

using nlohmann::json;

EvalDataset::EvalDataset(std::vector<DatasetEntry> entries) : entries_(std::move(entries)) {
    validate();
}

void EvalDataset::validate() {
    if (entries_.empty()) {
        throw EmptyInputError("dataset has no entries");
    }
    system_ids_.clear();
    for (const auto& c : entries_.front().candidates) {
        system_ids_.push_back(c.system_id);
    }
    if (system_ids_.empty()) {
        throw EmptyInputError("dataset entry '" + entries_.front().text_id + "' has no candidates");
    }
    if (std::set<std::string>(system_ids_.begin(), system_ids_.end()).size() !=
        system_ids_.size()) {
        throw FormatError("duplicate system id in entry '" + entries_.front().text_id + "'");
    }
    criteria_.clear();
    for (const auto& [name, value] : entries_.front().candidates.front().human_scores) {
        criteria_.push_back(name);
    }

    std::set<std::string> seen_ids;
    for (const auto& entry : entries_) {
        if (!seen_ids.insert(entry.text_id).second) {
            throw FormatError("duplicate text id '" + entry.text_id + "'");
        }
        if (entry.candidates.size() != system_ids_.size()) {
            throw FormatError("entry '" + entry.text_id + "' has " +
                              std::to_string(entry.candidates.size()) + " candidates, expected " +
                              std::to_string(system_ids_.size()));
        }
        for (std::size_t s = 0; s < system_ids_.size(); ++s) {
            const auto& cand = entry.candidates[s];
            if (cand.system_id != system_ids_[s]) {
                throw FormatError("entry '" + entry.text_id + "' lists system '" + cand.system_id +
                                  "' where '" + system_ids_[s] + "' was expected");
            }
            if (cand.human_scores.size() != criteria_.size()) {
                throw FormatError("entry '" + entry.text_id + "', system '" + cand.system_id +
                                  "' does not score every criterion");
            }
            for (const auto& name : criteria_) {
                if (!cand.human_scores.contains(name)) {
                    throw FormatError("entry '" + entry.text_id + "', system '" +
                                      cand.system_id + "' lacks criterion '" + name + "'");
                }
            }
        }
    }
}

EvalDataset EvalDataset::read(std::istream& in, const std::string& source) {
    std::vector<DatasetEntry> entries;
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
            DatasetEntry entry;
            entry.text_id = rec.at("text_id").get<std::string>();
            entry.reference = rec.at("reference").get<std::string>();
            for (const auto& c : rec.at("candidates")) {
                Candidate cand;
                cand.system_id = c.at("system_id").get<std::string>();
                cand.text = c.at("text").get<std::string>();
                if (c.contains("human_scores")) {
                    cand.human_scores = c.at("human_scores").get<std::map<std::string, double>>();
                }
                entry.candidates.push_back(std::move(cand));
            }
            entries.push_back(std::move(entry));
        } catch (const json::exception& e) {
            throw FormatError(locus + ": " + e.what());
        }
    }
    try {
        return EvalDataset(std::move(entries));
    } catch (const Error& e) {
        throw FormatError(source + ": " + e.what());
    }
}

EvalDataset EvalDataset::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw BackendUnavailable("cannot open dataset " + path.string());
    }
    return read(in, path.string());
}

void EvalDataset::write(std::ostream& out) const {
    for (const auto& entry : entries_) {
        json rec;
        rec["text_id"] = entry.text_id;
        rec["reference"] = entry.reference;
        rec["candidates"] = json::array();
        for (const auto& c : entry.candidates) {
            rec["candidates"].push_back(
                {{"system_id", c.system_id}, {"text", c.text}, {"human_scores", c.human_scores}});
        }
        out << rec.dump() << '\n';
    }
}

std::vector<std::string> EvalDataset::text_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entries_.size());
    for (const auto& e : entries_) {
        ids.push_back(e.text_id);
    }
    return ids;
}

void EvalDataset::require_criterion(const std::string& name) const {
    if (std::find(criteria_.begin(), criteria_.end(), name) != criteria_.end()) {
        return;
    }
    std::string available;
    for (const auto& c : criteria_) {
        available += (available.empty() ? "\"" : ", \"") + c + "\"";
    }
    throw UnknownCriterion("unknown criterion '" + name + "'; available: {" + available + "}");
}

ScoreMatrix::ScoreMatrix(std::vector<std::string> text_ids, std::vector<std::string> system_ids)
    : text_ids_(std::move(text_ids)), system_ids_(std::move(system_ids)),
      values_(text_ids_.size() * system_ids_.size(), kMissing) {}

ScoreMatrix::ScoreMatrix(std::vector<std::string> text_ids, std::vector<std::string> system_ids,
                         std::vector<double> values)
    : text_ids_(std::move(text_ids)), system_ids_(std::move(system_ids)),
      values_(std::move(values)) {
    if (values_.size() != text_ids_.size() * system_ids_.size()) {
        throw ShapeError("score matrix has " + std::to_string(values_.size()) + " values for " +
                         std::to_string(text_ids_.size()) + "x" +
                         std::to_string(system_ids_.size()) + " labels");
    }
    for (double v : values_) {
        if (std::isinf(v)) {
            throw NumericError("score matrix holds an infinite value");
        }
    }
}

std::vector<double> ScoreMatrix::row(std::size_t i) const {
    const auto first = values_.begin() + static_cast<std::ptrdiff_t>(i * cols());
    return {first, first + static_cast<std::ptrdiff_t>(cols())};
}

ScoreMatrix ScoreMatrix::negated() const {
    ScoreMatrix out = *this;
    for (double& v : out.values_) {
        v = v == 0.0 ? 0.0 : -v;
    }
    return out;
}

void ScoreMatrix::require_same_layout(const ScoreMatrix& other) const {
    if (rows() != other.rows() || cols() != other.cols()) {
        throw ShapeError("score matrices differ in shape: " + std::to_string(rows()) + "x" +
                         std::to_string(cols()) + " vs " + std::to_string(other.rows()) + "x" +
                         std::to_string(other.cols()));
    }
    for (std::size_t i = 0; i < rows(); ++i) {
        if (text_ids_[i] != other.text_ids_[i]) {
            throw ShapeError("row " + std::to_string(i) + " is '" + text_ids_[i] + "' in one matrix and '" +
                             other.text_ids_[i] + "' in the other");
        }
    }
    for (std::size_t s = 0; s < cols(); ++s) {
        if (system_ids_[s] != other.system_ids_[s]) {
            throw ShapeError("column " + std::to_string(s) + " is '" + system_ids_[s] +
                             "' in one matrix and '" + other.system_ids_[s] + "' in the other");
        }
    }
}

ScoreMatrix human_matrix(const EvalDataset& dataset, const std::string& criterion) {
    dataset.require_criterion(criterion);
    ScoreMatrix out(dataset.text_ids(), dataset.system_ids());
    const auto& entries = dataset.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t s = 0; s < entries[i].candidates.size(); ++s) {
            out.at(i, s) = entries[i].candidates[s].human_scores.at(criterion);
        }
    }
    return out;
}

} // namespace infolm
