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

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace infolm {

struct Candidate {
    std::string system_id;
    std::string text;
    std::map<std::string, double> human_scores;
};

struct DatasetEntry {
    std::string text_id;
    std::string reference;
    std::vector<Candidate> candidates;
};

/// References with per-system candidates and human judgments.
///
/// Invariants (checked by validate): N >= 1, S >= 1, every entry lists the
/// same systems in the same order, every candidate scores every criterion.
class EvalDataset {
public:
    EvalDataset() = default;
    explicit EvalDataset(std::vector<DatasetEntry> entries);

    /// Line-delimited JSON: {"text_id", "reference", "candidates": [{"system_id",
    /// "text", "human_scores": {...}}]}.
    static EvalDataset read(std::istream& in, const std::string& source = "<stream>");
    static EvalDataset load(const std::filesystem::path& path);
    void write(std::ostream& out) const;

    const std::vector<DatasetEntry>& entries() const noexcept { return entries_; }
    std::size_t text_count() const noexcept { return entries_.size(); }
    std::size_t system_count() const noexcept { return system_ids_.size(); }
    const std::vector<std::string>& system_ids() const noexcept { return system_ids_; }
    std::vector<std::string> text_ids() const;
    const std::vector<std::string>& criteria() const noexcept { return criteria_; }

    /// Throws UnknownCriterion listing the available names.
    void require_criterion(const std::string& name) const;

private:
    void validate();

    std::vector<DatasetEntry> entries_;
    std::vector<std::string> system_ids_;
    std::vector<std::string> criteria_;
};

/// N x S matrix, rows are texts and columns are systems. NaN marks a missing
/// cell, which correlations exclude pairwise.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::vector<std::string> text_ids, std::vector<std::string> system_ids);
    ScoreMatrix(std::vector<std::string> text_ids, std::vector<std::string> system_ids,
                std::vector<double> values);

    std::size_t rows() const noexcept { return text_ids_.size(); }
    std::size_t cols() const noexcept { return system_ids_.size(); }

    double& at(std::size_t row, std::size_t col) { return values_[row * cols() + col]; }
    double at(std::size_t row, std::size_t col) const { return values_[row * cols() + col]; }
    bool missing(std::size_t row, std::size_t col) const { return std::isnan(at(row, col)); }

    const std::vector<std::string>& text_ids() const noexcept { return text_ids_; }
    const std::vector<std::string>& system_ids() const noexcept { return system_ids_; }
    const std::vector<double>& values() const noexcept { return values_; }

    std::vector<double> row(std::size_t i) const;

    /// Elementwise negation (divergence <-> similarity).
    ScoreMatrix negated() const;

    /// Throws ShapeError unless shapes and labels agree.
    void require_same_layout(const ScoreMatrix& other) const;

    static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

private:
    std::vector<std::string> text_ids_;
    std::vector<std::string> system_ids_;
    std::vector<double> values_;
};

/// Human scores for one criterion arranged like a ScoreMatrix.
ScoreMatrix human_matrix(const EvalDataset& dataset, const std::string& criterion);

} // namespace infolm
