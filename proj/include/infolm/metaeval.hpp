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

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infolm/infolm.hpp"

namespace infolm {

enum class CorrelationKind : std::uint8_t { Pearson, Spearman, Kendall };
enum class Level : std::uint8_t { Text, System };

std::string_view to_string(CorrelationKind kind) noexcept;
std::string_view to_string(Level level) noexcept;
CorrelationKind parse_correlation_kind(std::string_view name);
Level parse_level(std::string_view name);

// Coefficients return nullopt when undefined (a constant vector). Length
// mismatch or fewer than two points throws ShapeError. Inputs must be finite.

std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Pearson over average fractional ranks.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

/// Tau-b, O(n log n).
std::optional<double> kendall(std::span<const double> a, std::span<const double> b);

std::optional<double> correlate(CorrelationKind kind, std::span<const double> a,
                                std::span<const double> b);

/// 1-based ranks, ties share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

struct CorrelationReport {
    CorrelationKind kind = CorrelationKind::Pearson;
    Level level = Level::System;
    std::string criterion;
    std::optional<double> value;
    std::size_t n_effective = 0;
    std::vector<std::string> warnings;
};

/// Mean over texts of K(metric row, human row). Undefined rows are dropped.
/// Throws DegenerateInput when no row is defined.
CorrelationReport text_level(const ScoreMatrix& scores, const ScoreMatrix& human,
                             CorrelationKind kind);

/// K between per-system column means. Throws DegenerateInput if undefined.
CorrelationReport system_level(const ScoreMatrix& scores, const ScoreMatrix& human,
                               CorrelationKind kind);

CorrelationReport correlate_level(Level level, const ScoreMatrix& scores,
                                  const ScoreMatrix& human, CorrelationKind kind);

struct SignificanceResult {
    double t_statistic = 0.0;
    /// One-tailed: probability of t at least this large if r1 <= r2.
    double p_value = 0.5;
    int degrees_of_freedom = 0;
    /// 1 when the first metric correlates more strongly, 2 for the second, 0 on a tie.
    int stronger = 0;
};

/// Williams test for two dependent correlations sharing the human variable.
SignificanceResult williams_test(double r_metric1_human, double r_metric2_human,
                                 double r_metric1_metric2, int n);

/// Upper tail P(T > t) of Student's t with df degrees of freedom.
double student_t_sf(double t, double df);

enum class MatrixMode : std::uint8_t { Flattened, SystemMeans };

struct NamedScores {
    std::string name;
    ScoreMatrix similarity;
};

/// Symmetric matrix of correlations between metrics, unit diagonal.
std::vector<std::vector<double>> metric_correlation_matrix(std::span<const NamedScores> metrics,
                                                           CorrelationKind kind,
                                                           MatrixMode mode = MatrixMode::Flattened);

// ---------------------------------------------------------------------------

/// One (criterion, coefficient) pair a sweep reports on.
struct SweepTarget {
    std::string criterion;
    ScoreMatrix human;
    CorrelationKind kind = CorrelationKind::Pearson;
};

struct TemperaturePoint {
    double temperature = 0.0;
    /// One system-level correlation per target; nullopt where undefined.
    std::vector<std::optional<double>> correlations;
    std::vector<std::string> target_errors;
    double mean_entropy = 0.0;
    /// Set when scoring failed for this temperature as a whole.
    std::string error;

    std::optional<double> correlation() const {
        return correlations.empty() ? std::nullopt : correlations.front();
    }
};

using ProviderFactory = std::function<std::unique_ptr<Provider>(double temperature)>;

/// System-level correlation per temperature, in input order. A failing
/// temperature is recorded and the sweep continues.
std::vector<TemperaturePoint> temperature_sweep(const EvalDataset& dataset,
                                                const MeasureSpec& measure,
                                                const ProviderFactory& provider_factory,
                                                std::span<const double> temperatures,
                                                std::span<const SweepTarget> targets,
                                                const ScoreOptions& options = {},
                                                const IdfTable* idf = nullptr);

std::vector<TemperaturePoint> temperature_sweep(const EvalDataset& dataset,
                                                const MeasureSpec& measure,
                                                const ProviderFactory& provider_factory,
                                                std::span<const double> temperatures,
                                                const ScoreMatrix& human, CorrelationKind kind,
                                                const ScoreOptions& options = {},
                                                const IdfTable* idf = nullptr);

struct GridPoint {
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<std::optional<double>> correlations;
    std::vector<std::string> target_errors;
    /// "invalid_domain", "negative_parameter" or a scoring error; empty when clean.
    std::string flag;

    std::optional<double> correlation() const {
        return correlations.empty() ? std::nullopt : correlations.front();
    }
};

/// |alphas| x |betas| system-level correlations of the AB divergence,
/// alpha-major. Invalid cells are flagged and kept.
std::vector<GridPoint> ab_grid_sweep(const EvalDataset& dataset, std::span<const double> alphas,
                                     std::span<const double> betas, const Provider& provider,
                                     std::span<const SweepTarget> targets,
                                     const ScoreOptions& options = {},
                                     const IdfTable* idf = nullptr, bool symmetrize = true);

std::vector<GridPoint> ab_grid_sweep(const EvalDataset& dataset, std::span<const double> alphas,
                                     std::span<const double> betas, const Provider& provider,
                                     const ScoreMatrix& human, CorrelationKind kind,
                                     const ScoreOptions& options = {},
                                     const IdfTable* idf = nullptr, bool symmetrize = true);

// ---------------------------------------------------------------------------

struct DistributionReport {
    static constexpr std::size_t kBins = 20;

    std::array<std::size_t, kBins> high{};
    std::array<std::size_t, kBins> low{};
    double median_high = 0.0;
    double median_low = 0.0;
    /// median_high - median_low on the rescaled similarity.
    double separation = 0.0;
    std::vector<double> rescaled;
};

/// Rescales similarity to [0, 1] by min-max and splits by human >= threshold.
/// Throws DegenerateInput when a group is empty.
DistributionReport score_distribution_report(const ScoreMatrix& similarity,
                                             const ScoreMatrix& human, double threshold);

double median(std::vector<double> values);

} // namespace infolm
