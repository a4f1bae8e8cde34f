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

#include "infolm/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

namespace infolm {

std::string_view to_string(CorrelationKind kind) noexcept {
    switch (kind) {
    case CorrelationKind::Pearson: return "pearson";
    case CorrelationKind::Spearman: return "spearman";
    case CorrelationKind::Kendall: return "kendall";
    }
    return "?";
}

std::string_view to_string(Level level) noexcept {
    return level == Level::Text ? "text" : "system";
}

CorrelationKind parse_correlation_kind(std::string_view name) {
    if (name == "pearson" || name == "r") return CorrelationKind::Pearson;
    if (name == "spearman" || name == "rho") return CorrelationKind::Spearman;
    if (name == "kendall" || name == "tau") return CorrelationKind::Kendall;
    throw DomainError("unknown correlation coefficient '" + std::string(name) + "'");
}

Level parse_level(std::string_view name) {
    if (name == "text") return Level::Text;
    if (name == "system") return Level::System;
    throw DomainError("unknown correlation level '" + std::string(name) + "'");
}

namespace {

void require_pairable(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("correlated vectors differ in length: " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
    }
    if (a.size() < 2) {
        throw ShapeError("correlation needs at least two points");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
            throw NumericError("correlation input is not finite");
        }
    }
}

// Merge sort on keys counting the pairs that end up exchanged.
std::int64_t merge_sort_swaps(std::vector<double>& keys, std::vector<double>& scratch,
                              std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) {
        return 0;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_sort_swaps(keys, scratch, lo, mid) +
                         merge_sort_swaps(keys, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (keys[j] < keys[i]) {
            swaps += static_cast<std::int64_t>(mid - i);
            scratch[k++] = keys[j++];
        } else {
            scratch[k++] = keys[i++];
        }
    }
    while (i < mid) scratch[k++] = keys[i++];
    while (j < hi) scratch[k++] = keys[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              keys.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

// Sum over runs of equal values of t(t-1)/2; `sorted` must be sorted.
std::int64_t tied_pairs(const std::vector<double>& sorted) {
    std::int64_t total = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            total += static_cast<std::int64_t>(run * (run - 1) / 2);
            run = 1;
        }
    }
    return total;
}

} // namespace

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    require_pairable(a, b);
    const double n = static_cast<double>(a.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        return std::nullopt;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) {
            ++j;
        }
        // Positions i..j-1 share 1-based ranks i+1..j.
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j;
    }
    return ranks;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
    require_pairable(a, b);
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

std::optional<double> kendall(std::span<const double> a, std::span<const double> b) {
    require_pairable(a, b);
    const std::size_t n = a.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a[x] != a[y] ? a[x] < a[y] : b[x] < b[y];
    });

    std::vector<double> sorted_a(n), keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        sorted_a[i] = a[order[i]];
        keys[i] = b[order[i]];
    }
    const std::int64_t n0 = static_cast<std::int64_t>(n * (n - 1) / 2);
    const std::int64_t ties_a = tied_pairs(sorted_a);

    std::int64_t ties_both = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n && sorted_a[i] == sorted_a[i - 1] && keys[i] == keys[i - 1]) {
            ++run;
        } else {
            ties_both += static_cast<std::int64_t>(run * (run - 1) / 2);
            run = 1;
        }
    }

    std::vector<double> scratch(n);
    const std::int64_t discordant = merge_sort_swaps(keys, scratch, 0, n);
    const std::int64_t ties_b = tied_pairs(keys);

    if (n0 == ties_a || n0 == ties_b) {
        return std::nullopt;
    }
    const std::int64_t concordant_minus_discordant =
        n0 - ties_a - ties_b + ties_both - 2 * discordant;
    const double denom =
        std::sqrt(static_cast<double>(n0 - ties_a) * static_cast<double>(n0 - ties_b));
    return std::clamp(static_cast<double>(concordant_minus_discordant) / denom, -1.0, 1.0);
}

std::optional<double> correlate(CorrelationKind kind, std::span<const double> a,
                                std::span<const double> b) {
    switch (kind) {
    case CorrelationKind::Pearson: return pearson(a, b);
    case CorrelationKind::Spearman: return spearman(a, b);
    case CorrelationKind::Kendall: return kendall(a, b);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

CorrelationReport text_level(const ScoreMatrix& scores, const ScoreMatrix& human,
                             CorrelationKind kind) {
    scores.require_same_layout(human);
    if (scores.cols() < 2) {
        throw ShapeError("text-level correlation needs at least two systems");
    }
    CorrelationReport report;
    report.kind = kind;
    report.level = Level::Text;
    double total = 0.0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        std::vector<double> f, h;
        for (std::size_t s = 0; s < scores.cols(); ++s) {
            if (!scores.missing(i, s) && !human.missing(i, s)) {
                f.push_back(scores.at(i, s));
                h.push_back(human.at(i, s));
            }
        }
        std::optional<double> r;
        if (f.size() >= 2) {
            r = correlate(kind, f, h);
        }
        if (!r) {
            report.warnings.push_back("undefined row '" + scores.text_ids()[i] + "'");
            continue;
        }
        total += *r;
        ++report.n_effective;
    }
    if (report.n_effective == 0) {
        throw DegenerateInput("every text-level row is undefined");
    }
    report.value = total / static_cast<double>(report.n_effective);
    return report;
}

CorrelationReport system_level(const ScoreMatrix& scores, const ScoreMatrix& human,
                               CorrelationKind kind) {
    scores.require_same_layout(human);
    if (scores.cols() < 2) {
        throw ShapeError("system-level correlation needs at least two systems");
    }
    CorrelationReport report;
    report.kind = kind;
    report.level = Level::System;
    std::vector<double> f, h;
    for (std::size_t s = 0; s < scores.cols(); ++s) {
        double fs = 0.0, hs = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < scores.rows(); ++i) {
            if (!scores.missing(i, s) && !human.missing(i, s)) {
                fs += scores.at(i, s);
                hs += human.at(i, s);
                ++count;
            }
        }
        if (count == 0) {
            report.warnings.push_back("system '" + scores.system_ids()[s] + "' has no scores");
            continue;
        }
        if (count < scores.rows()) {
            report.warnings.push_back("system '" + scores.system_ids()[s] + "' averaged over " +
                                      std::to_string(count) + " texts");
        }
        f.push_back(fs / static_cast<double>(count));
        h.push_back(hs / static_cast<double>(count));
    }
    if (f.size() < 2) {
        throw DegenerateInput("fewer than two systems have scores");
    }
    report.n_effective = f.size();
    report.value = correlate(kind, f, h);
    if (!report.value) {
        throw DegenerateInput("system-level " + std::string(to_string(kind)) +
                              " is undefined for constant averages");
    }
    return report;
}

CorrelationReport correlate_level(Level level, const ScoreMatrix& scores,
                                  const ScoreMatrix& human, CorrelationKind kind) {
    return level == Level::Text ? text_level(scores, human, kind)
                                : system_level(scores, human, kind);
}

// ---------------------------------------------------------------------------

double student_t_sf(double t, double df) {
    if (!(df > 0.0)) {
        throw DomainError("degrees of freedom must be positive");
    }
    if (std::isnan(t)) {
        throw NumericError("t statistic is NaN");
    }
    if (std::isinf(t)) {
        return t > 0 ? 0.0 : 1.0;
    }
    // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    const double x = df / (df + t * t);
    const double two_sided = boost::math::ibeta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided;
}

SignificanceResult williams_test(double r1, double r2, double r12, int n) {
    if (n < 4) {
        throw DomainError("williams test needs n >= 4");
    }
    auto in_open = [](double r) { return std::isfinite(r) && std::abs(r) < 1.0; };
    if (!in_open(r1) || !in_open(r2) || !std::isfinite(r12) || std::abs(r12) > 1.0) {
        throw DomainError("correlations must lie strictly inside (-1, 1)");
    }
    SignificanceResult result;
    result.degrees_of_freedom = n - 3;
    if (r1 == r2) {
        return result;
    }
    if (std::abs(r12) == 1.0) {
        throw DomainError("metric-metric correlation must lie strictly inside (-1, 1)");
    }
    const double nn = static_cast<double>(n);
    const double k = 1.0 - (r1 * r1 + r2 * r2) - r12 * r12 + 2.0 * (r1 * r2) * r12;
    const double sum = r1 + r2;
    const double variance =
        2.0 * k * (nn - 1.0) / (nn - 3.0) + (sum * sum / 4.0) * std::pow(1.0 - r12, 3);
    if (!(variance > 0.0)) {
        throw DomainError("correlations are mutually inconsistent");
    }
    result.t_statistic = (r1 - r2) * std::sqrt((nn - 1.0) * (1.0 + r12)) / std::sqrt(variance);
    result.p_value = student_t_sf(result.t_statistic, static_cast<double>(n - 3));
    result.stronger = r1 > r2 ? 1 : 2;
    return result;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> metric_correlation_matrix(std::span<const NamedScores> metrics,
                                                           CorrelationKind kind,
                                                           MatrixMode mode) {
    if (metrics.size() < 2) {
        throw ShapeError("metric correlation needs at least two metrics");
    }
    for (std::size_t m = 1; m < metrics.size(); ++m) {
        metrics[0].similarity.require_same_layout(metrics[m].similarity);
    }
    const std::size_t count = metrics.size();
    std::vector<std::vector<double>> out(count, std::vector<double>(count, 1.0));
    for (std::size_t x = 0; x < count; ++x) {
        for (std::size_t y = x + 1; y < count; ++y) {
            const auto& a = metrics[x].similarity;
            const auto& b = metrics[y].similarity;
            std::optional<double> r;
            if (mode == MatrixMode::Flattened) {
                std::vector<double> va, vb;
                for (std::size_t i = 0; i < a.values().size(); ++i) {
                    if (!std::isnan(a.values()[i]) && !std::isnan(b.values()[i])) {
                        va.push_back(a.values()[i]);
                        vb.push_back(b.values()[i]);
                    }
                }
                if (va.size() >= 2) {
                    r = correlate(kind, va, vb);
                }
            } else {
                try {
                    r = system_level(a, b, kind).value;
                } catch (const DegenerateInput&) {
                }
            }
            const double v = r.value_or(std::nan(""));
            out[x][y] = v;
            out[y][x] = v;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void correlate_targets(const ScoreMatrix& similarity, std::span<const SweepTarget> targets,
                       std::vector<std::optional<double>>& correlations,
                       std::vector<std::string>& errors) {
    correlations.assign(targets.size(), std::nullopt);
    errors.assign(targets.size(), std::string());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        try {
            correlations[t] = system_level(similarity, targets[t].human, targets[t].kind).value;
        } catch (const std::exception& e) {
            errors[t] = e.what();
        }
    }
}

} // namespace

std::vector<TemperaturePoint> temperature_sweep(const EvalDataset& dataset,
                                                const MeasureSpec& measure,
                                                const ProviderFactory& provider_factory,
                                                std::span<const double> temperatures,
                                                std::span<const SweepTarget> targets,
                                                const ScoreOptions& options,
                                                const IdfTable* idf) {
    for (double t : temperatures) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw DomainError("sweep temperatures must be positive");
        }
    }
    std::vector<TemperaturePoint> out;
    out.reserve(temperatures.size());
    for (double t : temperatures) {
        TemperaturePoint point;
        point.temperature = t;
        point.correlations.assign(targets.size(), std::nullopt);
        point.target_errors.assign(targets.size(), std::string());
        try {
            auto provider = provider_factory(t);
            std::optional<IdfTable> own_idf;
            if (options.weighting == Weighting::Idf && idf == nullptr) {
                own_idf = dataset_idf(dataset, *provider);
            }
            const auto bags =
                compute_bags(dataset, *provider, own_idf ? &*own_idf : idf, options);
            point.mean_entropy = mean_bag_entropy(bags);
            const auto run = score_bags(bags, measure, options);
            correlate_targets(run.similarity(), targets, point.correlations, point.target_errors);
        } catch (const std::exception& e) {
            point.error = e.what();
        }
        out.push_back(std::move(point));
    }
    return out;
}

std::vector<TemperaturePoint> temperature_sweep(const EvalDataset& dataset,
                                                const MeasureSpec& measure,
                                                const ProviderFactory& provider_factory,
                                                std::span<const double> temperatures,
                                                const ScoreMatrix& human, CorrelationKind kind,
                                                const ScoreOptions& options,
                                                const IdfTable* idf) {
    const SweepTarget target{"", human, kind};
    return temperature_sweep(dataset, measure, provider_factory, temperatures,
                             std::span<const SweepTarget>(&target, 1), options, idf);
}

std::vector<GridPoint> ab_grid_sweep(const EvalDataset& dataset, std::span<const double> alphas,
                                     std::span<const double> betas, const Provider& provider,
                                     std::span<const SweepTarget> targets,
                                     const ScoreOptions& options, const IdfTable* idf,
                                     bool symmetrize) {
    std::optional<IdfTable> own_idf;
    if (options.weighting == Weighting::Idf && idf == nullptr) {
        own_idf = dataset_idf(dataset, provider);
        idf = &*own_idf;
    }
    const auto bags = compute_bags(dataset, provider, idf, options);
    std::vector<GridPoint> out;
    out.reserve(alphas.size() * betas.size());
    for (double alpha : alphas) {
        for (double beta : betas) {
            GridPoint point;
            point.alpha = alpha;
            point.beta = beta;
            point.correlations.assign(targets.size(), std::nullopt);
            point.target_errors.assign(targets.size(), std::string());
            const auto spec = MeasureSpec::ab_div(alpha, beta, symmetrize);
            try {
                spec.validate();
            } catch (const DomainError&) {
                point.flag = "invalid_domain";
                out.push_back(std::move(point));
                continue;
            }
            try {
                const auto run = score_bags(bags, spec, options);
                correlate_targets(run.similarity(), targets, point.correlations,
                                  point.target_errors);
                if (spec.has_negative_parameter()) {
                    point.flag = "negative_parameter";
                }
            } catch (const std::exception& e) {
                point.flag = e.what();
            }
            out.push_back(std::move(point));
        }
    }
    return out;
}

std::vector<GridPoint> ab_grid_sweep(const EvalDataset& dataset, std::span<const double> alphas,
                                     std::span<const double> betas, const Provider& provider,
                                     const ScoreMatrix& human, CorrelationKind kind,
                                     const ScoreOptions& options, const IdfTable* idf,
                                     bool symmetrize) {
    const SweepTarget target{"", human, kind};
    return ab_grid_sweep(dataset, alphas, betas, provider,
                         std::span<const SweepTarget>(&target, 1), options, idf, symmetrize);
}

// ---------------------------------------------------------------------------

double median(std::vector<double> values) {
    if (values.empty()) {
        throw EmptyInputError("median of nothing");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

DistributionReport score_distribution_report(const ScoreMatrix& similarity,
                                             const ScoreMatrix& human, double threshold) {
    similarity.require_same_layout(human);
    std::vector<double> sims, hums;
    for (std::size_t i = 0; i < similarity.values().size(); ++i) {
        if (!std::isnan(similarity.values()[i]) && !std::isnan(human.values()[i])) {
            sims.push_back(similarity.values()[i]);
            hums.push_back(human.values()[i]);
        }
    }
    if (sims.empty()) {
        throw DegenerateInput("no scored cells");
    }
    const auto [lo, hi] = std::minmax_element(sims.begin(), sims.end());
    const double min = *lo;
    const double span = *hi - *lo;
    if (!(span > 0.0)) {
        throw DegenerateInput("similarity is constant, cannot rescale");
    }

    DistributionReport report;
    std::vector<double> high, low;
    report.rescaled.reserve(sims.size());
    for (std::size_t i = 0; i < sims.size(); ++i) {
        const double x = std::clamp((sims[i] - min) / span, 0.0, 1.0);
        report.rescaled.push_back(x);
        const auto bin = std::min<std::size_t>(
            static_cast<std::size_t>(x * DistributionReport::kBins), DistributionReport::kBins - 1);
        if (hums[i] >= threshold) {
            ++report.high[bin];
            high.push_back(x);
        } else {
            ++report.low[bin];
            low.push_back(x);
        }
    }
    if (high.empty() || low.empty()) {
        throw DegenerateInput(std::string("no texts with human score ") +
                              (high.empty() ? ">= " : "< ") + "threshold");
    }
    report.median_high = median(high);
    report.median_low = median(low);
    report.separation = report.median_high - report.median_low;
    return report;
}

} // namespace infolm
