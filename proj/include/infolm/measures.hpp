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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace infolm {

/// A normalized probability vector over a fixed vocabulary.
///
/// Construction validates the invariants: nonnegative entries summing to one
/// within 1e-9. Two distributions are comparable only when their sizes match.
class TokenDistribution {
public:
    static constexpr double kSumTolerance = 1e-9;

    TokenDistribution() = default;
    explicit TokenDistribution(std::vector<double> probs);

    /// Builds a distribution without validation. Callers guarantee the invariants.
    static TokenDistribution from_trusted(std::vector<double> probs);

    /// Rescales nonnegative finite weights so they sum to one.
    static TokenDistribution normalized(std::vector<double> weights);

    static TokenDistribution uniform(std::size_t size);

    std::size_t size() const noexcept { return probs_.size(); }
    bool empty() const noexcept { return probs_.empty(); }
    double operator[](std::size_t i) const noexcept { return probs_[i]; }
    std::span<const double> probs() const noexcept { return probs_; }
    const std::vector<double>& vector() const noexcept { return probs_; }

    /// Shannon entropy in nats.
    double entropy() const noexcept;

    friend bool operator==(const TokenDistribution&, const TokenDistribution&) = default;

private:
    std::vector<double> probs_;
};

enum class MeasureKind : std::uint8_t {
    AlphaDiv,
    GammaDiv,
    ABDiv,
    L1,
    L2,
    LInf,
    FisherRao,
    KL,
    JeffreysKL,
};

std::string_view to_string(MeasureKind kind) noexcept;
MeasureKind parse_measure_kind(std::string_view name);

/// True for the divergences whose value depends on argument order.
bool is_asymmetric(MeasureKind kind) noexcept;

/// Selects an information measure and its parameters.
struct MeasureSpec {
    static constexpr double kDefaultFloor = 1e-12;

    MeasureKind kind = MeasureKind::FisherRao;
    double alpha = 0.0;
    double beta = 0.0;
    bool symmetrize = true;
    double epsilon_floor = kDefaultFloor;

    static MeasureSpec alpha_div(double alpha, bool symmetrize = true);
    static MeasureSpec gamma_div(double beta, bool symmetrize = true);
    static MeasureSpec ab_div(double alpha, double beta, bool symmetrize = true);
    static MeasureSpec of(MeasureKind kind);

    /// Throws DomainError when the parameters are outside the measure's domain.
    void validate() const;

    /// True when alpha or beta is negative for a measure that uses it.
    /// Nonnegativity of the result is then no longer guaranteed.
    bool has_negative_parameter() const noexcept;

    /// Stable label used in CSV output, e.g. "ABDiv[alpha=3;beta=0.25;sym=1]".
    std::string label() const;

    friend bool operator==(const MeasureSpec&, const MeasureSpec&) = default;
};

// Every function below throws ShapeError when the two sizes differ.
// Divergences (KL, alpha, gamma, AB) clamp both inputs to [floor, 1] and
// renormalize before evaluation. Distances and Fisher-Rao use raw inputs.

double kl_divergence(const TokenDistribution& p, const TokenDistribution& q,
                     double floor = MeasureSpec::kDefaultFloor);

double jeffreys_kl(const TokenDistribution& p, const TokenDistribution& q,
                   double floor = MeasureSpec::kDefaultFloor);

/// (sum p^a q^(1-a) - 1) / (a(a-1)). Recovers KL as a -> 1.
double alpha_divergence(const TokenDistribution& p, const TokenDistribution& q, double alpha,
                        double floor = MeasureSpec::kDefaultFloor);

double gamma_divergence(const TokenDistribution& p, const TokenDistribution& q, double beta,
                        double floor = MeasureSpec::kDefaultFloor);

/// Scale-invariant AB divergence. Equals gamma_divergence(p, q, beta) at alpha = 1.
double ab_divergence(const TokenDistribution& p, const TokenDistribution& q, double alpha,
                     double beta, double floor = MeasureSpec::kDefaultFloor);

enum class LpOrder : std::uint8_t { One, Two, Infinity };

double lp_distance(const TokenDistribution& p, const TokenDistribution& q, LpOrder order);

/// (2/pi) arccos of the Bhattacharyya coefficient, in [0, 1].
double fisher_rao(const TokenDistribution& p, const TokenDistribution& q);

/// Applies the measure named by spec. Asymmetric divergences are replaced by
/// their Jeffreys average when spec.symmetrize is set.
double evaluate_measure(const MeasureSpec& spec, const TokenDistribution& p,
                        const TokenDistribution& q);

/// Clamp to [floor, 1] then renormalize.
TokenDistribution apply_floor(const TokenDistribution& p, double floor);

} // namespace infolm
