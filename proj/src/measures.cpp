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

#include "infolm/measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

#include "infolm/error.hpp"

namespace infolm {

namespace {

void require_same_size(const TokenDistribution& p, const TokenDistribution& q) {
    if (p.size() != q.size()) {
        throw ShapeError("distribution sizes differ: " + std::to_string(p.size()) + " vs " +
                         std::to_string(q.size()));
    }
    if (p.empty()) {
        throw ShapeError("empty distribution");
    }
}

void require_floor(double floor) {
    if (!(floor > 0.0 && floor < 1e-3)) {
        throw DomainError("epsilon floor must lie in (0, 1e-3)");
    }
}

std::string format_number(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

// Both arguments floored; p and q are returned as plain vectors.
struct FlooredPair {
    std::vector<double> p;
    std::vector<double> q;
};

FlooredPair floor_pair(const TokenDistribution& p, const TokenDistribution& q, double floor) {
    require_same_size(p, q);
    require_floor(floor);
    return {apply_floor(p, floor).vector(), apply_floor(q, floor).vector()};
}

} // namespace

TokenDistribution::TokenDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) {
        throw EmptyInputError("token distribution is empty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        const double v = probs_[i];
        if (!std::isfinite(v)) {
            throw NumericError("non-finite probability at index " + std::to_string(i));
        }
        if (v < 0.0) {
            throw DomainError("negative probability at index " + std::to_string(i));
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw DomainError("probabilities sum to " + format_number(sum) + ", expected 1");
    }
}

TokenDistribution TokenDistribution::from_trusted(std::vector<double> probs) {
    TokenDistribution d;
    d.probs_ = std::move(probs);
    return d;
}

TokenDistribution TokenDistribution::normalized(std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw DomainError("weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (!(sum > 0.0)) {
        throw DomainError("weights sum to zero");
    }
    for (double& w : weights) {
        w /= sum;
    }
    return TokenDistribution(std::move(weights));
}

TokenDistribution TokenDistribution::uniform(std::size_t size) {
    if (size == 0) {
        throw EmptyInputError("uniform distribution over an empty vocabulary");
    }
    return from_trusted(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

double TokenDistribution::entropy() const noexcept {
    double h = 0.0;
    for (double v : probs_) {
        if (v > 0.0) {
            h -= v * std::log(v);
        }
    }
    return h;
}

std::string_view to_string(MeasureKind kind) noexcept {
    switch (kind) {
    case MeasureKind::AlphaDiv: return "AlphaDiv";
    case MeasureKind::GammaDiv: return "GammaDiv";
    case MeasureKind::ABDiv: return "ABDiv";
    case MeasureKind::L1: return "L1";
    case MeasureKind::L2: return "L2";
    case MeasureKind::LInf: return "LInf";
    case MeasureKind::FisherRao: return "FisherRao";
    case MeasureKind::KL: return "KL";
    case MeasureKind::JeffreysKL: return "JeffreysKL";
    }
    return "?";
}

MeasureKind parse_measure_kind(std::string_view name) {
    struct Alias {
        std::string_view name;
        MeasureKind kind;
    };
    static constexpr Alias kAliases[] = {
        {"AlphaDiv", MeasureKind::AlphaDiv},   {"alpha", MeasureKind::AlphaDiv},
        {"GammaDiv", MeasureKind::GammaDiv},   {"gamma", MeasureKind::GammaDiv},
        {"ABDiv", MeasureKind::ABDiv},         {"ab", MeasureKind::ABDiv},
        {"L1", MeasureKind::L1},               {"l1", MeasureKind::L1},
        {"L2", MeasureKind::L2},               {"l2", MeasureKind::L2},
        {"LInf", MeasureKind::LInf},           {"linf", MeasureKind::LInf},
        {"FisherRao", MeasureKind::FisherRao}, {"fisher-rao", MeasureKind::FisherRao},
        {"KL", MeasureKind::KL},               {"kl", MeasureKind::KL},
        {"JeffreysKL", MeasureKind::JeffreysKL}, {"jeffreys", MeasureKind::JeffreysKL},
    };
    for (const auto& a : kAliases) {
        if (a.name == name) {
            return a.kind;
        }
    }
    throw DomainError("unknown measure '" + std::string(name) + "'");
}

bool is_asymmetric(MeasureKind kind) noexcept {
    switch (kind) {
    case MeasureKind::AlphaDiv:
    case MeasureKind::GammaDiv:
    case MeasureKind::ABDiv:
    case MeasureKind::KL:
        return true;
    default:
        return false;
    }
}

MeasureSpec MeasureSpec::alpha_div(double alpha, bool symmetrize) {
    MeasureSpec s;
    s.kind = MeasureKind::AlphaDiv;
    s.alpha = alpha;
    s.symmetrize = symmetrize;
    return s;
}

MeasureSpec MeasureSpec::gamma_div(double beta, bool symmetrize) {
    MeasureSpec s;
    s.kind = MeasureKind::GammaDiv;
    s.beta = beta;
    s.symmetrize = symmetrize;
    return s;
}

MeasureSpec MeasureSpec::ab_div(double alpha, double beta, bool symmetrize) {
    MeasureSpec s;
    s.kind = MeasureKind::ABDiv;
    s.alpha = alpha;
    s.beta = beta;
    s.symmetrize = symmetrize;
    return s;
}

MeasureSpec MeasureSpec::of(MeasureKind kind) {
    MeasureSpec s;
    s.kind = kind;
    return s;
}

void MeasureSpec::validate() const {
    require_floor(epsilon_floor);
    switch (kind) {
    case MeasureKind::AlphaDiv:
        if (!std::isfinite(alpha) || alpha == 0.0 || alpha == 1.0) {
            throw DomainError("alpha-divergence requires alpha not in {0, 1}");
        }
        break;
    case MeasureKind::GammaDiv:
        if (!std::isfinite(beta) || beta == 0.0 || beta == -1.0) {
            throw DomainError("gamma-divergence requires beta not in {0, -1}");
        }
        break;
    case MeasureKind::ABDiv:
        if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha == 0.0 || beta == 0.0 ||
            alpha + beta == 0.0) {
            throw DomainError("AB-divergence requires alpha != 0, beta != 0, alpha + beta != 0");
        }
        break;
    default:
        break;
    }
}

bool MeasureSpec::has_negative_parameter() const noexcept {
    switch (kind) {
    case MeasureKind::AlphaDiv: return alpha < 0.0;
    case MeasureKind::GammaDiv: return beta < 0.0;
    case MeasureKind::ABDiv: return alpha < 0.0 || beta < 0.0;
    default: return false;
    }
}

std::string MeasureSpec::label() const {
    std::string out(to_string(kind));
    const std::string sym = symmetrize ? "1" : "0";
    switch (kind) {
    case MeasureKind::AlphaDiv:
        out += "[alpha=" + format_number(alpha) + ";sym=" + sym + "]";
        break;
    case MeasureKind::GammaDiv:
        out += "[beta=" + format_number(beta) + ";sym=" + sym + "]";
        break;
    case MeasureKind::ABDiv:
        out += "[alpha=" + format_number(alpha) + ";beta=" + format_number(beta) + ";sym=" + sym +
               "]";
        break;
    case MeasureKind::KL:
        out += "[sym=" + sym + "]";
        break;
    default:
        break;
    }
    return out;
}

TokenDistribution apply_floor(const TokenDistribution& p, double floor) {
    std::vector<double> out(p.probs().begin(), p.probs().end());
    double sum = 0.0;
    for (double& v : out) {
        v = std::clamp(v, floor, 1.0);
        sum += v;
    }
    for (double& v : out) {
        v /= sum;
    }
    return TokenDistribution::from_trusted(std::move(out));
}

double kl_divergence(const TokenDistribution& p, const TokenDistribution& q, double floor) {
    const auto [pf, qf] = floor_pair(p, q, floor);
    double sum = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        if (pf[i] > 0.0) {
            sum += pf[i] * std::log(pf[i] / qf[i]);
        }
    }
    return sum;
}

double jeffreys_kl(const TokenDistribution& p, const TokenDistribution& q, double floor) {
    return 0.5 * (kl_divergence(p, q, floor) + kl_divergence(q, p, floor));
}

double alpha_divergence(const TokenDistribution& p, const TokenDistribution& q, double alpha,
                        double floor) {
    if (!std::isfinite(alpha) || alpha == 0.0 || alpha == 1.0) {
        throw DomainError("alpha-divergence requires alpha not in {0, 1}");
    }
    const auto [pf, qf] = floor_pair(p, q, floor);
    // sum p^a q^(1-a) - 1 written as sum p ((p/q)^(a-1) - 1), stable near a = 1.
    double numerator = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        numerator += pf[i] * std::expm1((alpha - 1.0) * std::log(pf[i] / qf[i]));
    }
    return numerator / (alpha * (alpha - 1.0));
}

double gamma_divergence(const TokenDistribution& p, const TokenDistribution& q, double beta,
                        double floor) {
    if (!std::isfinite(beta) || beta == 0.0 || beta == -1.0) {
        throw DomainError("gamma-divergence requires beta not in {0, -1}");
    }
    const auto [pf, qf] = floor_pair(p, q, floor);
    double sum_p = 0.0;
    double sum_q = 0.0;
    double sum_cross = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        sum_p += std::pow(pf[i], beta + 1.0);
        sum_q += std::pow(qf[i], beta + 1.0);
        sum_cross += pf[i] * std::pow(qf[i], beta);
    }
    return std::log(sum_p) / (beta * (beta + 1.0)) + std::log(sum_q) / (beta + 1.0) -
           std::log(sum_cross) / beta;
}

double ab_divergence(const TokenDistribution& p, const TokenDistribution& q, double alpha,
                     double beta, double floor) {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha == 0.0 || beta == 0.0 ||
        alpha + beta == 0.0) {
        throw DomainError("AB-divergence requires alpha != 0, beta != 0, alpha + beta != 0");
    }
    const auto [pf, qf] = floor_pair(p, q, floor);
    const double total = alpha + beta;
    double sum_p = 0.0;
    double sum_q = 0.0;
    double sum_cross = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) {
        sum_p += std::pow(pf[i], total);
        sum_q += std::pow(qf[i], total);
        sum_cross += std::pow(pf[i], alpha) * std::pow(qf[i], beta);
    }
    return std::log(sum_p) / (beta * total) + std::log(sum_q) / (alpha * total) -
           std::log(sum_cross) / (alpha * beta);
}

double lp_distance(const TokenDistribution& p, const TokenDistribution& q, LpOrder order) {
    require_same_size(p, q);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::abs(p[i] - q[i]);
        switch (order) {
        case LpOrder::One: acc += d; break;
        case LpOrder::Two: acc += d * d; break;
        case LpOrder::Infinity: acc = std::max(acc, d); break;
        }
    }
    return order == LpOrder::Two ? std::sqrt(acc) : acc;
}

double fisher_rao(const TokenDistribution& p, const TokenDistribution& q) {
    require_same_size(p, q);
    // arccos(BC) = 2 asin(|sqrt p - sqrt q| / 2) for normalized inputs. The
    // chord form keeps full precision near p = q where arccos is flat.
    double chord_sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        chord_sq += d * d;
    }
    const double half_chord = std::clamp(0.5 * std::sqrt(chord_sq), 0.0, 1.0);
    const double angle = 2.0 * std::asin(half_chord);
    return std::clamp(2.0 / std::numbers::pi * angle, 0.0, 1.0);
}

namespace {

double directed(const MeasureSpec& spec, const TokenDistribution& p, const TokenDistribution& q) {
    switch (spec.kind) {
    case MeasureKind::AlphaDiv: return alpha_divergence(p, q, spec.alpha, spec.epsilon_floor);
    case MeasureKind::GammaDiv: return gamma_divergence(p, q, spec.beta, spec.epsilon_floor);
    case MeasureKind::ABDiv: return ab_divergence(p, q, spec.alpha, spec.beta, spec.epsilon_floor);
    case MeasureKind::KL: return kl_divergence(p, q, spec.epsilon_floor);
    case MeasureKind::JeffreysKL: return jeffreys_kl(p, q, spec.epsilon_floor);
    case MeasureKind::L1: return lp_distance(p, q, LpOrder::One);
    case MeasureKind::L2: return lp_distance(p, q, LpOrder::Two);
    case MeasureKind::LInf: return lp_distance(p, q, LpOrder::Infinity);
    case MeasureKind::FisherRao: return fisher_rao(p, q);
    }
    throw DomainError("unhandled measure kind");
}

} // namespace

double evaluate_measure(const MeasureSpec& spec, const TokenDistribution& p,
                        const TokenDistribution& q) {
    spec.validate();
    if (spec.symmetrize && is_asymmetric(spec.kind)) {
        return 0.5 * (directed(spec, p, q) + directed(spec, q, p));
    }
    return directed(spec, p, q);
}

} // namespace infolm
