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

#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "infolm/cli.hpp"
#include "infolm/error.hpp"
#include "infolm/infolm.hpp"
#include "infolm/metaeval.hpp"

namespace py = pybind11;
using namespace infolm;

namespace {

using Probs = std::vector<double>;

MeasureSpec make_spec(const std::string& measure, std::optional<double> alpha,
                      std::optional<double> beta, bool symmetrize, double floor) {
    MeasureSpec spec;
    spec.kind = parse_measure_kind(measure);
    spec.alpha = alpha.value_or(0.0);
    spec.beta = beta.value_or(0.0);
    spec.symmetrize = symmetrize;
    spec.epsilon_floor = floor;
    spec.validate();
    return spec;
}

LpOrder parse_order(const std::string& order) {
    if (order == "1") return LpOrder::One;
    if (order == "2") return LpOrder::Two;
    if (order == "inf") return LpOrder::Infinity;
    throw DomainError("order must be '1', '2' or 'inf'");
}

py::dict preset_dict(const Preset& p) {
    py::dict d;
    d["name"] = p.name;
    d["measure"] = std::string(to_string(p.measure.kind));
    d["alpha"] = p.measure.alpha;
    d["beta"] = p.measure.beta;
    d["temperature"] = p.temperature;
    d["label"] = p.measure.label();
    return d;
}

} // namespace

PYBIND11_MODULE(_infolm, m) {
    m.doc() = "InfoLM measures, scoring and meta-evaluation";
    // Every library error derives from Error and surfaces as InfoLMError (a ValueError).
    py::register_exception<Error>(m, "InfoLMError", PyExc_ValueError);

    const double floor = MeasureSpec::kDefaultFloor;
    m.def("kl_divergence",
          [](const Probs& p, const Probs& q, double f) {
              return kl_divergence(TokenDistribution(p), TokenDistribution(q), f);
          },
          py::arg("p"), py::arg("q"), py::arg("floor") = floor);
    m.def("jeffreys_kl",
          [](const Probs& p, const Probs& q, double f) {
              return jeffreys_kl(TokenDistribution(p), TokenDistribution(q), f);
          },
          py::arg("p"), py::arg("q"), py::arg("floor") = floor);
    m.def("alpha_divergence",
          [](const Probs& p, const Probs& q, double a, double f) {
              return alpha_divergence(TokenDistribution(p), TokenDistribution(q), a, f);
          },
          py::arg("p"), py::arg("q"), py::arg("alpha"), py::arg("floor") = floor);
    m.def("gamma_divergence",
          [](const Probs& p, const Probs& q, double b, double f) {
              return gamma_divergence(TokenDistribution(p), TokenDistribution(q), b, f);
          },
          py::arg("p"), py::arg("q"), py::arg("beta"), py::arg("floor") = floor);
    m.def("ab_divergence",
          [](const Probs& p, const Probs& q, double a, double b, double f) {
              return ab_divergence(TokenDistribution(p), TokenDistribution(q), a, b, f);
          },
          py::arg("p"), py::arg("q"), py::arg("alpha"), py::arg("beta"), py::arg("floor") = floor);
    m.def("lp_distance",
          [](const Probs& p, const Probs& q, const std::string& order) {
              return lp_distance(TokenDistribution(p), TokenDistribution(q), parse_order(order));
          },
          py::arg("p"), py::arg("q"), py::arg("order") = "1");
    m.def("fisher_rao",
          [](const Probs& p, const Probs& q) {
              return fisher_rao(TokenDistribution(p), TokenDistribution(q));
          },
          py::arg("p"), py::arg("q"));
    m.def("evaluate_measure",
          [](const std::string& measure, const Probs& p, const Probs& q,
             std::optional<double> alpha, std::optional<double> beta, bool symmetrize, double f) {
              return evaluate_measure(make_spec(measure, alpha, beta, symmetrize, f),
                                      TokenDistribution(p), TokenDistribution(q));
          },
          py::arg("measure"), py::arg("p"), py::arg("q"), py::arg("alpha") = py::none(),
          py::arg("beta") = py::none(), py::arg("symmetrize") = true, py::arg("floor") = floor);
    m.def("temperature_softmax",
          [](const Probs& logits, double t) { return temperature_softmax(logits, t).vector(); },
          py::arg("logits"), py::arg("temperature"));

    m.def("pearson", [](const Probs& a, const Probs& b) { return pearson(a, b); });
    m.def("spearman", [](const Probs& a, const Probs& b) { return spearman(a, b); });
    m.def("kendall", [](const Probs& a, const Probs& b) { return kendall(a, b); });
    m.def("williams_test",
          [](double r1, double r2, double r12, int n) {
              const auto r = williams_test(r1, r2, r12, n);
              py::dict d;
              d["t_statistic"] = r.t_statistic;
              d["p_value"] = r.p_value;
              d["degrees_of_freedom"] = r.degrees_of_freedom;
              d["stronger"] = r.stronger;
              return d;
          },
          py::arg("r_metric1_human"), py::arg("r_metric2_human"), py::arg("r_metric1_metric2"),
          py::arg("n"));

    m.def("preset", [](const std::string& name) { return preset_dict(preset(name)); });
    m.def("preset_names", [] {
        std::vector<std::string> names;
        for (const auto& p : preset_catalog()) names.push_back(p.name);
        return names;
    });

    m.def("score",
          [](const std::string& reference, const std::string& candidate, const std::string& name,
             std::uint64_t seed, std::size_t vocab_size, double smoothing, double temperature) {
              const auto p = preset(name);
              MockConfig mc;
              mc.seed = seed;
              mc.vocab_size = vocab_size;
              mc.smoothing = smoothing;
              mc.temperature = temperature;
              MockProvider mock(mc);
              const TextRef ref{"reference", reference};
              const TextRef cand{"candidate", candidate};
              const std::vector<std::vector<TokenId>> docs{mock.tokenize(ref).token_ids,
                                                           mock.tokenize(cand).token_ids};
              const auto idf = IdfTable::from_documents(docs);
              const auto r = infolm_score(ref, cand, p.measure, Weighting::Idf, mock, &idf);
              py::dict d;
              d["divergence"] = r.divergence_value;
              d["similarity"] = r.similarity_value;
              d["measure"] = r.measure.label();
              d["warnings"] = r.warnings;
              return d;
          },
          "Score a pair with the deterministic mock backend.", py::arg("reference"),
          py::arg("candidate"), py::arg("preset") = "fisher-rao", py::arg("seed") = 42,
          py::arg("vocab_size") = 16, py::arg("smoothing") = 0.1, py::arg("temperature") = 1.0);

    m.def("run_cli",
          [](std::vector<std::string> args) {
              args.insert(args.begin(), "infolm");
              std::ostringstream out, err;
              int code = 0;
              {
                  py::gil_scoped_release release;
                  code = cli::run(args, out, err);
              }
              return py::make_tuple(code, out.str(), err.str());
          },
          "Run the command line tool in process; returns (exit_code, stdout, stderr).",
          py::arg("args"));
}
