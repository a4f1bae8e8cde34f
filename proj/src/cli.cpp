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

#include "infolm/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "infolm/infolm.hpp"
#include "infolm/metaeval.hpp"

namespace infolm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    std::string dataset;
    std::string backend = "mock";
    std::string store;
    std::string endpoint;
    std::uint64_t seed = 42;
    std::size_t vocab_size = 16;
    double smoothing = 0.1;
    std::size_t context_window = 512;
    std::size_t batch_size = 16;
    std::size_t max_in_flight = 4;
    int timeout_ms = 30000;
    std::size_t top_k = 256;

    std::string measure;
    std::string preset_name;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    bool no_symmetrize = false;
    double floor = MeasureSpec::kDefaultFloor;
    double temperature = 1.0;
    std::string weighting = "idf";
    std::string idf_path;
    std::string idf_corpus = "union";

    std::string out;
    std::size_t workers = 1;
    bool skip_errors = false;

    std::vector<std::string> criteria;
    std::vector<std::string> coefficients{"pearson", "spearman", "kendall"};
    std::vector<std::string> levels{"system"};

    std::string sweep_kind = "temperature";
    std::string temperatures = "0.5,1,2,5";
    std::string alphas = "0.5,1,2,3";
    std::string betas = "0.25,0.5,1,2";

    std::vector<std::string> score_files;
    std::vector<std::string> names;
    std::string matrix_mode = "flattened";
    double threshold = std::numeric_limits<double>::quiet_NaN();

    std::string corpus;

    // Set after parsing.
    bool temperature_given = false;
    bool vocab_given = false;
};

/// Raised for configuration and IO problems; the message carries the locus.
class UsageError : public Error {
public:
    using Error::Error;
};

void add_backend_options(CLI::App& app, RunConfig& cfg) {
    app.add_option("--backend", cfg.backend, "Distribution provider")
        ->check(CLI::IsMember({"mock", "store", "remote"}));
    app.add_option("--store", cfg.store,
                   "Distribution store file; '{T}' is replaced by the temperature");
    app.add_option("--endpoint", cfg.endpoint, "Sidecar URL (default: $INFOLM_SIDECAR_URL)");
    app.add_option("--seed", cfg.seed, "Mock backend seed");
    app.add_option("--vocab-size", cfg.vocab_size, "Mock vocabulary size");
    app.add_option("--smoothing", cfg.smoothing, "Mock smoothing mass");
    app.add_option("--context-window", cfg.context_window, "Mock context window in tokens");
    app.add_option("--batch-size", cfg.batch_size, "Remote batch size");
    app.add_option("--max-in-flight", cfg.max_in_flight, "Remote concurrent request limit");
    app.add_option("--timeout-ms", cfg.timeout_ms, "Remote request timeout");
    app.add_option("--top-k", cfg.top_k, "Tokens kept per position in sparse transport");
    app.add_option("--temperature", cfg.temperature, "Softmax temperature");
}

void add_measure_options(CLI::App& app, RunConfig& cfg) {
    app.add_option("--measure", cfg.measure,
                   "AlphaDiv, GammaDiv, ABDiv, L1, L2, LInf, FisherRao, KL, JeffreysKL");
    app.add_option("--preset", cfg.preset_name, "Named parameter preset, e.g. summ-abs-ab");
    app.add_option("--alpha", cfg.alpha, "Alpha parameter");
    app.add_option("--beta", cfg.beta, "Beta parameter");
    app.add_flag("--no-symmetrize", cfg.no_symmetrize, "Keep asymmetric divergences directed");
    app.add_option("--floor", cfg.floor, "Probability floor before logs and ratios");
    app.add_option("--weighting", cfg.weighting, "Token weighting")
        ->check(CLI::IsMember({"idf", "uniform"}));
    app.add_option("--idf", cfg.idf_path, "Precomputed idf table");
    app.add_option("--idf-corpus", cfg.idf_corpus, "Texts counted for idf when no table is given")
        ->check(CLI::IsMember({"references", "union"}));
}

void add_run_options(CLI::App& app, RunConfig& cfg, bool needs_dataset) {
    auto* d = app.add_option("--dataset", cfg.dataset, "Dataset file (JSON lines)");
    if (needs_dataset) {
        d->required();
    }
    app.add_option("--out", cfg.out, "Output directory")->required();
    app.add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--skip-errors", cfg.skip_errors, "Keep going when cells fail");
}

void add_report_options(CLI::App& app, RunConfig& cfg) {
    app.add_option("--criteria", cfg.criteria, "Human criteria (default: all)")->delimiter(',');
    app.add_option("--coefficients", cfg.coefficients, "pearson, spearman, kendall")
        ->delimiter(',');
    app.add_option("--level", cfg.levels, "system, text")->delimiter(',');
}

MeasureSpec resolve_measure(RunConfig& cfg) {
    MeasureSpec spec;
    if (!cfg.preset_name.empty()) {
        if (!cfg.measure.empty()) {
            throw UsageError("--measure and --preset are mutually exclusive");
        }
        const auto p = preset(cfg.preset_name);
        spec = p.measure;
        if (!cfg.temperature_given) {
            cfg.temperature = p.temperature;
        }
    } else if (!cfg.measure.empty()) {
        spec.kind = parse_measure_kind(cfg.measure);
        const bool uses_alpha = spec.kind == MeasureKind::AlphaDiv || spec.kind == MeasureKind::ABDiv;
        const bool uses_beta = spec.kind == MeasureKind::GammaDiv || spec.kind == MeasureKind::ABDiv;
        if (uses_alpha && std::isnan(cfg.alpha)) {
            throw UsageError("--measure " + cfg.measure + " needs --alpha");
        }
        if (uses_beta && std::isnan(cfg.beta)) {
            throw UsageError("--measure " + cfg.measure + " needs --beta");
        }
        if (uses_alpha) spec.alpha = cfg.alpha;
        if (uses_beta) spec.beta = cfg.beta;
    } else {
        spec = preset("fisher-rao").measure;
    }
    spec.symmetrize = !cfg.no_symmetrize;
    spec.epsilon_floor = cfg.floor;
    spec.validate();
    return spec;
}

std::string store_path_for(const RunConfig& cfg, double temperature) {
    std::string path = cfg.store;
    const auto at = path.find("{T}");
    if (at != std::string::npos) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", temperature);
        path.replace(at, 3, buf);
    }
    return path;
}

std::unique_ptr<Provider> make_provider(const RunConfig& cfg, double temperature,
                                        bool check_temperature) {
    if (cfg.backend == "mock") {
        MockConfig mc;
        mc.seed = cfg.seed;
        mc.vocab_size = cfg.vocab_size;
        mc.smoothing = cfg.smoothing;
        mc.temperature = temperature;
        mc.context_window = cfg.context_window;
        return std::make_unique<MockProvider>(mc);
    }
    if (cfg.backend == "store") {
        if (cfg.store.empty()) {
            throw UsageError("--backend store needs --store");
        }
        auto store = DistributionStore::load(store_path_for(cfg, temperature));
        BackendDescriptor wanted = store->descriptor();
        if (cfg.vocab_given) {
            wanted.vocab_size = cfg.vocab_size;
        }
        if (check_temperature) {
            wanted.temperature = temperature;
        }
        store->check_compatible(wanted);
        return store;
    }
    RemoteConfig rc;
    rc.endpoint = cfg.endpoint;
    if (rc.endpoint.empty()) {
        if (const char* env = std::getenv("INFOLM_SIDECAR_URL")) {
            rc.endpoint = env;
        }
    }
    if (rc.endpoint.empty()) {
        throw UsageError("--backend remote needs --endpoint or INFOLM_SIDECAR_URL");
    }
    rc.timeout = std::chrono::milliseconds(cfg.timeout_ms);
    rc.batch_size = cfg.batch_size;
    rc.max_in_flight = cfg.max_in_flight;
    rc.top_k = cfg.top_k;
    rc.temperature = temperature;
    if (cfg.vocab_given) {
        rc.expected_vocab_size = cfg.vocab_size;
    }
    return std::make_unique<RemoteClient>(rc);
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    return out;
}

fs::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw UsageError("cannot create output directory " + dir);
    }
    return fs::path(dir);
}

json config_json(const RunConfig& cfg, const MeasureSpec* spec) {
    json j{
        {"dataset", cfg.dataset},
        {"backend", cfg.backend},
        {"temperature", cfg.temperature},
        {"weighting", cfg.weighting},
        {"workers", cfg.workers},
        {"skip_errors", cfg.skip_errors},
    };
    if (cfg.backend == "mock") {
        j["seed"] = cfg.seed;
        j["vocab_size"] = cfg.vocab_size;
        j["smoothing"] = cfg.smoothing;
        j["context_window"] = cfg.context_window;
    } else if (cfg.backend == "store") {
        j["store"] = cfg.store;
    } else {
        j["endpoint"] = cfg.endpoint;
        j["batch_size"] = cfg.batch_size;
        j["top_k"] = cfg.top_k;
    }
    if (cfg.weighting == "idf") {
        j["idf"] = cfg.idf_path.empty() ? json("dataset:" + cfg.idf_corpus) : json(cfg.idf_path);
    }
    if (spec != nullptr) {
        j["measure"] = spec->label();
        if (!cfg.preset_name.empty()) {
            j["preset"] = cfg.preset_name;
        }
        j["epsilon_floor"] = spec->epsilon_floor;
    }
    return j;
}

json number_or_null(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::string csv_safe(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') {
            c = ';';
        }
    }
    return s;
}

std::vector<double> parse_points(const std::string& spec, const std::string& what) {
    std::vector<double> out;
    auto fail = [&](const std::string& why) {
        throw UsageError("invalid " + what + " '" + spec + "': " + why);
    };
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            fail("'" + s + "' is not a number");
        }
        if (used != s.size() || !std::isfinite(v)) {
            fail("'" + s + "' is not a number");
        }
        return v;
    };
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ':')) {
            parts.push_back(part);
        }
        if (parts.size() != 3) {
            fail("ranges are start:stop:step");
        }
        const double start = to_double(parts[0]);
        const double stop = to_double(parts[1]);
        const double step = to_double(parts[2]);
        if (!(step > 0.0)) {
            fail("step must be positive");
        }
        if (start > stop) {
            fail("start exceeds stop");
        }
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 10000) {
            fail("too many points");
        }
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(start + static_cast<double>(i) * step);
        }
    } else {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            out.push_back(to_double(item));
        }
    }
    if (out.empty()) {
        fail("no points");
    }
    return out;
}

struct ScoringSetup {
    EvalDataset dataset;
    MeasureSpec measure;
    std::unique_ptr<Provider> provider;
    std::optional<IdfTable> idf;
    ScoreOptions options;
};

ScoringSetup prepare_scoring(RunConfig& cfg) {
    ScoringSetup s;
    s.dataset = EvalDataset::load(cfg.dataset);
    s.measure = resolve_measure(cfg);
    s.provider = make_provider(cfg, cfg.temperature, cfg.temperature_given || !cfg.preset_name.empty());
    s.options.weighting = parse_weighting(cfg.weighting);
    s.options.workers = cfg.workers;
    s.options.skip_errors = cfg.skip_errors;
    if (s.options.weighting == Weighting::Idf) {
        if (!cfg.idf_path.empty()) {
            s.idf = IdfTable::load(cfg.idf_path);
        } else {
            s.idf = dataset_idf(s.dataset, *s.provider,
                                cfg.idf_corpus == "references" ? IdfCorpus::References
                                                               : IdfCorpus::Union);
        }
    }
    return s;
}

json failures_json(const std::vector<CellFailure>& failures) {
    json arr = json::array();
    for (const auto& f : failures) {
        arr.push_back({{"text_id", f.text_id}, {"system_id", f.system_id}, {"error", f.message}});
    }
    return arr;
}

ScoreRun run_scoring(const ScoringSetup& s, const fs::path& out_dir, std::ostream& err) {
    auto run = score_dataset(s.dataset, s.measure, *s.provider, s.idf ? &*s.idf : nullptr,
                             s.options);
    auto csv = open_output(out_dir / "scores.csv");
    write_score_csv(csv, run.divergence, s.measure.label());
    for (const auto& f : run.failures) {
        err << "warning: (" << f.text_id << ", " << f.system_id << ") skipped: " << f.message
            << '\n';
    }
    return run;
}

void write_summary(const fs::path& out_dir, const json& summary) {
    auto out = open_output(out_dir / "summary.json");
    out << summary.dump(2) << '\n';
}

std::vector<CorrelationKind> parse_kinds(const RunConfig& cfg) {
    std::vector<CorrelationKind> kinds;
    for (const auto& c : cfg.coefficients) {
        kinds.push_back(parse_correlation_kind(c));
    }
    return kinds;
}

std::vector<Level> parse_levels(const RunConfig& cfg) {
    std::vector<Level> levels;
    for (const auto& l : cfg.levels) {
        levels.push_back(parse_level(l));
    }
    return levels;
}

std::vector<std::string> resolve_criteria(const RunConfig& cfg, const EvalDataset& dataset) {
    std::vector<std::string> criteria = cfg.criteria.empty() ? dataset.criteria() : cfg.criteria;
    for (const auto& c : criteria) {
        dataset.require_criterion(c);
    }
    if (criteria.empty()) {
        throw UnknownCriterion("dataset declares no human criteria");
    }
    return criteria;
}

json report_json(const CorrelationReport& r) {
    return {{"criterion", r.criterion},
            {"coefficient", std::string(to_string(r.kind))},
            {"level", std::string(to_string(r.level))},
            {"value", number_or_null(r.value)},
            {"n_effective", r.n_effective},
            {"warnings", r.warnings}};
}

// ---------------------------------------------------------------------------

int cmd_score(RunConfig& cfg, std::ostream& out, std::ostream& err) {
    auto setup = prepare_scoring(cfg);
    const auto dir = prepare_out_dir(cfg.out);
    const auto run = run_scoring(setup, dir, err);
    write_summary(dir, {{"command", "score"},
                        {"config", config_json(cfg, &setup.measure)},
                        {"failures", failures_json(run.failures)},
                        {"warnings", run.warnings}});
    out << "wrote " << (dir / "scores.csv").string() << '\n';
    return run.failures.empty() ? kSuccess : kPartial;
}

int cmd_evaluate(RunConfig& cfg, std::ostream& out, std::ostream& err) {
    auto setup = prepare_scoring(cfg);
    const auto criteria = resolve_criteria(cfg, setup.dataset);
    const auto kinds = parse_kinds(cfg);
    const auto levels = parse_levels(cfg);
    const auto dir = prepare_out_dir(cfg.out);
    const auto run = run_scoring(setup, dir, err);
    const auto similarity = run.similarity();

    auto csv = open_output(dir / "correlations.csv");
    csv << "criterion,coefficient,level,value,n_effective,warnings\n";
    json reports = json::array();
    for (const auto& criterion : criteria) {
        const auto human = human_matrix(setup.dataset, criterion);
        for (auto kind : kinds) {
            for (auto level : levels) {
                CorrelationReport report;
                report.kind = kind;
                report.level = level;
                try {
                    report = correlate_level(level, similarity, human, kind);
                } catch (const DegenerateInput& e) {
                    report.warnings.push_back(e.what());
                }
                report.criterion = criterion;
                std::string warnings;
                for (const auto& w : report.warnings) {
                    warnings += (warnings.empty() ? "" : "|") + csv_safe(w);
                }
                csv << criterion << ',' << to_string(kind) << ',' << to_string(level) << ','
                    << (report.value ? format_g12(*report.value) : "") << ','
                    << report.n_effective << ',' << warnings << '\n';
                reports.push_back(report_json(report));
            }
        }
    }
    write_summary(dir, {{"command", "evaluate"},
                        {"config", config_json(cfg, &setup.measure)},
                        {"reports", reports},
                        {"failures", failures_json(run.failures)},
                        {"warnings", run.warnings}});
    out << "wrote " << (dir / "correlations.csv").string() << '\n';
    return run.failures.empty() ? kSuccess : kPartial;
}

int cmd_sweep(RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto dataset = EvalDataset::load(cfg.dataset);
    const auto measure = resolve_measure(cfg);
    const auto criteria = resolve_criteria(cfg, dataset);
    const auto kinds = parse_kinds(cfg);
    for (const auto& l : cfg.levels) {
        if (parse_level(l) != Level::System) {
            throw UsageError("sweeps report system-level correlations only");
        }
    }
    std::vector<SweepTarget> targets;
    for (const auto& c : criteria) {
        const auto human = human_matrix(dataset, c);
        for (auto k : kinds) {
            targets.push_back({c, human, k});
        }
    }
    ScoreOptions options;
    options.weighting = parse_weighting(cfg.weighting);
    options.workers = cfg.workers;
    options.skip_errors = cfg.skip_errors;
    std::optional<IdfTable> idf;
    if (options.weighting == Weighting::Idf && !cfg.idf_path.empty()) {
        idf = IdfTable::load(cfg.idf_path);
    }
    const IdfCorpus corpus =
        cfg.idf_corpus == "references" ? IdfCorpus::References : IdfCorpus::Union;

    const auto dir = prepare_out_dir(cfg.out);
    auto csv = open_output(dir / "sweep.csv");
    csv << "sweep,temperature,alpha,beta,criterion,coefficient,level,value,mean_entropy,status\n";
    json points = json::array();
    bool any_failed = false;

    if (cfg.sweep_kind == "temperature") {
        const auto temps = parse_points(cfg.temperatures, "temperature range");
        for (double t : temps) {
            if (!(t > 0.0)) {
                throw UsageError("invalid temperature range: temperatures must be positive");
            }
        }
        // The idf table depends on tokenization only, so one table serves every temperature.
        if (options.weighting == Weighting::Idf && !idf) {
            idf = dataset_idf(dataset, *make_provider(cfg, temps.front(), false), corpus);
        }
        const auto factory = [&](double t) { return make_provider(cfg, t, true); };
        const auto results = temperature_sweep(dataset, measure, factory, temps, targets, options,
                                               idf ? &*idf : nullptr);
        for (const auto& p : results) {
            for (std::size_t t = 0; t < targets.size(); ++t) {
                const std::string status =
                    !p.error.empty() ? csv_safe(p.error)
                                     : (p.target_errors[t].empty() ? "ok" : csv_safe(p.target_errors[t]));
                any_failed |= status != "ok";
                csv << "temperature," << format_g12(p.temperature) << ",,,"
                    << targets[t].criterion << ',' << to_string(targets[t].kind) << ",system,"
                    << (p.correlations[t] ? format_g12(*p.correlations[t]) : "") << ','
                    << (p.error.empty() ? format_g12(p.mean_entropy) : "") << ',' << status << '\n';
                points.push_back({{"temperature", p.temperature},
                                  {"criterion", targets[t].criterion},
                                  {"coefficient", std::string(to_string(targets[t].kind))},
                                  {"value", number_or_null(p.correlations[t])},
                                  {"mean_entropy", p.mean_entropy},
                                  {"status", status}});
            }
        }
    } else if (cfg.sweep_kind == "ab-grid") {
        const auto alphas = parse_points(cfg.alphas, "alpha range");
        const auto betas = parse_points(cfg.betas, "beta range");
        auto provider = make_provider(cfg, cfg.temperature, cfg.temperature_given);
        if (options.weighting == Weighting::Idf && !idf) {
            idf = dataset_idf(dataset, *provider, corpus);
        }
        const auto results = ab_grid_sweep(dataset, alphas, betas, *provider, targets, options,
                                           idf ? &*idf : nullptr, !cfg.no_symmetrize);
        for (const auto& p : results) {
            for (std::size_t t = 0; t < targets.size(); ++t) {
                std::string status = p.flag.empty() ? "ok" : csv_safe(p.flag);
                if (p.flag.empty() && !p.target_errors[t].empty()) {
                    status = csv_safe(p.target_errors[t]);
                }
                any_failed |= !p.correlations[t].has_value();
                csv << "ab-grid," << format_g12(cfg.temperature) << ',' << format_g12(p.alpha)
                    << ',' << format_g12(p.beta) << ',' << targets[t].criterion << ','
                    << to_string(targets[t].kind) << ",system,"
                    << (p.correlations[t] ? format_g12(*p.correlations[t]) : "") << ",,"
                    << status << '\n';
                points.push_back({{"alpha", p.alpha},
                                  {"beta", p.beta},
                                  {"criterion", targets[t].criterion},
                                  {"coefficient", std::string(to_string(targets[t].kind))},
                                  {"value", number_or_null(p.correlations[t])},
                                  {"status", status}});
            }
        }
    } else {
        throw UsageError("unknown sweep kind '" + cfg.sweep_kind + "'");
    }

    json summary{{"command", "sweep"},
                 {"sweep", cfg.sweep_kind},
                 {"config", config_json(cfg, &measure)},
                 {"points", points}};
    write_summary(dir, summary);
    out << "wrote " << (dir / "sweep.csv").string() << '\n';
    return any_failed ? kPartial : kSuccess;
}

int cmd_compare(RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.score_files.size() < 2) {
        throw UsageError("compare needs at least two --scores files");
    }
    if (!cfg.names.empty() && cfg.names.size() != cfg.score_files.size()) {
        throw UsageError("--names must list one name per --scores file");
    }
    const auto dataset = EvalDataset::load(cfg.dataset);
    const auto criteria = resolve_criteria(cfg, dataset);
    const auto kinds = parse_kinds(cfg);
    const auto levels = parse_levels(cfg);
    const MatrixMode mode = cfg.matrix_mode == "system-means" ? MatrixMode::SystemMeans
                                                               : MatrixMode::Flattened;

    std::vector<NamedScores> metrics;
    const ScoreMatrix layout = human_matrix(dataset, criteria.front());
    for (std::size_t m = 0; m < cfg.score_files.size(); ++m) {
        auto table = load_score_csv(cfg.score_files[m]);
        try {
            table.similarity.require_same_layout(layout);
        } catch (const ShapeError& e) {
            throw UsageError("schema mismatch in " + cfg.score_files[m] + ": " + e.what());
        }
        const std::string name =
            cfg.names.empty() ? fs::path(cfg.score_files[m]).stem().string() : cfg.names[m];
        metrics.push_back({name, std::move(table.similarity)});
    }

    const auto dir = prepare_out_dir(cfg.out);
    auto matrix_csv = open_output(dir / "metric_correlation.csv");
    matrix_csv << "coefficient,metric1,metric2,value\n";
    json matrices = json::array();
    for (auto kind : kinds) {
        const auto matrix = metric_correlation_matrix(metrics, kind, mode);
        for (std::size_t x = 0; x < metrics.size(); ++x) {
            for (std::size_t y = 0; y < metrics.size(); ++y) {
                matrix_csv << to_string(kind) << ',' << metrics[x].name << ',' << metrics[y].name
                           << ',' << (std::isnan(matrix[x][y]) ? "" : format_g12(matrix[x][y]))
                           << '\n';
            }
        }
        json rows = json::array();
        for (const auto& row : matrix) {
            json r = json::array();
            for (double v : row) {
                r.push_back(std::isnan(v) ? json(nullptr) : json(v));
            }
            rows.push_back(r);
        }
        matrices.push_back({{"coefficient", std::string(to_string(kind))}, {"values", rows}});
    }

    auto williams_csv = open_output(dir / "williams.csv");
    williams_csv << "criterion,coefficient,level,metric1,metric2,r1,r2,r12,n,t,p_value,status\n";
    json reports = json::array();
    json significance = json::array();
    for (const auto& criterion : criteria) {
        const auto human = human_matrix(dataset, criterion);
        for (auto kind : kinds) {
            for (auto level : levels) {
                std::vector<std::optional<double>> r_human(metrics.size());
                int n = 0;
                for (std::size_t m = 0; m < metrics.size(); ++m) {
                    try {
                        auto report = correlate_level(level, metrics[m].similarity, human, kind);
                        report.criterion = criterion;
                        r_human[m] = report.value;
                        n = static_cast<int>(level == Level::System ? report.n_effective
                                                                    : human.rows());
                        auto j = report_json(report);
                        j["metric"] = metrics[m].name;
                        reports.push_back(j);
                    } catch (const DegenerateInput& e) {
                        err << "warning: " << metrics[m].name << " vs " << criterion << ": "
                            << e.what() << '\n';
                    }
                }
                for (std::size_t x = 0; x < metrics.size(); ++x) {
                    for (std::size_t y = 0; y < metrics.size(); ++y) {
                        if (x == y) {
                            continue;
                        }
                        std::optional<double> r12;
                        try {
                            r12 = correlate_level(level, metrics[x].similarity,
                                                  metrics[y].similarity, kind)
                                      .value;
                        } catch (const DegenerateInput&) {
                        }
                        std::string status = "ok";
                        std::optional<SignificanceResult> sig;
                        if (!r_human[x] || !r_human[y] || !r12) {
                            status = "undefined correlation";
                        } else {
                            try {
                                sig = williams_test(*r_human[x], *r_human[y], *r12, n);
                            } catch (const DomainError& e) {
                                status = csv_safe(e.what());
                            }
                        }
                        auto fmt = [](const std::optional<double>& v) {
                            return v ? format_g12(*v) : std::string();
                        };
                        char pbuf[32] = "";
                        if (sig) {
                            std::snprintf(pbuf, sizeof(pbuf), "%.6f", sig->p_value);
                        }
                        williams_csv << criterion << ',' << to_string(kind) << ','
                                     << to_string(level) << ',' << metrics[x].name << ','
                                     << metrics[y].name << ',' << fmt(r_human[x]) << ','
                                     << fmt(r_human[y]) << ',' << fmt(r12) << ',' << n << ','
                                     << (sig ? format_g12(sig->t_statistic) : "") << ',' << pbuf
                                     << ',' << status << '\n';
                        significance.push_back(
                            {{"criterion", criterion},
                             {"coefficient", std::string(to_string(kind))},
                             {"level", std::string(to_string(level))},
                             {"metric1", metrics[x].name},
                             {"metric2", metrics[y].name},
                             {"t_statistic", sig ? json(sig->t_statistic) : json(nullptr)},
                             {"p_value", sig ? json(sig->p_value) : json(nullptr)},
                             {"degrees_of_freedom", sig ? json(sig->degrees_of_freedom) : json(nullptr)},
                             {"status", status}});
                    }
                }
            }
        }
    }

    json distributions = json::array();
    if (!std::isnan(cfg.threshold)) {
        auto dist_csv = open_output(dir / "score_distribution.csv");
        dist_csv << "criterion,metric,group,bin_lo,bin_hi,count\n";
        for (const auto& criterion : criteria) {
            const auto human = human_matrix(dataset, criterion);
            for (const auto& m : metrics) {
                const auto report = score_distribution_report(m.similarity, human, cfg.threshold);
                for (const auto* group : {&report.high, &report.low}) {
                    const char* name = group == &report.high ? "high" : "low";
                    for (std::size_t b = 0; b < DistributionReport::kBins; ++b) {
                        dist_csv << criterion << ',' << m.name << ',' << name << ','
                                 << format_g12(static_cast<double>(b) / DistributionReport::kBins)
                                 << ','
                                 << format_g12(static_cast<double>(b + 1) /
                                               DistributionReport::kBins)
                                 << ',' << (*group)[b] << '\n';
                    }
                }
                distributions.push_back({{"criterion", criterion},
                                         {"metric", m.name},
                                         {"threshold", cfg.threshold},
                                         {"median_high", report.median_high},
                                         {"median_low", report.median_low},
                                         {"separation", report.separation}});
            }
        }
    }

    json config{{"dataset", cfg.dataset},
                {"scores", cfg.score_files},
                {"matrix_mode", cfg.matrix_mode}};
    write_summary(dir, {{"command", "compare"},
                        {"config", config},
                        {"metric_correlation", matrices},
                        {"reports", reports},
                        {"significance", significance},
                        {"score_distribution", distributions}});
    out << "wrote " << (dir / "williams.csv").string() << '\n';
    return kSuccess;
}

int cmd_idf(RunConfig& cfg, std::ostream& out, std::ostream&) {
    auto provider = make_provider(cfg, cfg.temperature, false);
    IdfTable table;
    if (!cfg.corpus.empty()) {
        std::ifstream in(cfg.corpus);
        if (!in) {
            throw UsageError("cannot open corpus " + cfg.corpus);
        }
        std::vector<TextRef> docs;
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                docs.push_back({"doc:" + std::to_string(docs.size()), line});
            }
        }
        if (docs.empty()) {
            throw EmptyInputError("corpus " + cfg.corpus + " is empty");
        }
        provider->prefetch(docs);
        std::vector<std::vector<TokenId>> tokenized;
        for (const auto& d : docs) {
            tokenized.push_back(provider->tokenize(d).token_ids);
        }
        table = IdfTable::from_documents(tokenized);
    } else if (!cfg.dataset.empty()) {
        const auto dataset = EvalDataset::load(cfg.dataset);
        table = dataset_idf(dataset, *provider,
                            cfg.idf_corpus == "references" ? IdfCorpus::References
                                                           : IdfCorpus::Union);
    } else {
        throw UsageError("idf needs --corpus or --dataset");
    }
    auto file = open_output(cfg.out);
    table.write(file);
    out << "wrote " << cfg.out << " (" << table.document_count() << " documents)\n";
    return kSuccess;
}

int cmd_export(RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto dataset = EvalDataset::load(cfg.dataset);
    auto provider = make_provider(cfg, cfg.temperature, cfg.temperature_given);
    const auto texts = dataset_texts(dataset);
    std::vector<SparseText> captured;
    if (const auto* remote = dynamic_cast<const RemoteClient*>(provider.get())) {
        captured = remote->fetch(texts);
    } else {
        for (const auto& t : texts) {
            const auto tok = provider->tokenize(t);
            SparseText s{t.id, tok.token_ids, tok.token_strings, {}};
            for (const auto& p : provider->predict_masked(tok)) {
                s.positions.push_back(sparsify(p.distribution, p.position, cfg.top_k));
            }
            captured.push_back(std::move(s));
        }
    }
    auto file = open_output(cfg.out);
    write_store(file, provider->descriptor(), cfg.top_k, captured);
    out << "wrote " << cfg.out << " (" << captured.size() << " texts)\n";
    return kSuccess;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"InfoLM scoring and meta-evaluation"};
    app.set_config("--config", "", "Config file; command-line flags take precedence");
    app.require_subcommand(1);

    auto* score = app.add_subcommand("score", "Score every (reference, candidate) pair");
    add_run_options(*score, cfg, true);
    add_backend_options(*score, cfg);
    add_measure_options(*score, cfg);

    auto* evaluate = app.add_subcommand("evaluate", "Score and correlate with human judgments");
    add_run_options(*evaluate, cfg, true);
    add_backend_options(*evaluate, cfg);
    add_measure_options(*evaluate, cfg);
    add_report_options(*evaluate, cfg);

    auto* sweep = app.add_subcommand("sweep", "Temperature or AB-divergence parameter sweep");
    add_run_options(*sweep, cfg, true);
    add_backend_options(*sweep, cfg);
    add_measure_options(*sweep, cfg);
    add_report_options(*sweep, cfg);
    sweep->add_option("--kind", cfg.sweep_kind, "temperature or ab-grid")
        ->check(CLI::IsMember({"temperature", "ab-grid"}));
    sweep->add_option("--temperatures", cfg.temperatures, "List a,b,c or range start:stop:step");
    sweep->add_option("--alphas", cfg.alphas, "List or range of alpha values");
    sweep->add_option("--betas", cfg.betas, "List or range of beta values");

    auto* compare = app.add_subcommand("compare", "Correlate metric score files with each other");
    compare->add_option("--dataset", cfg.dataset, "Dataset with human scores")->required();
    compare->add_option("--out", cfg.out, "Output directory")->required();
    compare->add_option("--scores", cfg.score_files, "Score CSV, repeat per metric")->required();
    compare->add_option("--names", cfg.names, "Metric names")->delimiter(',');
    compare->add_option("--matrix-mode", cfg.matrix_mode, "flattened or system-means")
        ->check(CLI::IsMember({"flattened", "system-means"}));
    compare->add_option("--threshold", cfg.threshold, "Human score split for distributions");
    add_report_options(*compare, cfg);

    auto* idf = app.add_subcommand("idf", "Build a document frequency table");
    idf->add_option("--corpus", cfg.corpus, "One document per line");
    idf->add_option("--dataset", cfg.dataset, "Count the dataset texts instead");
    idf->add_option("--idf-corpus", cfg.idf_corpus, "references or union")
        ->check(CLI::IsMember({"references", "union"}));
    idf->add_option("--out", cfg.out, "Output file")->required();
    add_backend_options(*idf, cfg);

    auto* exp = app.add_subcommand("export-distributions",
                                   "Capture backend distributions into a store file");
    exp->add_option("--dataset", cfg.dataset, "Dataset file")->required();
    exp->add_option("--out", cfg.out, "Store file to write")->required();
    add_backend_options(*exp, cfg);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) {
        reversed.pop_back();
    }
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }

    try {
        for (auto* sub : app.get_subcommands()) {
            cfg.temperature_given = sub->get_option_no_throw("--temperature") != nullptr &&
                                    sub->count("--temperature") > 0;
            cfg.vocab_given = sub->get_option_no_throw("--vocab-size") != nullptr &&
                              sub->count("--vocab-size") > 0;
        }
        if (score->parsed()) return cmd_score(cfg, out, err);
        if (evaluate->parsed()) return cmd_evaluate(cfg, out, err);
        if (sweep->parsed()) return cmd_sweep(cfg, out, err);
        if (compare->parsed()) return cmd_compare(cfg, out, err);
        if (idf->parsed()) return cmd_idf(cfg, out, err);
        if (exp->parsed()) return cmd_export(cfg, out, err);
    } catch (const ScoringError& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

} // namespace infolm::cli
