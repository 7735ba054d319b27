#include "abf/experiment.hpp"

#include "abf/data.hpp"
#include "abf/error.hpp"
#include "abf/parallel.hpp"
#include "abf/particle.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef ABF_VERSION
#define ABF_VERSION "0.0.0"
#endif

namespace abf {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

enum class Stream : std::uint64_t { data = 1, abc = 2, filter = 3 };

RngStream base_stream(const ExperimentConfig& cfg, Stream which) {
    switch (which) {
        case Stream::data:
            return RngStream(cfg.seed, stream_id(StreamPurpose::data));
        case Stream::abc:
            return RngStream(cfg.seed, stream_id(StreamPurpose::abc_draw));
        case Stream::filter:
            return RngStream(cfg.seed, stream_id(StreamPurpose::filter));
    }
    return RngStream(cfg.seed, 0);
}

RngStream mcmc_stream(const ExperimentConfig& cfg, const std::string& label) {
    return RngStream(cfg.seed, stream_id(StreamPurpose::mcmc, fnv1a(label)));
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    return cells;
}

double cell_number(const std::string& cell, const fs::path& path, std::size_t row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) {
            throw std::invalid_argument("trailing");
        }
        return v;
    } catch (const std::exception&) {
        throw DataError(path.filename().string() + ": non-numeric cell '" + cell + "'", row);
    }
}

// Artifact body after the comment block; checks the config hash line.
struct Artifact {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_numbers;

    std::string meta_value(const std::string& key) const {
        for (const auto& [k, v] : meta) {
            if (k == key) {
                return v;
            }
        }
        return {};
    }
};

Artifact read_artifact(const fs::path& path, const std::string& expected_hash, std::string_view producer) {
    std::ifstream in(path);
    if (!in) {
        throw MissingArtifactError("missing artifact " + path.string() + "; run `abf " + std::string(producer) +
                                   "` with the same config first");
    }
    Artifact a;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                a.meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            }
            continue;
        }
        if (a.header.empty()) {
            a.header = split_cells(line);
            continue;
        }
        a.rows.push_back(split_cells(line));
        a.row_numbers.push_back(row);
        if (a.rows.back().size() != a.header.size()) {
            throw DataError(path.filename().string() + ": wrong number of cells", row);
        }
    }
    const auto hash = a.meta_value("config_hash");
    if (hash != expected_hash) {
        throw DataError(path.filename().string() + " was written under config hash '" + hash +
                        "' but the current config hashes to '" + expected_hash + "'; rerun `abf " +
                        std::string(producer) + "`");
    }
    return a;
}

std::size_t resolve_split(const ExperimentConfig& cfg, std::size_t n) {
    const std::size_t split = cfg.holdout > 0 ? (cfg.holdout < n ? n - cfg.holdout : 0) : cfg.split;
    if (split < 100 || split >= n) {
        throw ConfigError("training sample must have at least 100 observations and leave a non-empty hold-out (n=" +
                          std::to_string(n) + ", split=" + std::to_string(split) + ")");
    }
    return split;
}

std::vector<ScoringRule> focus_rules(const ExperimentConfig& cfg, const Dataset& data) {
    return resolve_rules(cfg.rules, data.train());
}

fs::path posterior_path(const fs::path& dir, std::string_view kind, const std::string& label) {
    return dir / (std::string(kind) + "_" + label + ".csv");
}

// manifest.json sections are replaced stage by stage.
void update_manifest(const ExperimentConfig& cfg, const fs::path& out_dir, const std::string& section,
                     ordered_json value) {
    const auto path = out_dir / "manifest.json";
    ordered_json manifest;
    if (std::ifstream in(path); in) {
        try {
            manifest = ordered_json::parse(in);
        } catch (const std::exception&) {
            manifest = ordered_json::object();
        }
        if (!manifest.is_object() || manifest.value("config_hash", std::string{}) != cfg.hash()) {
            manifest = ordered_json::object();
        }
    }
    manifest["tool"] = "abf";
    manifest["version"] = std::string(library_version());
    manifest["config_hash"] = cfg.hash();
    manifest["seed"] = cfg.seed;
    manifest["preset"] = cfg.preset;
    ordered_json config = ordered_json::object();
    std::istringstream lines(cfg.canonical_text());
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) {
            config[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }
    manifest["config"] = config;
    manifest[section] = std::move(value);
    auto out = open_out(path);
    out << manifest.dump(2) << '\n';
    finish(out, path);
}

std::vector<std::string> aux_names(AuxModel model) {
    std::vector<std::string> names{"beta0", "beta1", "beta2"};
    if (model == AuxModel::garch) {
        names.emplace_back("beta3");
    }
    return names;
}

AbcPosterior read_abc_posterior(const ExperimentConfig& cfg, const fs::path& out_dir, const std::string& label) {
    const auto path = posterior_path(out_dir, "abc_posterior", label);
    const auto a = read_artifact(path, cfg.hash(), "fit-abc");
    const auto names = parameter_names(cfg.ssm_model);
    if (a.header.size() != names.size() + 2 || a.header.front() != "draw" || a.header.back() != "distance") {
        throw DataError(path.filename().string() + ": unexpected header");
    }
    AbcPosterior post;
    post.rule_label = label;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        const auto& row = a.rows[r];
        post.kept_indices.push_back(static_cast<std::size_t>(cell_number(row[0], path, a.row_numbers[r])));
        SsmTheta theta;
        theta.model = cfg.ssm_model;
        for (std::size_t k = 0; k < names.size(); ++k) {
            theta.values[k] = cell_number(row[k + 1], path, a.row_numbers[r]);
        }
        post.kept_thetas.push_back(theta);
        post.kept_distances.push_back(cell_number(row.back(), path, a.row_numbers[r]));
    }
    if (post.kept_thetas.empty()) {
        throw DataError(path.filename().string() + " holds no draws");
    }
    return post;
}

FbpPosterior read_fbp_posterior(const ExperimentConfig& cfg, const fs::path& out_dir, const ScoringRule& rule) {
    const auto path = posterior_path(out_dir, "fbp_posterior", rule.label());
    const auto a = read_artifact(path, cfg.hash(), "fit-fbp");
    const auto names = aux_names(cfg.aux_model);
    if (a.header.size() != names.size() + 1 || a.header.front() != "draw") {
        throw DataError(path.filename().string() + ": unexpected header");
    }
    FbpPosterior post;
    post.model = cfg.aux_model;
    post.rule = rule;
    post.w_used = cell_number(a.meta_value("w"), path, 0);
    post.acceptance_rate = cell_number(a.meta_value("acceptance_rate"), path, 0);
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        std::vector<double> beta;
        for (std::size_t k = 1; k < a.rows[r].size(); ++k) {
            beta.push_back(cell_number(a.rows[r][k], path, a.row_numbers[r]));
        }
        post.draws.push_back(params_from_vector(cfg.aux_model, beta));
    }
    if (post.draws.empty()) {
        throw DataError(path.filename().string() + " holds no draws");
    }
    return post;
}

std::vector<std::string> labels_of(const std::vector<RuleSpec>& rules) {
    std::vector<std::string> out;
    for (const auto& r : rules) {
        out.push_back(r.label());
    }
    return out;
}

}  // namespace

std::string_view library_version() { return ABF_VERSION; }

Dataset prepare_data(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset data;
    if (cfg.design == Design::empirical) {
        auto returns = load_returns(cfg.data_path, parse_returns_schema(cfg.data_schema), cfg.return_scaling);
        data.y = std::move(returns.returns);
        data.dates = std::move(returns.dates);
    } else {
        RngStream rng = base_stream(cfg, Stream::data);
        auto path = cfg.design == Design::correct_sim ? simulate_sv_gaussian(cfg.dgp_sv, cfg.T, rng)
                                                      : simulate_skew_sv(cfg.dgp_skew, cfg.T, rng, cfg.fz_draws);
        data.y = std::move(path.observations);
        data.states = std::move(path.states);
    }
    data.split = resolve_split(cfg, data.y.size());
    return data;
}

Dataset stage_simulate(const ExperimentConfig& cfg, const fs::path& out_dir) {
    Dataset data = prepare_data(cfg);
    const auto path = out_dir / "data.csv";
    auto out = open_out(path);
    out << "# config_hash=" << cfg.hash() << '\n';
    out << "# design=" << to_string(cfg.design) << '\n';
    out << "# split=" << data.split << '\n';
    if (cfg.design == Design::empirical) {
        out << "t,date,y\n";
        for (std::size_t t = 0; t < data.y.size(); ++t) {
            out << t + 1 << ',' << data.dates[t] << ',' << num(data.y[t]) << '\n';
        }
    } else {
        out << "t,h,y\n";
        for (std::size_t t = 0; t < data.y.size(); ++t) {
            out << t + 1 << ',' << num(data.states[t]) << ',' << num(data.y[t]) << '\n';
        }
    }
    finish(out, path);

    ordered_json section;
    section["observations"] = data.y.size();
    section["split"] = data.split;
    section["holdout"] = data.y.size() - data.split;
    if (!data.dates.empty()) {
        section["first_date"] = data.dates.front();
        section["last_date"] = data.dates.back();
        section["source"] = cfg.data_path;
    }
    update_manifest(cfg, out_dir, "data", section);
    return data;
}

Dataset read_dataset(const ExperimentConfig& cfg, const fs::path& out_dir) {
    const auto path = out_dir / "data.csv";
    const auto a = read_artifact(path, cfg.hash(), "simulate");
    if (a.header.size() != 3 || a.header[0] != "t" || a.header[2] != "y") {
        throw DataError("data.csv: unexpected header");
    }
    Dataset data;
    const bool dated = a.header[1] == "date";
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        const auto& row = a.rows[r];
        if (dated) {
            data.dates.push_back(row[1]);
        } else {
            data.states.push_back(cell_number(row[1], path, a.row_numbers[r]));
        }
        data.y.push_back(cell_number(row[2], path, a.row_numbers[r]));
    }
    data.split = resolve_split(cfg, data.y.size());
    return data;
}

AbcStage stage_fit_abc(const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const Dataset data = read_dataset(cfg, out_dir);
    const auto rules = focus_rules(cfg, data);
    const auto y_obs = data.train();

    AbcStage stage;
    stage.fits.resize(rules.size(), AuxFit{ArchParams{}, ScoringRule::log_score(), 0.0, 0.0, 0});
    parallel_for(rules.size(), cfg.workers,
                 [&](std::size_t r) { stage.fits[r] = fit_auxiliary(rules[r], cfg.aux_model, y_obs); });

    AbcConfig abc;
    abc.n_draws = cfg.n_draws;
    abc.keep = cfg.keep;
    abc.quantile = cfg.keep_quantile;
    abc.workers = cfg.workers;
    stage.posteriors = run_abc(prior_for(cfg), stage.fits, y_obs, abc, base_stream(cfg, Stream::abc));

    const auto hash = cfg.hash();
    {
        const auto path = out_dir / "aux_fits.csv";
        auto out = open_out(path);
        out << "# config_hash=" << hash << '\n';
        out << "rule,model";
        for (const auto& n : aux_names(cfg.aux_model)) {
            out << ',' << n;
        }
        out << ",criterion,gradient_norm,evaluations\n";
        for (const auto& fit : stage.fits) {
            out << fit.rule.label() << ',' << to_string(cfg.aux_model);
            for (double b : to_vector(fit.params)) {
                out << ',' << num(b);
            }
            out << ',' << num(fit.criterion_value) << ',' << num(fit.gradient_norm) << ',' << fit.evaluations << '\n';
        }
        finish(out, path);
    }

    const auto names = parameter_names(cfg.ssm_model);
    ordered_json section = ordered_json::array();
    for (std::size_t r = 0; r < rules.size(); ++r) {
        const auto& post = stage.posteriors[r];
        const auto label = rules[r].label();
        {
            const auto path = posterior_path(out_dir, "abc_posterior", label);
            auto out = open_out(path);
            out << "# config_hash=" << hash << '\n';
            out << "# rule=" << label << '\n';
            out << "# n_draws=" << cfg.n_draws << '\n';
            out << "# keep=" << post.kept_indices.size() << '\n';
            out << "draw";
            for (const auto& n : names) {
                out << ',' << n;
            }
            out << ",distance\n";
            for (std::size_t i = 0; i < post.kept_thetas.size(); ++i) {
                out << post.kept_indices[i];
                for (std::size_t k = 0; k < names.size(); ++k) {
                    out << ',' << num(post.kept_thetas[i].values[k]);
                }
                out << ',' << num(post.kept_distances[i]) << '\n';
            }
            finish(out, path);
        }
        {
            const auto path = posterior_path(out_dir, "abc_weights", label);
            auto out = open_out(path);
            out << "# config_hash=" << hash << '\n';
            const auto& w = post.weight_matrix;
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                out << (c ? "," : "") << "w" << c;
            }
            out << '\n';
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                for (Eigen::Index c = 0; c < w.cols(); ++c) {
                    out << (c ? "," : "") << num(w(i, c));
                }
                out << '\n';
            }
            finish(out, path);
        }
        const auto degenerate = static_cast<std::size_t>(
            std::count_if(post.distances.begin(), post.distances.end(), [](double d) { return !std::isfinite(d); }));
        ordered_json entry;
        entry["rule"] = label;
        entry["beta_hat"] = to_vector(stage.fits[r].params);
        entry["criterion"] = stage.fits[r].criterion_value;
        entry["gradient_norm"] = stage.fits[r].gradient_norm;
        entry["kept"] = post.kept_indices.size();
        entry["max_kept_distance"] = post.kept_distances.back();
        entry["degenerate_draws"] = degenerate;
        section.push_back(entry);
    }
    update_manifest(cfg, out_dir, "abc", section);
    return stage;
}

FbpStage stage_fit_fbp(const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const Dataset data = read_dataset(cfg, out_dir);
    const auto rules = focus_rules(cfg, data);
    const auto y = data.train();

    FbpConfig fbp;
    fbp.n_draws = cfg.fbp_draws;
    fbp.burn_in = cfg.burn_in;
    fbp.thin = cfg.thin;

    const ScoringRule ls = ScoringRule::log_score();
    const bool need_base = std::any_of(rules.begin(), rules.end(), [](const ScoringRule& r) {
        return r.kind() == RuleKind::crps || r.kind() == RuleKind::interval;
    });
    std::optional<FbpPosterior> base;
    if (need_base) {
        RngStream rng = mcmc_stream(cfg, ls.label());
        base = run_rwmh(ls, 1.0, y, cfg.aux_model, fbp, rng);
    }

    std::vector<double> w(rules.size(), 1.0);
    for (std::size_t r = 0; r < rules.size(); ++r) {
        if (base) {
            w[r] = estimate_w(rules[r], y, *base);
        }
    }

    FbpStage stage;
    stage.posteriors.resize(rules.size());
    parallel_for(rules.size(), cfg.workers, [&](std::size_t r) {
        if (base && rules[r].kind() == RuleKind::ls && w[r] == 1.0) {
            stage.posteriors[r] = *base;
            return;
        }
        RngStream rng = mcmc_stream(cfg, rules[r].label());
        stage.posteriors[r] = run_rwmh(rules[r], w[r], y, cfg.aux_model, fbp, rng);
    });

    const auto hash = cfg.hash();
    const auto names = aux_names(cfg.aux_model);
    ordered_json section = ordered_json::array();
    for (std::size_t r = 0; r < rules.size(); ++r) {
        const auto& post = stage.posteriors[r];
        const auto label = rules[r].label();
        const auto path = posterior_path(out_dir, "fbp_posterior", label);
        auto out = open_out(path);
        out << "# config_hash=" << hash << '\n';
        out << "# rule=" << label << '\n';
        out << "# w=" << num(post.w_used) << '\n';
        out << "# acceptance_rate=" << num(post.acceptance_rate) << '\n';
        out << "draw";
        for (const auto& n : names) {
            out << ',' << n;
        }
        out << '\n';
        for (std::size_t j = 0; j < post.draws.size(); ++j) {
            out << j;
            for (double b : to_vector(post.draws[j])) {
                out << ',' << num(b);
            }
            out << '\n';
        }
        finish(out, path);

        ordered_json entry;
        entry["rule"] = label;
        entry["w"] = post.w_used;
        entry["acceptance_rate"] = post.acceptance_rate;
        entry["draws"] = post.draws.size();
        entry["warnings"] = post.warnings;
        section.push_back(entry);
    }
    update_manifest(cfg, out_dir, "fbp", section);
    return stage;
}

EvalReport stage_evaluate(const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const Dataset data = read_dataset(cfg, out_dir);
    const auto rules = focus_rules(cfg, data);
    const auto eval_rules = resolve_rules(cfg.evaluation_rules(), data.train());
    const auto focus_labels = labels_of(cfg.rules);
    const auto eval_labels = labels_of(cfg.evaluation_rules());
    const auto y_test = data.test();

    auto base_meta = [&](const std::string& method) {
        std::vector<std::pair<std::string, std::string>> meta{
            {"config_hash", cfg.hash()},
            {"method", method},
            {"design", std::string(to_string(cfg.design))},
            {"T", std::to_string(data.y.size())},
            {"split", std::to_string(data.split)},
            {"seed", std::to_string(cfg.seed)},
        };
        return meta;
    };

    std::vector<ScoreMatrix> matrices;
    std::vector<std::string> notes;
    ordered_json section;

    if (cfg.run_abc) {
        std::vector<AbcPosterior> posts;
        for (const auto& label : focus_labels) {
            posts.push_back(read_abc_posterior(cfg, out_dir, label));
        }
        FilterConfig filter;
        filter.n_particles = cfg.n_particles;
        filter.state_draws_per_theta = cfg.state_draws;
        filter.workers = cfg.workers;
        const auto evals =
            rolling_predictive_eval(posts, data.y, data.split, filter, eval_rules, base_stream(cfg, Stream::filter));
        ScoreMatrix m;
        m.method = "ABC";
        m.row_labels = focus_labels;
        m.column_labels = eval_labels;
        m.metadata = base_meta("ABC");
        m.metadata.emplace_back("n_draws", std::to_string(cfg.n_draws));
        m.metadata.emplace_back("kept", std::to_string(posts.front().kept_thetas.size()));
        m.metadata.emplace_back("n_particles", std::to_string(cfg.n_particles));
        m.metadata.emplace_back("state_draws", std::to_string(cfg.state_draws));
        ordered_json dropped = ordered_json::object();
        for (std::size_t r = 0; r < evals.size(); ++r) {
            m.entries.push_back(evals[r].averages);
            dropped[focus_labels[r]] = evals[r].dropped_thetas;
            notes.insert(notes.end(), evals[r].warnings.begin(), evals[r].warnings.end());
        }
        section["abc_dropped_draws"] = dropped;
        matrices.push_back(std::move(m));
    }

    if (cfg.run_fbp) {
        ScoreMatrix m;
        m.method = "FBP";
        m.row_labels = focus_labels;
        m.column_labels = eval_labels;
        m.metadata = base_meta("FBP");
        m.metadata.emplace_back("draws", std::to_string(cfg.fbp_draws));
        ordered_json scales = ordered_json::object();
        for (const auto& rule : rules) {
            const auto post = read_fbp_posterior(cfg, out_dir, rule);
            const auto mixtures = fbp_holdout_predictives(post, data.y, data.split, cfg.workers);
            m.entries.push_back(average_score_row(mixtures, y_test, eval_rules, cfg.workers));
            scales[rule.label()] = post.w_used;
            if (post.acceptance_rate < 0.05 || post.acceptance_rate > 0.7) {
                notes.push_back("FBP-" + rule.label() + ": acceptance rate " + num(post.acceptance_rate) +
                                " outside [0.05, 0.7]");
            }
        }
        std::string w_note = "FBP scale w:";
        for (const auto& [label, value] : scales.items()) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " %s=%.4f", label.c_str(), value.get<double>());
            w_note += buf;
        }
        notes.push_back(w_note);
        section["fbp_w"] = scales;
        matrices.push_back(std::move(m));
    }

    EvalReport report = make_report(std::move(matrices));
    report.notes = notes;
    render_report(report, ReportFormat::csv, out_dir);
    render_report(report, ReportFormat::markdown, out_dir);

    ordered_json coherence = ordered_json::object();
    for (std::size_t k = 0; k < report.matrices.size(); ++k) {
        ordered_json ranks = ordered_json::object();
        for (std::size_t c = 0; c < report.matrices[k].column_labels.size(); ++c) {
            ranks[report.matrices[k].column_labels[c]] = report.coherence[k][c];
        }
        coherence[report.matrices[k].method] = ranks;
    }
    section["coherence_rank"] = coherence;
    section["warnings"] = notes;
    const auto gate = acceptance_gate(cfg, report);
    section["gate"] = gate ? *gate : std::string("pass");
    update_manifest(cfg, out_dir, "evaluation", section);
    return report;
}

EvalReport run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, const StageListener& listener) {
    cfg.validate();
    auto enter = [&](std::string_view stage) {
        if (listener) {
            listener(stage);
        }
    };
    enter("simulate");
    stage_simulate(cfg, out_dir);
    if (cfg.run_abc) {
        enter("fit-abc");
        stage_fit_abc(cfg, out_dir);
    }
    if (cfg.run_fbp) {
        enter("fit-fbp");
        stage_fit_fbp(cfg, out_dir);
    }
    enter("evaluate");
    return stage_evaluate(cfg, out_dir);
}

std::optional<std::string> acceptance_gate(const ExperimentConfig& cfg, const EvalReport& report) {
    const auto base = cfg.preset.ends_with("-full") ? cfg.preset.substr(0, cfg.preset.size() - 5) : cfg.preset;
    if (base == "table1-desk" || base == "table1") {
        for (const auto& m : report.matrices) {
            if (m.method != "ABC") {
                continue;
            }
            const auto it = std::find(m.column_labels.begin(), m.column_labels.end(), "LS");
            if (it == m.column_labels.end()) {
                return "ABC matrix has no LS column";
            }
            const auto c = static_cast<std::size_t>(it - m.column_labels.begin());
            double lo = m.entries.front()[c];
            double hi = lo;
            for (const auto& row : m.entries) {
                lo = std::min(lo, row[c]);
                hi = std::max(hi, row[c]);
            }
            if (!(hi - lo < 0.05)) {
                return "ABC LS spread " + num(hi - lo) + " is not below 0.05";
            }
        }
        return std::nullopt;
    }
    if (base == "table2-desk" || base == "table2") {
        for (std::size_t k = 0; k < report.matrices.size(); ++k) {
            const auto& ranks = report.coherence[k];
            const auto good = static_cast<std::size_t>(
                std::count_if(ranks.begin(), ranks.end(), [](std::size_t r) { return r <= 2; }));
            const std::size_t needed = (5 * ranks.size() + 6) / 7;
            if (good < needed) {
                return report.matrices[k].method + " matrix: diagonal rank <= 2 in " + std::to_string(good) + " of " +
                       std::to_string(ranks.size()) + " columns (need " + std::to_string(needed) + ")";
            }
        }
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace abf
