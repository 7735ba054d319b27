#include "abf/config.hpp"

#include "abf/error.hpp"
#include "abf/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace abf {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view key, std::string_view value) {
    const std::string s(trim(value));
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + s + "'");
    }
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
    const auto s = trim(value);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                          std::string(s) + "'");
    }
    return v;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

bool parse_bool(std::string_view key, std::string_view value) {
    const auto s = trim(value);
    if (s == "true" || s == "1" || s == "yes") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no") {
        return false;
    }
    throw ConfigError("config key '" + std::string(key) + "': expected true or false");
}

std::vector<RuleSpec> parse_rules(std::string_view value) {
    std::vector<RuleSpec> out;
    std::string item;
    std::stringstream ss{std::string(value)};
    while (std::getline(ss, item, ',')) {
        const auto name = trim(item);
        if (!name.empty()) {
            out.push_back(RuleSpec::parse(name));
        }
    }
    return out;
}

std::string rules_text(const std::vector<RuleSpec>& rules) {
    std::string out;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        out += (i ? "," : "") + rules[i].label();
    }
    return out;
}

// "uniform(a,b)", "normal(mean,variance)" or "point(v)".
PriorMarginal parse_marginal(std::string_view name, std::string_view value) {
    const auto v = trim(value);
    const auto open = v.find('(');
    if (open == std::string_view::npos || v.back() != ')') {
        throw ConfigError("prior for '" + std::string(name) + "' must look like uniform(a,b), normal(m,v) or point(x)");
    }
    const auto kind = trim(v.substr(0, open));
    const auto args = v.substr(open + 1, v.size() - open - 2);
    std::vector<double> nums;
    std::string item;
    std::stringstream ss{std::string(args)};
    while (std::getline(ss, item, ',')) {
        nums.push_back(parse_double(name, item));
    }
    if (kind == "uniform" && nums.size() == 2) {
        return PriorMarginal::uniform(std::string(name), nums[0], nums[1]);
    }
    if (kind == "normal" && nums.size() == 2) {
        return PriorMarginal::normal(std::string(name), nums[0], nums[1]);
    }
    if (kind == "point" && nums.size() == 1) {
        return PriorMarginal::point(std::string(name), nums[0]);
    }
    throw ConfigError("prior for '" + std::string(name) + "' must look like uniform(a,b), normal(m,v) or point(x)");
}

std::string marginal_text(const PriorMarginal& m) {
    switch (m.kind) {
        case PriorMarginal::Kind::uniform:
            return "uniform(" + fmt(m.a) + "," + fmt(m.b) + ")";
        case PriorMarginal::Kind::normal:
            return "normal(" + fmt(m.a) + "," + fmt(m.b) + ")";
        case PriorMarginal::Kind::point:
            return "point(" + fmt(m.a) + ")";
    }
    return {};
}

}  // namespace

std::string_view to_string(Design design) {
    switch (design) {
        case Design::correct_sim:
            return "correct-sim";
        case Design::misspec_sim:
            return "misspec-sim";
        case Design::empirical:
            return "empirical";
    }
    return "?";
}

Design parse_design(std::string_view name) {
    if (name == "correct-sim") {
        return Design::correct_sim;
    }
    if (name == "misspec-sim") {
        return Design::misspec_sim;
    }
    if (name == "empirical") {
        return Design::empirical;
    }
    throw ConfigError("unknown design '" + std::string(name) + "' (expected correct-sim, misspec-sim or empirical)");
}

void ExperimentConfig::set(std::string_view key_in, std::string_view value_in) {
    const auto key = trim(key_in);
    const auto value = trim(value_in);
    const std::string v(value);
    if (key == "schema_version") {
        const auto version = parse_count(key, value);
        if (version != static_cast<std::size_t>(kConfigSchemaVersion)) {
            throw ConfigError("unsupported config schema_version " + v + " (this build reads version " +
                              std::to_string(kConfigSchemaVersion) + ")");
        }
        schema_version = kConfigSchemaVersion;
    } else if (key == "preset") {
        preset = v;
    } else if (key == "design") {
        design = parse_design(value);
    } else if (key == "ssm_model") {
        ssm_model = parse_ssm_model(value);
    } else if (key == "aux_model") {
        aux_model = parse_aux_model(value);
    } else if (key == "rules") {
        rules = parse_rules(value);
    } else if (key == "eval_rules") {
        eval_rules = parse_rules(value);
    } else if (key == "run_abc") {
        run_abc = parse_bool(key, value);
    } else if (key == "run_fbp") {
        run_fbp = parse_bool(key, value);
    } else if (key == "T") {
        T = parse_count(key, value);
    } else if (key == "split") {
        split = parse_count(key, value);
    } else if (key == "holdout") {
        holdout = parse_count(key, value);
    } else if (key == "n_draws") {
        n_draws = parse_count(key, value);
    } else if (key == "keep") {
        keep = value == "auto" ? std::nullopt : std::optional<std::size_t>(parse_count(key, value));
    } else if (key == "keep_quantile") {
        keep_quantile = value == "auto" ? std::nullopt : std::optional<double>(parse_double(key, value));
    } else if (key == "n_particles") {
        n_particles = parse_count(key, value);
    } else if (key == "state_draws") {
        state_draws = parse_count(key, value);
    } else if (key == "fbp_draws") {
        fbp_draws = parse_count(key, value);
    } else if (key == "burn_in") {
        burn_in = parse_count(key, value);
    } else if (key == "thin") {
        thin = parse_count(key, value);
    } else if (key == "seed") {
        seed = parse_u64(key, value);
    } else if (key == "workers") {
        workers = parse_count(key, value);
    } else if (key == "data_path") {
        data_path = v;
    } else if (key == "data_schema") {
        if (value != "prices" && value != "returns") {
            throw ConfigError("data_schema must be prices or returns");
        }
        data_schema = v;
    } else if (key == "return_scaling") {
        return_scaling = parse_double(key, value);
    } else if (key == "fz_draws") {
        fz_draws = parse_count(key, value);
    } else if (key == "dgp.phi") {
        dgp_sv.phi = parse_double(key, value);
    } else if (key == "dgp.sigma_alpha") {
        dgp_sv.sigma_alpha = parse_double(key, value);
    } else if (key == "dgp.mu") {
        dgp_sv.mu = parse_double(key, value);
    } else if (key == "dgp.h_bar") {
        dgp_sv.h_bar = parse_double(key, value);
    } else if (key == "dgp.skew_a") {
        dgp_skew.a = parse_double(key, value);
    } else if (key == "dgp.skew_h_bar") {
        dgp_skew.h_bar = parse_double(key, value);
    } else if (key == "dgp.skew_sigma_h") {
        dgp_skew.sigma_h = parse_double(key, value);
    } else if (key == "dgp.skew_gamma") {
        dgp_skew.gamma = parse_double(key, value);
    } else if (key.rfind("prior.", 0) == 0) {
        const std::string name(key.substr(6));
        prior_overrides.insert_or_assign(name, parse_marginal(name, value));
    } else {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
}

void ExperimentConfig::validate() const {
    if (rules.empty()) {
        throw ConfigError("config needs at least one focusing rule");
    }
    if (design != Design::empirical) {
        if (T < 100) {
            throw ConfigError("T must be at least 100");
        }
        if (holdout == 0 && (split < 100 || split >= T)) {
            throw ConfigError("split must satisfy 100 <= split < T");
        }
        if (holdout > 0 && holdout + 100 > T) {
            throw ConfigError("holdout leaves fewer than 100 training observations");
        }
    } else if (data_path.empty()) {
        throw ConfigError("the empirical design needs data_path");
    }
    if (design == Design::empirical && ssm_model != SsmModel::sv_stable) {
        throw ConfigError("the empirical design uses ssm_model = sv_stable");
    }
    if (design != Design::empirical && ssm_model != SsmModel::sv_gaussian) {
        throw ConfigError("the simulation designs use ssm_model = sv_gaussian");
    }
    if (n_draws == 0 || n_particles == 0 || state_draws == 0 || fbp_draws == 0 || thin == 0) {
        throw ConfigError("counts (n_draws, n_particles, state_draws, fbp_draws, thin) must be positive");
    }
    if (keep && (*keep == 0 || *keep > n_draws)) {
        throw ConfigError("keep must satisfy 1 <= keep <= n_draws");
    }
    if (keep_quantile && !(*keep_quantile > 0.0 && *keep_quantile <= 1.0)) {
        throw ConfigError("keep_quantile must lie in (0, 1]");
    }
    if (n_particles < 100) {
        throw ConfigError("n_particles must be at least 100");
    }
    if (fbp_draws < 100) {
        throw ConfigError("fbp_draws must be at least 100");
    }
    if (!(return_scaling > 0.0)) {
        throw ConfigError("return_scaling must be positive");
    }
    if (workers == 0) {
        throw ConfigError("workers must be at least 1");
    }
    prior_for(*this).validate();
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream out;
    out << "schema_version = " << schema_version << '\n';
    out << "preset = " << preset << '\n';
    out << "design = " << to_string(design) << '\n';
    out << "ssm_model = " << to_string(ssm_model) << '\n';
    out << "aux_model = " << to_string(aux_model) << '\n';
    out << "rules = " << rules_text(rules) << '\n';
    out << "eval_rules = " << rules_text(eval_rules) << '\n';
    out << "run_abc = " << (run_abc ? "true" : "false") << '\n';
    out << "run_fbp = " << (run_fbp ? "true" : "false") << '\n';
    out << "T = " << T << '\n';
    out << "split = " << split << '\n';
    out << "holdout = " << holdout << '\n';
    out << "n_draws = " << n_draws << '\n';
    out << "keep = " << (keep ? std::to_string(*keep) : "auto") << '\n';
    out << "keep_quantile = " << (keep_quantile ? fmt(*keep_quantile) : "auto") << '\n';
    out << "n_particles = " << n_particles << '\n';
    out << "state_draws = " << state_draws << '\n';
    out << "fbp_draws = " << fbp_draws << '\n';
    out << "burn_in = " << burn_in << '\n';
    out << "thin = " << thin << '\n';
    out << "seed = " << seed << '\n';
    out << "data_path = " << data_path << '\n';
    out << "data_schema = " << data_schema << '\n';
    out << "return_scaling = " << fmt(return_scaling) << '\n';
    out << "fz_draws = " << fz_draws << '\n';
    out << "dgp.phi = " << fmt(dgp_sv.phi) << '\n';
    out << "dgp.sigma_alpha = " << fmt(dgp_sv.sigma_alpha) << '\n';
    out << "dgp.mu = " << fmt(dgp_sv.mu) << '\n';
    out << "dgp.h_bar = " << fmt(dgp_sv.h_bar) << '\n';
    out << "dgp.skew_a = " << fmt(dgp_skew.a) << '\n';
    out << "dgp.skew_h_bar = " << fmt(dgp_skew.h_bar) << '\n';
    out << "dgp.skew_sigma_h = " << fmt(dgp_skew.sigma_h) << '\n';
    out << "dgp.skew_gamma = " << fmt(dgp_skew.gamma) << '\n';
    for (const auto& [name, m] : prior_overrides) {
        out << "prior." << name << " = " << marginal_text(m) << '\n';
    }
    return out.str();
}

std::string ExperimentConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_text())));
    return buf;
}

void apply_config_text(ExperimentConfig& cfg, std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        try {
            cfg.set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DomainError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
        if (end == text.size()) {
            break;
        }
    }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str());
}

std::vector<std::string> preset_names() {
    return {"table1-desk", "table2-desk", "table3-empirical", "table1-full", "table2-full", "table3-empirical-full"};
}

ExperimentConfig preset_config(std::string_view name) {
    ExperimentConfig cfg;
    cfg.preset = std::string(name);
    const bool full = name.ends_with("-full");
    const auto base = full ? name.substr(0, name.size() - 5) : name;
    if (base == "table1" || base == "table1-desk") {
        cfg.design = Design::correct_sim;
    } else if (base == "table2" || base == "table2-desk") {
        cfg.design = Design::misspec_sim;
    } else if (base == "table3-empirical") {
        cfg.design = Design::empirical;
        cfg.ssm_model = SsmModel::sv_stable;
        cfg.rules = {RuleSpec::parse("LS"), RuleSpec::parse("CLS10"), RuleSpec::parse("CLS20"),
                     RuleSpec::parse("CLS80"), RuleSpec::parse("CLS90")};
        cfg.holdout = 500;
        cfg.n_draws = 50000;
        cfg.keep = 50;
    } else {
        std::string list;
        for (const auto& p : preset_names()) {
            list += (list.empty() ? "" : ", ") + p;
        }
        throw ConfigError("unknown preset '" + std::string(name) + "' (available: " + list + ")");
    }
    if (name == "table1-desk" || name == "table2-desk" || name == "table3-empirical") {
        return cfg;
    }
    // Paper scale.
    cfg.n_particles = 5000;
    cfg.state_draws = 20;
    cfg.fbp_draws = 4000;
    if (cfg.design == Design::empirical) {
        cfg.n_draws = 5000000;
        cfg.keep = std::nullopt;
    } else {
        cfg.T = 20000;
        cfg.split = 10000;
        cfg.n_draws = 5000000;
        cfg.keep = std::nullopt;
    }
    return cfg;
}

PriorSpec prior_for(const ExperimentConfig& cfg) {
    PriorSpec spec;
    switch (cfg.design) {
        case Design::correct_sim:
            spec = correct_spec_prior();
            break;
        case Design::misspec_sim:
            spec = misspec_prior();
            break;
        case Design::empirical:
            spec = stable_sv_prior();
            break;
    }
    for (const auto& [name, marginal] : cfg.prior_overrides) {
        auto it = std::find_if(spec.marginals.begin(), spec.marginals.end(),
                               [&](const PriorMarginal& m) { return m.name == name; });
        if (it == spec.marginals.end()) {
            throw ConfigError("prior override for unknown parameter '" + name + "'");
        }
        *it = marginal;
    }
    return spec;
}

}  // namespace abf
