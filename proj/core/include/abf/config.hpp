#pragma once

#include "abf/abc.hpp"
#include "abf/auxiliary.hpp"
#include "abf/models.hpp"
#include "abf/scoring.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace abf {

inline constexpr int kConfigSchemaVersion = 1;

enum class Design { correct_sim, misspec_sim, empirical };

std::string_view to_string(Design design);
Design parse_design(std::string_view name);

/// Flat key = value experiment description. Every key has a default; see
/// canonical_text() for the full list.
struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::string preset;
    Design design = Design::correct_sim;
    SsmModel ssm_model = SsmModel::sv_gaussian;
    AuxModel aux_model = AuxModel::garch;
    std::vector<RuleSpec> rules = default_rule_specs();
    /// Empty means the focusing rules.
    std::vector<RuleSpec> eval_rules;
    bool run_abc = true;
    bool run_fbp = true;

    std::size_t T = 4000;
    std::size_t split = 2000;
    /// When > 0, split = series length - holdout (empirical design).
    std::size_t holdout = 0;

    std::size_t n_draws = 200000;
    std::optional<std::size_t> keep = 100;
    std::optional<double> keep_quantile;

    std::size_t n_particles = 200;
    std::size_t state_draws = 5;

    std::size_t fbp_draws = 200;
    std::size_t burn_in = 10000;
    std::size_t thin = 5;

    std::uint64_t seed = 1;
    std::size_t workers = 1;

    std::string data_path;
    std::string data_schema = "prices";
    double return_scaling = 100.0;
    std::size_t fz_draws = 100000;

    SvGaussianParams dgp_sv{0.95, 0.3, 0.0009, -1.3};
    SkewSvParams dgp_skew{0.9, -0.4581, 0.4173, -5.0};

    /// Per-parameter prior overrides keyed by parameter name.
    std::map<std::string, PriorMarginal> prior_overrides;

    /// Sets one key; ConfigError for unknown keys or malformed values.
    void set(std::string_view key, std::string_view value);
    /// ConfigError when invariants fail (split < T, positive counts, ...).
    void validate() const;

    const std::vector<RuleSpec>& evaluation_rules() const { return eval_rules.empty() ? rules : eval_rules; }

    /// All keys except workers, one "key = value" line each, in fixed order.
    std::string canonical_text() const;
    /// 16 hex digits of FNV-1a over canonical_text().
    std::string hash() const;
};

/// Applies "key = value" lines; '#' starts a comment. ConfigError reports
/// the line number.
void apply_config_text(ExperimentConfig& cfg, std::string_view text);
/// ConfigError if the file cannot be read.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// ConfigError listing the presets for unknown names.
ExperimentConfig preset_config(std::string_view name);

/// Design default prior with overrides applied.
PriorSpec prior_for(const ExperimentConfig& cfg);

}  // namespace abf
