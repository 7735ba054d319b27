#pragma once

#include "abf/abc.hpp"
#include "abf/config.hpp"
#include "abf/evaluation.hpp"
#include "abf/fbp.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace abf {

/// Observed series of an experiment plus, for simulated designs, the
/// latent states.
struct Dataset {
    std::vector<double> y;
    std::vector<double> states;
    std::vector<std::string> dates;
    std::size_t split = 0;

    std::span<const double> train() const { return std::span<const double>(y).first(split); }
    std::span<const double> test() const { return std::span<const double>(y).subspan(split); }
};

/// Simulates the design's DGP or loads the configured returns file.
Dataset prepare_data(const ExperimentConfig& cfg);

struct AbcStage {
    std::vector<AuxFit> fits;
    std::vector<AbcPosterior> posteriors;
};

struct FbpStage {
    std::vector<FbpPosterior> posteriors;
};

// Each stage reads its inputs from, and writes its artifacts to, out_dir.
// Missing inputs raise MissingArtifactError naming the producing
// subcommand; inputs written under another config hash raise DataError.

/// Writes data.csv.
Dataset stage_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
/// Writes aux_fits.csv, abc_posterior_<rule>.csv and abc_weights_<rule>.csv.
AbcStage stage_fit_abc(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
/// Writes fbp_posterior_<rule>.csv.
FbpStage stage_fit_fbp(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
/// Writes scores_abc.csv, scores_fbp.csv and report.md.
EvalReport stage_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

using StageListener = std::function<void(std::string_view stage)>;

/// simulate, fit-abc, fit-fbp and evaluate in sequence. Each stage also
/// records its summary in manifest.json.
EvalReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                          const StageListener& listener = {});

/// Preset-specific pass/fail check on a finished report; nullopt on pass
/// or when the preset has no gate.
std::optional<std::string> acceptance_gate(const ExperimentConfig& cfg, const EvalReport& report);

/// Reads data.csv written by stage_simulate, checking the config hash.
Dataset read_dataset(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// "1.4.0"-style version of the library.
std::string_view library_version();

}  // namespace abf
