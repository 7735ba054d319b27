// abf: command-line runner for loss-based ABF and FBP experiments.

#include "abf/config.hpp"
#include "abf/error.hpp"
#include "abf/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3, kGate = 4 };

struct Common {
    std::string config_path;
    std::string preset;
    std::vector<std::string> settings;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c, bool preset_flag) {
    cmd->add_option("--config", c.config_path, "Config file with key = value lines");
    if (preset_flag) {
        cmd->add_option("--preset", c.preset, "Start from a named preset");
    }
    cmd->add_option("--set", c.settings, "Override one config key (key=value); repeatable");
    cmd->add_option("--seed", c.seed, "Master seed");
    cmd->add_option("--workers", c.workers, "Worker threads (does not change results)");
    cmd->add_option("--out-dir", c.out_dir, "Artifact directory");
}

abf::ExperimentConfig build_config(const Common& c) {
    abf::ExperimentConfig cfg = c.preset.empty() ? abf::ExperimentConfig{} : abf::preset_config(c.preset);
    if (!c.config_path.empty()) {
        abf::apply_config_file(cfg, c.config_path);
    }
    for (const auto& s : c.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw abf::ConfigError("--set expects key=value, got '" + s + "'");
        }
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (c.workers) {
        cfg.workers = *c.workers;
    }
    cfg.validate();
    return cfg;
}

std::filesystem::path out_dir_for(const Common& c, const abf::ExperimentConfig& cfg) {
    if (!c.out_dir.empty()) {
        return c.out_dir;
    }
    return std::filesystem::path("abf-out") / (cfg.preset.empty() ? std::string("run") : cfg.preset);
}

void print_report(const abf::EvalReport& report, const std::filesystem::path& dir) {
    for (std::size_t k = 0; k < report.matrices.size(); ++k) {
        const auto& m = report.matrices[k];
        std::cout << m.method << " diagonal ranks:";
        for (std::size_t c = 0; c < m.column_labels.size(); ++c) {
            std::cout << ' ' << m.column_labels[c] << '=' << report.coherence[k][c];
        }
        std::cout << '\n';
    }
    std::cout << "report: " << (dir / "report.md").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Loss-based approximate Bayesian forecasting and focused Bayesian prediction"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(abf::library_version()));

    Common simulate_opts;
    Common abc_opts;
    Common fbp_opts;
    Common eval_opts;
    Common repro_opts;

    auto* simulate = app.add_subcommand("simulate", "Simulate (or load) the data set and write data.csv");
    add_common(simulate, simulate_opts, true);
    auto* fit_abc = app.add_subcommand("fit-abc", "Fit auxiliary models and run loss-based ABC per focusing rule");
    add_common(fit_abc, abc_opts, true);
    auto* fit_fbp = app.add_subcommand("fit-fbp", "Sample the FBP generalized posteriors per focusing rule");
    add_common(fit_fbp, fbp_opts, true);
    auto* evaluate = app.add_subcommand("evaluate", "Score hold-out predictives and write the report");
    add_common(evaluate, eval_opts, true);
    auto* reproduce = app.add_subcommand("reproduce", "Run a preset end to end and apply its acceptance gate");
    add_common(reproduce, repro_opts, false);
    std::string preset_list;
    for (const auto& p : abf::preset_names()) {
        preset_list += (preset_list.empty() ? "" : ", ") + p;
    }
    reproduce->add_option("preset", repro_opts.preset, "One of: " + preset_list)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    std::string stage = "setup";
    try {
        if (simulate->parsed()) {
            const auto cfg = build_config(simulate_opts);
            stage = "simulate";
            const auto data = abf::stage_simulate(cfg, out_dir_for(simulate_opts, cfg));
            std::cout << "wrote " << data.y.size() << " observations (split " << data.split << ") to "
                      << (out_dir_for(simulate_opts, cfg) / "data.csv").string() << '\n';
        } else if (fit_abc->parsed()) {
            const auto cfg = build_config(abc_opts);
            stage = "fit-abc";
            const auto result = abf::stage_fit_abc(cfg, out_dir_for(abc_opts, cfg));
            std::cout << "ABC posteriors for " << result.posteriors.size() << " focusing rules written to "
                      << out_dir_for(abc_opts, cfg).string() << '\n';
        } else if (fit_fbp->parsed()) {
            const auto cfg = build_config(fbp_opts);
            stage = "fit-fbp";
            const auto result = abf::stage_fit_fbp(cfg, out_dir_for(fbp_opts, cfg));
            for (const auto& post : result.posteriors) {
                for (const auto& w : post.warnings) {
                    std::cerr << "warning: " << w << '\n';
                }
            }
            std::cout << "FBP posteriors for " << result.posteriors.size() << " focusing rules written to "
                      << out_dir_for(fbp_opts, cfg).string() << '\n';
        } else if (evaluate->parsed()) {
            const auto cfg = build_config(eval_opts);
            stage = "evaluate";
            const auto dir = out_dir_for(eval_opts, cfg);
            const auto report = abf::stage_evaluate(cfg, dir);
            for (const auto& n : report.notes) {
                std::cerr << "note: " << n << '\n';
            }
            print_report(report, dir);
        } else if (reproduce->parsed()) {
            const auto cfg = build_config(repro_opts);
            const auto dir = out_dir_for(repro_opts, cfg);
            if (cfg.preset.ends_with("-full")) {
                std::cerr << "warning: " << cfg.preset << " runs at paper scale and takes many hours\n";
            }
            const auto report = abf::run_experiment(cfg, dir, [&](std::string_view s) {
                stage = std::string(s);
                std::cerr << "[" << s << "]\n";
            });
            for (const auto& n : report.notes) {
                std::cerr << "note: " << n << '\n';
            }
            print_report(report, dir);
            if (const auto gate = abf::acceptance_gate(cfg, report)) {
                std::cerr << "acceptance gate failed: " << *gate << '\n';
                return kGate;
            }
        }
    } catch (const abf::ConfigError& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return kUsage;
    } catch (const abf::DataError& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return kData;
    } catch (const abf::MissingArtifactError& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return kData;
    } catch (const abf::DomainError& e) {
        std::cerr << "numerical error [" << stage << "]: " << e.what() << '\n';
        return kNumerical;
    } catch (const abf::OptimizationError& e) {
        std::cerr << "numerical error [" << stage << "]: " << e.what() << '\n';
        return kNumerical;
    } catch (const abf::LinearAlgebraError& e) {
        std::cerr << "numerical error [" << stage << "]: " << e.what() << '\n';
        return kNumerical;
    } catch (const abf::FilterDegeneracyError& e) {
        std::cerr << "numerical error [" << stage << "]: " << e.what() << '\n';
        return kNumerical;
    } catch (const abf::EstimationError& e) {
        std::cerr << "numerical error [" << stage << "]: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
