#pragma once

#include "abf/scoring.hpp"

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace abf {

/// Type-7 empirical quantile (linear interpolation of order statistics).
/// DomainError for empty data or p outside [0, 1].
double empirical_quantile(std::span<const double> data, double p);

/// Lower-tail regions for levels <= 0.5, upper-tail otherwise, thresholds at
/// the training-sample quantiles. DomainError for an empty series.
std::vector<RegionSpec> cls_thresholds(std::span<const double> y_train, std::span<const double> levels);

/// Resolves named rules into evaluable ones, CLS thresholds from y_train.
std::vector<ScoringRule> resolve_rules(const std::vector<RuleSpec>& specs, std::span<const double> y_train);

/// Mean score per rule over the hold-out; DomainError on misaligned lengths.
std::vector<double> average_score_row(const std::vector<PredictiveMixture>& predictives,
                                      std::span<const double> y_test, const std::vector<ScoringRule>& rules,
                                      std::size_t workers = 1);

/// Rows: focusing rules (optionally a reference row), columns: evaluation rules.
struct ScoreMatrix {
    std::string method;
    std::vector<std::string> row_labels;
    std::vector<std::string> column_labels;
    std::vector<std::vector<double>> entries;
    /// Ordered key/value pairs such as T, split, seed, config_hash.
    std::vector<std::pair<std::string, std::string>> metadata;

    /// DomainError on shape mismatch or non-finite entries.
    void validate() const;
    /// "<method>-<row label>", as printed in tables.
    std::string display_row(std::size_t i) const;
};

/// Rank (1 = best, ties share the minimum rank) of the row whose label
/// matches each column. DomainError if a column has no matching row.
std::vector<std::size_t> coherence_check(const ScoreMatrix& m);

struct EvalReport {
    std::vector<ScoreMatrix> matrices;
    std::vector<std::vector<std::size_t>> coherence;
    std::vector<std::string> notes;
};

EvalReport make_report(std::vector<ScoreMatrix> matrices);

void write_score_csv(const ScoreMatrix& m, std::ostream& out);
/// Markdown tables, 4 decimals, column maxima in bold, ranks listed below.
std::string render_markdown(const EvalReport& report);

enum class ReportFormat { csv, markdown };

/// Writes scores_<method>.csv per matrix or report.md into `dir`.
/// Returns the written paths; std::runtime_error on I/O failure.
std::vector<std::filesystem::path> render_report(const EvalReport& report, ReportFormat format,
                                                 const std::filesystem::path& dir);

/// Parses a file written by write_score_csv.
ScoreMatrix read_score_csv(const std::filesystem::path& path);

}  // namespace abf
