#include "abf/evaluation.hpp"

#include "abf/error.hpp"
#include "abf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace abf {

namespace {

std::string format_number(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    if (s == "-0." + std::string(static_cast<std::size_t>(decimals), '0')) {
        s.erase(0, 1);
    }
    return s;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

}  // namespace

double empirical_quantile(std::span<const double> data, double p) {
    if (data.empty()) {
        throw DomainError("quantile of an empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("quantile level must lie in [0, 1]");
    }
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<RegionSpec> cls_thresholds(std::span<const double> y_train, std::span<const double> levels) {
    if (y_train.empty()) {
        throw DomainError("CLS thresholds need a non-empty training series");
    }
    std::vector<RegionSpec> out;
    for (const double level : levels) {
        if (!(level > 0.0 && level < 1.0)) {
            throw DomainError("CLS level must lie in (0, 1)");
        }
        out.push_back({level <= 0.5 ? TailKind::lower : TailKind::upper, empirical_quantile(y_train, level)});
    }
    return out;
}

std::vector<ScoringRule> resolve_rules(const std::vector<RuleSpec>& specs, std::span<const double> y_train) {
    std::vector<ScoringRule> out;
    out.reserve(specs.size());
    for (const auto& spec : specs) {
        switch (spec.kind) {
            case RuleKind::ls:
                out.push_back(ScoringRule::log_score());
                break;
            case RuleKind::crps:
                out.push_back(ScoringRule::crps());
                break;
            case RuleKind::interval:
                out.push_back(ScoringRule::interval(spec.level));
                break;
            case RuleKind::cls: {
                const double level = spec.level;
                const auto region = cls_thresholds(y_train, std::span<const double>(&level, 1)).front();
                out.push_back(ScoringRule::censored(region, spec.label()));
                break;
            }
        }
    }
    return out;
}

std::vector<double> average_score_row(const std::vector<PredictiveMixture>& predictives,
                                      std::span<const double> y_test, const std::vector<ScoringRule>& rules,
                                      std::size_t workers) {
    if (predictives.size() != y_test.size()) {
        throw DomainError("predictives and hold-out observations are misaligned");
    }
    if (predictives.empty()) {
        throw DomainError("average score needs a non-empty hold-out");
    }
    const std::size_t n = predictives.size();
    std::vector<double> scores(n * rules.size());
    parallel_for(n, workers, [&](std::size_t t) {
        for (std::size_t r = 0; r < rules.size(); ++r) {
            scores[t * rules.size() + r] = score_mixture(rules[r], predictives[t], y_test[t]);
        }
    });
    std::vector<double> out(rules.size(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t r = 0; r < rules.size(); ++r) {
            out[r] += scores[t * rules.size() + r];
        }
    }
    for (auto& v : out) {
        v /= static_cast<double>(n);
    }
    return out;
}

void ScoreMatrix::validate() const {
    if (entries.size() != row_labels.size()) {
        throw DomainError("score matrix has " + std::to_string(entries.size()) + " rows but " +
                          std::to_string(row_labels.size()) + " labels");
    }
    for (const auto& row : entries) {
        if (row.size() != column_labels.size()) {
            throw DomainError("score matrix row length differs from column count");
        }
        for (const double v : row) {
            if (!std::isfinite(v)) {
                throw DomainError("score matrix has a non-finite entry");
            }
        }
    }
}

std::string ScoreMatrix::display_row(std::size_t i) const {
    return method.empty() ? row_labels.at(i) : method + "-" + row_labels.at(i);
}

std::vector<std::size_t> coherence_check(const ScoreMatrix& m) {
    m.validate();
    std::vector<std::size_t> ranks;
    ranks.reserve(m.column_labels.size());
    for (std::size_t c = 0; c < m.column_labels.size(); ++c) {
        const auto it = std::find(m.row_labels.begin(), m.row_labels.end(), m.column_labels[c]);
        if (it == m.row_labels.end()) {
            throw DomainError("no focusing row matches evaluation column " + m.column_labels[c]);
        }
        const double diag = m.entries[static_cast<std::size_t>(it - m.row_labels.begin())][c];
        std::size_t better = 0;
        for (const auto& row : m.entries) {
            if (row[c] > diag) {
                ++better;
            }
        }
        ranks.push_back(better + 1);
    }
    return ranks;
}

EvalReport make_report(std::vector<ScoreMatrix> matrices) {
    EvalReport report;
    for (auto& m : matrices) {
        report.coherence.push_back(coherence_check(m));
        report.matrices.push_back(std::move(m));
    }
    return report;
}

void write_score_csv(const ScoreMatrix& m, std::ostream& out) {
    m.validate();
    for (const auto& [key, value] : m.metadata) {
        out << "# " << key << '=' << value << '\n';
    }
    out << "method,focus";
    for (const auto& c : m.column_labels) {
        out << ',' << c;
    }
    out << '\n';
    for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
        out << m.method << ',' << m.row_labels[i];
        for (const double v : m.entries[i]) {
            out << ',' << format_number(v, 10);
        }
        out << '\n';
    }
}

std::string render_markdown(const EvalReport& report) {
    std::ostringstream out;
    for (std::size_t k = 0; k < report.matrices.size(); ++k) {
        const auto& m = report.matrices[k];
        m.validate();
        out << "## " << (m.method.empty() ? "Scores" : m.method) << "\n\n";
        for (const auto& [key, value] : m.metadata) {
            out << "- " << key << ": " << value << '\n';
        }
        if (!m.metadata.empty()) {
            out << '\n';
        }
        out << "| Focus |";
        for (const auto& c : m.column_labels) {
            out << ' ' << c << " |";
        }
        out << "\n|---|";
        for (std::size_t c = 0; c < m.column_labels.size(); ++c) {
            out << "---:|";
        }
        out << '\n';
        std::vector<std::string> col_max(m.column_labels.size());
        for (std::size_t c = 0; c < m.column_labels.size(); ++c) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& row : m.entries) {
                best = std::max(best, row[c]);
            }
            col_max[c] = format_number(best, 4);
        }
        for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
            out << "| " << m.display_row(i) << " |";
            for (std::size_t c = 0; c < m.column_labels.size(); ++c) {
                const auto cell = format_number(m.entries[i][c], 4);
                out << ' ' << (cell == col_max[c] ? "**" + cell + "**" : cell) << " |";
            }
            out << '\n';
        }
        if (k < report.coherence.size()) {
            out << "\nDiagonal rank per column:";
            for (std::size_t c = 0; c < m.column_labels.size(); ++c) {
                out << ' ' << m.column_labels[c] << '=' << report.coherence[k][c];
            }
            out << '\n';
        }
        out << '\n';
    }
    if (!report.notes.empty()) {
        out << "## Notes\n\n";
        for (const auto& n : report.notes) {
            out << "- " << n << '\n';
        }
        out << '\n';
    }
    return out.str();
}

std::vector<std::filesystem::path> render_report(const EvalReport& report, ReportFormat format,
                                                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto open = [](const std::filesystem::path& path) {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        return out;
    };
    if (format == ReportFormat::csv) {
        for (const auto& m : report.matrices) {
            std::string name = m.method;
            std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
            const auto path = dir / ("scores_" + name + ".csv");
            auto out = open(path);
            write_score_csv(m, out);
            if (!out) {
                throw std::runtime_error("write failed for " + path.string());
            }
            written.push_back(path);
        }
    } else {
        const auto path = dir / "report.md";
        auto out = open(path);
        out << render_markdown(report);
        if (!out) {
            throw std::runtime_error("write failed for " + path.string());
        }
        written.push_back(path);
    }
    return written;
}

ScoreMatrix read_score_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MissingArtifactError("cannot open score file " + path.string());
    }
    ScoreMatrix m;
    std::string line;
    bool header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                m.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            }
            continue;
        }
        const auto cells = split_csv(line);
        if (!header) {
            if (cells.size() < 3 || cells[0] != "method" || cells[1] != "focus") {
                throw DataError("score file header must start with method,focus", row);
            }
            m.column_labels.assign(cells.begin() + 2, cells.end());
            header = true;
            continue;
        }
        if (cells.size() != m.column_labels.size() + 2) {
            throw DataError("score file row has the wrong number of cells", row);
        }
        m.method = cells[0];
        m.row_labels.push_back(cells[1]);
        std::vector<double> values;
        for (std::size_t c = 2; c < cells.size(); ++c) {
            try {
                values.push_back(std::stod(cells[c]));
            } catch (const std::exception&) {
                throw DataError("non-numeric score cell", row);
            }
        }
        m.entries.push_back(std::move(values));
    }
    if (!header) {
        throw DataError("score file has no header");
    }
    return m;
}

}  // namespace abf
