#include "abf/data.hpp"

#include "abf/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

namespace abf {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

}  // namespace

ReturnsSchema parse_returns_schema(std::string_view name) {
    if (name == "prices") {
        return ReturnsSchema::prices;
    }
    if (name == "returns") {
        return ReturnsSchema::returns;
    }
    throw ConfigError("unknown returns schema '" + std::string(name) + "' (expected prices or returns)");
}

bool date_key(std::string_view text, double& key) {
    if (text.size() == 10 && (text[4] == '-' || text[4] == '/') && text[7] == text[4]) {
        const auto y = text.substr(0, 4);
        const auto m = text.substr(5, 2);
        const auto d = text.substr(8, 2);
        if (all_digits(y) && all_digits(m) && all_digits(d)) {
            key = std::stod(std::string(y)) * 1e4 + std::stod(std::string(m)) * 1e2 + std::stod(std::string(d));
            return true;
        }
        return false;
    }
    if (text.size() == 8 && all_digits(text)) {
        key = std::stod(std::string(text));
        return true;
    }
    double v = 0.0;
    if (parse_number(std::string(text), v)) {
        key = v;
        return true;
    }
    return false;
}

ReturnsData load_returns(const std::filesystem::path& path, ReturnsSchema schema, double scaling) {
    if (!(scaling > 0.0) || !std::isfinite(scaling)) {
        throw DomainError("return scaling must be positive and finite");
    }
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open returns file " + path.string());
    }
    std::string line;
    std::size_t row = 0;
    bool header = false;
    std::vector<std::string> dates;
    std::vector<double> values;
    double last_key = 0.0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty() || line[0] == '#') {
            continue;
        }
        if (!header) {
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError("expected two comma-separated columns", row);
        }
        const auto date = trim(line.substr(0, comma));
        auto rest = line.substr(comma + 1);
        if (const auto extra = rest.find(','); extra != std::string::npos) {
            rest = rest.substr(0, extra);
        }
        const auto cell = trim(rest);
        double key = 0.0;
        if (!date_key(date, key)) {
            throw DataError("unreadable date '" + date + "'", row);
        }
        if (!dates.empty() && !(key > last_key)) {
            throw DataError("dates must be strictly increasing ('" + date + "' after '" + dates.back() + "')", row);
        }
        last_key = key;
        double v = 0.0;
        if (!parse_number(cell, v)) {
            throw DataError("non-numeric value '" + cell + "'", row);
        }
        if (schema == ReturnsSchema::prices && !(v > 0.0)) {
            throw DataError("prices must be positive", row);
        }
        dates.push_back(date);
        values.push_back(v);
    }
    if (!header) {
        throw DataError("returns file " + path.string() + " has no header");
    }

    ReturnsData out;
    if (schema == ReturnsSchema::prices) {
        if (values.size() < 2) {
            throw DataError("need at least two prices to form a return");
        }
        out.dates.assign(dates.begin() + 1, dates.end());
        out.returns.reserve(values.size() - 1);
        for (std::size_t i = 1; i < values.size(); ++i) {
            out.returns.push_back(scaling * std::log(values[i] / values[i - 1]));
        }
    } else {
        if (values.empty()) {
            throw DataError("returns file has no data rows");
        }
        out.dates = std::move(dates);
        out.returns.reserve(values.size());
        for (double v : values) {
            out.returns.push_back(scaling * v);
        }
    }
    return out;
}

}  // namespace abf
