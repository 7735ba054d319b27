#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace abf {

enum class ReturnsSchema { prices, returns };

ReturnsSchema parse_returns_schema(std::string_view name);

struct ReturnsData {
    std::vector<std::string> dates;
    std::vector<double> returns;
};

/// Reads a headed CSV with columns (date, price) or (date, return). Prices
/// become scaling * log(p_t / p_{t-1}); returns are multiplied by scaling.
/// DataError with the 1-based file row for unreadable cells, non-increasing
/// dates or non-positive prices.
ReturnsData load_returns(const std::filesystem::path& path, ReturnsSchema schema, double scaling);

/// Sort key for ISO (YYYY-MM-DD, YYYY/MM/DD, YYYYMMDD) or plain numeric
/// dates; false if the text is neither.
bool date_key(std::string_view text, double& key);

}  // namespace abf
