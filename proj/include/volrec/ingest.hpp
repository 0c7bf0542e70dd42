#pragma once

#include "volrec/matrix.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace volrec::ingest {

struct ReturnsTable {
    std::vector<std::string> dates;   // ISO-8601, strictly increasing
    std::vector<std::string> assets;
    Matrix values;                    // dates x assets
};

/// True for a well-formed YYYY-MM-DD calendar date.
bool is_iso_date(const std::string& s);

/// Consecutive weekdays starting at `first` (which must be a valid ISO date).
std::vector<std::string> business_days(const std::string& first, std::size_t count);

/// Reads `date,asset_1,...,asset_n`. Errors carry the 1-based line number:
/// header, ragged_row, bad_date, duplicate_date, unordered_date, bad_number,
/// nan_cell, empty.
ReturnsTable read_returns(const std::filesystem::path& path, bool demean = true);
void write_returns(const std::filesystem::path& path, const ReturnsTable& table);

struct RealizedCov {
    std::vector<Matrix> matrices;       // aligned with the returns dates
    std::vector<std::string> warnings;  // symmetrization and PSD notes
};

/// Reads either a directory of per-date `YYYY-MM-DD.csv` matrices or a long
/// file `date,i,j,value` (1-based indices, lower triangle sufficient), aligned
/// to `dates`. Missing dates are reported together in one IngestError.
RealizedCov read_realized_cov(const std::filesystem::path& path, const std::vector<std::string>& dates,
                              Eigen::Index n);
/// Long format, lower triangle, 17 significant digits.
void write_realized_cov(const std::filesystem::path& path, const std::vector<std::string>& dates,
                        const std::vector<Matrix>& matrices);

/// %.17g
std::string format_double(double v);

}  // namespace volrec::ingest
