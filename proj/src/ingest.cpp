#include "volrec/ingest.hpp"

#include "volrec/error.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace volrec::ingest {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("unreadable", 0, path.string());
    }
    return in;
}

// Days since 1970-01-01 for a proleptic Gregorian date, and back.
long days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string civil_from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    const long y = static_cast<long>(yoe) + era * 400 + (m <= 2);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u", y, m, d);
    return buf;
}

void check_matrix(Matrix& m, const std::string& date, std::vector<std::string>& warnings) {
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8) {
        warnings.push_back(date + ": realized covariance asymmetric by " + format_double(asym) + ", symmetrized");
    }
    m = mat::symmetrize(m);
    if (mat::min_eigenvalue(m) < 0.0) {
        warnings.push_back(date + ": realized covariance is not positive semidefinite");
    }
}

Matrix read_matrix_file(const std::filesystem::path& file, Eigen::Index n) {
    auto in = open(file);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& cell : split(line)) {
            double v = 0.0;
            if (!parse_double(trim(cell), v)) {
                if (rows.empty() && row.empty()) break;  // header line
                throw IngestError("bad_number", line_no, file.string() + ": '" + cell + "'");
            }
            row.push_back(v);
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (static_cast<Eigen::Index>(rows.size()) != n) {
        throw IngestError("dimension", 0,
                          file.string() + ": expected " + std::to_string(n) + " rows, found " +
                              std::to_string(rows.size()));
    }
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != n) {
            throw IngestError("dimension", static_cast<std::size_t>(i + 1),
                              file.string() + ": expected " + std::to_string(n) + " columns");
        }
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool is_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    const int y = std::stoi(s.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
    if (m < 1 || m > 12 || d < 1) return false;
    return civil_from_days(days_from_civil(y, m, d)) == s;
}

std::vector<std::string> business_days(const std::string& first, std::size_t count) {
    if (!is_iso_date(first)) {
        throw InvalidInput("business_days: '" + first + "' is not an ISO date");
    }
    long z = days_from_civil(std::stoi(first.substr(0, 4)), static_cast<unsigned>(std::stoi(first.substr(5, 2))),
                             static_cast<unsigned>(std::stoi(first.substr(8, 2))));
    std::vector<std::string> out;
    out.reserve(count);
    while (out.size() < count) {
        const long weekday = ((z % 7) + 7 + 3) % 7;  // 0 = Monday
        if (weekday < 5) out.push_back(civil_from_days(z));
        ++z;
    }
    return out;
}

ReturnsTable read_returns(const std::filesystem::path& path, bool demean) {
    auto in = open(path);
    ReturnsTable t;
    std::string line;
    if (!std::getline(in, line)) {
        throw IngestError("empty", 0, path.string());
    }
    auto header = split(trim(line));
    if (header.size() < 2 || trim(header[0]) != "date") {
        throw IngestError("header", 1, "expected 'date,asset_1,...'");
    }
    for (std::size_t k = 1; k < header.size(); ++k) t.assets.push_back(trim(header[k]));
    const std::size_t n = t.assets.size();

    std::vector<double> cells;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != n + 1) {
            throw IngestError("ragged_row", line_no,
                              "expected " + std::to_string(n + 1) + " fields, found " + std::to_string(fields.size()));
        }
        const std::string date = trim(fields[0]);
        if (!is_iso_date(date)) {
            throw IngestError("bad_date", line_no, "'" + date + "'");
        }
        if (!seen.insert(date).second) {
            throw IngestError("duplicate_date", line_no, date);
        }
        if (!t.dates.empty() && date < t.dates.back()) {
            throw IngestError("unordered_date", line_no, date + " follows " + t.dates.back());
        }
        for (std::size_t k = 1; k <= n; ++k) {
            const std::string cell = trim(fields[k]);
            double v = 0.0;
            if (!parse_double(cell, v)) {
                throw IngestError(cell.empty() ? "nan_cell" : "bad_number", line_no, "column " + t.assets[k - 1]);
            }
            if (!std::isfinite(v)) {
                throw IngestError("nan_cell", line_no, "column " + t.assets[k - 1]);
            }
            cells.push_back(v);
        }
        t.dates.push_back(date);
    }
    if (t.dates.empty()) {
        throw IngestError("empty", 0, path.string() + " has no data rows");
    }
    t.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cells.data(), static_cast<Eigen::Index>(t.dates.size()), static_cast<Eigen::Index>(n));
    if (demean) {
        t.values.rowwise() -= t.values.colwise().mean();
    }
    return t;
}

void write_returns(const std::filesystem::path& path, const ReturnsTable& table) {
    std::ofstream out(path);
    if (!out) {
        throw IngestError("unwritable", 0, path.string());
    }
    out << "date";
    for (const auto& a : table.assets) out << ',' << a;
    out << '\n';
    for (Eigen::Index t = 0; t < table.values.rows(); ++t) {
        out << table.dates[static_cast<std::size_t>(t)];
        for (Eigen::Index j = 0; j < table.values.cols(); ++j) out << ',' << format_double(table.values(t, j));
        out << '\n';
    }
}

RealizedCov read_realized_cov(const std::filesystem::path& path, const std::vector<std::string>& dates,
                              Eigen::Index n) {
    RealizedCov out;
    std::vector<std::string> missing;
    if (std::filesystem::is_directory(path)) {
        for (const auto& d : dates) {
            const auto file = path / (d + ".csv");
            if (!std::filesystem::exists(file)) {
                missing.push_back(d);
                continue;
            }
            out.matrices.push_back(read_matrix_file(file, n));
        }
    } else {
        auto in = open(path);
        std::map<std::string, Matrix> by_date;
        std::map<std::string, std::vector<bool>> filled;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = trim(line);
            if (line.empty()) continue;
            const auto f = split(line);
            if (f.size() != 4) {
                throw IngestError("ragged_row", line_no, "expected date,i,j,value");
            }
            if (line_no == 1 && trim(f[0]) == "date") continue;
            const std::string date = trim(f[0]);
            double di = 0.0, dj = 0.0, v = 0.0;
            if (!is_iso_date(date)) throw IngestError("bad_date", line_no, "'" + date + "'");
            if (!parse_double(trim(f[1]), di) || !parse_double(trim(f[2]), dj) || !parse_double(trim(f[3]), v) ||
                !std::isfinite(v)) {
                throw IngestError("bad_number", line_no, line);
            }
            const auto i = static_cast<Eigen::Index>(di) - 1;
            const auto j = static_cast<Eigen::Index>(dj) - 1;
            if (i < 0 || j < 0 || i >= n || j >= n || di != std::floor(di) || dj != std::floor(dj)) {
                throw IngestError("dimension", line_no,
                                  "index (" + trim(f[1]) + "," + trim(f[2]) + ") outside 1.." + std::to_string(n));
            }
            auto [it, fresh] = by_date.try_emplace(date, Matrix::Constant(n, n, std::nan("")));
            auto& mask = filled[date];
            if (fresh) mask.assign(static_cast<std::size_t>(n * n), false);
            it->second(i, j) = v;
            mask[static_cast<std::size_t>(i + j * n)] = true;
        }
        for (const auto& d : dates) {
            auto it = by_date.find(d);
            if (it == by_date.end()) {
                missing.push_back(d);
                continue;
            }
            Matrix m = it->second;
            const auto& mask = filled[d];
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    const bool here = mask[static_cast<std::size_t>(i + j * n)];
                    const bool mirror = mask[static_cast<std::size_t>(j + i * n)];
                    if (!here && !mirror) {
                        throw IngestError("missing_entry", 0,
                                          d + ": entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
                    }
                    if (!here) m(i, j) = m(j, i);
                }
            }
            out.matrices.push_back(std::move(m));
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t k = 0; k < missing.size() && k < 20; ++k) list += (k ? " " : "") + missing[k];
        if (missing.size() > 20) list += " ... (" + std::to_string(missing.size()) + " total)";
        throw IngestError("missing_date", 0, list);
    }
    for (std::size_t k = 0; k < out.matrices.size(); ++k) {
        check_matrix(out.matrices[k], dates[k], out.warnings);
    }
    return out;
}

void write_realized_cov(const std::filesystem::path& path, const std::vector<std::string>& dates,
                        const std::vector<Matrix>& matrices) {
    if (dates.size() != matrices.size()) {
        throw InvalidInput("write_realized_cov: dates and matrices differ in length");
    }
    std::ofstream out(path);
    if (!out) {
        throw IngestError("unwritable", 0, path.string());
    }
    out << "date,i,j,value\n";
    for (std::size_t k = 0; k < dates.size(); ++k) {
        const Matrix& m = matrices[k];
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            for (Eigen::Index i = j; i < m.rows(); ++i) {
                out << dates[k] << ',' << i + 1 << ',' << j + 1 << ',' << format_double(m(i, j)) << '\n';
            }
        }
    }
}

}  // namespace volrec::ingest
