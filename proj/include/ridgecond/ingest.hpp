#pragma once

// CSV ingestion and sample covariance / correlation construction.
//
// The reader accepts RFC 4180 style files: optional header row, configurable
// single-character delimiter, double-quoted fields with "" escapes, decimal
// point only. Missing values are never imputed.

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ridgecond/sym_matrix.hpp"

namespace ridgecond {

struct ReadOptions {
    bool has_header = true;
    char delimiter = ',';
    // Accept missing cells (stored as NaN) and infinities instead of failing.
    bool allow_missing = false;
};

/// Raw rectangular numeric table as read from disk.
struct Table {
    std::vector<std::string> names;
    Matrix values;
};

/// n x p data matrix, rows are observations.
class Dataset {
public:
    Dataset(Matrix values, std::vector<std::string> names) : values_(std::move(values)), names_(std::move(names))
    {
        if (values_.rows() < 2 || values_.cols() < 1) {
            throw Error(ErrorKind::InvalidInput, "dataset needs n >= 2 rows and p >= 1 columns");
        }
        if (!values_.allFinite()) {
            throw Error(ErrorKind::InvalidInput, "dataset contains non-finite values");
        }
        if (names_.empty()) names_ = default_names(values_.cols());
        if (static_cast<Index>(names_.size()) != values_.cols()) {
            throw Error(ErrorKind::InvalidInput, "number of names does not match number of columns");
        }
    }

    explicit Dataset(Matrix values) : Dataset(std::move(values), {}) {}

    Index n() const noexcept { return values_.rows(); }
    Index p() const noexcept { return values_.cols(); }
    const Matrix& values() const noexcept { return values_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    static std::vector<std::string> default_names(Index p)
    {
        std::vector<std::string> out;
        out.reserve(static_cast<std::size_t>(p));
        for (Index j = 0; j < p; ++j) out.push_back("V" + std::to_string(j + 1));
        return out;
    }

private:
    Matrix values_;
    std::vector<std::string> names_;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

// Splits one logical record. Quoted fields may contain the delimiter and
// doubled quotes; embedded newlines are not supported.
inline std::vector<std::string> split_record(std::string_view line, char delim, std::size_t line_no)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && trim(cur).empty()) {
            quoted = true;
            was_quoted = true;
            cur.clear();
        } else if (c == delim) {
            fields.push_back(was_quoted ? cur : std::string(trim(cur)));
            cur.clear();
            was_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError(line_no, fields.size() + 1, "unterminated quoted field");
    fields.push_back(was_quoted ? cur : std::string(trim(cur)));
    return fields;
}

inline bool is_missing_token(std::string_view s)
{
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "NAN" || s == "N/A";
}

inline bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

} // namespace detail

inline Table parse_table(std::string_view text, const ReadOptions& options = {})
{
    Table table;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    bool have_width = false;
    std::size_t missing = 0, miss_line = 0, miss_col = 0;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_pending = options.has_header;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty()) continue;

        auto fields = detail::split_record(line, options.delimiter, line_no);
        if (!have_width) {
            width = fields.size();
            have_width = true;
        } else if (fields.size() != width) {
            throw ParseError(line_no, 0,
                             "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
        }
        if (header_pending) {
            table.names = std::move(fields);
            header_pending = false;
            continue;
        }
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j) {
            const std::string_view cell = detail::trim(fields[j]);
            if (detail::is_missing_token(cell)) {
                if (missing++ == 0) {
                    miss_line = line_no;
                    miss_col = j + 1;
                }
                row[j] = std::nan("");
                continue;
            }
            if (!detail::parse_double(cell, row[j])) {
                throw ParseError(line_no, j + 1, "non-numeric value '" + std::string(cell) + "'");
            }
            if (!std::isfinite(row[j]) && !options.allow_missing) {
                throw ParseError(line_no, j + 1, "non-finite value '" + std::string(cell) + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (missing > 0 && !options.allow_missing) throw MissingDataError(missing, miss_line, miss_col);
    if (rows.empty()) throw Error(ErrorKind::InvalidInput, "no data rows");

    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    if (table.names.empty()) table.names = Dataset::default_names(static_cast<Index>(width));
    return table;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Table read_table(const std::string& path, const ReadOptions& options = {})
{
    return parse_table(read_file(path), options);
}

inline Dataset read_csv(const std::string& path, bool has_header = true, char delimiter = ',')
{
    Table t = read_table(path, ReadOptions{has_header, delimiter, false});
    return Dataset(std::move(t.values), std::move(t.names));
}

struct LabeledMatrix {
    std::vector<std::string> names;
    SymMatrix matrix;
};

/// Reads a precomputed symmetric matrix (one header row of variable names
/// when `has_header`).
inline LabeledMatrix read_matrix_csv(const std::string& path, bool has_header = true, char delimiter = ',')
{
    Table t = read_table(path, ReadOptions{has_header, delimiter, false});
    if (t.values.rows() != t.values.cols()) {
        throw Error(ErrorKind::InvalidInput, "'" + path + "' is " + std::to_string(t.values.rows()) + "x" +
                                                 std::to_string(t.values.cols()) + ", expected a square matrix");
    }
    return {std::move(t.names), SymMatrix(t.values)};
}

// ---------------------------------------------------------------------------
// Output

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& names, const Matrix& values,
                      char delimiter = ',')
{
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j) out << delimiter;
        const bool quote = names[j].find_first_of(std::string("\"\n") + delimiter) != std::string::npos;
        if (quote) {
            out << '"';
            for (char c : names[j]) out << (c == '"' ? std::string("\"\"") : std::string(1, c));
            out << '"';
        } else {
            out << names[j];
        }
    }
    out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) {
            if (j) out << delimiter;
            out << format_double(values(i, j));
        }
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const std::vector<std::string>& names, const Matrix& values,
                      char delimiter = ',')
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    write_csv(out, names, values, delimiter);
    if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Covariance

/// Maximum-likelihood covariance (divisor n) of the rows of `y`.
inline SymMatrix cov_ml(const Matrix& y)
{
    if (y.rows() < 2) throw Error(ErrorKind::InvalidInput, "covariance needs n >= 2");
    Matrix centered = y.rowwise() - y.colwise().mean();
    for (Index j = 0; j < y.cols(); ++j) {
        if ((y.col(j).array() == y(0, j)).all()) centered.col(j).setZero();
    }
    return SymMatrix::symmetrized((centered.transpose() * centered) / static_cast<double>(y.rows()));
}

inline SymMatrix cov_ml(const Dataset& d) { return cov_ml(d.values()); }

/// cov_ml scaled by n / (n - 1).
inline SymMatrix cov_unbiased(const Matrix& y)
{
    if (y.rows() < 2) throw Error(ErrorKind::InvalidInput, "unbiased covariance needs n >= 2");
    const double n = static_cast<double>(y.rows());
    return SymMatrix::symmetrized(cov_ml(y).matrix() * (n / (n - 1.0)));
}

inline SymMatrix cov_unbiased(const Dataset& d) { return cov_unbiased(d.values()); }

/// D^{-1/2} S D^{-1/2} with D the diagonal of S. The diagonal is set to
/// exactly 1 and off-diagonals are clipped to [-1, 1].
inline SymMatrix to_correlation(const SymMatrix& s)
{
    const Index p = s.dim();
    Vector inv_sd(p);
    for (Index j = 0; j < p; ++j) {
        if (!(s(j, j) > 0.0)) throw DegenerateVarianceError(static_cast<std::size_t>(j));
        inv_sd[j] = 1.0 / std::sqrt(s(j, j));
    }
    Matrix r = inv_sd.asDiagonal() * s.matrix() * inv_sd.asDiagonal();
    r = r.cwiseMax(-1.0).cwiseMin(1.0);
    r.diagonal().setOnes();
    return SymMatrix::symmetrized(r);
}

} // namespace ridgecond
