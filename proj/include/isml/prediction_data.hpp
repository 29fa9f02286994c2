#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "isml/error.hpp"

namespace isml {

using Label = std::int8_t;

/// Binary predictions of m classifiers on n instances, stored row-major
/// (one row per classifier). Entries are exactly -1 or +1.
class PredictionMatrix {
 public:
  static constexpr std::size_t kMinClassifiers = 3;

  PredictionMatrix(std::size_t m, std::size_t n, std::vector<Label> entries)
      : m_(m), n_(n), entries_(std::move(entries)) {
    if (m_ < kMinClassifiers) {
      throw Error(ErrorCode::TooFewClassifiers,
                  "need at least 3 classifiers, got " + std::to_string(m_));
    }
    if (n_ == 0) {
      throw Error(ErrorCode::InsufficientSamples, "prediction matrix has no instances");
    }
    if (entries_.size() != m_ * n_) {
      throw Error(ErrorCode::InvalidArgument, "entry count does not match m*n");
    }
    for (Label x : entries_) {
      if (x != 1 && x != -1) {
        throw Error(ErrorCode::BadLabel, "binary prediction must be -1 or +1");
      }
    }
  }

  static PredictionMatrix from_rows(const std::vector<std::vector<int>>& rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m == 0 ? 0 : rows.front().size();
    std::vector<Label> entries;
    entries.reserve(m * n);
    for (const auto& row : rows) {
      if (row.size() != n) throw Error(ErrorCode::RaggedRows, "rows of unequal length");
      for (int x : row) entries.push_back(static_cast<Label>(x));
    }
    return PredictionMatrix(m, n, std::move(entries));
  }

  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }

  Label operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * n_ + j]; }

  std::span<const Label> row(std::size_t i) const noexcept {
    return {entries_.data() + i * n_, n_};
  }

  std::vector<Label> column(std::size_t j) const {
    std::vector<Label> col(m_);
    for (std::size_t i = 0; i < m_; ++i) col[i] = (*this)(i, j);
    return col;
  }

  const std::vector<Label>& data() const noexcept { return entries_; }

  bool operator==(const PredictionMatrix&) const = default;

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<Label> entries_;
};

/// Multiclass predictions with labels in {1..K}.
class MultiPredictionMatrix {
 public:
  MultiPredictionMatrix(std::size_t m, std::size_t n, int num_classes, std::vector<int> entries)
      : m_(m), n_(n), k_(num_classes), entries_(std::move(entries)) {
    if (k_ < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 classes");
    if (m_ < PredictionMatrix::kMinClassifiers) {
      throw Error(ErrorCode::TooFewClassifiers,
                  "need at least 3 classifiers, got " + std::to_string(m_));
    }
    if (n_ == 0) throw Error(ErrorCode::InsufficientSamples, "prediction matrix has no instances");
    if (entries_.size() != m_ * n_) {
      throw Error(ErrorCode::InvalidArgument, "entry count does not match m*n");
    }
    for (int x : entries_) {
      if (x < 1 || x > k_) {
        throw Error(ErrorCode::BadLabel,
                    "label " + std::to_string(x) + " outside [1," + std::to_string(k_) + "]");
      }
    }
  }

  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  int num_classes() const noexcept { return k_; }
  int operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * n_ + j]; }
  const std::vector<int>& data() const noexcept { return entries_; }

 private:
  std::size_t m_;
  std::size_t n_;
  int k_;
  std::vector<int> entries_;
};

enum class Encoding { pm_one, zero_one };

enum class Severity { warning, error };

struct ValidationIssue {
  std::string code;
  std::string message;
  Severity severity = Severity::warning;
};

/// `ok` is false only when an error-severity issue is present; warnings
/// (constant rows, tiny n) are informational.
struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  bool has(std::string_view code) const {
    for (const auto& issue : issues) {
      if (issue.code == code) return true;
    }
    return false;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Reads a comma-separated integer grid. Comment lines start with '#';
// blank lines are skipped; line endings may be "\n" or "\r\n".
inline std::vector<std::vector<long long>> read_integer_grid(std::string_view text) {
  std::vector<std::vector<long long>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    ++line_no;

    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    std::vector<long long> row;
    std::size_t col = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      std::string_view cell = trim(line.substr(0, comma));
      ++col;
      const std::string where =
          " at line " + std::to_string(line_no) + ", column " + std::to_string(col);
      if (cell.empty()) throw Error(ErrorCode::EmptyCell, "empty cell" + where);
      if (cell.front() == '+') cell.remove_prefix(1);
      long long value = 0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc{} || end != cell.data() + cell.size()) {
        throw Error(ErrorCode::BadToken, "non-integer token '" + std::string(cell) + "'" + where);
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::RaggedRows, "line " + std::to_string(line_no) + " has " +
                                             std::to_string(row.size()) + " cells, expected " +
                                             std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<std::vector<long long>> transposed(const std::vector<std::vector<long long>>& g) {
  if (g.empty()) return {};
  std::vector<std::vector<long long>> t(g.front().size(), std::vector<long long>(g.size()));
  for (std::size_t r = 0; r < g.size(); ++r) {
    for (std::size_t c = 0; c < g[r].size(); ++c) t[c][r] = g[r][c];
  }
  return t;
}

inline std::string read_all(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Parses rows = classifiers, columns = instances (or the reverse when
/// `transpose` is set). Labels are mapped to {-1,+1} per `encoding`.
inline PredictionMatrix parse_prediction_csv(std::string_view text, Encoding encoding,
                                             bool transpose = false) {
  auto grid = detail::read_integer_grid(text);
  if (transpose) grid = detail::transposed(grid);

  const std::size_t m = grid.size();
  if (m < PredictionMatrix::kMinClassifiers) {
    throw Error(ErrorCode::TooFewClassifiers,
                "need at least 3 classifiers, got " + std::to_string(m));
  }
  const std::size_t n = grid.front().size();
  std::vector<Label> entries;
  entries.reserve(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const long long x = grid[i][j];
      Label label = 0;
      if (encoding == Encoding::pm_one && (x == 1 || x == -1)) {
        label = static_cast<Label>(x);
      } else if (encoding == Encoding::zero_one && (x == 0 || x == 1)) {
        label = x == 1 ? Label{1} : Label{-1};
      } else {
        throw Error(ErrorCode::BadLabel,
                    "label " + std::to_string(x) + " not in " +
                        (encoding == Encoding::pm_one ? "{-1,+1}" : "{0,1}") + " (classifier " +
                        std::to_string(i + 1) + ", instance " + std::to_string(j + 1) + ")");
      }
      entries.push_back(label);
    }
  }
  return PredictionMatrix(m, n, std::move(entries));
}

inline PredictionMatrix parse_prediction_csv(std::istream& in, Encoding encoding,
                                             bool transpose = false) {
  return parse_prediction_csv(detail::read_all(in), encoding, transpose);
}

inline MultiPredictionMatrix parse_multiclass_csv(std::string_view text, int num_classes,
                                                  bool transpose = false) {
  auto grid = detail::read_integer_grid(text);
  if (transpose) grid = detail::transposed(grid);

  const std::size_t m = grid.size();
  if (m < PredictionMatrix::kMinClassifiers) {
    throw Error(ErrorCode::TooFewClassifiers,
                "need at least 3 classifiers, got " + std::to_string(m));
  }
  const std::size_t n = grid.front().size();
  std::vector<int> entries;
  entries.reserve(m * n);
  for (const auto& row : grid) {
    for (long long x : row) {
      if (x < 1 || x > num_classes) {
        throw Error(ErrorCode::BadLabel, "label " + std::to_string(x) + " outside [1," +
                                             std::to_string(num_classes) + "]");
      }
      entries.push_back(static_cast<int>(x));
    }
  }
  return MultiPredictionMatrix(m, n, num_classes, std::move(entries));
}

inline MultiPredictionMatrix parse_multiclass_csv(std::istream& in, int num_classes,
                                                  bool transpose = false) {
  return parse_multiclass_csv(detail::read_all(in), num_classes, transpose);
}

/// Canonical pm_one serialization (rows = classifiers).
inline std::string to_csv(const PredictionMatrix& z) {
  std::string out;
  out.reserve(z.m() * z.n() * 3);
  for (std::size_t i = 0; i < z.m(); ++i) {
    for (std::size_t j = 0; j < z.n(); ++j) {
      if (j > 0) out += ',';
      out += z(i, j) > 0 ? "1" : "-1";
    }
    out += '\n';
  }
  return out;
}

inline std::string to_csv(const MultiPredictionMatrix& z) {
  std::ostringstream out;
  for (std::size_t i = 0; i < z.m(); ++i) {
    for (std::size_t j = 0; j < z.n(); ++j) {
      if (j > 0) out << ',';
      out << z(i, j);
    }
    out << '\n';
  }
  return out.str();
}

inline ValidationReport validate(const PredictionMatrix& z) {
  ValidationReport report;
  for (std::size_t i = 0; i < z.m(); ++i) {
    const auto row = z.row(i);
    bool constant = true;
    for (Label x : row) {
      if (x != row.front()) {
        constant = false;
        break;
      }
    }
    if (constant) {
      report.issues.push_back({"CONSTANT_ROW",
                               "classifier " + std::to_string(i + 1) +
                                   " predicts a single label; its covariance row is zero",
                               Severity::warning});
    }
  }
  if (z.n() < 2) {
    report.issues.push_back(
        {"SMALL_N", "fewer than two instances; sample covariance is undefined", Severity::warning});
  }
  for (const auto& issue : report.issues) {
    if (issue.severity == Severity::error) report.ok = false;
  }
  return report;
}

}  // namespace isml
