#include "internal.hpp"

#include <pla/errors.hpp>
#include <pla/ingest.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

namespace pla {

namespace {

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  std::string out(s.substr(begin, end - begin));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(std::string_view line, char delimiter) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

std::optional<double> parse_finite(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

DataMatrix::DataMatrix(Eigen::MatrixXd values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
  if (values_.cols() < 2) {
    throw DimensionError("need at least 2 variables, got " + std::to_string(values_.cols()));
  }
  if (values_.rows() < 2) {
    throw DimensionError("need at least 2 observations, got " + std::to_string(values_.rows()));
  }
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw DimensionError("expected " + std::to_string(values_.cols()) + " variable names, got " +
                         std::to_string(names_.size()));
  }
  if (!values_.allFinite()) throw ParseError("data contains NaN or infinite values");
  std::unordered_set<std::string> seen;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) throw ParseError("duplicate variable name '" + name + "'");
  }
}

DataMatrix::DataMatrix(Eigen::MatrixXd values)
    : DataMatrix(values, default_names(values.cols())) {}

Eigen::Index DataMatrix::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

std::vector<std::string> default_names(Eigen::Index count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) names.push_back("X" + std::to_string(i + 1));
  return names;
}

NumericTable parse_csv_table(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::size_t dropped = 0;
  bool header_pending = options.has_header;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;

    auto cells = split_line(line, options.delimiter);
    if (header_pending) {
      names = std::move(cells);
      width = names.size();
      header_pending = false;
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(width);
    bool missing = false;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto value = parse_finite(cells[c]);
      if (!value) {
        if (options.na_policy == NaPolicy::kFail) {
          throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                           ": not a finite number: '" + cells[c] + "'");
        }
        missing = true;
        break;
      }
      row.push_back(*value);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(row));
  }

  NumericTable table;
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  table.names = names.empty() ? default_names(static_cast<Eigen::Index>(width)) : std::move(names);
  table.dropped_rows = dropped;
  return table;
}

DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto table = parse_csv_table(buffer.str(), options);
  return DataMatrix(std::move(table.values), std::move(table.names));
}

std::string to_csv(const DataMatrix& data, char delimiter) {
  std::string out;
  const auto& names = data.names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += delimiter;
    out += names[i];
  }
  out += '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < data.n_rows(); ++r) {
    for (Eigen::Index c = 0; c < data.n_cols(); ++c) {
      if (c) out += delimiter;
      const auto res = std::to_chars(buf, buf + sizeof(buf), data.values()(r, c));
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const DataMatrix& data, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << to_csv(data, delimiter);
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& values) {
  return values.colwise().mean().transpose();
}

Eigen::VectorXd column_std(const Eigen::MatrixXd& values) {
  const Eigen::MatrixXd centered = values.rowwise() - values.colwise().mean();
  const double denom = static_cast<double>(values.rows() - 1);
  return (centered.colwise().squaredNorm().transpose() / denom).cwiseSqrt();
}

DataMatrix standardize_columns(const DataMatrix& data) {
  const auto& x = data.values();
  const Eigen::VectorXd mean = column_means(x);
  const Eigen::VectorXd sd = column_std(x);
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (detail::is_degenerate(sd(c), x.col(c).cwiseAbs().maxCoeff())) {
      throw DegenerateColumnError("column '" + data.names()[static_cast<std::size_t>(c)] +
                                  "' has zero variance");
    }
    out.col(c) = (x.col(c).array() - mean(c)) / sd(c);
  }
  return DataMatrix(std::move(out), data.names());
}

}  // namespace pla
