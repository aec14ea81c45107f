#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace pla {

/// N x M table of finite observations with one unique name per column.
///
/// Construction validates the shape (N >= 2, M >= 2), finiteness of every
/// entry and uniqueness of the names; a constructed DataMatrix is always valid.
class DataMatrix {
 public:
  DataMatrix(Eigen::MatrixXd values, std::vector<std::string> names);

  /// Names default to X1..XM.
  explicit DataMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  Eigen::Index n_rows() const noexcept { return values_.rows(); }
  Eigen::Index n_cols() const noexcept { return values_.cols(); }

  /// Column position of `name`, or -1.
  Eigen::Index index_of(const std::string& name) const;

  friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

std::vector<std::string> default_names(Eigen::Index count);

enum class NaPolicy { kFail, kDropRow };

struct CsvOptions {
  char delimiter = ',';
  bool has_header = true;
  NaPolicy na_policy = NaPolicy::kFail;
};

/// Raw rectangular numeric table, before the DataMatrix shape checks.
struct NumericTable {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::size_t dropped_rows = 0;
};

/// Parses CSV text. Cells that are empty, non-numeric or non-finite are
/// "missing": they raise ParseError under kFail and drop their row under
/// kDropRow. Ragged rows always raise ParseError.
NumericTable parse_csv_table(const std::string& text, const CsvOptions& options);

DataMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes header + rows with round-trip precision.
std::string to_csv(const DataMatrix& data, char delimiter = ',');
void write_csv(const DataMatrix& data, const std::filesystem::path& path, char delimiter = ',');

/// Centres every column and scales it to unit sample variance (divisor N-1).
/// Throws DegenerateColumnError naming the first constant column.
DataMatrix standardize_columns(const DataMatrix& data);

/// Sample means, and unbiased standard deviations (divisor N-1).
Eigen::VectorXd column_means(const Eigen::MatrixXd& values);
Eigen::VectorXd column_std(const Eigen::MatrixXd& values);

}  // namespace pla
