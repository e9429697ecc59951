#pragma once

#include <json.hpp>
#include <iosfwd>
#include <string>
#include <vector>

namespace omx2d {

/// Suffix for columns holding nu = omega / 2 pi in Hz.
inline constexpr const char* hz_suffix = "/2pi_Hz";

/// Labeled, rectangular result of a sweep.
///
/// Rows are kept in insertion (grid) order. A row may carry an error tag; its
/// values are then NaN. CSV output uses 17 significant digits so doubles
/// survive a round trip.
class ScanTable {
 public:
  ScanTable() = default;
  explicit ScanTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t column_count() const { return columns_.size(); }
  std::size_t row_count() const { return flags_.size(); }

  void add_row(const std::vector<double>& values);
  /// NaN row carrying an error tag.
  void add_failed_row(const std::vector<double>& leading, const std::string& error);

  double at(std::size_t row, std::size_t col) const { return values_[row * columns_.size() + col]; }
  double at(std::size_t row, const std::string& column) const { return at(row, index_of(column)); }
  std::size_t index_of(const std::string& column) const;
  bool has_column(const std::string& column) const;
  std::vector<double> column(const std::string& name) const;
  const std::string& flag(std::size_t row) const { return flags_[row]; }
  std::size_t flagged_rows() const;

  nlohmann::json& metadata() { return metadata_; }
  const nlohmann::json& metadata() const { return metadata_; }
  void warn(const std::string& message);
  std::vector<std::string> warnings() const;

  /// RFC 4180 CSV. An `error` column is appended only if some row is flagged.
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;

 private:
  std::vector<std::string> columns_;
  std::vector<double> values_;
  std::vector<std::string> flags_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

/// Scientific notation with 17 significant digits; "nan", "inf", "-inf" otherwise.
std::string format_double(double value);

}  // namespace omx2d
