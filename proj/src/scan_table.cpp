#include "omx2d/scan_table.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "omx2d/errors.hpp"

namespace omx2d {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

ScanTable::ScanTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (!seen.insert(c).second) {
      throw Error(ErrorKind::invalid_input, "ScanTable: duplicate column '" + c + "'");
    }
  }
}

void ScanTable::add_row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) {
    throw Error(ErrorKind::invalid_input, "ScanTable: row has " + std::to_string(values.size()) +
                                              " values, expected " + std::to_string(columns_.size()));
  }
  values_.insert(values_.end(), values.begin(), values.end());
  flags_.emplace_back();
}

void ScanTable::add_failed_row(const std::vector<double>& leading, const std::string& error) {
  if (leading.size() > columns_.size()) {
    throw Error(ErrorKind::invalid_input, "ScanTable: too many leading values");
  }
  std::vector<double> row(columns_.size(), std::numeric_limits<double>::quiet_NaN());
  std::copy(leading.begin(), leading.end(), row.begin());
  values_.insert(values_.end(), row.begin(), row.end());
  flags_.push_back(error.empty() ? std::string("error") : error);
}

std::size_t ScanTable::index_of(const std::string& column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == column) return i;
  }
  throw Error(ErrorKind::invalid_input, "ScanTable: no column '" + column + "'");
}

bool ScanTable::has_column(const std::string& column) const {
  for (const auto& c : columns_) {
    if (c == column) return true;
  }
  return false;
}

std::vector<double> ScanTable::column(const std::string& name) const {
  const std::size_t c = index_of(name);
  std::vector<double> out(row_count());
  for (std::size_t r = 0; r < row_count(); ++r) out[r] = at(r, c);
  return out;
}

std::size_t ScanTable::flagged_rows() const {
  std::size_t n = 0;
  for (const auto& f : flags_) n += f.empty() ? 0 : 1;
  return n;
}

void ScanTable::warn(const std::string& message) {
  metadata_["warnings"].push_back(message);
}

std::vector<std::string> ScanTable::warnings() const {
  std::vector<std::string> out;
  if (metadata_.contains("warnings")) {
    for (const auto& w : metadata_["warnings"]) out.push_back(w.get<std::string>());
  }
  return out;
}

void ScanTable::write_csv(std::ostream& out) const {
  const bool with_errors = flagged_rows() > 0;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out << ',';
    out << csv_field(columns_[c]);
  }
  if (with_errors) out << ",error";
  out << "\r\n";
  for (std::size_t r = 0; r < row_count(); ++r) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (c) out << ',';
      out << format_double(at(r, c));
    }
    if (with_errors) out << ',' << csv_field(flags_[r]);
    out << "\r\n";
  }
}

std::string ScanTable::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

}  // namespace omx2d
