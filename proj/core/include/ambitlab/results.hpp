#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ambitlab/montecarlo.hpp"

namespace ambitlab {

/// One long-format result row: (experiment, quantity, x, value, stderr).
/// NaN in `x` or `std_error` is written as an empty field.
struct ResultRow {
  std::string experiment;
  std::string quantity;
  double x = std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
};

class ResultTable {
public:
  void add(std::string experiment, std::string quantity, double x, double value,
           double std_error = std::numeric_limits<double>::quiet_NaN());
  void append(const ResultTable& other);

  const std::vector<ResultRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  /// Header row plus one line per row, '.' decimal, 17 significant digits.
  void write_csv(std::ostream& out) const;

private:
  std::vector<ResultRow> rows_;
};

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format_number(double v);

nlohmann::ordered_json to_json(const mc::ScalingFit& fit);

}  // namespace ambitlab
