#include "ambitlab/results.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ambitlab {

void ResultTable::add(std::string experiment, std::string quantity, double x, double value,
                      double std_error) {
  rows_.push_back({std::move(experiment), std::move(quantity), x, value, std_error});
}

void ResultTable::append(const ResultTable& other) {
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

std::string format_number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string optional_field(double v) { return std::isnan(v) ? std::string{} : format_number(v); }

}  // namespace

void ResultTable::write_csv(std::ostream& out) const {
  out << "experiment,quantity,x,value,stderr\n";
  for (const auto& r : rows_) {
    out << r.experiment << ',' << r.quantity << ',' << optional_field(r.x) << ','
        << format_number(r.value) << ',' << optional_field(r.std_error) << '\n';
  }
}

nlohmann::ordered_json to_json(const mc::ScalingFit& fit) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) {
      return v;
    }
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["exponent"] = num(fit.slope);
  j["intercept"] = num(fit.intercept);
  j["ci"] = num(fit.ci_halfwidth);
  j["r2"] = num(fit.r2);
  j["points"] = fit.points_used;
  j["flag"] = mc::to_string(fit.flag);
  return j;
}

}  // namespace ambitlab
