#include "omab/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

namespace omab {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  // Shortest form that reads back to the same double; never more than 17 digits.
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::vector<std::string> record_columns(std::size_t num_arms) {
  std::vector<std::string> cols = {"t", "M_t", "A_t", "a_t", "i_star"};
  for (std::size_t i = 1; i <= num_arms; ++i) cols.push_back("Vhat_" + std::to_string(i));
  for (std::size_t i = 1; i <= num_arms; ++i) cols.push_back("Bstat_" + std::to_string(i));
  for (const char* c : {"EA", "S_t", "gap", "D_t", "sumP", "sumPbar", "r_round", "r_agentsum",
                        "rbar_round", "rbar_agentsum"}) {
    cols.push_back(c);
  }
  return cols;
}

void write_records(std::ostream& out, const std::vector<RoundRecord>& records,
                   std::size_t num_arms) {
  const auto cols = record_columns(num_arms);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& r : records) {
    out << r.t << ',' << r.population << ',' << r.arrivals << ',';
    if (r.arm) out << *r.arm + 1;
    out << ',';
    if (r.optimal) out << *r.optimal + 1;
    for (std::size_t i = 0; i < num_arms; ++i) {
      out << ',';
      if (i < r.vhat.size()) out << format_real(r.vhat[i]);
    }
    for (std::size_t i = 0; i < num_arms; ++i) {
      out << ',';
      if (i < r.bstat.size()) out << format_real(r.bstat[i]);
    }
    out << ',';
    if (r.arm) out << format_real(r.ea);
    out << ',';
    if (r.stable) out << *r.stable;
    out << ',';
    if (r.gap) out << format_real(*r.gap);
    out << ',' << r.departures << ',' << format_real(r.arrival_error) << ','
        << format_real(r.arrival_certificate) << ',' << format_real(r.regret.r_round) << ','
        << format_real(r.regret.r_agentsum) << ',' << format_real(r.regret.rbar_round) << ','
        << format_real(r.regret.rbar_agentsum) << '\n';
  }
}

std::string records_to_csv(const std::vector<RoundRecord>& records, std::size_t num_arms) {
  std::ostringstream out;
  write_records(out, records, num_arms);
  return out.str();
}

}  // namespace omab
