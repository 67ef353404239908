#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "omab/simulation.hpp"

namespace omab {

/// Locale-independent shortest round-trip form (at most 17 significant digits).
std::string format_real(double value);

/// Column names of the per-round file for K arms:
/// t,M_t,A_t,a_t,i_star,Vhat_1..K,Bstat_1..K,EA,S_t,gap,D_t,sumP,sumPbar,
/// r_round,r_agentsum,rbar_round,rbar_agentsum. Arms are 1-based; absent values
/// are empty fields.
std::vector<std::string> record_columns(std::size_t num_arms);

void write_records(std::ostream& out, const std::vector<RoundRecord>& records,
                   std::size_t num_arms);
std::string records_to_csv(const std::vector<RoundRecord>& records, std::size_t num_arms);

}  // namespace omab
