#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "heiv/types.hpp"

namespace heiv {

// Dataset CSV schema: comma-separated, '.' decimal point, one observation per
// row, header Y1..Yv, X1..Xm, TY_j_k (vech of tau_y, j <= k), TX_j_k (vech of
// tau_x). ParseError carries the 1-based data row and the offending column
// name; header mismatches report row 0.
std::vector<std::string> csv_header(int v, int m);

Dataset parse_csv(std::istream& in, int v, int m);
Dataset read_csv(const std::string& path, int v, int m);

std::string format_csv(const Dataset& data);
void write_csv(const std::string& path, const Dataset& data);

}  // namespace heiv
