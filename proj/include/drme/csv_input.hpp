#pragma once

#include "drme/types.hpp"

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace drme::io {

/// Reads `x_1..x_dx,a,y_1..y_dy` with a header row. Column names must appear
/// in exactly that order; errors carry the 1-based line number.
Dataset parse_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);

void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);

/// 64-bit FNV-1a of the file contents, as 16 hex digits.
std::string file_digest(const std::string& path);

} // namespace drme::io
