#pragma once

#include "tailcp/types.hpp"

#include <string>

namespace tailcp {

/// Reads a dataset from CSV: column 1 = y, columns 2..p+1 = X, rows in time
/// order. Parse failures throw std::runtime_error naming the file, row and
/// column.
Dataset read_dataset_csv(const std::string& path, bool has_header);

/// Writes a dataset in the same layout.
void write_dataset_csv(const std::string& path, const Dataset& data, bool with_header);

}  // namespace tailcp
