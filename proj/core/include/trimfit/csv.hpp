#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trimfit/dataset.hpp"

namespace trimfit {

// Column mapping for CSV ingestion. Every column that is not the group, y or
// se column becomes a covariate, keeping file order. Z is built from
// z_columns (names of covariates); when empty, Z is a single intercept
// column of ones.
struct CsvSchema {
  std::string group_column = "group";
  std::string y_column = "y";
  std::optional<std::string> se_column;  // must exist in the header when set
  std::vector<std::string> z_columns;
};

// Reads a header + rows CSV. Rows are grouped by the group column, group
// order follows first appearance, row order within a group follows the file.
// Throws ParseError (malformed file), SchemaError (missing columns) or
// ValidationError (bad values; messages carry the 1-based file line).
MEDataset load_dataset(const std::string& path, const CsvSchema& schema);

// Inverse of load_dataset for datasets whose Z is representable by the
// schema (intercept or covariate columns). Numbers are written with 17
// significant digits so a save/load round trip reproduces every field.
void save_dataset(const MEDataset& data, const CsvSchema& schema, const std::string& path);

// %.17g: shortest form that survives a text round trip for doubles.
std::string format_g17(double v);

}  // namespace trimfit
