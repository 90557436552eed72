#pragma once

#include "bip/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bip::io {

/// Labeled matrix: first CSV row holds the column names, first column the row ids.
struct LabeledMatrix {
  Matrix values;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_names;
};

/// Shortest round-trip decimal form.
std::string format_double(double x);

LabeledMatrix read_matrix_csv(const std::filesystem::path& path);
std::string matrix_csv(const Matrix& values, const std::vector<std::string>& row_ids,
                       const std::vector<std::string>& col_names, const std::string& corner = "id");

/// Two-column `feature,group` file; a feature may appear on several lines.
/// Group order follows first appearance. Unknown features are an error.
ViewGroups read_groups_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& feature_names);
std::string groups_csv(const ViewGroups& groups, const std::vector<std::string>& feature_names);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace bip::io
