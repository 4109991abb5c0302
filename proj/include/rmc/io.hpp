#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmc/matrix.hpp"

namespace rmc {

// Plain-text formats shared by the CLI: a "rows cols" header followed by one
// row per line for matrices, a count followed by one value per line for
// vectors, and flat "key = value" manifests. All floating-point values are
// printed with 17 significant digits, so read(write(x)) is exact.

std::string format_double(double v);

void write_matrix_text(const std::string& path, const Matrix& a);
Matrix read_matrix_text(const std::string& path);

void write_vector_text(const std::string& path, std::span<const double> v);
std::vector<double> read_vector_text(const std::string& path);

using Manifest = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const std::string& path, const Manifest& kv);
Manifest read_manifest(const std::string& path);
const std::string* manifest_find(const Manifest& kv, const std::string& key);

}  // namespace rmc
