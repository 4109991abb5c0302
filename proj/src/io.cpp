#include "rmc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rmc/errors.hpp"

namespace rmc {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_text(const std::string& path, const Matrix& a) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "%zu %zu\n", a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j)
      std::fprintf(f, "%s%.17g", j ? " " : "", a(i, j));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write failed for " + path);
}

Matrix read_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols)) throw ParseError(path + ": missing size header", 1);
  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!(in >> data[i])) throw ParseError(path + ": truncated matrix body", i / cols + 2);
  return Matrix(rows, cols, std::move(data));
}

void write_vector_text(const std::string& path, std::span<const double> v) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "%zu\n", v.size());
  for (double x : v) std::fprintf(f, "%.17g\n", x);
  if (std::fclose(f) != 0) throw std::runtime_error("write failed for " + path);
}

std::vector<double> read_vector_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::size_t count = 0;
  if (!(in >> count)) throw ParseError(path + ": missing length header", 1);
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    if (!(in >> v[i])) throw ParseError(path + ": truncated vector body", i + 2);
  return v;
}

void write_manifest(const std::string& path, const Manifest& kv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Manifest kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path + ": expected 'key = value'", lineno);
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

const std::string* manifest_find(const Manifest& kv, const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return &v;
  return nullptr;
}

}  // namespace rmc
