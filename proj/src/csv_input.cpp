#include "drme/csv_input.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace drme::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw InputError("CSV line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& text, std::size_t line, std::size_t column) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    fail(line, "column " + std::to_string(column + 1) + " is not a number ('" + text + "')");
  }
  if (!std::isfinite(value)) {
    fail(line, "column " + std::to_string(column + 1) + " is not finite ('" + text + "')");
  }
  return value;
}

} // namespace

Dataset parse_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  // Header.
  do {
    if (!std::getline(in, line)) {
      throw InputError("CSV: missing header row");
    }
    ++line_no;
  } while (split_fields(line) == std::vector<std::string>{""});

  const auto header = split_fields(line);
  std::size_t dx = 0;
  while (dx < header.size() && header[dx] == "x_" + std::to_string(dx + 1)) {
    ++dx;
  }
  if (dx == 0) fail(line_no, "header must start with x_1");
  if (dx >= header.size() || header[dx] != "a") {
    fail(line_no, "expected column 'a' after x_" + std::to_string(dx));
  }
  std::size_t dy = 0;
  while (dx + 1 + dy < header.size() && header[dx + 1 + dy] == "y_" + std::to_string(dy + 1)) {
    ++dy;
  }
  if (dy == 0) fail(line_no, "expected y_1 after column 'a'");
  if (dx + 1 + dy != header.size()) {
    fail(line_no, "unexpected column '" + header[dx + 1 + dy] + "'");
  }
  const std::size_t width = header.size();

  std::vector<double> x_values;
  std::vector<int> a_values;
  std::vector<double> y_values;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.size() == 1 && fields[0].empty()) {
      continue;
    }
    if (fields.size() != width) {
      fail(line_no, "expected " + std::to_string(width) + " fields, found " +
                        std::to_string(fields.size()));
    }
    for (std::size_t k = 0; k < dx; ++k) {
      x_values.push_back(parse_number(fields[k], line_no, k));
    }
    const double a = parse_number(fields[dx], line_no, dx);
    if (a != 0.0 && a != 1.0) {
      fail(line_no, "treatment must be 0 or 1");
    }
    a_values.push_back(static_cast<int>(a));
    for (std::size_t k = 0; k < dy; ++k) {
      y_values.push_back(parse_number(fields[dx + 1 + k], line_no, dx + 1 + k));
    }
  }
  const auto n = static_cast<Index>(a_values.size());
  if (n == 0) {
    throw InputError("CSV: no data rows");
  }
  Dataset data;
  data.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      x_values.data(), n, static_cast<Index>(dx));
  data.y = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      y_values.data(), n, static_cast<Index>(dy));
  data.a = Eigen::Map<const Eigen::VectorXi>(a_values.data(), n);
  data.validate();
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open '" + path + "'");
  }
  return parse_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  for (Index k = 0; k < data.covariate_dim(); ++k) {
    out << "x_" << k + 1 << ',';
  }
  out << 'a';
  for (Index k = 0; k < data.outcome_dim(); ++k) {
    out << ",y_" << k + 1;
  }
  out << '\n';
  char buf[32];
  for (Index i = 0; i < data.size(); ++i) {
    for (Index k = 0; k < data.covariate_dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x(i, k));
      out << buf << ',';
    }
    out << data.a(i);
    for (Index k = 0; k < data.outcome_dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", data.y(i, k));
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) {
    throw InputError("cannot write '" + path + "'");
  }
  write_dataset_csv(out, data);
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open '" + path + "'");
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace drme::io
