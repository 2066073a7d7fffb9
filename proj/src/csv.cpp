#include "tailcp/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace tailcp {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, const std::string& path, std::size_t row,
                   std::size_t col) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    std::ostringstream os;
    os << path << ": row " << row << ", column " << col << ": cannot parse '" << s
       << "' as a number";
    throw std::runtime_error(os.str());
  }
  return value;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && has_header) continue;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (width == 0) {
      width = fields.size();
      if (width < 2)
        throw std::runtime_error(path + ": need at least 2 columns (y plus one covariate)");
    } else if (fields.size() != width) {
      std::ostringstream os;
      os << path << ": row " << lineno << ": expected " << width << " columns, found "
         << fields.size();
      throw std::runtime_error(os.str());
    }
    std::vector<double> parsed(width);
    for (std::size_t c = 0; c < width; ++c)
      parsed[c] = parse_field(fields[c], path, lineno, c + 1);
    rows.push_back(std::move(parsed));
  }
  if (rows.size() < 2) throw std::runtime_error(path + ": need at least 2 data rows");

  const Index n = static_cast<Index>(rows.size());
  const Index p = static_cast<Index>(width - 1);
  Matrix X(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = rows[static_cast<std::size_t>(i)][0];
    for (Index j = 0; j < p; ++j)
      X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) + 1];
  }
  return Dataset(std::move(X), std::move(y));
}

void write_dataset_csv(const std::string& path, const Dataset& data, bool with_header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out.precision(17);
  if (with_header) {
    out << "y";
    for (Index j = 0; j < data.p(); ++j) out << ",x" << (j + 1);
    out << "\n";
  }
  for (Index i = 0; i < data.n(); ++i) {
    out << data.y[i];
    for (Index j = 0; j < data.p(); ++j) out << ',' << data.X(i, j);
    out << "\n";
  }
}

}  // namespace tailcp
