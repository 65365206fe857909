#include "bilevel/libsvm.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace bilevel {

namespace {

bool parse_double(const std::string& tok, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(tok, &pos);
    return pos == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_int(const std::string& tok, long& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

}  // namespace

LibsvmData parse_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LibsvmError("cannot open file: " + path, 0);

  struct Row {
    double label;
    std::vector<std::pair<int, double>> entries;
  };
  std::vector<Row> rows;
  std::vector<std::string> warnings;
  int max_col = -1;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // empty / whitespace-only line
    Row row;
    if (!parse_double(tok, row.label))
      throw LibsvmError("line " + std::to_string(line_no) +
                            ": nonnumeric label '" + tok + "'",
                        line_no);
    int prev_idx = 0;
    bool monotone = true;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw LibsvmError("line " + std::to_string(line_no) +
                              ": expected idx:val, got '" + tok + "'",
                          line_no);
      long idx = 0;
      double val = 0.0;
      if (!parse_int(tok.substr(0, colon), idx) || idx < 1)
        throw LibsvmError("line " + std::to_string(line_no) +
                              ": bad feature index in '" + tok + "'",
                          line_no);
      if (!parse_double(tok.substr(colon + 1), val))
        throw LibsvmError("line " + std::to_string(line_no) +
                              ": nonnumeric value in '" + tok + "'",
                          line_no);
      if (idx <= prev_idx) monotone = false;
      prev_idx = static_cast<int>(idx);
      row.entries.emplace_back(static_cast<int>(idx) - 1, val);
      max_col = std::max(max_col, static_cast<int>(idx) - 1);
    }
    if (!monotone) {
      warnings.push_back("line " + std::to_string(line_no) +
                         ": non-monotone feature indices, re-sorted");
      std::sort(row.entries.begin(), row.entries.end());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw LibsvmError("empty file: " + path, 0);

  std::map<double, int> label_map;
  for (const Row& r : rows) label_map.emplace(r.label, 0);
  int next = 0;
  for (auto& [raw, id] : label_map) id = next++;

  LibsvmData out;
  out.features = SparseMatrix(static_cast<std::size_t>(max_col + 1));
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  out.warnings = std::move(warnings);
  for (auto& [raw, id] : label_map) out.raw_label_values.push_back(raw);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.push_row(rows[i].entries);
    out.labels[static_cast<Eigen::Index>(i)] = label_map.at(rows[i].label);
  }
  return out;
}

void write_libsvm(const std::string& path, const SparseMatrix& features,
                  const Vector& labels) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw LibsvmError("cannot open file for writing: " + path, 0);
  char buf[64];
  for (std::size_t i = 0; i < features.rows(); ++i) {
    // %.17g round-trips doubles exactly
    std::snprintf(buf, sizeof(buf), "%.17g",
                  labels[static_cast<Eigen::Index>(i)]);
    outf << buf;
    for (std::size_t k = features.row_ptr()[i]; k < features.row_ptr()[i + 1];
         ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", features.values()[k]);
      outf << ' ' << (features.col_idx()[k] + 1) << ':' << buf;
    }
    outf << '\n';
  }
}

}  // namespace bilevel
