#pragma once

#include <string>
#include <vector>

#include "bilevel/sparse.hpp"

namespace bilevel {

/// Raised for unreadable or malformed data files; `line` is 1-based (0 when
/// the error is not tied to a line).
struct LibsvmError : std::runtime_error {
  LibsvmError(const std::string& msg, long line_no)
      : std::runtime_error(msg), line(line_no) {}
  long line = 0;
};

struct LibsvmData {
  SparseMatrix features;
  Vector labels;  // {0..c-1} by sorted distinct raw value order
  std::vector<double> raw_label_values;  // sorted distinct raw labels
  std::vector<std::string> warnings;     // e.g. re-sorted index lines
};

/// Parses the libsvm sparse text format "label idx:val idx:val ...".
/// 1-based indices are mapped to 0-based columns; labels are mapped to
/// {0..c-1} by sorted distinct value order; empty lines are skipped; rows with
/// no features are allowed; non-monotone indices within a line are re-sorted
/// with a warning.  Throws LibsvmError on nonnumeric tokens, bad structure, or
/// an empty file.
LibsvmData parse_libsvm(const std::string& path);

/// Writes data in the same format (used by round-trip tests and fixtures).
void write_libsvm(const std::string& path, const SparseMatrix& features,
                  const Vector& labels);

}  // namespace bilevel
