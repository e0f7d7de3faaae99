#include "drme/types.hpp"

#include <cmath>

namespace drme {

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  const auto m = static_cast<Index>(rows.size());
  out.x.resize(m, x.cols());
  out.a.resize(m);
  out.y.resize(m, y.cols());
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    if (i < 0 || i >= size()) {
      throw InputError("Dataset::subset: row index out of range");
    }
    out.x.row(r) = x.row(i);
    out.a(r) = a(i);
    out.y.row(r) = y.row(i);
  }
  return out;
}

void Dataset::validate() const {
  if (x.rows() != a.size() || y.rows() != a.size()) {
    throw InputError("dataset: X, A and Y must have the same number of rows");
  }
  if (y.cols() == 0) {
    throw InputError("dataset: outcome dimension must be at least 1");
  }
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i) != 0 && a(i) != 1) {
      throw InputError("dataset: treatment must be binary (row " + std::to_string(i) + ")");
    }
  }
}

Index Dataset::count_arm(Arm arm) const {
  return (a.array() == arm_index(arm)).count();
}

std::string to_string(LocationSet::Provenance provenance) {
  switch (provenance) {
    case LocationSet::Provenance::dictionary: return "dictionary";
    case LocationSet::Provenance::continuous: return "continuous";
    case LocationSet::Provenance::random: return "random";
    case LocationSet::Provenance::fixed: return "fixed";
  }
  return "unknown";
}

} // namespace drme
