#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drme {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Bad arguments, malformed input files, violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failed factorizations and other numerical breakdowns.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Arm : int { control = 0, treated = 1 };

inline int arm_index(Arm arm) { return static_cast<int>(arm); }

/// Observed data (X, A, Y), one unit per row.
struct Dataset {
  Matrix x;          // n x d_X
  Eigen::VectorXi a; // n, binary
  Matrix y;          // n x d_Y

  Index size() const { return a.size(); }
  Index covariate_dim() const { return x.cols(); }
  Index outcome_dim() const { return y.cols(); }

  /// Row subset in the given order.
  Dataset subset(std::span<const Index> rows) const;

  /// Throws InputError on shape mismatch or a non-binary treatment.
  void validate() const;

  Index count_arm(Arm arm) const;
};

/// The J outcome-space witness coordinates, one location per row.
struct LocationSet {
  enum class Provenance { dictionary, continuous, random, fixed };

  Matrix points; // J x d_Y
  Provenance provenance = Provenance::fixed;
  std::vector<Index> indices; // dictionary indices when dictionary-sourced

  Index size() const { return points.rows(); }
};

std::string to_string(LocationSet::Provenance provenance);

} // namespace drme
