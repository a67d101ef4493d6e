#pragma once

#include "gpbnn/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace gpbnn {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Axis-aligned input box; one [lo, hi] per dimension.
struct Box {
  Vector lo;
  Vector hi;

  static Box unit(Index d);
  static Box from_intervals(const std::vector<Interval>& axes);
  Index dim() const { return lo.size(); }
  Vector width() const { return hi - lo; }
  bool contains(const Eigen::Ref<const Vector>& x, double slack = 1e-12) const;
  /// Affine maps between the box and [0,1]^d.
  Vector to_unit(const Eigen::Ref<const Vector>& x) const;
  Vector from_unit(const Eigen::Ref<const Vector>& u) const;
};

/// Paired inputs/outputs of one fidelity level.
struct Dataset {
  Matrix inputs;  // N x d
  Vector outputs; // N
  Box box;

  Dataset() = default;
  Dataset(Matrix x, Vector y, Box b);
  /// Box taken as the bounding box of the inputs.
  Dataset(Matrix x, Vector y);

  Index size() const { return inputs.rows(); }
  Index dim() const { return inputs.cols(); }
  void validate() const;
};

/// Design families.
enum class DesignKind { StratifiedSegments1D, MaximinLHS, UniformRandom };

struct DesignSpec {
  DesignKind kind = DesignKind::UniformRandom;
  Index n_points = 1;
  std::vector<Interval> excluded;  // 1D only
  std::uint64_t seed = 0;
  int restarts = 100;              // maximin LHS only
};

/// Partitions `domain` minus `excluded` into n segments of equal measure and
/// draws one uniform point in each. Returns an n x 1 matrix sorted ascending.
Matrix stratified_1d(Index n, Interval domain, const std::vector<Interval>& excluded,
                     std::uint64_t seed);

/// One random Latin hypercube in [0,1]^d (used by maximin_lhs per restart).
Matrix random_lhs(Index n, Index d, std::uint64_t seed);

/// Best of `restarts` random Latin hypercubes by minimum pairwise Euclidean
/// distance (measured in unit-cube coordinates), mapped into `box`. Ties keep
/// the first restart found.
Matrix maximin_lhs(Index n, Index d, const Box& box, std::uint64_t seed, int restarts = 100);

Matrix uniform_random(Index n, const Box& box, std::uint64_t seed);

/// Dispatches on spec.kind. The box must be one-dimensional for stratified designs.
Matrix generate_design(const DesignSpec& spec, const Box& box);

/// Smallest pairwise Euclidean distance between rows.
double min_pairwise_distance(const Matrix& points);

/// CSV with header x1,...,xd,y. Values are written with 17 significant digits.
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace gpbnn
