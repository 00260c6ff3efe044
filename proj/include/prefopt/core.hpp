#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prefopt/errors.hpp"
#include "prefopt/random_stream.hpp"

namespace prefopt {

using Point = std::vector<double>;

/// Axis-aligned search box.
class Domain {
 public:
  Domain(std::vector<double> lower, std::vector<double> upper);

  /// The same interval on every axis.
  static Domain cube(std::size_t dims, double lower, double upper);

  std::size_t dims() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double range(std::size_t d) const { return upper_[d] - lower_[d]; }

  bool contains(std::span<const double> x) const;
  /// Throws DomainViolation if x has the wrong size or leaves the box.
  void require(std::span<const double> x) const;
  Point clamp(std::span<const double> x) const;

  /// Maps between the box and [0,1]^D.
  Point to_unit(std::span<const double> x) const;
  Point from_unit(std::span<const double> u) const;

  Point uniform_point(RandomStream& rng) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Outcome of comparing a first against a second configuration.
enum class PreferenceOutcome {
  FirstLess,     // '<': first is less preferred
  Equivalent,    // '~': roughly equal
  FirstGreater,  // '>': first is preferred
};

char outcome_symbol(PreferenceOutcome outcome);
PreferenceOutcome outcome_from_symbol(std::string_view symbol);
/// The outcome seen from the other side of the comparison.
PreferenceOutcome mirrored(PreferenceOutcome outcome);

struct PreferenceRecord {
  Point first;
  Point second;
  PreferenceOutcome outcome;
};

/// Comparisons plus the deduplicated set of points they mention. Points keep
/// first-appearance order, so appending records only ever appends points.
class PreferenceDataset {
 public:
  PreferenceDataset() = default;
  explicit PreferenceDataset(std::size_t dims) : dims_(dims) {}

  /// Adds one record; returns the indices of its two points.
  std::pair<std::size_t, std::size_t> add(const PreferenceRecord& record);
  /// Index of a point, inserting it if it is new.
  std::size_t intern(const Point& x);
  std::optional<std::size_t> find(const Point& x) const;

  std::size_t num_records() const { return records_.size(); }
  std::size_t num_points() const { return points_.size(); }
  std::size_t dims() const { return dims_; }

  const std::vector<PreferenceRecord>& records() const { return records_; }
  const std::vector<Point>& unique_points() const { return points_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& index_pairs() const { return pairs_; }

 private:
  std::size_t dims_ = 0;
  std::vector<PreferenceRecord> records_;
  std::vector<Point> points_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  // Exact coordinate equality.
  std::map<Point, std::size_t> lookup_;
};

/// Builds the dataset for a list of records, validating every point.
PreferenceDataset dedupe_points(std::span<const PreferenceRecord> records, const Domain& domain);

/// n points; along each axis the coordinates occupy n distinct equal-width
/// strata, in a random order, with uniform jitter inside each stratum.
std::vector<Point> latin_hypercube(const Domain& domain, std::size_t n, RandomStream& rng);

/// 2D + 1, the size of the initial design.
inline std::size_t initial_design_size(std::size_t dims) { return 2 * dims + 1; }

}  // namespace prefopt
