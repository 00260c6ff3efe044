#include "prefopt/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace prefopt {

Domain::Domain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw DomainViolation("domain bounds must be non-empty and of equal length");
  }
  for (std::size_t d = 0; d < lower_.size(); ++d) {
    if (!(lower_[d] < upper_[d]) || !std::isfinite(lower_[d]) || !std::isfinite(upper_[d])) {
      std::ostringstream msg;
      msg << "domain axis " << d << " has empty or non-finite range [" << lower_[d] << ", "
          << upper_[d] << "]";
      throw DomainViolation(msg.str());
    }
  }
}

Domain Domain::cube(std::size_t dims, double lower, double upper) {
  return Domain(std::vector<double>(dims, lower), std::vector<double>(dims, upper));
}

bool Domain::contains(std::span<const double> x) const {
  if (x.size() != dims()) return false;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!(x[d] >= lower_[d] && x[d] <= upper_[d])) return false;
  }
  return true;
}

void Domain::require(std::span<const double> x) const {
  if (x.size() != dims()) {
    std::ostringstream msg;
    msg << "point has " << x.size() << " coordinates, domain has " << dims();
    throw DomainViolation(msg.str());
  }
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!(x[d] >= lower_[d] && x[d] <= upper_[d])) {
      std::ostringstream msg;
      msg << "coordinate " << d << " = " << x[d] << " outside [" << lower_[d] << ", "
          << upper_[d] << "]";
      throw DomainViolation(msg.str());
    }
  }
}

Point Domain::clamp(std::span<const double> x) const {
  Point out(x.begin(), x.end());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = std::clamp(out[d], lower_[d], upper_[d]);
  return out;
}

Point Domain::to_unit(std::span<const double> x) const {
  Point u(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) u[d] = (x[d] - lower_[d]) / range(d);
  return u;
}

Point Domain::from_unit(std::span<const double> u) const {
  Point x(u.size());
  for (std::size_t d = 0; d < u.size(); ++d) {
    x[d] = std::clamp(lower_[d] + u[d] * range(d), lower_[d], upper_[d]);
  }
  return x;
}

Point Domain::uniform_point(RandomStream& rng) const {
  Point x(dims());
  for (std::size_t d = 0; d < dims(); ++d) x[d] = rng.uniform(lower_[d], upper_[d]);
  return x;
}

char outcome_symbol(PreferenceOutcome outcome) {
  switch (outcome) {
    case PreferenceOutcome::FirstLess:
      return '<';
    case PreferenceOutcome::Equivalent:
      return '~';
    case PreferenceOutcome::FirstGreater:
      return '>';
  }
  return '?';
}

PreferenceOutcome outcome_from_symbol(std::string_view symbol) {
  if (symbol == "<") return PreferenceOutcome::FirstLess;
  if (symbol == "~") return PreferenceOutcome::Equivalent;
  if (symbol == ">") return PreferenceOutcome::FirstGreater;
  throw std::invalid_argument("unknown preference outcome '" + std::string(symbol) + "'");
}

PreferenceOutcome mirrored(PreferenceOutcome outcome) {
  switch (outcome) {
    case PreferenceOutcome::FirstLess:
      return PreferenceOutcome::FirstGreater;
    case PreferenceOutcome::FirstGreater:
      return PreferenceOutcome::FirstLess;
    case PreferenceOutcome::Equivalent:
      break;
  }
  return PreferenceOutcome::Equivalent;
}

std::size_t PreferenceDataset::intern(const Point& x) {
  if (dims_ == 0) dims_ = x.size();
  if (x.size() != dims_) throw DomainViolation("point dimension does not match dataset");
  auto [it, inserted] = lookup_.try_emplace(x, points_.size());
  if (inserted) points_.push_back(x);
  return it->second;
}

std::optional<std::size_t> PreferenceDataset::find(const Point& x) const {
  auto it = lookup_.find(x);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::pair<std::size_t, std::size_t> PreferenceDataset::add(const PreferenceRecord& record) {
  const std::size_t a = intern(record.first);
  const std::size_t b = intern(record.second);
  records_.push_back(record);
  pairs_.emplace_back(a, b);
  return {a, b};
}

PreferenceDataset dedupe_points(std::span<const PreferenceRecord> records, const Domain& domain) {
  PreferenceDataset dataset(domain.dims());
  for (const auto& record : records) {
    domain.require(record.first);
    domain.require(record.second);
    dataset.add(record);
  }
  return dataset;
}

std::vector<Point> latin_hypercube(const Domain& domain, std::size_t n, RandomStream& rng) {
  if (n == 0) throw std::invalid_argument("latin_hypercube needs at least one sample");
  const std::size_t dims = domain.dims();
  std::vector<Point> points(n, Point(dims));
  std::vector<std::size_t> strata(n);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    // Fisher-Yates with our own stream; std::shuffle is not portable.
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(strata[i], strata[rng.below(i + 1)]);
    }
    const double width = domain.range(d) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double offset = (static_cast<double>(strata[i]) + rng.uniform()) * width;
      double value = domain.lower()[d] + offset;
      // Stay inside the stratum after rounding.
      const double stratum_hi = domain.lower()[d] + static_cast<double>(strata[i] + 1) * width;
      value = std::min(value, std::nextafter(stratum_hi, domain.lower()[d]));
      points[i][d] = std::clamp(value, domain.lower()[d], domain.upper()[d]);
    }
  }
  return points;
}

}  // namespace prefopt
