#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polymerlab {

/// A point of Z^d.
using Site = std::vector<int>;
/// A point of R^d (fields, drifts, velocities).
using Vec = std::vector<double>;

double dot(std::span<const int> x, std::span<const double> h);
double norm(std::span<const double> h);
double norm(std::span<const int> x);
Vec scaled(std::span<const double> h, double factor);
Vec unit_vector(int d, int axis, double length = 1.0);
std::string to_string(std::span<const int> x);

/// Axis-aligned box of lattice sites, stored row-major with the last axis
/// contiguous. Lexicographic order of sites equals storage order.
class Box {
 public:
  Box() = default;
  Box(Site lo, Site hi);

  static Box origin(int d) { return Box(Site(d, 0), Site(d, 0)); }

  int dim() const { return static_cast<int>(lo_.size()); }
  const Site& lo() const { return lo_; }
  const Site& hi() const { return hi_; }
  int extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }
  std::size_t volume() const { return volume_; }
  /// Number of rows, i.e. volume divided by the last extent.
  std::size_t rows() const { return volume_ / static_cast<std::size_t>(extent(dim() - 1)); }

  bool contains(std::span<const int> x) const;
  std::size_t index(std::span<const int> x) const;
  Site site(std::size_t index) const;
  /// Leading coordinates (all but the last) of a row.
  void row_coords(std::size_t row, std::span<int> out) const;
  /// Row index of leading coordinates, or -1 when outside.
  std::ptrdiff_t row_index(std::span<const int> lead) const;

  Box expanded(std::span<const int> grow_lo, std::span<const int> grow_hi) const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  Site lo_;
  Site hi_;
  std::size_t volume_ = 0;
};

}  // namespace polymerlab
