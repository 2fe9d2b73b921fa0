#include "polymerlab/lattice.hpp"

#include <cmath>
#include <sstream>

#include "polymerlab/error.hpp"

namespace polymerlab {

double dot(std::span<const int> x, std::span<const double> h) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * h[i];
  return acc;
}

double norm(std::span<const double> h) {
  double acc = 0.0;
  for (double v : h) acc += v * v;
  return std::sqrt(acc);
}

double norm(std::span<const int> x) {
  double acc = 0.0;
  for (int v : x) acc += static_cast<double>(v) * v;
  return std::sqrt(acc);
}

Vec scaled(std::span<const double> h, double factor) {
  Vec out(h.begin(), h.end());
  for (double& v : out) v *= factor;
  return out;
}

Vec unit_vector(int d, int axis, double length) {
  Vec out(static_cast<std::size_t>(d), 0.0);
  out.at(static_cast<std::size_t>(axis)) = length;
  return out;
}

std::string to_string(std::span<const int> x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ')';
  return os.str();
}

Box::Box(Site lo, Site hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  require(!lo_.empty() && lo_.size() == hi_.size(), ErrorCode::InvalidArgument,
          "box corners must have equal nonzero dimension");
  volume_ = 1;
  for (int a = 0; a < dim(); ++a) {
    require(hi_[a] >= lo_[a], ErrorCode::InvalidArgument, "box has negative extent");
    volume_ *= static_cast<std::size_t>(extent(a));
  }
}

bool Box::contains(std::span<const int> x) const {
  for (int a = 0; a < dim(); ++a)
    if (x[a] < lo_[a] || x[a] > hi_[a]) return false;
  return true;
}

std::size_t Box::index(std::span<const int> x) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim(); ++a)
    idx = idx * static_cast<std::size_t>(extent(a)) + static_cast<std::size_t>(x[a] - lo_[a]);
  return idx;
}

Site Box::site(std::size_t index) const {
  Site x(lo_.size());
  for (int a = dim() - 1; a >= 0; --a) {
    const auto e = static_cast<std::size_t>(extent(a));
    x[a] = lo_[a] + static_cast<int>(index % e);
    index /= e;
  }
  return x;
}

void Box::row_coords(std::size_t row, std::span<int> out) const {
  for (int a = dim() - 2; a >= 0; --a) {
    const auto e = static_cast<std::size_t>(extent(a));
    out[a] = lo_[a] + static_cast<int>(row % e);
    row /= e;
  }
}

std::ptrdiff_t Box::row_index(std::span<const int> lead) const {
  std::ptrdiff_t idx = 0;
  for (int a = 0; a + 1 < dim(); ++a) {
    if (lead[a] < lo_[a] || lead[a] > hi_[a]) return -1;
    idx = idx * extent(a) + (lead[a] - lo_[a]);
  }
  return idx;
}

Box Box::expanded(std::span<const int> grow_lo, std::span<const int> grow_hi) const {
  Site lo = lo_, hi = hi_;
  for (int a = 0; a < dim(); ++a) {
    lo[a] += grow_lo[a];
    hi[a] += grow_hi[a];
  }
  return Box(std::move(lo), std::move(hi));
}

}  // namespace polymerlab
