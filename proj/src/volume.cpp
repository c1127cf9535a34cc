#include "boga/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace boga {

Axis parse_axis(const std::string &name)
{
  if (name == "x") return Axis::X;
  if (name == "y") return Axis::Y;
  if (name == "z") return Axis::Z;
  throw Error(ErrorKind::InvalidArgument, "unknown axis '" + name + "'");
}

const char *to_string(Axis axis)
{
  switch (axis) {
  case Axis::X: return "x";
  case Axis::Y: return "y";
  case Axis::Z: return "z";
  }
  return "?";
}

Grid::Grid(Index nx_, Index ny_, Index nz_, double dx_, double dy_, double dz_)
  : nx(nx_)
  , ny(ny_)
  , nz(nz_)
  , dx(dx_)
  , dy(dy_)
  , dz(dz_)
{
  if (nx < 1 || ny < 1 || nz < 1) {
    throw Error(ErrorKind::InvalidArgument, "grid counts must be >= 1");
  }
  if (!(dx > 0.0) || !(dy > 0.0) || !(dz > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "voxel sizes must be > 0");
  }
}

Index Grid::extent(Axis a) const
{
  switch (a) {
  case Axis::X: return nx;
  case Axis::Y: return ny;
  case Axis::Z: return nz;
  }
  return 0;
}

double Grid::spacing(Axis a) const
{
  switch (a) {
  case Axis::X: return dx;
  case Axis::Y: return dy;
  case Axis::Z: return dz;
  }
  return 0.0;
}

double Grid::centered_mm(Axis a, Index i) const
{
  return (static_cast<double>(i) - 0.5 * static_cast<double>(extent(a) - 1)) * spacing(a);
}

double Grid::normalized(Axis a, Index i) const
{
  return (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(extent(a)) - 1.0;
}

void require_same_grid(const Grid &a, const Grid &b, const char *context)
{
  if (!(a == b)) {
    throw Error(ErrorKind::DimMismatch, std::string(context) + ": grids differ");
  }
}

Index Mask::count() const
{
  return static_cast<Index>(std::count_if(bits_.begin(), bits_.end(), [](auto b) { return b != 0; }));
}

Mask Mask::operator&(const Mask &o) const
{
  require_same_grid(grid_, o.grid_, "mask and");
  Mask m(grid_);
  for (Index n = 0; n < size(); n++) {
    m.set(n, (*this)[n] && o[n]);
  }
  return m;
}

Mask Mask::operator|(const Mask &o) const
{
  require_same_grid(grid_, o.grid_, "mask or");
  Mask m(grid_);
  for (Index n = 0; n < size(); n++) {
    m.set(n, (*this)[n] || o[n]);
  }
  return m;
}

Mask Mask::operator~() const
{
  Mask m(grid_);
  for (Index n = 0; n < size(); n++) {
    m.set(n, !(*this)[n]);
  }
  return m;
}

void LineSpec::validate(const Grid &g) const
{
  Index la = 0, lb = 0;
  switch (axis) {
  case Axis::X: la = g.ny; lb = g.nz; break;
  case Axis::Y: la = g.nx; lb = g.nz; break;
  case Axis::Z: la = g.nx; lb = g.ny; break;
  }
  if (a < 0 || a >= la || b < 0 || b >= lb) {
    throw Error(ErrorKind::OutOfRange, "line coordinates outside grid");
  }
  Index const e = resolved_end(g);
  if (begin < 0 || e > g.extent(axis) || begin >= e) {
    throw Error(ErrorKind::OutOfRange, "line segment outside grid");
  }
}

Index LineSpec::voxel(const Grid &g, Index t) const
{
  switch (axis) {
  case Axis::X: return g.index(t, a, b);
  case Axis::Y: return g.index(a, t, b);
  case Axis::Z: return g.index(a, b, t);
  }
  return 0;
}

RealVolume magnitude(const ComplexVolume &v)
{
  RealVolume m(v.grid());
  for (Index n = 0; n < v.size(); n++) {
    m[n] = std::abs(v[n]);
  }
  m.set_validity({v.validity().begin(), v.validity().end()});
  return m;
}

Mask mask_from_labels(const Volume<std::int32_t> &labels, std::span<const std::int32_t> keep)
{
  Mask m(labels.grid());
  for (Index n = 0; n < labels.size(); n++) {
    m.set(n, std::find(keep.begin(), keep.end(), labels[n]) != keep.end());
  }
  return m;
}

namespace {

template <typename T>
bool bits_equal(const Volume<T> &a, const Volume<T> &b)
{
  if (!(a.grid() == b.grid())) {
    return false;
  }
  if (std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) != 0) {
    return false;
  }
  for (Index n = 0; n < a.size(); n++) {
    if (a.valid(n) != b.valid(n)) {
      return false;
    }
  }
  return true;
}

} // namespace

bool bit_identical(const ComplexVolume &a, const ComplexVolume &b) { return bits_equal(a, b); }
bool bit_identical(const RealVolume &a, const RealVolume &b) { return bits_equal(a, b); }

} // namespace boga
