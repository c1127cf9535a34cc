#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "boga/error.hpp"

namespace boga {

using Index = std::int64_t;
using Complex = std::complex<double>;

enum class Axis { X = 0, Y = 1, Z = 2 };

Axis parse_axis(const std::string &name);
const char *to_string(Axis axis);

/// Regular voxel grid. Counts are voxels, sizes are millimetres.
struct Grid {
  Index nx = 1, ny = 1, nz = 1;
  double dx = 1.0, dy = 1.0, dz = 1.0;

  Grid() = default;
  Grid(Index nx, Index ny, Index nz, double dx = 1.0, double dy = 1.0, double dz = 1.0);

  Index size() const { return nx * ny * nz; }
  Index extent(Axis a) const;
  double spacing(Axis a) const;
  Index index(Index i, Index j, Index k) const { return i + nx * (j + ny * k); }

  /// Position of a voxel centre in mm, relative to the grid centre.
  double centered_mm(Axis a, Index i) const;
  /// Position normalised so that the field of view spans (-1, 1).
  double normalized(Axis a, Index i) const;

  bool operator==(const Grid &) const = default;
};

void require_same_grid(const Grid &a, const Grid &b, const char *context);

/// Dense x-fastest volume with an optional per-voxel validity flag.
/// An empty validity vector means every voxel is valid.
template <typename T>
class Volume {
public:
  using value_type = T;

  Volume() = default;
  explicit Volume(const Grid &g, T fill = T{})
    : grid_(g)
    , data_(static_cast<std::size_t>(g.size()), fill)
  {
  }
  Volume(const Grid &g, std::vector<T> data)
    : grid_(g)
    , data_(std::move(data))
  {
    if (static_cast<Index>(data_.size()) != g.size()) {
      throw Error(ErrorKind::DimMismatch, "data length does not match grid");
    }
  }

  const Grid &grid() const { return grid_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  T &operator[](Index n) { return data_[static_cast<std::size_t>(n)]; }
  const T &operator[](Index n) const { return data_[static_cast<std::size_t>(n)]; }
  T &operator()(Index i, Index j, Index k) { return (*this)[grid_.index(i, j, k)]; }
  const T &operator()(Index i, Index j, Index k) const { return (*this)[grid_.index(i, j, k)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool has_validity() const { return !valid_.empty(); }
  bool valid(Index n) const { return valid_.empty() || valid_[static_cast<std::size_t>(n)] != 0; }
  void set_valid(Index n, bool v)
  {
    if (valid_.empty()) {
      if (v) {
        return;
      }
      valid_.assign(data_.size(), 1);
    }
    valid_[static_cast<std::size_t>(n)] = v ? 1 : 0;
  }
  std::span<const std::uint8_t> validity() const { return valid_; }
  void set_validity(std::vector<std::uint8_t> flags)
  {
    if (!flags.empty() && flags.size() != data_.size()) {
      throw Error(ErrorKind::DimMismatch, "validity length does not match grid");
    }
    valid_ = std::move(flags);
  }
  Index valid_count() const
  {
    if (valid_.empty()) {
      return size();
    }
    Index n = 0;
    for (auto f : valid_) {
      n += f != 0;
    }
    return n;
  }

private:
  Grid grid_;
  std::vector<T> data_;
  std::vector<std::uint8_t> valid_;
};

using ComplexVolume = Volume<Complex>;
using RealVolume = Volume<double>;

class Mask {
public:
  Mask() = default;
  explicit Mask(const Grid &g, bool fill = false)
    : grid_(g)
    , bits_(static_cast<std::size_t>(g.size()), fill ? 1 : 0)
  {
  }

  const Grid &grid() const { return grid_; }
  Index size() const { return static_cast<Index>(bits_.size()); }
  bool operator[](Index n) const { return bits_[static_cast<std::size_t>(n)] != 0; }
  void set(Index n, bool v) { bits_[static_cast<std::size_t>(n)] = v ? 1 : 0; }
  Index count() const;

  Mask operator&(const Mask &o) const;
  Mask operator|(const Mask &o) const;
  Mask operator~() const;

private:
  Grid grid_;
  std::vector<std::uint8_t> bits_;
};

/// A line of voxels parallel to `axis`. `a` and `b` fix the other two axes in
/// (x, y, z) order with `axis` removed; [begin, end) restricts the run along
/// `axis`, end < 0 meaning the full extent.
struct LineSpec {
  Axis axis = Axis::X;
  Index a = 0;
  Index b = 0;
  Index begin = 0;
  Index end = -1;

  void validate(const Grid &g) const;
  Index resolved_end(const Grid &g) const { return end < 0 ? g.extent(axis) : end; }
  Index voxel(const Grid &g, Index t) const;
};

RealVolume magnitude(const ComplexVolume &v);
Mask mask_from_labels(const Volume<std::int32_t> &labels, std::span<const std::int32_t> keep);

/// Exact comparison including the bit patterns of every sample and the flags.
bool bit_identical(const ComplexVolume &a, const ComplexVolume &b);
bool bit_identical(const RealVolume &a, const RealVolume &b);

} // namespace boga
