#include "boga/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace boga {

namespace {

Image8 render_impl(const RealVolume &v, Axis axis, Index index, Window w, const Mask *mask)
{
  auto const &g = v.grid();
  if (index < 0 || index >= g.extent(axis)) {
    throw Error(ErrorKind::OutOfRange,
                "slice " + std::to_string(index) + " outside [0, " + std::to_string(g.extent(axis)) + ")");
  }
  if (!(w.lo < w.hi)) {
    throw Error(ErrorKind::DegenerateWindow, "window lo must be < hi");
  }
  if (mask) {
    require_same_grid(g, mask->grid(), "render mask");
  }

  Image8 img;
  switch (axis) {
  case Axis::Z: img.width = g.nx; img.height = g.ny; break;
  case Axis::Y: img.width = g.nx; img.height = g.nz; break;
  case Axis::X: img.width = g.ny; img.height = g.nz; break;
  }
  img.pixels.assign(static_cast<std::size_t>(img.width * img.height), 0);

  double const scale = 255.0 / (w.hi - w.lo);
  for (Index row = 0; row < img.height; row++) {
    for (Index col = 0; col < img.width; col++) {
      Index n = 0;
      switch (axis) {
      case Axis::Z: n = g.index(col, row, index); break;
      case Axis::Y: n = g.index(col, index, row); break;
      case Axis::X: n = g.index(index, col, row); break;
      }
      if (!v.valid(n) || (mask && !(*mask)[n])) {
        continue;
      }
      double const p = std::clamp((v[n] - w.lo) * scale, 0.0, 255.0);
      img.pixels[static_cast<std::size_t>(row * img.width + col)] = static_cast<std::uint8_t>(std::lround(p));
    }
  }
  return img;
}

} // namespace

Image8 render_slice(const RealVolume &v, Axis axis, Index index, Window window)
{
  return render_impl(v, axis, index, window, nullptr);
}

Image8 render_slice(const RealVolume &v, Axis axis, Index index, Window window, const Mask &mask)
{
  return render_impl(v, axis, index, window, &mask);
}

void write_pgm(const Image8 &img, const std::filesystem::path &path)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
  f << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  f.write(reinterpret_cast<const char *>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!f) {
    throw Error(ErrorKind::Io, "write failed for " + path.string());
  }
}

} // namespace boga
