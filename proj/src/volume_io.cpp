#include "boga/volume_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace boga {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

void put_f32(std::vector<char> &out, double value)
{
  auto const bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int b = 0; b < 4; b++) {
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  }
}

double get_f32(const char *p)
{
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; b++) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  }
  return static_cast<double>(std::bit_cast<float>(bits));
}

template <typename T>
void append_validity(std::vector<char> &out, const Volume<T> &v)
{
  std::size_t const nbytes = (static_cast<std::size_t>(v.size()) + 7) / 8;
  std::size_t const start = out.size();
  out.resize(start + nbytes, 0);
  for (Index n = 0; n < v.size(); n++) {
    if (v.valid(n)) {
      out[start + static_cast<std::size_t>(n / 8)] |= static_cast<char>(1u << (n % 8));
    }
  }
}

json make_header(const Grid &g, const char *dtype, bool flags, std::size_t payload_bytes)
{
  return json{{"format", "boga-volume"},
              {"version", kFormatVersion},
              {"dims", {g.nx, g.ny, g.nz}},
              {"voxel_mm", {g.dx, g.dy, g.dz}},
              {"dtype", dtype},
              {"byte_order", "little"},
              {"validity", flags ? "bitset" : "none"},
              {"payload_bytes", payload_bytes}};
}

void write_pair(const fs::path &stem, const json &header, const std::vector<char> &payload)
{
  auto const paths = volume_paths(stem);
  if (paths.header.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(paths.header.parent_path(), ec);
  }
  std::ofstream h(paths.header, std::ios::binary | std::ios::trunc);
  std::ofstream p(paths.payload, std::ios::binary | std::ios::trunc);
  if (!h || !p) {
    throw Error(ErrorKind::Io, "cannot write " + paths.header.string());
  }
  h << header.dump(2) << '\n';
  p.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!h || !p) {
    throw Error(ErrorKind::Io, "write failed for " + paths.header.string());
  }
}

struct RawFile {
  Grid grid;
  std::string dtype;
  bool flags = false;
  std::vector<char> payload;
};

RawFile read_pair(const fs::path &stem)
{
  auto const paths = volume_paths(stem);
  std::ifstream h(paths.header, std::ios::binary);
  if (!h) {
    throw Error(ErrorKind::Io, "cannot open " + paths.header.string());
  }
  json header;
  try {
    header = json::parse(h);
  } catch (const json::exception &e) {
    throw Error(ErrorKind::Io, "malformed header " + paths.header.string() + ": " + e.what());
  }
  RawFile f;
  try {
    auto const dims = header.at("dims").get<std::vector<Index>>();
    auto const vox = header.at("voxel_mm").get<std::vector<double>>();
    if (dims.size() != 3 || vox.size() != 3) {
      throw Error(ErrorKind::DimMismatch, "header dims/voxel_mm must have 3 entries");
    }
    f.grid = Grid(dims[0], dims[1], dims[2], vox[0], vox[1], vox[2]);
    f.dtype = header.at("dtype").get<std::string>();
    if (header.value("byte_order", "little") != "little") {
      throw Error(ErrorKind::UnknownDtype, "unsupported byte order");
    }
    f.flags = header.value("validity", "none") == "bitset";
  } catch (const json::exception &e) {
    throw Error(ErrorKind::Io, "bad header field in " + paths.header.string() + ": " + e.what());
  }
  if (f.dtype != "complex64" && f.dtype != "float32") {
    throw Error(ErrorKind::UnknownDtype, "dtype '" + f.dtype + "'");
  }
  std::ifstream p(paths.payload, std::ios::binary);
  if (!p) {
    throw Error(ErrorKind::Io, "cannot open " + paths.payload.string());
  }
  f.payload.assign(std::istreambuf_iterator<char>(p), std::istreambuf_iterator<char>());

  std::size_t const n = static_cast<std::size_t>(f.grid.size());
  std::size_t const sample = f.dtype == "complex64" ? 8 : 4;
  std::size_t const expect = n * sample + (f.flags ? (n + 7) / 8 : 0);
  std::size_t const samples_bytes = f.payload.size() - (f.flags ? std::min(f.payload.size(), (n + 7) / 8) : 0);
  if (samples_bytes % sample != 0) {
    throw Error(ErrorKind::DimMismatch, "payload is not a whole number of " + f.dtype + " samples");
  }
  if (f.payload.size() < expect) {
    throw Error(ErrorKind::TruncatedPayload,
                std::to_string(f.payload.size()) + " bytes, header promises " + std::to_string(expect));
  }
  if (f.payload.size() > expect) {
    throw Error(ErrorKind::DimMismatch, "payload longer than header promises");
  }
  return f;
}

template <typename T>
void read_validity(Volume<T> &v, const RawFile &f, std::size_t offset)
{
  if (!f.flags) {
    return;
  }
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(v.size()));
  for (Index n = 0; n < v.size(); n++) {
    auto const byte = static_cast<unsigned char>(f.payload[offset + static_cast<std::size_t>(n / 8)]);
    flags[static_cast<std::size_t>(n)] = (byte >> (n % 8)) & 1u;
  }
  v.set_validity(std::move(flags));
}

ComplexVolume decode_complex(const RawFile &f)
{
  ComplexVolume v(f.grid);
  for (Index n = 0; n < v.size(); n++) {
    auto const *p = f.payload.data() + 8 * n;
    v[n] = Complex(get_f32(p), get_f32(p + 4));
  }
  read_validity(v, f, static_cast<std::size_t>(8 * v.size()));
  return v;
}

RealVolume decode_real(const RawFile &f)
{
  RealVolume v(f.grid);
  for (Index n = 0; n < v.size(); n++) {
    v[n] = get_f32(f.payload.data() + 4 * n);
  }
  read_validity(v, f, static_cast<std::size_t>(4 * v.size()));
  return v;
}

} // namespace

VolumePaths volume_paths(const fs::path &stem)
{
  std::string s = stem.string();
  for (std::string const suffix : {".vol.json", ".vol.raw"}) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      s.erase(s.size() - suffix.size());
      break;
    }
  }
  return {fs::path(s + ".vol.json"), fs::path(s + ".vol.raw")};
}

void save_volume(const ComplexVolume &v, const fs::path &stem)
{
  std::vector<char> payload;
  payload.reserve(static_cast<std::size_t>(8 * v.size()));
  for (Index n = 0; n < v.size(); n++) {
    auto const z = v[n];
    if (v.valid(n) && !(std::isfinite(z.real()) && std::isfinite(z.imag()))) {
      throw Error(ErrorKind::NonFiniteSample, "voxel " + std::to_string(n) + " is not finite");
    }
    put_f32(payload, z.real());
    put_f32(payload, z.imag());
  }
  if (v.has_validity()) {
    append_validity(payload, v);
  }
  write_pair(stem, make_header(v.grid(), "complex64", v.has_validity(), payload.size()), payload);
}

void save_volume(const RealVolume &v, const fs::path &stem)
{
  std::vector<char> payload;
  payload.reserve(static_cast<std::size_t>(4 * v.size()));
  for (Index n = 0; n < v.size(); n++) {
    if (v.valid(n) && !std::isfinite(v[n])) {
      throw Error(ErrorKind::NonFiniteSample, "voxel " + std::to_string(n) + " is not finite");
    }
    put_f32(payload, v[n]);
  }
  if (v.has_validity()) {
    append_validity(payload, v);
  }
  write_pair(stem, make_header(v.grid(), "float32", v.has_validity(), payload.size()), payload);
}

AnyVolume load_volume(const fs::path &stem)
{
  auto const f = read_pair(stem);
  if (f.dtype == "complex64") {
    return decode_complex(f);
  }
  return decode_real(f);
}

ComplexVolume storage_rounded(const ComplexVolume &v)
{
  ComplexVolume out = v;
  for (Index n = 0; n < out.size(); n++) {
    out[n] = {static_cast<double>(static_cast<float>(v[n].real())), static_cast<double>(static_cast<float>(v[n].imag()))};
  }
  return out;
}

RealVolume storage_rounded(const RealVolume &v)
{
  RealVolume out = v;
  for (Index n = 0; n < out.size(); n++) {
    out[n] = static_cast<double>(static_cast<float>(v[n]));
  }
  return out;
}

ComplexVolume load_complex_volume(const fs::path &stem)
{
  auto v = load_volume(stem);
  if (auto *c = std::get_if<ComplexVolume>(&v)) {
    return std::move(*c);
  }
  throw Error(ErrorKind::UnknownDtype, stem.string() + " is not complex64");
}

RealVolume load_real_volume(const fs::path &stem)
{
  auto v = load_volume(stem);
  if (auto *r = std::get_if<RealVolume>(&v)) {
    return std::move(*r);
  }
  throw Error(ErrorKind::UnknownDtype, stem.string() + " is not float32");
}

} // namespace boga
