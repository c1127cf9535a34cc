#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <doctest.h>

#include "boga/error.hpp"
#include "boga/volume.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag)
  {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("boga-test-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &rel) const { return path_ / rel; }

private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path &p)
{
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path &p, const std::string &content)
{
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << content;
}

template <typename Fn>
boga::ErrorKind error_kind(Fn &&fn)
{
  try {
    fn();
  } catch (const boga::Error &e) {
    return e.kind();
  }
  FAIL("expected a boga::Error");
  return boga::ErrorKind::InvalidArgument;
}

} // namespace testing
