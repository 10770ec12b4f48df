#pragma once

// Scratch directories and hand-patched NIfTI files shared by the tests.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "cdloss/error.hpp"
#include "cdloss/io.hpp"

namespace fixture {

namespace fs = std::filesystem;

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("cdloss_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <class T>
void poke(std::string& bytes, std::size_t offset, T value) {
  std::memcpy(bytes.data() + offset, &value, sizeof(T));
}

inline cdl::ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const cdl::Error& e) {
    return e.code();
  }
  return cdl::ErrorCode::ok;
}

inline std::string message_of(auto&& f) {
  try {
    f();
  } catch (const cdl::Error& e) {
    return e.what();
  }
  return {};
}

/// A valid float32 NIfTI written by the library, then one field altered.
enum class NiftiDefect { int16_datatype, truncated_payload, bad_header_size };

inline fs::path defective_nifti(const fs::path& dir, NiftiDefect defect) {
  const cdl::GridShape s(4, 3, 2, cdl::Spacing{1.5, 1.5, 3.0});
  const auto path = dir / "defect.nii";
  cdl::save_volume(cdl::VoxelGrid::filled(s, 0.25), path);
  std::string bytes = read_bytes(path);
  switch (defect) {
    case NiftiDefect::int16_datatype:
      poke(bytes, 70, std::int16_t{4});
      poke(bytes, 72, std::int16_t{16});
      break;
    case NiftiDefect::truncated_payload:
      bytes.resize(bytes.size() - 10);
      break;
    case NiftiDefect::bad_header_size:
      poke(bytes, 0, std::int32_t{540});
      break;
  }
  write_bytes(path, bytes);
  return path;
}

/// Random grid whose values are exactly representable in float32.
inline cdl::VoxelGrid random_f32_grid(std::mt19937_64& rng, const cdl::GridShape& s) {
  std::uniform_real_distribution<float> u(-100.0f, 100.0f);
  std::vector<double> v(s.size());
  for (auto& x : v) x = static_cast<double>(u(rng));
  return cdl::VoxelGrid(s, std::move(v));
}

}  // namespace fixture
