#include "cdloss/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cdl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
T byteswap(T v) {
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

template <class T>
T read_scalar(const unsigned char* p, bool swap) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return swap ? byteswap(v) : v;
}

// Stored values are little-endian regardless of host order.
template <class T>
void put_le(std::string& out, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return std::move(os).str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io_error, "short write to '" + path.string() + "'");
}

[[noreturn]] void size_error(const fs::path& path, std::size_t expected, std::size_t actual) {
  std::ostringstream os;
  os << path.string() << ": payload holds " << actual << " bytes, expected " << expected;
  fail(ErrorCode::size_mismatch, os.str());
}

BinaryMask decode_u8(const GridShape& shape, const unsigned char* data, const fs::path& path) {
  std::vector<std::uint8_t> bits(data, data + shape.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) {
      std::ostringstream os;
      os << path.string() << ": mask payload holds value " << int(bits[i]) << " at voxel " << i
         << "; only 0 and 1 are allowed";
      fail(ErrorCode::invalid_argument, os.str());
    }
  }
  return BinaryMask(shape, std::move(bits));
}

VoxelGrid decode_f32(const GridShape& shape, const unsigned char* data, bool swap, double slope, double inter,
                     const fs::path& path) {
  std::vector<double> v(shape.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float f = read_scalar<float>(data + 4 * i, swap);
    if (!std::isfinite(f)) {
      std::ostringstream os;
      os << path.string() << ": non-finite value at voxel " << i;
      fail(ErrorCode::invalid_argument, os.str());
    }
    v[i] = static_cast<double>(f) * slope + inter;
  }
  return VoxelGrid(shape, std::move(v));
}

std::string encode(const Volume& vol) {
  std::string out;
  if (const auto* m = std::get_if<BinaryMask>(&vol)) {
    out.assign(m->bits().begin(), m->bits().end());
  } else {
    const auto& g = std::get<VoxelGrid>(vol);
    out.reserve(4 * g.size());
    for (double x : g.values()) put_le(out, static_cast<float>(x));
  }
  return out;
}

const GridShape& shape_of(const Volume& vol) {
  return std::visit([](const auto& v) -> const GridShape& { return v.shape(); }, vol);
}

// ---------------------------------------------------------------------------
// Native container

[[noreturn]] void header_error(const fs::path& path, const std::string& what) {
  fail(ErrorCode::malformed_header, path.string() + ": " + what);
}

Volume load_container(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    header_error(path, std::string("sidecar is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) header_error(path, "sidecar must be a JSON object");

  auto triple = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_array() || doc[key].size() != 3) {
      header_error(path, std::string("'") + key + "' must be an array of three numbers");
    }
    return doc[key];
  };
  const auto& dims = triple("dims");
  const auto& spacing = triple("spacing_mm");
  std::size_t n[3];
  double s[3];
  for (int i = 0; i < 3; ++i) {
    if (!dims[i].is_number_unsigned() || dims[i].get<std::uint64_t>() == 0) {
      header_error(path, "'dims' entries must be positive integers");
    }
    n[i] = dims[i].get<std::size_t>();
    if (!spacing[i].is_number() || !(spacing[i].get<double>() > 0.0)) {
      header_error(path, "'spacing_mm' entries must be positive numbers");
    }
    s[i] = spacing[i].get<double>();
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) header_error(path, "missing 'version'");
  if (doc["version"].get<int>() != 1) {
    fail(ErrorCode::unsupported_format, path.string() + ": container version " +
                                            doc["version"].dump() + " is not supported (expected 1)");
  }
  if (!doc.contains("order") || !doc["order"].is_string()) header_error(path, "missing 'order'");
  if (doc["order"].get<std::string>() != "x-fastest") {
    fail(ErrorCode::unsupported_format, path.string() + ": only x-fastest order is supported");
  }
  if (!doc.contains("dtype") || !doc["dtype"].is_string()) header_error(path, "missing 'dtype'");
  const auto dtype = doc["dtype"].get<std::string>();
  if (dtype != "u8" && dtype != "f32") {
    fail(ErrorCode::unsupported_dtype, path.string() + ": dtype '" + dtype + "' is not supported (u8, f32)");
  }
  fs::path payload = default_payload_path(path);
  if (doc.contains("payload")) {
    if (!doc["payload"].is_string()) header_error(path, "'payload' must be a file name");
    payload = path.parent_path() / doc["payload"].get<std::string>();
  }

  const GridShape shape(n[0], n[1], n[2], Spacing{s[0], s[1], s[2]});
  const std::string bytes = read_file(payload);
  const std::size_t width = dtype == "u8" ? 1 : 4;
  if (bytes.size() != shape.size() * width) size_error(payload, shape.size() * width, bytes.size());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (dtype == "u8") return decode_u8(shape, data, payload);
  return decode_f32(shape, data, std::endian::native == std::endian::big, 1.0, 0.0, payload);
}

void save_container(const Volume& vol, const fs::path& path) {
  const auto& shape = shape_of(vol);
  const fs::path payload = default_payload_path(path);
  json doc;
  doc["dims"] = {shape.nx(), shape.ny(), shape.nz()};
  doc["spacing_mm"] = {shape.spacing().x, shape.spacing().y, shape.spacing().z};
  doc["dtype"] = std::holds_alternative<BinaryMask>(vol) ? "u8" : "f32";
  doc["order"] = "x-fastest";
  doc["version"] = 1;
  doc["payload"] = payload.filename().string();
  write_file(payload, encode(vol));
  write_file(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// NIfTI-1, single file

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;
constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtFloat32 = 16;

namespace off {
constexpr std::size_t sizeof_hdr = 0, dim = 40, datatype = 70, bitpix = 72, pixdim = 76, vox_offset = 108,
                      scl_slope = 112, scl_inter = 116, xyzt_units = 123, qform_code = 252, sform_code = 254,
                      magic = 344;
}

Volume load_nifti(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < kHeaderSize) {
    header_error(path, "file holds " + std::to_string(bytes.size()) + " bytes, shorter than the 348-byte header");
  }
  const auto* h = reinterpret_cast<const unsigned char*>(bytes.data());
  bool swap = false;
  const auto sizeof_hdr = read_scalar<std::int32_t>(h + off::sizeof_hdr, false);
  if (sizeof_hdr != 348) {
    if (byteswap(sizeof_hdr) != 348) header_error(path, "sizeof_hdr is " + std::to_string(sizeof_hdr) + ", not 348");
    swap = true;
  }
  if (std::memcmp(h + off::magic, "ni1\0", 4) == 0) {
    fail(ErrorCode::unsupported_format, path.string() + ": two-file NIfTI (.hdr/.img) is not supported");
  }
  if (std::memcmp(h + off::magic, "n+1\0", 4) != 0) header_error(path, "magic is not \"n+1\"");

  std::int16_t dim[8];
  for (int i = 0; i < 8; ++i) dim[i] = read_scalar<std::int16_t>(h + off::dim + 2 * i, swap);
  if (dim[0] < 1 || dim[0] > 7) header_error(path, "dim[0] = " + std::to_string(dim[0]) + " is outside 1..7");
  std::size_t n[3] = {1, 1, 1};
  for (int i = 1; i <= dim[0]; ++i) {
    if (dim[i] < 1) header_error(path, "dim[" + std::to_string(i) + "] must be positive");
    if (i <= 3) {
      n[i - 1] = static_cast<std::size_t>(dim[i]);
    } else if (dim[i] != 1) {
      fail(ErrorCode::unsupported_format, path.string() + ": volumes with more than three dimensions are not supported");
    }
  }

  const auto datatype = read_scalar<std::int16_t>(h + off::datatype, swap);
  const auto bitpix = read_scalar<std::int16_t>(h + off::bitpix, swap);
  if (datatype != kDtUint8 && datatype != kDtFloat32) {
    fail(ErrorCode::unsupported_dtype, path.string() + ": NIfTI datatype " + std::to_string(datatype) +
                                           " is not supported (2 = uint8, 16 = float32)");
  }
  const std::size_t width = datatype == kDtUint8 ? 1 : 4;
  if (bitpix != static_cast<std::int16_t>(8 * width)) {
    header_error(path, "bitpix " + std::to_string(bitpix) + " does not match datatype " + std::to_string(datatype));
  }

  double s[3];
  for (int i = 0; i < 3; ++i) {
    const float v = read_scalar<float>(h + off::pixdim + 4 * (i + 1), swap);
    if (!std::isfinite(v) || v < 0.0f) header_error(path, "pixdim[" + std::to_string(i + 1) + "] is invalid");
    // Unset spacing on singleton axes reads as 1 mm.
    s[i] = v > 0.0f ? static_cast<double>(v) : 1.0;
  }

  const float vox_offset = read_scalar<float>(h + off::vox_offset, swap);
  if (!(vox_offset >= static_cast<float>(kHeaderSize)) || vox_offset != std::floor(vox_offset)) {
    header_error(path, "vox_offset " + std::to_string(vox_offset) + " is invalid");
  }
  const auto offset = static_cast<std::size_t>(vox_offset);

  double slope = read_scalar<float>(h + off::scl_slope, swap);
  double inter = read_scalar<float>(h + off::scl_inter, swap);
  if (slope == 0.0 || !std::isfinite(slope)) {
    slope = 1.0;
    inter = 0.0;
  }
  if (!std::isfinite(inter)) inter = 0.0;
  if (datatype == kDtUint8 && (slope != 1.0 || inter != 0.0)) {
    fail(ErrorCode::unsupported_format, path.string() + ": intensity scaling on a uint8 mask is not supported");
  }

  const GridShape shape(n[0], n[1], n[2], Spacing{s[0], s[1], s[2]});
  const std::size_t need = shape.size() * width;
  const std::size_t have = bytes.size() > offset ? bytes.size() - offset : 0;
  if (have < need) size_error(path, need, have);
  const auto* data = h + offset;
  if (datatype == kDtUint8) return decode_u8(shape, data, path);
  return decode_f32(shape, data, swap, slope, inter, path);
}

void save_nifti(const Volume& vol, const fs::path& path) {
  const auto& shape = shape_of(vol);
  for (std::size_t d : {shape.nx(), shape.ny(), shape.nz()}) {
    if (d > 32767) fail(ErrorCode::invalid_argument, "NIfTI-1 dimensions are limited to 32767");
  }
  const bool is_mask = std::holds_alternative<BinaryMask>(vol);
  std::string hdr(kDataOffset, '\0');
  auto put = [&hdr](std::size_t at, auto v) {
    std::string b;
    put_le(b, v);
    hdr.replace(at, b.size(), b);
  };
  put(off::sizeof_hdr, std::int32_t{348});
  const std::int16_t dims[8] = {3, static_cast<std::int16_t>(shape.nx()), static_cast<std::int16_t>(shape.ny()),
                                static_cast<std::int16_t>(shape.nz()), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put(off::dim + 2 * i, dims[i]);
  put(off::datatype, is_mask ? kDtUint8 : kDtFloat32);
  put(off::bitpix, std::int16_t(is_mask ? 8 : 32));
  const float pix[8] = {1.0f, static_cast<float>(shape.spacing().x), static_cast<float>(shape.spacing().y),
                        static_cast<float>(shape.spacing().z), 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) put(off::pixdim + 4 * i, pix[i]);
  put(off::vox_offset, static_cast<float>(kDataOffset));
  put(off::scl_slope, 1.0f);
  put(off::scl_inter, 0.0f);
  hdr[off::xyzt_units] = 2;  // millimeters
  put(off::qform_code, std::int16_t{0});
  put(off::sform_code, std::int16_t{0});
  std::memcpy(hdr.data() + off::magic, "n+1\0", 4);
  write_file(path, hdr + encode(vol));
}

bool has_extension(const fs::path& path, std::string_view ext) {
  const auto name = path.filename().string();
  return name.size() >= ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0;
}

enum class Format { container, nifti };

Format format_of(const fs::path& path) {
  if (has_extension(path, ".nii.gz")) {
    fail(ErrorCode::unsupported_format, path.string() + ": compressed NIfTI is not supported");
  }
  if (has_extension(path, ".nii")) return Format::nifti;
  if (has_extension(path, ".mvol")) return Format::container;
  fail(ErrorCode::unsupported_format, path.string() + ": unknown volume extension (use .mvol or .nii)");
}

}  // namespace

fs::path default_payload_path(const fs::path& sidecar) {
  fs::path p = sidecar;
  p.replace_extension(".raw");
  return p;
}

Volume load_volume(const fs::path& path) {
  return format_of(path) == Format::nifti ? load_nifti(path) : load_container(path);
}

void save_volume(const Volume& volume, const fs::path& path) {
  if (format_of(path) == Format::nifti) {
    save_nifti(volume, path);
  } else {
    save_container(volume, path);
  }
}

void save_volume(const VoxelGrid& grid, const fs::path& path) { save_volume(Volume(grid), path); }
void save_volume(const BinaryMask& mask, const fs::path& path) { save_volume(Volume(mask), path); }

}  // namespace cdl
