#pragma once

#include <filesystem>
#include <variant>

#include "cdloss/volume.hpp"

namespace cdl {

using Volume = std::variant<VoxelGrid, BinaryMask>;

/// Format is chosen by extension:
///   .mvol  JSON sidecar {dims, spacing_mm, dtype, order, version, payload}
///          with a raw little-endian payload next to it (default: same stem,
///          .raw extension). dtype u8 loads as a mask, f32 as a grid.
///   .nii   single-file uncompressed NIfTI-1; datatype 2 (uint8) loads as a
///          mask, 16 (float32) as a grid, pixdim[1..3] is the spacing.
/// Errors: malformed_header, size_mismatch, unsupported_dtype,
/// unsupported_format, io_error.
Volume load_volume(const std::filesystem::path& path);

/// Grids are written as float32, masks as uint8.
void save_volume(const VoxelGrid& grid, const std::filesystem::path& path);
void save_volume(const BinaryMask& mask, const std::filesystem::path& path);
void save_volume(const Volume& volume, const std::filesystem::path& path);

/// Payload path a sidecar refers to when it names none.
std::filesystem::path default_payload_path(const std::filesystem::path& sidecar);

}  // namespace cdl
