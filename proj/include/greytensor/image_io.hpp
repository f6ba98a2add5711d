#pragma once

#include "greytensor/digitizer.hpp"

#include <filesystem>

namespace greytensor {

/// 16-bit binary PGM (P5, big-endian samples round(v * 65535)); 2D images only.
/// Lattice metadata travels in '#' comment lines.
void write_pgm(const std::filesystem::path& path, const GreyImage& image);
[[nodiscard]] GreyImage read_pgm(const std::filesystem::path& path);

/// Raw little-endian float32 raster at `path` plus a text header at `path` + ".hdr"
/// (dim, size, lo, a, basis, c).
void write_raw(const std::filesystem::path& path, const GreyImage& image);
[[nodiscard]] GreyImage read_raw(const std::filesystem::path& path);

/// Quantization used by the PGM writer.
[[nodiscard]] std::uint16_t quantize16(double v);

}  // namespace greytensor
