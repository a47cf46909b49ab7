#pragma once

#include <filesystem>

#include "skyline/image.hpp"

namespace skyline {

/// Loads an 8-bit PNG (gray, gray+alpha, RGB, RGBA) or binary PPM/PGM
/// (P6/P5). Intensities are divided by 255; gray sources are replicated into
/// all three channels. Throws IoError on unreadable or unsupported files.
RgbImage load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG with fixed compression settings, so identical
/// images always produce identical bytes.
void save_png(const RgbImage& img, const std::filesystem::path& path);
void save_ppm(const RgbImage& img, const std::filesystem::path& path);

bool is_image_file(const std::filesystem::path& path);

/// [0,1] -> 0..255 with round-half-up.
unsigned char to_byte(double v) noexcept;

}  // namespace skyline
