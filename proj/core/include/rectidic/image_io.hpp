#ifndef RECTIDIC_IMAGE_IO_HPP
#define RECTIDIC_IMAGE_IO_HPP

#include <filesystem>

#include "rectidic/image.hpp"

namespace rectidic {

/// Reads a PNG (8/16-bit, gray or color) or binary PGM (P5) file.
/// Intensities are normalized to [0, 1] by the source bit depth; color
/// inputs are reduced to the mean of the channels. Throws IoError.
GrayImage load_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale file; the format is chosen by extension
/// (.png or .pgm). Intensities are clamped to [0, 1] and quantized, so a
/// save/load round trip is exact after 8-bit quantization. Throws IoError.
void save_image(const GrayImage& img, const std::filesystem::path& path);

} // namespace rectidic

#endif
