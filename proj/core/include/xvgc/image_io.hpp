#pragma once

#include <filesystem>
#include <string>

#include "xvgc/encoder.hpp"

namespace xvgc {

// Reads PGM (P2/P5) or PPM (P3/P6); values scaled by 1/maxval into [0,1].
ImageTensor read_pnm(const std::filesystem::path& path);

// P2 PGM, values scaled to 0..255.
void write_pgm(const std::filesystem::path& path, const ImageTensor& image);

ImageTensor to_grayscale(const ImageTensor& image);

// Center-crop to square, then nearest-neighbor resize to size x size.
ImageTensor crop_resize(const ImageTensor& image, std::size_t size);

// read_pnm + grayscale/crop/resize to the encoder's input geometry.
ImageTensor load_image(const std::filesystem::path& path, std::size_t size,
                       std::size_t channels);

}  // namespace xvgc
