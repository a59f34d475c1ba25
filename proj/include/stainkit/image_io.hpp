#pragma once

#include <filesystem>
#include <vector>

#include "stainkit/raster.hpp"

namespace stainkit {

/// Reads an 8-bit PNG or TIFF as RGB (3 channels) or grey (1 channel).
/// Alpha is dropped. Throws IoError on unreadable or non-8-bit files.
Image read_image(const std::filesystem::path& path);

/// Writes PNG or TIFF depending on the extension. Parent directories are created.
void write_image(const std::filesystem::path& path, const Image& image);

bool is_image_path(const std::filesystem::path& path);

/// Image files directly inside `dir`, in lexicographic filename order.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace stainkit
