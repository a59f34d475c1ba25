#include "stainkit/image_io.hpp"

#include <algorithm>
#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace stainkit {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

bool is_image_path(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such image: " + path.string());
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw IoError("cannot decode image " + path.string());
  if (raw.depth() != CV_8U) throw IoError(path.string() + " is not an 8-bit image");

  const int w = raw.cols;
  const int h = raw.rows;
  if (raw.channels() == 1) {
    Image out(w, h, 1);
    for (int y = 0; y < h; ++y) {
      std::memcpy(&out.at(0, y), raw.ptr<std::uint8_t>(y), static_cast<std::size_t>(w));
    }
    return out;
  }
  if (raw.channels() != 3 && raw.channels() != 4) {
    throw IoError(path.string() + " has an unsupported channel count");
  }
  const int stride = raw.channels();
  Image out(w, h, 3);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = raw.ptr<std::uint8_t>(y);
    for (int x = 0; x < w; ++x) {
      // OpenCV stores BGR(A).
      out.at(x, y, 0) = row[x * stride + 2];
      out.at(x, y, 1) = row[x * stride + 1];
      out.at(x, y, 2) = row[x * stride + 0];
    }
  }
  return out;
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (!is_image_path(path)) throw IoError("unsupported image extension: " + path.string());
  if (image.channels() != 1 && image.channels() != 3) {
    throw ChannelCountError("only 1- or 3-channel images can be written");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const int w = image.width();
  const int h = image.height();
  cv::Mat mat(h, w, image.channels() == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < h; ++y) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    if (image.channels() == 1) {
      std::memcpy(row, &image.at(0, y), static_cast<std::size_t>(w));
      continue;
    }
    for (int x = 0; x < w; ++x) {
      row[x * 3 + 0] = image.at(x, y, 2);
      row[x * 3 + 1] = image.at(x, y, 1);
      row[x * 3 + 2] = image.at(x, y, 0);
    }
  }
  if (!cv::imwrite(path.string(), mat)) throw IoError("cannot write image " + path.string());
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_path(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

}  // namespace stainkit
