#pragma once

#include <cstdint>
#include <vector>

namespace stainkit::detail {

struct Components {
  std::vector<std::int32_t> labels;  // 0 = background, 1..count
  std::vector<std::size_t> sizes;    // sizes[label - 1]
  std::int32_t count = 0;
};

/// Labels the non-zero pixels of a width x height plane. Labels are assigned
/// in raster order of each component's first pixel.
inline Components label_components(const std::vector<std::uint8_t>& binary, int width, int height,
                                   int connectivity) {
  Components out;
  out.labels.assign(binary.size(), 0);
  std::vector<std::size_t> stack;
  const int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  const int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  const int dx4[] = {0, -1, 1, 0};
  const int dy4[] = {-1, 0, 0, 1};
  const int* dx = connectivity == 8 ? dx8 : dx4;
  const int* dy = connectivity == 8 ? dy8 : dy4;
  const int neighbours = connectivity == 8 ? 8 : 4;
  const auto w = static_cast<std::size_t>(width);

  for (std::size_t start = 0; start < binary.size(); ++start) {
    if (!binary[start] || out.labels[start]) continue;
    const std::int32_t label = ++out.count;
    std::size_t size = 0;
    out.labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      for (int k = 0; k < neighbours; ++k) {
        const int nx = x + dx[k];
        const int ny = y + dy[k];
        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
        if (binary[j] && !out.labels[j]) {
          out.labels[j] = label;
          stack.push_back(j);
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

}  // namespace stainkit::detail
