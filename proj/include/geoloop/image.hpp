#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace geoloop {

using Rgb = std::array<std::uint8_t, 3>;

// Interleaved 8-bit RGB, row-major, origin top-left.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height

  ImageRGB() = default;
  ImageRGB(int w, int h, Rgb fill = {0, 0, 0});

  std::uint8_t& at(int x, int y, int c) { return data[3 * (y * width + x) + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return data[3 * (y * width + x) + c];
  }
  void set(int x, int y, Rgb rgb) {
    std::uint8_t* p = &data[3 * (y * width + x)];
    p[0] = rgb[0];
    p[1] = rgb[1];
    p[2] = rgb[2];
  }
  Rgb get(int x, int y) const {
    const std::uint8_t* p = &data[3 * (y * width + x)];
    return {p[0], p[1], p[2]};
  }
  std::size_t pixels() const {
    return static_cast<std::size_t>(width) * height;
  }
};

// Row-major float depth in scene units; 0 means "no geometry".
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  DepthMap() = default;
  DepthMap(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

// PNG, 8-bit RGB.
void write_png(const std::string& path, const ImageRGB& img);
ImageRGB read_png(const std::string& path);

// PNG, 16-bit single channel (big-endian per the format).
void write_png_gray16(const std::string& path, const std::vector<std::uint16_t>& data,
                      int width, int height);
std::vector<std::uint16_t> read_png_gray16(const std::string& path, int* width,
                                           int* height);

// Binary PPM (P6), codec-free escape hatch.
void write_ppm(const std::string& path, const ImageRGB& img);
ImageRGB read_ppm(const std::string& path);

// Depth file: 8-byte header (uint32 width, uint32 height, little-endian)
// followed by row-major little-endian float32.
void write_depth(const std::string& path, const DepthMap& depth);
DepthMap read_depth(const std::string& path);

// Dispatches on extension (.png / .ppm).
void write_image(const std::string& path, const ImageRGB& img);
ImageRGB read_image(const std::string& path);

}  // namespace geoloop
