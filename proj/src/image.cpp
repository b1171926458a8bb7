#include "geoloop/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "geoloop/errors.hpp"

namespace geoloop {

ImageRGB::ImageRGB(int w, int h, Rgb fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = fill[0];
    data[i + 1] = fill[1];
    data[i + 2] = fill[2];
  }
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  throw IoError(std::string("libpng: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

}  // namespace

void write_png(const std::string& path, const ImageRGB& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
      png_write_row(png, const_cast<png_bytep>(&img.data[3ull * y * img.width]));
    }
    png_write_end(png, info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

ImageRGB read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  ImageRGB img;
  try {
    png_init_io(png, fp.get());
    png_read_info(png, info);
    // Normalize everything to 8-bit RGB.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(img.width) * 3) {
      throw IoError(path + ": unexpected PNG row size");
    }
    img.data.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y) {
      png_read_row(png, &img.data[3ull * y * img.width], nullptr);
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png_gray16(const std::string& path,
                      const std::vector<std::uint16_t>& data, int width,
                      int height) {
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw SchemaError("write_png_gray16: size mismatch");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::uint16_t v = data[static_cast<std::size_t>(y) * width + x];
        row[2 * x] = static_cast<std::uint8_t>(v >> 8);
        row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint16_t> read_png_gray16(const std::string& path, int* width,
                                           int* height) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, png_warn_fn);
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint16_t> out;
  try {
    png_init_io(png, fp.get());
    png_read_info(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(png, info) != 16) {
      throw IoError(path + ": expected 16-bit grayscale PNG");
    }
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    out.resize(static_cast<std::size_t>(w) * h);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 2);
    for (int y = 0; y < h; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (int x = 0; x < w; ++x) {
        out[static_cast<std::size_t>(y) * w + x] =
            static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
      }
    }
    if (width) *width = w;
    if (height) *height = h;
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_ppm(const std::string& path, const ImageRGB& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw IoError("write failed: " + path);
}

ImageRGB read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw IoError(path + ": not an 8-bit P6 PPM");
  }
  in.get();  // single whitespace after header
  ImageRGB img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (!in) throw IoError(path + ": truncated PPM");
  return img;
}

void write_depth(const std::string& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const std::uint32_t wh[2] = {static_cast<std::uint32_t>(depth.width),
                               static_cast<std::uint32_t>(depth.height)};
  out.write(reinterpret_cast<const char*>(wh), 8);
  out.write(reinterpret_cast<const char*>(depth.data.data()),
            static_cast<std::streamsize>(depth.data.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path);
}

DepthMap read_depth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::uint32_t wh[2] = {0, 0};
  in.read(reinterpret_cast<char*>(wh), 8);
  if (!in || wh[0] == 0 || wh[1] == 0 || wh[0] > 1u << 20 || wh[1] > 1u << 20) {
    throw IoError(path + ": bad depth header");
  }
  DepthMap depth(static_cast<int>(wh[0]), static_cast<int>(wh[1]));
  in.read(reinterpret_cast<char*>(depth.data.data()),
          static_cast<std::streamsize>(depth.data.size() * sizeof(float)));
  if (!in) throw IoError(path + ": truncated depth data");
  return depth;
}

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

void write_image(const std::string& path, const ImageRGB& img) {
  if (ends_with(path, ".ppm")) {
    write_ppm(path, img);
  } else {
    write_png(path, img);
  }
}

ImageRGB read_image(const std::string& path) {
  if (ends_with(path, ".ppm")) return read_ppm(path);
  return read_png(path);
}

}  // namespace geoloop
