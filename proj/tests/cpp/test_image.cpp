#include <doctest.h>

#include <cstdint>
#include <vector>

#include "geoloop/errors.hpp"
#include "geoloop/image.hpp"
#include "geoloop/rng.hpp"
#include "test_util.hpp"

using namespace geoloop;

namespace {

ImageRGB random_image(Rng& rng, int w, int h) {
  ImageRGB img(w, h);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

}  // namespace

TEST_CASE("png round-trips exactly") {
  Rng rng(21);
  const ImageRGB img = random_image(rng, 37, 23);
  const std::string dir = testutil::temp_dir("png");
  write_png(dir + "/img.png", img);
  const ImageRGB back = read_png(dir + "/img.png");
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.data == img.data);
}

TEST_CASE("ppm round-trips exactly") {
  Rng rng(22);
  const ImageRGB img = random_image(rng, 19, 31);
  const std::string dir = testutil::temp_dir("ppm");
  write_ppm(dir + "/img.ppm", img);
  const ImageRGB back = read_ppm(dir + "/img.ppm");
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.data == img.data);
}

TEST_CASE("16-bit gray png round-trips exactly") {
  Rng rng(23);
  const int w = 13, h = 9;
  std::vector<std::uint16_t> data(static_cast<std::size_t>(w) * h);
  for (auto& v : data) v = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
  const std::string dir = testutil::temp_dir("gray16");
  write_png_gray16(dir + "/img.png", data, w, h);
  int rw = 0, rh = 0;
  const std::vector<std::uint16_t> back =
      read_png_gray16(dir + "/img.png", &rw, &rh);
  CHECK(rw == w);
  CHECK(rh == h);
  CHECK(back == data);
}

TEST_CASE("depth maps round-trip exactly") {
  Rng rng(24);
  DepthMap depth(21, 14);
  for (auto& v : depth.data) v = static_cast<float>(rng.uniform(0.0, 30.0));
  const std::string dir = testutil::temp_dir("depth");
  write_depth(dir + "/d.depth", depth);
  const DepthMap back = read_depth(dir + "/d.depth");
  CHECK(back.width == depth.width);
  CHECK(back.height == depth.height);
  CHECK(back.data == depth.data);
}

TEST_CASE("write_image and read_image dispatch on the extension") {
  Rng rng(25);
  const ImageRGB img = random_image(rng, 8, 6);
  const std::string dir = testutil::temp_dir("dispatch");
  write_image(dir + "/a.png", img);
  write_image(dir + "/a.ppm", img);
  CHECK(read_image(dir + "/a.png").data == img.data);
  CHECK(read_image(dir + "/a.ppm").data == img.data);
}

TEST_CASE("reading a missing image reports an io error") {
  CHECK_THROWS_AS(read_png("/nonexistent/nope.png"), IoError);
  CHECK_THROWS_AS(read_ppm("/nonexistent/nope.ppm"), IoError);
  CHECK_THROWS_AS(read_depth("/nonexistent/nope.depth"), IoError);
}

TEST_CASE("image accessors address the expected bytes") {
  ImageRGB img(4, 3, {1, 2, 3});
  CHECK(img.data.size() == 36);
  CHECK((img.get(0, 0) == Rgb{1, 2, 3}));
  img.set(2, 1, {9, 8, 7});
  CHECK(img.at(2, 1, 0) == 9);
  CHECK(img.data[3 * (1 * 4 + 2) + 2] == 7);
}
