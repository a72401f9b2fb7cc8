#include <fstream>

#include "doctest.h"
#include "lus/error.hpp"
#include "lus/image.hpp"
#include "lus/rng.hpp"
#include "support/temp_dir.hpp"

using namespace lus;

TEST_CASE("to_grayscale applies BT.601 luma with half-up rounding") {
  RgbImage rgb(3, 1);
  // white, pure red, mid gray
  std::uint8_t px[] = {255, 255, 255, 255, 0, 0, 77, 77, 77};
  std::copy(std::begin(px), std::end(px), rgb.pixels.begin());
  GrayImage g = to_grayscale(rgb);
  CHECK(g.pixels[0] == 255);
  CHECK(g.pixels[1] == 76);  // 0.299 * 255 = 76.245
  CHECK(g.pixels[2] == 77);  // equal channels pass through
}

TEST_CASE("to_grayscale leaves gray inputs unchanged") {
  Pcg32 rng(5, 5);
  RgbImage rgb(8, 4);
  GrayImage want(8, 4);
  for (std::size_t i = 0; i < want.pixels.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(rng.bounded(256));
    want.pixels[i] = v;
    rgb.pixels[3 * i] = rgb.pixels[3 * i + 1] = rgb.pixels[3 * i + 2] = v;
  }
  CHECK(to_grayscale(rgb) == want);
}

TEST_CASE("resize_bilinear identity and constants") {
  GrayImage img(5, 4);
  Pcg32 rng(6, 6);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.bounded(256));
  CHECK(resize_bilinear(img, 5, 4) == img);

  GrayImage flat(7, 9, 133);
  GrayImage smaller = resize_bilinear(flat, 3, 2);
  for (auto p : smaller.pixels) CHECK(p == 133);
  GrayImage larger = resize_bilinear(flat, 17, 11);
  for (auto p : larger.pixels) CHECK(p == 133);

  CHECK_THROWS_AS(resize_bilinear(img, 0, 4), DataError);
}

TEST_CASE("resize_bilinear matches hand-evaluated samples on a gradient") {
  // v(x, y) = 10 + 20x + 40y; bilinear interpolation reproduces the plane,
  // so the 2x2 output samples it at source coords (0.5, 0.5) .. (2.5, 2.5).
  GrayImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<std::uint8_t>(10 + 20 * x + 40 * y);
  GrayImage out = resize_bilinear(img, 2, 2);
  const int want[2][2] = {{40, 80}, {120, 160}};
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      CHECK(std::abs(static_cast<int>(out.at(x, y)) - want[y][x]) <= 1);
    }
}

TEST_CASE("normalize scales to [0,1] as a (1,1,H,W) tensor") {
  GrayImage img(2, 2);
  img.pixels = {255, 0, 128, 51};
  Tensor t = normalize(img);
  CHECK(t.n == 1);
  CHECK(t.c == 1);
  CHECK(t.h == 2);
  CHECK(t.w == 2);
  CHECK(t.data[0] == doctest::Approx(1.0f));
  CHECK(t.data[1] == doctest::Approx(0.0f));
  CHECK(t.data[2] == doctest::Approx(128.0f / 255.0f));
  CHECK(t.data[3] == doctest::Approx(0.2f));
}

TEST_CASE("normalize then denormalize round-trips every intensity") {
  GrayImage img(16, 16);
  for (int i = 0; i < 256; ++i) img.pixels[i] = static_cast<std::uint8_t>(i);
  CHECK(denormalize(normalize(img)) == img);
}

TEST_CASE("replicate_channels copies the plane") {
  GrayImage img(3, 2);
  img.pixels = {1, 2, 3, 4, 5, 6};
  Tensor t = replicate_channels(normalize(img), 3);
  CHECK(t.c == 3);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 6; ++i) CHECK(t.plane(0, c)[i] == t.plane(0, 0)[i]);
}

TEST_CASE("PGM round trip and error reporting") {
  test::TempDir dir;
  GrayImage img(6, 3);
  Pcg32 rng(8, 8);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.bounded(256));
  const auto p = dir.path() / "img.pgm";
  write_pgm(img, p);
  CHECK(read_pgm(p) == img);
  CHECK_NOTHROW(check_pgm_readable(p));

  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_pgm(dir.path() / "nope.pgm"), DataError);
    CHECK_THROWS_AS(check_pgm_readable(dir.path() / "nope.pgm"), DataError);
  }
  SUBCASE("wrong magic") {
    std::ofstream f(dir.path() / "bad.pgm", std::ios::binary);
    f << "P2\n2 2\n255\n0 0 0 0\n";
    f.close();
    CHECK_THROWS_AS(read_pgm(dir.path() / "bad.pgm"), DataError);
  }
  SUBCASE("png magic gets a dedicated message") {
    std::ofstream f(dir.path() / "x.png", std::ios::binary);
    const unsigned char sig[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    f.write(reinterpret_cast<const char*>(sig), sizeof sig);
    f.close();
    CHECK_THROWS_WITH_AS(read_pgm(dir.path() / "x.png"), doctest::Contains("PNG"), DataError);
  }
  SUBCASE("truncated payload") {
    std::ofstream f(dir.path() / "short.pgm", std::ios::binary);
    f << "P5\n4 4\n255\n";
    f << "abc";  // 3 of 16 bytes
    f.close();
    CHECK_THROWS_AS(read_pgm(dir.path() / "short.pgm"), DataError);
    CHECK_THROWS_AS(check_pgm_readable(dir.path() / "short.pgm"), DataError);
  }
  SUBCASE("unsupported maxval") {
    std::ofstream f(dir.path() / "deep.pgm", std::ios::binary);
    f << "P5\n2 2\n65535\n";
    f.write("\0\0\0\0\0\0\0\0", 8);
    f.close();
    CHECK_THROWS_AS(read_pgm(dir.path() / "deep.pgm"), DataError);
  }
}

TEST_CASE("PPM round trip") {
  test::TempDir dir;
  RgbImage img(4, 2);
  Pcg32 rng(9, 9);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.bounded(256));
  const auto p = dir.path() / "img.ppm";
  write_ppm(img, p);
  CHECK(read_ppm(p) == img);
}
