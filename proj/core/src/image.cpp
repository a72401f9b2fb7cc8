#include "lus/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lus/error.hpp"

namespace lus {

namespace {

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

// Reads one PNM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  for (;;) {
    const int c = in.get();
    if (c == EOF) return tok;
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
}

struct PnmHeader {
  std::string magic;
  int width = 0, height = 0, maxval = 0;
};

PnmHeader read_pnm_header(std::istream& in, const std::filesystem::path& path) {
  PnmHeader h;
  h.magic = next_token(in);
  try {
    h.width = std::stoi(next_token(in));
    h.height = std::stoi(next_token(in));
    h.maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed PNM header");
  }
  if (h.width < 1 || h.height < 1) throw DataError(path.string() + ": invalid PNM dimensions");
  if (h.maxval != 255) {
    throw DataError(path.string() + ": unsupported maxval " + std::to_string(h.maxval) +
                    " (only 255)");
  }
  return h;
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path.string());
  return in;
}

void check_magic(std::istream& in, const std::filesystem::path& path, const char* want) {
  char m[2] = {0, 0};
  in.read(m, 2);
  if (static_cast<unsigned char>(m[0]) == 0x89 && m[1] == 'P') {
    throw DataError(path.string() + ": PNG input is not supported in this build; convert to PGM");
  }
  if (m[0] != want[0] || m[1] != want[1]) {
    throw DataError(path.string() + ": not a binary " + std::string(want) + " file");
  }
  in.seekg(0);
}

}  // namespace

GrayImage to_grayscale(const RgbImage& rgb) {
  GrayImage out(rgb.width, rgb.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double r = rgb.pixels[3 * i];
    const double g = rgb.pixels[3 * i + 1];
    const double b = rgb.pixels[3 * i + 2];
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    out.pixels[i] = static_cast<std::uint8_t>(clampi(static_cast<int>(std::floor(y + 0.5)), 0, 255));
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw DataError("resize_bilinear: target dims must be positive");
  GrayImage out(target_w, target_h);
  const double sx = static_cast<double>(img.width) / target_w;
  const double sy = static_cast<double>(img.height) / target_h;
  for (int y = 0; y < target_h; ++y) {
    double src_y = (y + 0.5) * sy - 0.5;
    src_y = std::clamp(src_y, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(src_y);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = src_y - y0;
    for (int x = 0; x < target_w; ++x) {
      double src_x = (x + 0.5) * sx - 0.5;
      src_x = std::clamp(src_x, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(src_x);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = src_x - x0;
      const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
      const double bot = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
      const double v = top * (1.0 - fy) + bot * fy;
      out.at(x, y) = static_cast<std::uint8_t>(clampi(static_cast<int>(std::floor(v + 0.5)), 0, 255));
    }
  }
  return out;
}

GrayImage resize_nearest(const GrayImage& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw DataError("resize_nearest: target dims must be positive");
  GrayImage out(target_w, target_h);
  for (int y = 0; y < target_h; ++y) {
    const int src_y = clampi(static_cast<int>((y + 0.5) * img.height / target_h), 0, img.height - 1);
    for (int x = 0; x < target_w; ++x) {
      const int src_x = clampi(static_cast<int>((x + 0.5) * img.width / target_w), 0, img.width - 1);
      out.at(x, y) = img.at(src_x, src_y);
    }
  }
  return out;
}

Tensor normalize(const GrayImage& img) {
  Tensor t(1, 1, img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    t.data[i] = static_cast<float>(img.pixels[i]) / 255.0f;
  }
  return t;
}

GrayImage denormalize(const Tensor& t) {
  GrayImage img(t.w, t.h);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const float v = t.data[i] * 255.0f;
    img.pixels[i] = static_cast<std::uint8_t>(clampi(static_cast<int>(std::floor(v + 0.5f)), 0, 255));
  }
  return img;
}

Tensor replicate_channels(const Tensor& t, int channels) {
  Tensor out(t.n, channels, t.h, t.w);
  const std::size_t plane = static_cast<std::size_t>(t.h) * t.w;
  for (int n = 0; n < t.n; ++n) {
    for (int c = 0; c < channels; ++c) {
      std::copy(t.plane(n, 0), t.plane(n, 0) + plane, out.plane(n, c));
    }
  }
  return out;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = open_binary(path);
  check_magic(in, path, "P5");
  const PnmHeader h = read_pnm_header(in, path);
  if (h.magic != "P5") throw DataError(path.string() + ": not a binary PGM (P5) file");
  GrayImage img(h.width, h.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw DataError(path.string() + ": PGM payload shorter than header promises");
  }
  return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for write: " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  auto in = open_binary(path);
  check_magic(in, path, "P6");
  const PnmHeader h = read_pnm_header(in, path);
  if (h.magic != "P6") throw DataError(path.string() + ": not a binary PPM (P6) file");
  RgbImage img(h.width, h.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw DataError(path.string() + ": PPM payload shorter than header promises");
  }
  return img;
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for write: " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

void check_pgm_readable(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing image file: " + path.string());
  auto in = open_binary(path);
  check_magic(in, path, "P5");
  const PnmHeader h = read_pnm_header(in, path);
  if (h.magic != "P5") throw DataError(path.string() + ": not a binary PGM (P5) file");
  const auto payload_start = static_cast<std::uintmax_t>(in.tellg());
  const auto need = payload_start + static_cast<std::uintmax_t>(h.width) * h.height;
  if (std::filesystem::file_size(path) < need) {
    throw DataError(path.string() + ": PGM payload shorter than header promises");
  }
}

}  // namespace lus
