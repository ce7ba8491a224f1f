#include "mockshade/image_io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mockshade {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

namespace {

struct ReadCursor {
  const Bytes* bytes;
  std::size_t offset;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(out, cursor->bytes->data() + cursor->offset, length);
  cursor->offset += length;
}

void png_write_to_memory(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp, png_const_charp message) { throw IoError(message); }

void png_warn_silent(png_structp, png_const_charp) {}

Bytes encode_png_raw(int width, int height, int channels, int bits,
                     const std::vector<std::uint16_t>& samples) {
  if (bits != 8 && bits != 16) throw IoError("PNG bit depth must be 8 or 16");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw,
                                            png_warn_silent);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  Bytes out;
  try {
    png_set_write_fn(png, &out, png_write_to_memory, png_flush_noop);
    const int color_type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGBA;
    png_set_IHDR(png, info, width, height, bits, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 3);
    png_write_info(png, info);
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * (bits / 8);
    std::vector<png_byte> row(row_bytes);
    for (int y = 0; y < height; ++y) {
      for (int i = 0; i < width * channels; ++i) {
        const std::uint16_t s = samples[static_cast<std::size_t>(y) * width * channels + i];
        if (bits == 8) {
          row[i] = static_cast<png_byte>(s);
        } else {
          row[2 * i] = static_cast<png_byte>(s >> 8);
          row[2 * i + 1] = static_cast<png_byte>(s & 0xff);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

std::uint16_t quantize(double v, int bits) {
  const double maxv = bits == 8 ? 255.0 : 65535.0;
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * maxv));
}

}  // namespace

PngImage decode_png(const Bytes& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw IoError("not a PNG stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw,
                                           png_warn_silent);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngImage img;
  try {
    ReadCursor cursor{&bytes, 0};
    png_set_read_fn(png, &cursor, png_read_from_memory);
    png_read_info(png, info);
    png_set_expand(png);  // palette -> rgb, gray < 8 -> 8, tRNS -> alpha
    if (png_get_bit_depth(png, info) == 16 && std::endian::native == std::endian::little) {
      png_set_swap(png);
    }
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    img.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<png_byte> data(row_bytes * img.height);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = data.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
    img.samples.resize(n);
    for (int y = 0; y < img.height; ++y) {
      for (int i = 0; i < img.width * img.channels; ++i) {
        double s;
        if (img.bit_depth == 16) {
          std::uint16_t v;
          std::memcpy(&v, rows[y] + 2 * i, 2);
          s = v / 65535.0;
        } else {
          s = rows[y][i] / 255.0;
        }
        img.samples[static_cast<std::size_t>(y) * img.width * img.channels + i] = s;
      }
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

PngImage read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

namespace {

Rgba png_pixel(const PngImage& img, int x, int y) {
  const double* s = img.samples.data() +
                    (static_cast<std::size_t>(y) * img.width + x) * img.channels;
  switch (img.channels) {
    case 1: return Rgba(s[0], s[0], s[0], 1.0);
    case 2: return Rgba(s[0], s[0], s[0], s[1]);
    case 3: return Rgba(s[0], s[1], s[2], 1.0);
    default: return Rgba(s[0], s[1], s[2], s[3]);
  }
}

}  // namespace

ColorField load_png_color(const std::filesystem::path& path) {
  const PngImage img = read_png(path);
  ColorField out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      Rgba c = png_pixel(img, x, y);
      for (int k = 0; k < 3; ++k) c[k] = srgb_to_linear(c[k]);
      out(x, y) = c;
    }
  }
  return out;
}

ScalarField load_png_scalar(const std::filesystem::path& path) {
  const PngImage img = read_png(path);
  ScalarField out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) out(x, y) = png_pixel(img, x, y)[0];
  }
  return out;
}

Vec3Field load_png_normals(const std::filesystem::path& path) {
  const PngImage img = read_png(path);
  Vec3Field out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Rgba c = png_pixel(img, x, y);
      Vec3 n(2.0 * c[0] - 1.0, 2.0 * c[1] - 1.0, 2.0 * c[2] - 1.0);
      const double len = n.norm();
      out(x, y) = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
    }
  }
  return out;
}

Bytes encode_png(const ColorField& image, int bits) {
  std::vector<std::uint16_t> samples;
  samples.reserve(image.size() * 4);
  for (const Rgba& c : image.values()) {
    for (int k = 0; k < 3; ++k) samples.push_back(quantize(linear_to_srgb(std::max(c[k], 0.0)), bits));
    samples.push_back(quantize(c[3], bits));
  }
  return encode_png_raw(image.width(), image.height(), 4, bits, samples);
}

void save_png(const std::filesystem::path& path, const ColorField& image, int bits) {
  write_file(path, encode_png(image, bits));
}

Bytes encode_png_gray(const ScalarField& image, int bits) {
  std::vector<std::uint16_t> samples;
  samples.reserve(image.size());
  for (double v : image.values()) samples.push_back(quantize(v, bits));
  return encode_png_raw(image.width(), image.height(), 1, bits, samples);
}

void save_png_gray(const std::filesystem::path& path, const ScalarField& image, int bits) {
  write_file(path, encode_png_gray(image, bits));
}

namespace {

Bytes encode_pfm_raw(int width, int height, int channels, const std::vector<float>& rows) {
  std::ostringstream header;
  header << (channels == 1 ? "Pf" : "PF") << "\n" << width << " " << height << "\n-1.0\n";
  const std::string h = header.str();
  Bytes out(h.begin(), h.end());
  // PFM stores the bottom row first.
  for (int y = height - 1; y >= 0; --y) {
    for (int i = 0; i < width * channels; ++i) {
      float f = rows[static_cast<std::size_t>(y) * width * channels + i];
      std::uint32_t bitsv = std::bit_cast<std::uint32_t>(f);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bitsv >> (8 * b)));
    }
  }
  return out;
}

}  // namespace

Bytes encode_pfm(const ScalarField& image) {
  std::vector<float> data;
  data.reserve(image.size());
  for (double v : image.values()) data.push_back(static_cast<float>(v));
  return encode_pfm_raw(image.width(), image.height(), 1, data);
}

Bytes encode_pfm(const ColorField& image) {
  std::vector<float> data;
  data.reserve(image.size() * 3);
  for (const Rgba& c : image.values()) {
    for (int k = 0; k < 3; ++k) data.push_back(static_cast<float>(c[k]));
  }
  return encode_pfm_raw(image.width(), image.height(), 3, data);
}

PfmImage decode_pfm(const Bytes& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  const std::string magic = token();
  int channels;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw IoError("not a PFM stream");
  }
  int width = 0;
  int height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw IoError("malformed PFM header");
  }
  ++pos;  // single whitespace byte after the scale
  if (width < 1 || height < 1 || scale == 0.0) throw IoError("malformed PFM header");
  const bool little = scale < 0.0;
  const std::size_t needed = static_cast<std::size_t>(width) * height * channels * 4;
  if (bytes.size() < pos + needed) throw IoError("truncated PFM data");
  PfmImage img;
  img.channels = channels;
  img.data = ColorField(width, height, Rgba(0, 0, 0, 1));
  const std::uint8_t* p = bytes.data() + pos;
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      Rgba c(0, 0, 0, 1);
      for (int k = 0; k < channels; ++k) {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) {
          const int shift = little ? 8 * b : 8 * (3 - b);
          v |= static_cast<std::uint32_t>(p[b]) << shift;
        }
        p += 4;
        c[k] = std::bit_cast<float>(v);
      }
      if (channels == 1) c[1] = c[2] = c[0];
      img.data(x, y) = c;
    }
  }
  return img;
}

PfmImage read_pfm(const std::filesystem::path& path) {
  try {
    return decode_pfm(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

ScalarField load_pfm_scalar(const std::filesystem::path& path) {
  const PfmImage img = read_pfm(path);
  return map(img.data, [](const Rgba& c) { return c[0]; });
}

ColorField load_pfm_color(const std::filesystem::path& path) { return read_pfm(path).data; }

void save_pfm(const std::filesystem::path& path, const ScalarField& image) {
  write_file(path, encode_pfm(image));
}

void save_pfm(const std::filesystem::path& path, const ColorField& image) {
  write_file(path, encode_pfm(image));
}

}  // namespace mockshade
