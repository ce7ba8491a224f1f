#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mockshade/field.hpp"

namespace mockshade {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Bytes = std::vector<std::uint8_t>;

double srgb_to_linear(double c);
double linear_to_srgb(double c);

/// Raw PNG contents: channels normalised to [0,1], no transfer function applied.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1..4 as stored (gray, gray+alpha, rgb, rgba)
  int bit_depth = 8;
  std::vector<double> samples;  // row-major, `channels` per pixel
};

PngImage decode_png(const Bytes& bytes);
PngImage read_png(const std::filesystem::path& path);

/// Colour texture: sRGB-decoded to linear light, alpha kept linear.
ColorField load_png_color(const std::filesystem::path& path);
/// Data channel (height, matte, thickness): first channel, no transfer function.
ScalarField load_png_scalar(const std::filesystem::path& path);
/// Normal map: n = 2c - 1 per component, renormalised.
Vec3Field load_png_normals(const std::filesystem::path& path);

/// RGBA PNG, sRGB-encoded and clamped to [0,1]. bits is 8 or 16.
Bytes encode_png(const ColorField& image, int bits = 8);
void save_png(const std::filesystem::path& path, const ColorField& image, int bits = 8);
/// Single-channel PNG without transfer function (masks, heights).
Bytes encode_png_gray(const ScalarField& image, int bits = 8);
void save_png_gray(const std::filesystem::path& path, const ScalarField& image, int bits = 8);

/// Portable FloatMap: "Pf" for one channel, "PF" for RGB. Written
/// little-endian (negative scale), bottom row first.
Bytes encode_pfm(const ScalarField& image);
Bytes encode_pfm(const ColorField& image);

struct PfmImage {
  int channels = 0;  // 1 or 3
  ColorField data;   // grayscale replicated into rgb, alpha = 1
};

PfmImage decode_pfm(const Bytes& bytes);
PfmImage read_pfm(const std::filesystem::path& path);
ScalarField load_pfm_scalar(const std::filesystem::path& path);
ColorField load_pfm_color(const std::filesystem::path& path);

void save_pfm(const std::filesystem::path& path, const ScalarField& image);
void save_pfm(const std::filesystem::path& path, const ColorField& image);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mockshade
