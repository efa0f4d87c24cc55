#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "provex/interval.hpp"

namespace provex {

// 8-bit raster, channels interleaved per pixel.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;  // 1 (P5) or 3 (P6)
  std::vector<std::uint8_t> pixels;

  std::size_t pixel_count() const { return width * height; }
};

// Binary P5/P6 with maxval <= 255. Throws ParseError.
Image read_pnm(const std::filesystem::path& path);
void write_pnm(const Image& image, const std::filesystem::path& path);

// Scaled to [0, 1], one feature per channel sample.
Vector image_to_vector(const Image& image);
Image vector_to_image(const Vector& v, std::size_t width, std::size_t height, std::size_t channels);

// Comma separated reals, one instance per non-empty line.
std::vector<Vector> read_csv_instances(const std::filesystem::path& path);
void write_csv_instances(const std::vector<Vector>& rows, const std::filesystem::path& path);

// An instance file: PGM/PPM by extension, CSV otherwise.
struct Instance {
  Vector values;
  std::optional<Image> image;
};

std::vector<Instance> read_instances(const std::filesystem::path& path);

bool is_image_path(const std::filesystem::path& path);

}  // namespace provex
