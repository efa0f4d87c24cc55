#include "provex/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "provex/errors.hpp"

namespace provex {

namespace {

// Skips whitespace and '#' comments between header tokens.
std::size_t read_header_number(std::istream& in, const std::string& what) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  std::size_t value = 0;
  if (!(in >> value)) throw ParseError(what + ": bad header");
  return value;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  Image image;
  if (magic[0] == 'P' && magic[1] == '5') {
    image.channels = 1;
  } else if (magic[0] == 'P' && magic[1] == '6') {
    image.channels = 3;
  } else {
    throw ParseError(path.string() + ": not a binary PGM/PPM (P5/P6)");
  }
  const std::string what = path.string();
  image.width = read_header_number(in, what);
  image.height = read_header_number(in, what);
  const std::size_t maxval = read_header_number(in, what);
  if (maxval == 0 || maxval > 255) throw ParseError(what + ": only 8-bit images are supported");
  if (image.width == 0 || image.height == 0) throw ParseError(what + ": empty image");
  in.get();  // single whitespace before the raster
  image.pixels.resize(image.pixel_count() * image.channels);
  in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != image.pixels.size()) {
    throw ParseError(what + ": truncated raster");
  }
  if (maxval != 255) {
    for (auto& p : image.pixels) p = static_cast<std::uint8_t>(std::lround(p * 255.0 / static_cast<double>(maxval)));
  }
  return image;
}

void write_pnm(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw ValidationError("write_pnm: channels must be 1 or 3");
  }
  if (image.pixels.size() != image.pixel_count() * image.channels) {
    throw DimensionError("write_pnm: raster size does not match the header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write");
  out << (image.channels == 1 ? "P5" : "P6") << '\n'
      << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

Vector image_to_vector(const Image& image) {
  Vector v(static_cast<Eigen::Index>(image.pixels.size()));
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = image.pixels[i] / 255.0;
  }
  return v;
}

Image vector_to_image(const Vector& v, std::size_t width, std::size_t height, std::size_t channels) {
  if (static_cast<std::size_t>(v.size()) != width * height * channels) {
    throw DimensionError("vector of " + std::to_string(v.size()) + " values does not fill a " +
                         std::to_string(width) + "x" + std::to_string(height) + "x" +
                         std::to_string(channels) + " image");
  }
  Image image{width, height, channels, {}};
  image.pixels.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    image.pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v[i], 0.0, 1.0) * 255.0)));
  }
  return image;
}

std::vector<Vector> read_csv_instances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::vector<Vector> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> values;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const std::size_t a = cell.find_first_not_of(" \t");
      const std::size_t b = cell.find_last_not_of(" \t");
      double value = 0.0;
      const char* first = cell.data() + (a == std::string::npos ? cell.size() : a);
      const char* last = a == std::string::npos ? first : cell.data() + b + 1;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (first == last || ec != std::errc() || ptr != last) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      values.push_back(value);
    }
    if (!rows.empty() && values.size() != static_cast<std::size_t>(rows.front().size())) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": row length differs");
    }
    rows.push_back(Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  return rows;
}

void write_csv_instances(const std::vector<Vector>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write");
  char buf[32];
  for (const Vector& row : rows) {
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), row[i]);
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

bool is_image_path(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<Instance> read_instances(const std::filesystem::path& path) {
  std::vector<Instance> out;
  if (is_image_path(path)) {
    Image image = read_pnm(path);
    Vector values = image_to_vector(image);
    out.push_back({std::move(values), std::move(image)});
    return out;
  }
  for (Vector& row : read_csv_instances(path)) out.push_back({std::move(row), std::nullopt});
  return out;
}

}  // namespace provex
