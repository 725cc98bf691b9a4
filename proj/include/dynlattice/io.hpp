// File formats: 16-bit binary PGM frames and the simulation manifest.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dynlattice/interference.hpp"

namespace dynlattice {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

/// Raw grayscale image; sample (row, col) at row * width + col.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t maxval = 65535;
  std::vector<std::uint16_t> samples;
};

/// P5 with maxval 65535: big-endian 16-bit samples, top row first.
inline std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" +
                    std::to_string(img.maxval) + "\n";
  const bool wide = img.maxval > 255;
  out.reserve(out.size() + img.samples.size() * (wide ? 2 : 1));
  for (std::uint16_t s : img.samples) {
    if (wide) out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xff));
  }
  return out;
}

inline GrayImage decode_pgm(const std::string& data) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) -> std::uint64_t {
    skip_space();
    const std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
    if (pos == start) fail(ErrorCode::Parse, std::string("PGM header: missing ") + what);
    return std::stoull(data.substr(start, pos - start));
  };
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') fail(ErrorCode::Parse, "not a binary PGM (P5) file");
  pos = 2;
  GrayImage img;
  img.width = read_uint("width");
  img.height = read_uint("height");
  const std::uint64_t maxval = read_uint("maxval");
  if (img.width == 0 || img.height == 0) fail(ErrorCode::Parse, "PGM has zero size");
  if (maxval == 0 || maxval > 65535) fail(ErrorCode::Parse, "PGM maxval must lie in [1, 65535]");
  img.maxval = static_cast<std::uint32_t>(maxval);
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    fail(ErrorCode::Parse, "PGM header must end with a single whitespace byte");
  ++pos;
  const bool wide = img.maxval > 255;
  const std::size_t count = img.width * img.height;
  if (data.size() - pos < count * (wide ? 2 : 1)) fail(ErrorCode::Parse, "PGM raster is truncated");
  img.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (wide) {
      img.samples[i] = static_cast<std::uint16_t>((static_cast<unsigned char>(data[pos]) << 8) |
                                                  static_cast<unsigned char>(data[pos + 1]));
      pos += 2;
    } else {
      img.samples[i] = static_cast<unsigned char>(data[pos++]);
    }
  }
  return img;
}

/// Quantizes a frame with `intensity_per_count` intensity units per count.
/// Grid row 0 (most negative y) becomes the top image row.
inline GrayImage frame_to_image(const IntensityFrame& frame, double intensity_per_count) {
  if (!(intensity_per_count > 0.0)) fail(ErrorCode::InvalidInput, "intensity scale must be positive");
  GrayImage img{frame.grid.n, frame.grid.n, 65535, std::vector<std::uint16_t>(frame.values.size())};
  for (std::size_t i = 0; i < frame.values.size(); ++i) {
    const double c = std::round(frame.values[i] / intensity_per_count);
    img.samples[i] = static_cast<std::uint16_t>(std::clamp(c, 0.0, 65535.0));
  }
  return img;
}

inline IntensityFrame image_to_frame(const GrayImage& img, double pixel_size, double intensity_per_count = 1.0,
                                     double time = 0.0) {
  if (img.width != img.height) fail(ErrorCode::InvalidInput, "frames must be square");
  if (!(pixel_size > 0.0)) fail(ErrorCode::InvalidInput, "pixel size must be positive");
  GridSpec grid{img.width, pixel_size * static_cast<double>(img.width)};
  grid.validate();
  IntensityFrame frame(grid, time);
  for (std::size_t i = 0; i < img.samples.size(); ++i) frame.values[i] = img.samples[i] * intensity_per_count;
  return frame;
}

struct ManifestEntry {
  std::size_t index = 0;
  std::string file;
  double time = 0.0;
};

/// Text sidecar for a simulated frame set. Pixel counts times
/// intensity_per_count recover intensity in units of I0.
struct Manifest {
  std::size_t grid_n = 0;
  double extent = 0.0;
  double intensity_per_count = 1.0;
  std::optional<double> envelope_waist;  // absent when frames carry no envelope
  std::vector<ManifestEntry> frames;

  double pixel_size() const { return extent / static_cast<double>(grid_n); }
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string write_manifest(const Manifest& m) {
  std::string out = "dynlattice-manifest 1\n";
  out += "grid_n " + std::to_string(m.grid_n) + "\n";
  out += "extent_m " + format_double(m.extent) + "\n";
  out += "pixel_size_m " + format_double(m.pixel_size()) + "\n";
  out += "intensity_per_count " + format_double(m.intensity_per_count) + "\n";
  out += "envelope_waist_m " + (m.envelope_waist ? format_double(*m.envelope_waist) : std::string("none")) + "\n";
  out += "frames " + std::to_string(m.frames.size()) + "\n";
  for (const auto& f : m.frames)
    out += "frame " + std::to_string(f.index) + " " + f.file + " " + format_double(f.time) + "\n";
  return out;
}

inline Manifest parse_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "dynlattice-manifest 1") fail(ErrorCode::Parse, "not a dynlattice manifest");
  Manifest m;
  std::size_t declared = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    bool good = true;
    if (key == "grid_n") {
      good = static_cast<bool>(ls >> m.grid_n);
    } else if (key == "extent_m") {
      good = static_cast<bool>(ls >> m.extent);
    } else if (key == "pixel_size_m") {
      double ignored = 0.0;
      good = static_cast<bool>(ls >> ignored);
    } else if (key == "intensity_per_count") {
      good = static_cast<bool>(ls >> m.intensity_per_count);
    } else if (key == "envelope_waist_m") {
      std::string v;
      good = static_cast<bool>(ls >> v);
      if (good && v != "none") m.envelope_waist = std::stod(v);
    } else if (key == "frames") {
      good = static_cast<bool>(ls >> declared);
    } else if (key == "frame") {
      ManifestEntry e;
      good = static_cast<bool>(ls >> e.index >> e.file >> e.time);
      m.frames.push_back(e);
    } else {
      good = false;
    }
    if (!good) fail(ErrorCode::Parse, "manifest line " + std::to_string(lineno) + " is malformed");
  }
  if (declared != m.frames.size()) fail(ErrorCode::Parse, "manifest frame count does not match its entries");
  if (m.grid_n < 2 || !(m.extent > 0.0)) fail(ErrorCode::Parse, "manifest grid is missing or invalid");
  return m;
}

}  // namespace dynlattice
