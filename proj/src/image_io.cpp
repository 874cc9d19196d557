#include "foilmetric/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "foilmetric/error.hpp"

namespace foilmetric {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

bool has_extension(const fs::path& path, std::string_view ext) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e == ext;
}

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PgmHeader parse_pgm_header(std::span<const std::uint8_t> bytes, const fs::path& path) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("not a binary PGM (P5): " + path.string());
  }
  std::size_t pos = 2;
  auto skip_ws_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_ws_and_comments();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw IoError("truncated or malformed PGM header: " + path.string());
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000'000L) throw FormatError("PGM header value out of range");
      ++pos;
    }
    return v;
  };
  PgmHeader h;
  h.width = static_cast<int>(read_int());
  h.height = static_cast<int>(read_int());
  h.maxval = static_cast<int>(read_int());
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw IoError("truncated PGM header: " + path.string());
  }
  ++pos;  // single whitespace before raster
  if (h.width < 1 || h.height < 1) {
    throw FormatError("zero-dimension image: " + path.string());
  }
  if (h.maxval < 1 || h.maxval > 65535) {
    throw FormatError("PGM maxval out of range: " + path.string());
  }
  h.data_offset = pos;
  const std::size_t bps = h.maxval > 255 ? 2 : 1;
  const std::size_t need =
      static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * bps;
  if (bytes.size() - pos < need) {
    throw IoError("truncated PGM raster: " + path.string());
  }
  return h;
}

/// Raw samples of a P5 file, widened to 32 bits.
std::vector<std::uint32_t> pgm_samples(std::span<const std::uint8_t> bytes,
                                       const PgmHeader& h) {
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  std::vector<std::uint32_t> out(n);
  const std::uint8_t* p = bytes.data() + h.data_offset;
  if (h.maxval > 255) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = (static_cast<std::uint32_t>(p[2 * i]) << 8) | p[2 * i + 1];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = p[i];
  }
  return out;
}

GrayImage load_pgm(const fs::path& path) {
  auto bytes = read_bytes(path);
  PgmHeader h = parse_pgm_header(bytes, path);
  auto samples = pgm_samples(bytes, h);
  std::vector<double> data(samples.size());
  const double maxval = h.maxval;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    data[i] = std::min(1.0, samples[i] / maxval);
  }
  return GrayImage(h.width, h.height, std::move(data));
}

GrayImage load_png(const fs::path& path) {
  auto bytes = read_bytes(path);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw FormatError("zero-dimension image: " + path.string());
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<double> data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (channels == 1) {
      data[i] = buffer[i] / 255.0;
    } else {
      const unsigned sum = buffer[3 * i] + buffer[3 * i + 1] + buffer[3 * i + 2];
      data[i] = sum / (3.0 * 255.0);
    }
  }
  return GrayImage(w, h, std::move(data));
}

std::uint8_t quantize8(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

void write_png(int width, int height, png_uint_32 format, const std::uint8_t* pixels,
               const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, pixels, 0, nullptr)) {
    throw IoError("PNG encoding failed: " + std::string(image.message));
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw IoError("PNG encoding failed: " + std::string(image.message));
  }
  out.resize(size);
  write_bytes(path, out);
}

}  // namespace

GrayImage load_gray(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  auto bytes = read_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return load_pgm(path);
  return load_png(path);
}

void save_gray(const GrayImage& img, const fs::path& path) {
  std::vector<std::uint8_t> pix(img.size());
  std::transform(img.data().begin(), img.data().end(), pix.begin(), quantize8);
  if (has_extension(path, ".pgm")) {
    std::string header = "P5\n" + std::to_string(img.width()) + " " +
                         std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), pix.begin(), pix.end());
    write_bytes(path, out);
  } else {
    write_png(img.width(), img.height(), PNG_FORMAT_GRAY, pix.data(), path);
  }
}

void save_rgb_png(int width, int height, std::span<const std::uint8_t> rgb,
                  const fs::path& path) {
  if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw SizeError("RGB buffer does not match dimensions");
  }
  write_png(width, height, PNG_FORMAT_RGB, rgb.data(), path);
}

fs::path sidecar_path(const fs::path& mask_path) {
  fs::path p = mask_path;
  if (has_extension(p, ".pgm")) p.replace_extension();
  p += ".mask.json";
  return p;
}

nlohmann::ordered_json metadata_to_json(const MaskMetadata& meta) {
  nlohmann::ordered_json j;
  j["width"] = meta.width;
  j["height"] = meta.height;
  j["backend_name"] = meta.backend_name;
  j["n_cells"] = meta.n_cells;
  if (meta.px_per_unit) {
    j["px_per_unit"] = *meta.px_per_unit;
  } else {
    j["px_per_unit"] = nullptr;
  }
  j["source_image"] = meta.source_image;
  return j;
}

MaskMetadata metadata_from_json(const nlohmann::ordered_json& j) {
  try {
    MaskMetadata meta;
    meta.width = j.at("width").get<int>();
    meta.height = j.at("height").get<int>();
    meta.backend_name = j.value("backend_name", std::string{});
    meta.n_cells = j.value("n_cells", std::size_t{0});
    if (j.contains("px_per_unit") && !j["px_per_unit"].is_null()) {
      meta.px_per_unit = j["px_per_unit"].get<double>();
    }
    meta.source_image = j.value("source_image", std::string{});
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid mask sidecar: ") + e.what());
  }
}

void save_label_mask(const LabelMask& mask, const MaskMetadata& meta, const fs::path& path,
                     const nlohmann::ordered_json& extra) {
  if (mask.n_cells() > 65535) {
    throw CapacityError("mask has " + std::to_string(mask.n_cells()) +
                        " cells; the exchange format holds at most 65535");
  }
  if (meta.width != mask.width() || meta.height != mask.height()) {
    throw FormatError("metadata dimensions do not match mask");
  }
  std::string header = "P5\n" + std::to_string(mask.width()) + " " +
                       std::to_string(mask.height()) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + mask.size() * 2);
  for (auto v : mask.labels()) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  write_bytes(path, out);

  nlohmann::ordered_json j = metadata_to_json(meta);
  j["n_cells"] = mask.n_cells();
  for (const auto& [key, value] : extra.items()) j[key] = value;
  write_text_file(sidecar_path(path), j.dump(2) + "\n");
}

MaskFile load_label_mask(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  const fs::path side = sidecar_path(path);
  if (!fs::exists(side)) throw FormatError("missing mask sidecar: " + side.string());

  auto bytes = read_bytes(path);
  PgmHeader h = parse_pgm_header(bytes, path);
  auto samples = pgm_samples(bytes, h);

  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(read_text_file(side));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("malformed mask sidecar " + side.string() + ": " + e.what());
  }
  MaskFile file;
  file.meta = metadata_from_json(j);
  if (file.meta.width != h.width || file.meta.height != h.height) {
    throw FormatError("sidecar dimensions " + std::to_string(file.meta.width) + "x" +
                      std::to_string(file.meta.height) + " do not match mask " +
                      std::to_string(h.width) + "x" + std::to_string(h.height));
  }
  file.mask = LabelMask::from_raw(h.width, h.height,
                                  std::vector<LabelMask::Label>(samples.begin(), samples.end()));
  file.meta.n_cells = file.mask.n_cells();
  static const char* kStandard[] = {"width",   "height",      "backend_name",
                                    "n_cells", "px_per_unit", "source_image"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kStandard), std::end(kStandard), key) == std::end(kStandard)) {
      file.extra[key] = value;
    }
  }
  return file;
}

void write_text_file(const fs::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const fs::path& path) {
  auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace foilmetric
