#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "foilmetric/image.hpp"

namespace foilmetric {

/// Loads an 8-bit PNG or a P5 PGM and normalizes intensities to [0,1].
/// Colour PNGs are reduced by the unweighted mean of R, G and B.
GrayImage load_gray(const std::filesystem::path& path);

/// Writes an 8-bit grayscale image; the format follows the extension
/// (".pgm" gives binary PGM, anything else PNG). Values are clamped to [0,1]
/// and rounded to the nearest 8-bit level.
void save_gray(const GrayImage& img, const std::filesystem::path& path);

/// Writes interleaved 8-bit RGB data as PNG.
void save_rgb_png(int width, int height, std::span<const std::uint8_t> rgb,
                  const std::filesystem::path& path);

/// `<name>.pgm` -> `<name>.mask.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& mask_path);

struct MaskFile {
  LabelMask mask;
  MaskMetadata meta;
  /// Sidecar keys beyond the standard metadata (e.g. ground-truth lattice info).
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

/// 16-bit big-endian P5 PGM plus JSON sidecar. Throws CapacityError when the
/// mask has more than 65535 cells.
void save_label_mask(const LabelMask& mask, const MaskMetadata& meta,
                     const std::filesystem::path& path,
                     const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

/// Reads a mask written by save_label_mask (or any compliant producer).
/// Labels are canonicalized; meta.n_cells is updated to the canonical count.
MaskFile load_label_mask(const std::filesystem::path& path);

nlohmann::ordered_json metadata_to_json(const MaskMetadata& meta);
MaskMetadata metadata_from_json(const nlohmann::ordered_json& j);

/// Plain text helpers; both throw IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace foilmetric
