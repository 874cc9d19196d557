#include <doctest.h>

#include <random>
#include <thread>

#include "foilmetric/error.hpp"
#include "foilmetric/foilgen.hpp"
#include "foilmetric/image_io.hpp"
#include "foilmetric/segment.hpp"
#include "oracles.hpp"
#include "tmpdir.hpp"

using namespace foilmetric;
using namespace foilmetric::segment;

namespace {

BinaryImage from_rows(const std::vector<std::string>& rows) {
  BinaryImage b(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < b.height; ++y)
    for (int x = 0; x < b.width; ++x) b.set(x, y, rows[y][x] == '#');
  return b;
}

NativeSegConfig crisp() {
  NativeSegConfig c;
  c.preproc.gauss_sigma = 0.0;
  return c;
}

GrayImage two_rooms(int gap_rows) {
  GrayImage img(20, 10, 1.0);
  for (int y = 0; y < 10; ++y) {
    const bool in_gap = y >= 4 && y < 4 + gap_rows;
    if (!in_gap) img.at(10, y) = 0.1;
  }
  return img;
}

LabelMask dumbbell() {
  std::vector<LabelMask::Label> raw(48 * 24, 0);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 48; ++x) {
      const bool left = (x - 12) * (x - 12) + (y - 12) * (y - 12) <= 81;
      const bool right = (x - 35) * (x - 35) + (y - 12) * (y - 12) <= 81;
      const bool bar = x >= 12 && x <= 35 && std::abs(y - 12) <= 1;
      if (left || right || bar) raw[static_cast<std::size_t>(y) * 48 + x] = 1;
    }
  return LabelMask::from_raw(48, 24, raw);
}

class ThrowingBackend final : public SegmentationBackend {
 public:
  std::string name() const override { return "broken"; }
  SegmentResult run(const GrayImage&) const override { throw std::runtime_error("model crashed"); }
};

}  // namespace

TEST_CASE("connected components honour connectivity") {
  const BinaryImage b = from_rows({"#..", ".#.", "..#"});
  CHECK(label_components(b, 4).n_cells() == 3);
  CHECK(label_components(b, 8).n_cells() == 1);
  CHECK_THROWS_AS(label_components(b, 6), ValidationError);
  const LabelMask m = label_components(from_rows({".#.#", "##.#"}), 4);
  CHECK(m.at(1, 0) == 1);
  CHECK(m.at(0, 1) == 1);
  CHECK(m.at(3, 0) == 2);
}

TEST_CASE("distance transform matches brute force") {
  std::mt19937_64 rng(99);
  std::bernoulli_distribution coin(0.8);
  for (int t = 0; t < 20; ++t) {
    BinaryImage b(17 + t % 5, 13);
    for (auto& v : b.data) v = coin(rng);
    b.set(t % b.width, 0, false);
    const GrayImage d = distance_transform(b);
    const auto ref = oracle::brute_edt(b);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(d.data()[i] == ref[i]);
  }
  const GrayImage full = distance_transform(from_rows({"###", "###"}));
  for (double v : full.data()) CHECK(v == 5.0);
}

TEST_CASE("one-pixel line separates two rooms") {
  CHECK(native_segment(two_rooms(0), crisp()).n_cells() == 2);
}

TEST_CASE("closing seals a two-pixel gap") {
  NativeSegConfig open = crisp();
  open.closing_iterations = 0;
  CHECK(native_segment(two_rooms(2), open).n_cells() == 1);
  CHECK(native_segment(two_rooms(2), crisp()).n_cells() == 2);
}

TEST_CASE("distance peaks of a dumbbell sit at the disk centres") {
  const LabelMask m = dumbbell();
  BinaryImage fg(48, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 48; ++x) fg.set(x, y, m.at(x, y) != 0);
  const auto ref = oracle::brute_edt(fg);
  const auto peaks = find_peaks(distance_transform(fg), fg, 5.0);
  REQUIRE(peaks.size() == 2);
  double best = 0;
  for (double v : ref) best = std::max(best, v);
  for (const auto& p : peaks) {
    CHECK(p.value == best);
    CHECK(ref[static_cast<std::size_t>(p.y) * 48 + p.x] == best);
    CHECK(p.y == 12);
  }
  CHECK(peaks[0].x == 12);
  CHECK(peaks[1].x == 35);
}

TEST_CASE("watershed splits a dumbbell") {
  const LabelMask split = watershed_split(dumbbell(), 5.0);
  CHECK(split.n_cells() == 2);
  CHECK(split.at(12, 12) != split.at(35, 12));
  CHECK(split.at(3, 12) == split.at(12, 12));
  std::size_t cells = 0;
  for (auto v : split.labels()) cells += v != 0;
  std::size_t before = 0;
  const LabelMask whole = dumbbell();
  for (auto v : whole.labels()) before += v != 0;
  CHECK(cells == before);
  const LabelMask disk = LabelMask::from_raw(5, 5, std::vector<LabelMask::Label>(25, 1));
  CHECK(watershed_split(disk, 5.0) == disk);
}

TEST_CASE("cell filters") {
  const auto m = LabelMask::from_raw(4, 3, {1, 1, 0, 2, 0, 0, 0, 0, 3, 3, 3, 0});
  const LabelMask big = remove_small_cells(m, 2);
  CHECK(big.n_cells() == 2);
  CHECK(big.at(3, 0) == 0);
  const auto inner = LabelMask::from_raw(4, 4, {1, 1, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0});
  const LabelMask kept = remove_border_cells(inner);
  CHECK(kept.n_cells() == 1);
  CHECK(kept.at(1, 2) == 1);
}

TEST_CASE("label growth fills gaps without overwriting") {
  const auto m = LabelMask::from_raw(7, 1, {1, 0, 0, 0, 0, 0, 2});
  const LabelMask g1 = grow_labels(m, 1);
  CHECK(std::vector<LabelMask::Label>(g1.labels().begin(), g1.labels().end()) ==
        std::vector<LabelMask::Label>{1, 1, 0, 0, 0, 2, 2});
  const LabelMask g9 = grow_labels(m, 9);
  CHECK(std::vector<LabelMask::Label>(g9.labels().begin(), g9.labels().end()) ==
        std::vector<LabelMask::Label>{1, 1, 1, 1, 2, 2, 2});
  CHECK(grow_labels(m, 0) == m);
  CHECK_THROWS_AS(grow_labels(m, -1), ValidationError);
}

TEST_CASE("blank image yields an empty mask") {
  const LabelMask m = native_segment(GrayImage(40, 30, 0.8), NativeSegConfig{});
  CHECK(m.n_cells() == 0);
  CHECK(m.width() == 40);
  TempDir tmp;
  const auto r = segment::segment(GrayImage(40, 30, 0.8), NativeBackend{});
  save_label_mask(r.mask, r.meta, tmp / "blank.pgm");
  CHECK(load_label_mask(tmp / "blank.pgm").mask.n_cells() == 0);
}

TEST_CASE("native backend on an undiffused lattice") {
  foilgen::FoilSpec spec;
  spec.filter_sigma = 0.0;
  const auto foil = foilgen::generate_foil(spec);
  const auto r = segment::segment(foil.image, NativeBackend{});
  const double truth = static_cast<double>(foil.truth.mask.n_cells());
  CHECK(std::abs(static_cast<double>(r.mask.n_cells()) - truth) <= 0.05 * truth);

  NativeSegConfig c;
  c.exclude_border_cells = true;
  const auto inner = segment::segment(foil.image, NativeBackend{c});
  const auto matches = match_instances(inner.mask, foil.truth.mask);
  CHECK(matches.size() == foil.truth.n_complete_cells);
  for (const auto& mt : matches) CHECK(mt.iou >= 0.9);
}

TEST_CASE("fixed backend passes the truth through") {
  const auto foil = foilgen::generate_foil(foilgen::FoilSpec{});
  const auto r = segment::segment(foil.image, FixedMaskBackend(foil.truth.mask, "truth"), "x.png");
  CHECK(r.mask == foil.truth.mask);
  CHECK(r.meta.backend_name == "truth");
  CHECK(r.meta.n_cells == foil.truth.mask.n_cells());
  CHECK(r.meta.source_image == "x.png");
}

TEST_CASE("backend failures become segmentation errors") {
  CHECK_THROWS_AS(segment::segment(GrayImage(4, 4), ThrowingBackend{}), SegmentationError);
  CHECK_THROWS_AS(segment::segment(GrayImage(4, 4), FixedMaskBackend(LabelMask(5, 4))),
                  SegmentationError);
  CHECK_THROWS_AS(segment::segment(GrayImage(), NativeBackend{}), SegmentationError);
}

TEST_CASE("external masks are checked and canonicalized") {
  TempDir tmp;
  std::vector<LabelMask::Label> raw(600 * 400, 0);
  raw[10] = 3;
  raw[5000] = 7;
  MaskMetadata meta{600, 400, "cyto2", 2, {}, "img.png"};
  // Write non-canonical labels directly so the reader has to relabel.
  {
    std::string bytes = "P5\n600 400\n65535\n";
    for (auto v : raw) bytes += static_cast<char>(v >> 8), bytes += static_cast<char>(v & 0xff);
    write_text_file(tmp / "ext.pgm", bytes);
    write_text_file(tmp / "ext.mask.json", metadata_to_json(meta).dump());
  }
  const MaskFile f = ingest_external_mask(tmp / "ext.pgm", 600, 400);
  CHECK(f.mask.width() == 600);
  CHECK(f.mask.height() == 400);
  CHECK(f.mask.n_cells() == 2);
  CHECK(f.mask.labels()[10] == 1);
  CHECK(f.mask.labels()[5000] == 2);
  CHECK_THROWS_AS(ingest_external_mask(tmp / "ext.pgm", 400, 600), FormatError);

  const auto r = segment::segment(GrayImage(600, 400), ExternalMaskBackend(tmp / "ext.pgm"));
  CHECK(r.meta.backend_name == "cyto2");
  CHECK_THROWS_AS(segment::segment(GrayImage(400, 600), ExternalMaskBackend(tmp / "ext.pgm")),
                  SegmentationError);
}

TEST_CASE("instance matching") {
  const auto a = LabelMask::from_raw(6, 1, {1, 1, 0, 2, 2, 2});
  const auto b = LabelMask::from_raw(6, 1, {0, 1, 1, 2, 2, 2});
  const auto m = match_instances(a, b);
  REQUIRE(m.size() == 1);
  CHECK(m[0].pred == 2);
  CHECK(m[0].truth == 2);
  CHECK(m[0].iou == 1.0);
  CHECK(match_instances(a, b, 0.3).size() == 2);
}

TEST_CASE("native backend is deterministic across threads") {
  const auto f1 = foilgen::generate_foil(foilgen::FoilSpec{});
  foilgen::FoilSpec s2;
  s2.dx = 120;
  const auto f2 = foilgen::generate_foil(s2);
  const NativeBackend backend;
  const LabelMask ref1 = backend.run(f1.image).mask, ref2 = backend.run(f2.image).mask;
  LabelMask got1, got2;
  {
    std::jthread t1([&] { got1 = backend.run(f1.image).mask; });
    std::jthread t2([&] { got2 = backend.run(f2.image).mask; });
  }
  CHECK(got1 == ref1);
  CHECK(got2 == ref2);
}

TEST_CASE("segmentation config validation") {
  NativeSegConfig c;
  c.connectivity = 5;
  CHECK_THROWS_AS(NativeBackend{c}, ValidationError);
  c = NativeSegConfig{};
  c.min_area_px = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(parse_polarity("bright") == Polarity::Bright);
  CHECK_THROWS_AS(parse_polarity("grey"), ValidationError);
}
