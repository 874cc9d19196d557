#include <doctest.h>

#include <fstream>
#include <iterator>
#include <regex>
#include <stack>

#include "foilmetric/error.hpp"
#include "foilmetric/report.hpp"
#include "tmpdir.hpp"

using namespace foilmetric;
using namespace foilmetric::report;

namespace {

LabelMask block(int w, int h, int x0, int y0, int x1, int y1) {
  std::vector<LabelMask::Label> raw(static_cast<std::size_t>(w) * h, 0);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) raw[static_cast<std::size_t>(y) * w + x] = 1;
  return LabelMask::from_raw(w, h, raw);
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

bool tags_balanced(const std::string& s) {
  std::stack<std::string> open;
  const std::regex tag(R"(<(/?)([A-Za-z]+)[^>]*?(/?)>)");
  for (std::sregex_iterator it(s.begin(), s.end(), tag), end; it != end; ++it) {
    const auto& m = *it;
    if (m[3] == "/") continue;
    if (m[1] == "/") {
      if (open.empty() || open.top() != m[2]) return false;
      open.pop();
    } else {
      open.push(m[2]);
    }
  }
  return open.empty();
}

}  // namespace

TEST_CASE("outlines") {
  CHECK(extract_outlines(block(7, 7, 2, 2, 4, 4)).size() == 8);
  const auto one = extract_outlines(block(5, 5, 2, 2, 2, 2));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == OutlinePixel{2, 2, 1});
  const auto full = extract_outlines(block(6, 4, 0, 0, 5, 3));
  CHECK(full.size() == 2 * 6 + 2 * 2);
  for (const auto& p : full)
    CHECK((p.x == 0 || p.y == 0 || p.x == 5 || p.y == 3));
  CHECK(extract_outlines(LabelMask(4, 4)).empty());
}

TEST_CASE("overlay colours") {
  GrayImage g(30, 30, 0.0);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) g.at(x, y) = (x + y) / 58.0;
  const RgbImage plain = render_overlay(g, {});
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) {
      const auto v = static_cast<std::uint8_t>(std::lround(g.at(x, y) * 255.0));
      CHECK(plain.at(x, y) == std::array<std::uint8_t, 3>{v, v, v});
    }

  const RgbImage red = render_overlay(g, {{5, 5, 1}});
  CHECK(red.at(5, 5) == std::array<std::uint8_t, 3>{255, 0, 0});
  CHECK(red.at(6, 5) == plain.at(6, 5));

  const RgbImage dot = render_overlay(GrayImage(30, 30, 1.0), {}, {{10.4, 20.6}});
  const std::array<std::uint8_t, 3> black{0, 0, 0}, white{255, 255, 255};
  CHECK(dot.at(10, 21) == black);
  CHECK(dot.at(13, 21) == black);
  CHECK(dot.at(10, 24) == black);
  CHECK(dot.at(14, 21) == white);
  CHECK(dot.at(12, 23) == black);
  CHECK(dot.at(13, 23) == white);
  CHECK(dot.at(10, 20) == black);

  OverlayLines lines;
  lines.positions = {7};
  const RgbImage ruled = render_overlay(GrayImage(10, 10, 1.0), {}, {}, lines);
  for (int y = 0; y < 10; ++y) CHECK(ruled.at(7, y) == black);
  CHECK(ruled.at(6, 0) == white);

  CHECK_THROWS_AS(render_overlay(g, {{30, 0, 1}}), SizeError);
  lines.positions = {10};
  CHECK_THROWS_AS(render_overlay(GrayImage(10, 10), {}, {}, lines), SizeError);
}

TEST_CASE("svg plots") {
  stats::Histogram h1;
  h1.edges = {31.5, 32.5};
  h1.counts = {4};
  h1.n = 4;
  const std::string one = plot_svg(h1, nullptr, "area <line 2>", "pixels & more");
  CHECK(one.find("<svg") != std::string::npos);
  CHECK(count(one, "<rect") == 2);
  CHECK(count(one, "<polyline") == 0);
  CHECK(one.find("&lt;line 2&gt;") != std::string::npos);
  CHECK(one.find("pixels &amp; more") != std::string::npos);
  CHECK(tags_balanced(one));

  stats::Histogram h;
  h.edges = {0, 1, 2, 3};
  h.counts = {1, 3, 1};
  h.n = 5;
  stats::KdeCurve kde;
  kde.bandwidth = 0.4;
  for (int i = 0; i < 100; ++i) {
    kde.grid.push_back(-1.0 + 5.0 * i / 99.0);
    kde.density.push_back(0.2 + 0.001 * i);
  }
  const std::string a = plot_svg(h, &kde, "dx", "px");
  CHECK(count(a, "<rect") == 4);
  CHECK(a == plot_svg(h, &kde, "dx", "px"));
  CHECK(tags_balanced(a));
  const auto p = a.find("points=\"");
  REQUIRE(p != std::string::npos);
  const auto q = a.find('"', p + 8);
  const std::string pts = a.substr(p + 8, q - p - 8);
  CHECK(count(pts, ",") == 100);

  stats::Histogram bad;
  bad.edges = {0, 1};
  bad.counts = {1, 2};
  CHECK_THROWS_AS(plot_svg(bad, nullptr, "x", "y"), ValidationError);

  TempDir dir;
  emit_plot(h, &kde, "dx", "px", dir / "p.svg");
  std::ifstream in(dir / "p.svg", std::ios::binary);
  const std::string back((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(back == a);
}
