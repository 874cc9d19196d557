// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>

#include "foilmetric/cli.hpp"
#include "foilmetric/features.hpp"
#include "foilmetric/foilgen.hpp"
#include "foilmetric/preproc.hpp"
#include "foilmetric/stats.hpp"
#include "oracles.hpp"
#include "tmpdir.hpp"

using namespace foilmetric;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome lattice_cases() {
  struct Case {
    int n, dy, dx;
    double sigma;
    bool expect;
  };
  const Case cases[] = {{1, 50, 50, 1.5, true},
                        {2, 50, 120, 2.0, true},
                        {3, 120, 50, 1.5, true},
                        {4, 120, 10, 2.0, false},
                        {5, 120, 50, 2.0, true}};
  Outcome o;
  TempDir dir;
  for (const auto& c : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    foilgen::FoilSpec spec;
    spec.dy = c.dy;
    spec.dx = c.dx;
    spec.filter_sigma = c.sigma;
    const std::string gen = dir / ("case" + std::to_string(c.n));
    cli::write_generated(foilgen::generate_foil(spec), gen);
    cli::RunConfig cfg;
    cfg.threshold = 0.10;
    cfg.k_sample = 10;
    cfg.seed = 0;
    cfg.truth = gen + ".truth.pgm";
    cli::run_pipeline_one(cfg, gen + ".png", gen + ".run");
    const double secs = seconds_since(t0);
    const auto v = nlohmann::json::parse(slurp(gen + ".run.verdict.json"));
    const bool ok = v.at("success").get<bool>();
    o.pass = o.pass && ok == c.expect && secs < 10.0;
    o.detail += fmt("case%d %s err(dx,dy)=(%.1f%%,%.1f%%) %.2fs; ", c.n, ok ? "ok" : "fail",
                    100 * v.at("rel_err_dx").get<double>(), 100 * v.at("rel_err_dy").get<double>(),
                    secs);
  }
  return o;
}

Outcome verdict_fixtures() {
  // (predicted Dy, Dx) against (true Dy, Dx)
  struct Row {
    double pdy, pdx, tdy, tdx;
    bool expect;
  };
  const Row rows[] = {{47.9, 48.4, 50, 50, true},
                      {49.6, 111.1, 50, 120, true},
                      {108.8, 49.0, 120, 50, true},
                      {108.4, 49.0, 120, 50, true}};
  Outcome o;
  for (const auto& r : rows) {
    const auto v = stats::make_verdict(r.pdx, r.pdy, r.tdx, r.tdy, 10);
    o.pass = o.pass && v.success == r.expect;
    o.detail += fmt("max err %.2f%% %s; ", 100 * std::max(v.rel_err_dx, v.rel_err_dy),
                    v.success ? "ok" : "fail");
  }
  return o;
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(100);
  std::size_t cells = 0, mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const LabelMask m = oracle::random_mask(rng, 64, 64);
    for (const auto& r : features::measure_all(m)) {
      const auto ref = oracle::rescan(m, r.label);
      ++cells;
      if (r.area_px != ref.area || r.centroid.x != ref.cx || r.centroid.y != ref.cy ||
          !(r.bbox == features::BoundingBox{ref.x_min, ref.x_max, ref.y_min, ref.y_max}) ||
          r.dx != ref.dx || r.dy != ref.dy) {
        ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("%zu cells over 100 masks, %zu mismatches", cells, mismatches)};
}

Outcome preproc_properties() {
  using namespace preproc;
  const int step[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  std::mt19937_64 rng(2024);
  int idem = 0, thin = 0, linear = 0, constant = 0;
  for (int t = 0; t < 50; ++t) {
    const GrayImage f = oracle::smooth_field(rng, 40, 32);
    const auto g = directional_gradients(f);
    const GrayImage b = bias_combine(g.gx, g.gy, 1.0, 1.0);
    const GrayImage once = non_max_suppress(b, g.gx, g.gy);
    if (!(non_max_suppress(once, g.gx, g.gy) == once)) ++idem;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 40; ++x) {
        if (once.at(x, y) == 0.0) continue;
        const int s = gradient_sector(g.gx.at(x, y), g.gy.at(x, y));
        for (int dir : {-1, 1}) {
          const int nx = x + dir * step[s][0], ny = y + dir * step[s][1];
          if (once.contains(nx, ny) && once.at(nx, ny) != 0.0 &&
              gradient_sector(g.gx.at(nx, ny), g.gy.at(nx, ny)) == s) {
            ++thin;
          }
        }
      }

    const GrayImage gx2 = oracle::smooth_field(rng, 40, 32), gy2 = oracle::smooth_field(rng, 40, 32);
    std::uniform_real_distribution<double> U(-2, 2);
    const double a = U(rng), bb = U(rng), k = U(rng);
    GrayImage sx(40, 32), sy(40, 32);
    for (std::size_t i = 0; i < sx.data().size(); ++i) {
      sx.data()[i] = g.gx.data()[i] + k * gx2.data()[i];
      sy.data()[i] = g.gy.data()[i] + k * gy2.data()[i];
    }
    const GrayImage lhs = bias_combine(sx, sy, a, bb);
    const GrayImage r1 = bias_combine(g.gx, g.gy, a, bb), r2 = bias_combine(gx2, gy2, a, bb);
    for (std::size_t i = 0; i < lhs.data().size(); ++i)
      if (std::abs(lhs.data()[i] - (r1.data()[i] + k * r2.data()[i])) > 1e-12) ++linear;

    const double c = std::uniform_real_distribution<double>(0, 1)(rng);
    const double sigma = 0.5 + 0.1 * t;
    for (double v : gaussian_smooth(GrayImage(37, 23, c), sigma).data())
      if (std::abs(v - c) > 1e-12) ++constant;
  }
  return {idem + thin + linear + constant == 0,
          fmt("violations: idempotence %d, thinning %d, linearity %d, constants %d", idem, thin,
              linear, constant)};
}

Outcome knuth() {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> N(0, 1);
  std::vector<double> d(1000);
  for (double& x : d) x = N(rng);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = stats::knuth_bin_count(d);
  const double secs = seconds_since(t0);
  int best = 1;
  double best_f = oracle::knuth_F(d, 1);
  const int hi = stats::knuth_max_bins(d.size());
  for (int m = 2; m <= hi; ++m) {
    const double f = oracle::knuth_F(d, m);
    if (f > best_f) best = m, best_f = f;
  }
  const bool ok = r.bins == best && r.bins >= 8 && r.bins <= 30 && secs < 1.0;
  return {ok, fmt("m*=%d oracle argmax=%d over 1..%d, %.4fs", r.bins, best, hi, secs)};
}

Outcome kde_normalization() {
  std::mt19937_64 rng(2718);
  std::uniform_int_distribution<int> nn(10, 500);
  double lo = 1e9, hi = -1e9;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> d(static_cast<std::size_t>(nn(rng)));
    std::normal_distribution<double> N(0, 1);
    std::exponential_distribution<double> E(1.0);
    for (double& x : d) x = t % 2 ? N(rng) : E(rng);
    const double area = stats::trapezoid_integral(stats::gaussian_kde(d));
    lo = std::min(lo, area);
    hi = std::max(hi, area);
  }
  return {lo >= 0.98 && hi <= 1.02, fmt("integrals in [%.5f, %.5f]", lo, hi)};
}

Outcome self_consistency() {
  foilgen::FoilSpec s;
  s.filter_sigma = 0.0;
  const auto f = foilgen::generate_foil(s);
  const auto recs = features::measure_all(f.truth.mask);
  const auto v = stats::evaluate(recs, f.truth);
  const auto rep =
      stats::transect_report(stats::transect_select(f.truth.mask, recs, 4), recs);
  double lo = 1e300, hi = 0;
  bool flagged = false;
  for (const auto& l : rep.lines) {
    flagged = flagged || l.flagged;
    lo = std::min(lo, l.area.mean);
    hi = std::max(hi, l.area.mean);
  }
  const bool ok = v.success && v.rel_err_dx == 0.0 && v.rel_err_dy == 0.0 && rep.lines.size() == 4 &&
                  !flagged && hi <= 1.05 * lo;
  return {ok, fmt("rel_err (%g, %g), line mean areas %.1f..%.1f", v.rel_err_dx, v.rel_err_dy, lo,
                  hi)};
}

Outcome determinism() {
  TempDir dir;
  foilgen::FoilSpec spec;
  spec.noise_amplitude = 0.02;
  spec.seed = 7;
  cli::write_generated(foilgen::generate_foil(spec), dir / "foil");
  cli::RunConfig cfg;
  cfg.truth = dir / "foil.truth.pgm";
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  cli::run_pipeline_one(cfg, dir / "foil.png", dir / "a/run");
  cli::run_pipeline_one(cfg, dir / "foil.png", dir / "b/run");
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(dir.path / "a")) {
    ++files;
    const fs::path twin = dir.path / "b" / e.path().filename();
    if (!fs::exists(twin) || slurp(e.path()) != slurp(twin)) ++differ;
  }
  std::size_t twins = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path / "b")) ++twins;
  return {files >= 8 && files == twins && differ == 0,
          fmt("%zu artifacts compared, %zu differ", files, differ)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"lattice cases with the native backend", lattice_cases},
      {"verdict fixtures", verdict_fixtures},
      {"measurements equal the rescan oracle", oracle_equivalence},
      {"preprocessing properties", preproc_properties},
      {"knuth binning", knuth},
      {"kde normalization", kde_normalization},
      {"undiffused self-consistency", self_consistency},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (o.detail.ends_with("; ")) o.detail.resize(o.detail.size() - 2);
    failed += !o.pass;
    std::printf("%s  %s  (%s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
