#include "rc4d/pipeline.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <iterator>
#include <unistd.h>

using namespace rc4d;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir
{
  fs::path path;
  explicit TempDir(std::string const &tag)
    : path(fs::temp_directory_path() / ("rc4d_" + tag + "_" + std::to_string(::getpid())))
  {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(fs::path const &p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Container const &acquired()
{
  static Container const c = [] {
    AcquireOptions opt;
    opt.seed = 5;
    return acquire(make_phantom(liver_phantom(32)), opt);
  }();
  return c;
}

double psnr_of(Container const &recon)
{
  auto const report = evaluate(recon, nullptr);
  return report["psnr_db"].get<double>();
}

Container series_container(std::vector<double> const &values, int frames, int n)
{
  ImageSeries s;
  for (int f = 0; f < frames; f++) {
    RealImage img(n);
    for (std::size_t i = 0; i < img.size(); i++) img[i] = values[(i + static_cast<std::size_t>(f)) % values.size()];
    s.frames.push_back(img);
  }
  Container c;
  c.put(series_to_array("recon", s));
  c.provenance = {{"seed", 1}, {"acceleration", 1.0}, {"n_spokes_kept", 3000}, {"n_bins", frames}};
  return c;
}

} // namespace

TEST_CASE("acquisition layout and provenance", "[pipeline]")
{
  auto const &c = acquired();
  auto const &k = c.get("kspace");
  CHECK(k.role == Role::kspace);
  CHECK(k.dtype() == DType::c64);
  CHECK(k.shape == std::vector<std::int64_t>{3000, 65});
  CHECK(c.get("angles").shape == std::vector<std::int64_t>{3000});
  CHECK(c.get("timestamps").as<double>().back() == Approx(8.997));
  CHECK(c.provenance["acceleration"] == 1.0);
  CHECK(c.provenance["seed"] == 5);
  CHECK(c.provenance["n_bins"].is_null());
  CHECK(phantom_of(c).ellipses.size() == liver_phantom(32).ellipses.size());
  CHECK(waveform_of(c).duration() >= 8.997);
}

TEST_CASE("undersampling keeps the first spokes", "[pipeline]")
{
  auto const &full = acquired();
  for (auto [keep, rate] : {std::pair{1000, 3.0}, std::pair{500, 6.0}, std::pair{300, 10.0}}) {
    auto const u = undersample(full, keep);
    CHECK(u.provenance["acceleration"] == rate);
    CHECK(u.provenance["n_spokes_kept"] == keep);
    CHECK(u.provenance["n_spokes_acquired"] == 3000);
    auto const &a = u.get("angles").as<double>();
    auto const &b = full.get("angles").as<double>();
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
    CHECK(u.get("kspace").shape[0] == keep);
    CHECK(plan_of(u).acceleration() == rate);
  }
  CHECK_THROWS(undersample(full, 0));
  CHECK_THROWS(undersample(full, 3001));
  CHECK_THROWS(undersample(gate(full), 1000));
}

TEST_CASE("gating records bins and regularity", "[pipeline]")
{
  auto const g = gate(acquired());
  CHECK(g.provenance["n_bins"] == 8);
  CHECK(g.provenance["is_regular"] == true);
  CHECK(g.provenance["regularity_score"].get<double>() < 0.2);
  auto const b = bins_of(g);
  for (int s : b.bin_sizes()) CHECK(s == 375);
  auto const data = binned_data(g);
  REQUIRE(data.size() == 8);
  for (auto const &d : data) CHECK(d.plan.n_spokes() == 375);
  CHECK(g.get("bin_amplitudes").shape == std::vector<std::int64_t>{8});
}

TEST_CASE("gridding reconstruction through the pipeline", "[pipeline]")
{
  auto const full = reconstruct(gate(acquired()), {});
  auto const under = reconstruct(gate(undersample(acquired(), 1000)), {});
  CHECK(full.get("recon").shape == std::vector<std::int64_t>{8, 32, 32});
  CHECK(full.provenance["method"] == "nufft");
  CHECK(under.provenance["acceleration"] == 3.0);
  CHECK(under.provenance["n_bins"] == 8);
  CHECK(under.provenance["seed"] == 5);

  double const p1 = psnr_of(full), p3 = psnr_of(under);
  INFO("pipeline PSNR 1x " << p1 << " dB, 3x " << p3 << " dB");
  CHECK(p1 >= 28.5);
  CHECK(p3 < p1);
}

TEST_CASE("evaluation report", "[pipeline]")
{
  auto const recon = reconstruct(gate(acquired()), {});
  auto const r = evaluate(recon, nullptr, {{}, 374.0, 1.5});
  for (char const *key : {"rmse", "psnr_db", "one_minus_ssim", "msssim", "detection", "segmentation", "hd95_mm", "wall_time_s"}) {
    CHECK(r.contains(key));
  }
  CHECK(r["wall_time_s"] == 1.5);
  CHECK(r["one_minus_ssim"].get<double>() >= 0.0);
  CHECK(r["msssim"].get<double>() <= 1.0);
  CHECK(r["detection"]["tp"].get<int>() + r["detection"]["fn"].get<int>() == 8);
  CHECK(evaluate(recon, nullptr)["wall_time_s"].is_null());

  // a reference identical to the prediction
  auto const self = evaluate(recon, &recon);
  CHECK(self["psnr_db"] == "inf");
  CHECK(self["rmse"] == 0.0);
  CHECK(self["one_minus_ssim"].get<double>() == Approx(0.0).margin(1e-12));
}

TEST_CASE("the pipeline is deterministic on disk", "[pipeline]")
{
  TempDir const tmp("det");
  for (char const *run : {"a", "b"}) {
    AcquireOptions opt;
    opt.seed = 11;
    opt.n_spokes = 600;
    opt.spoke_interval = 0.02;
    opt.waveform.jitter = 0.1;
    opt.waveform.noise = 0.02;
    auto const g = gate(undersample(acquire(make_phantom(liver_phantom(16)), opt), 300));
    write_container(g, tmp.path / run / "gated");
    ReconOptions ro;
    ro.method = ReconMethod::cs;
    ro.cs.max_iters = 5;
    ro.trace = true;
    write_container(reconstruct(g, ro), tmp.path / run / "recon");
  }
  for (char const *stage : {"gated", "recon"}) {
    for (auto const &e : fs::directory_iterator(tmp.path / "a" / stage)) {
      auto const name = e.path().filename();
      CHECK(slurp(e.path()) == slurp(tmp.path / "b" / stage / name));
    }
  }
}

TEST_CASE("training export", "[pipeline]")
{
  TempDir const tmp("export");

  SECTION("identical inputs give identical pairs")
  {
    auto const c = series_container({0.1, 0.5, 0.9, 0.3, 0.7}, 8, 20);
    export_training({{c, c}}, {}, tmp.path / "same");
    auto const s = read_container(tmp.path / "same" / "sample_0000");
    CHECK(s.get("x").data == s.get("y").data);
    CHECK(s.get("x").shape == std::vector<std::int64_t>{8, 64, 64});

    auto const &x = s.get("x").as<float>();
    double      mean = 0, var = 0;
    for (float v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (float v : x) var += (v - mean) * (v - mean);
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(std::sqrt(var / static_cast<double>(x.size())) - 1.0) < 1e-5);
  }

  SECTION("split ratio and index")
  {
    std::vector<std::pair<Container, Container>> pairs;
    for (int i = 0; i < 48; i++) {
      auto const c = series_container({0.1 * i, 0.5, 0.9}, 2, 8);
      pairs.emplace_back(c, c);
    }
    ExportOptions opt;
    opt.size = 8;
    export_training(pairs, opt, tmp.path / "split");
    auto const index = nlohmann::json::parse(slurp(tmp.path / "split" / "index.json"));
    CHECK(index["train"].size() == 37);
    CHECK(index["test"].size() == 11);
    CHECK(index["frames"] == 2);
    CHECK(index["samples"][0]["split"] == "train");
    CHECK(index["samples"][47]["split"] == "test");
  }

  SECTION("mismatched frame counts are rejected")
  {
    auto const a = series_container({0.1, 0.5}, 8, 16), b = series_container({0.1, 0.5}, 7, 16);
    CHECK_THROWS(export_training({{a, b}}, {}, tmp.path / "bad"));
  }

  SECTION("undersampled inputs stay degraded after normalization")
  {
    auto const full = reconstruct(gate(acquired()), {});
    auto const under = reconstruct(gate(undersample(acquired(), 500)), {});
    export_training({{full, full}, {full, under}}, {}, tmp.path / "pairs");
    auto const same = read_container(tmp.path / "pairs" / "sample_0000");
    auto const diff = read_container(tmp.path / "pairs" / "sample_0001");
    auto const as = array_to_series(same.get("x")), ys = array_to_series(same.get("y"));
    auto const ad = array_to_series(diff.get("x")), yd = array_to_series(diff.get("y"));
    CHECK(rmse(as, ys) == 0.0);
    CHECK(rmse(ad, yd) > 0.05);
    CHECK(diff.provenance["acceleration"] == 6.0);
  }
}

TEST_CASE("resize and z-score helpers", "[pipeline]")
{
  RealImage img(4, 4);
  for (int y = 0; y < 4; y++) {
    for (int x = 0; x < 4; x++) img(x, y) = x;
  }
  CHECK(resize_bilinear(img, 4, 4) == img);
  auto const up = resize_bilinear(img, 8, 8);
  CHECK(up(0, 0) == 0.0);
  CHECK(up(7, 3) == 3.0);
  CHECK(up(3, 5) == Approx(1.25));

  ImageSeries constant{{RealImage(4, 4, 2.0)}};
  auto const [m, s] = zscore(constant);
  CHECK(m == 2.0);
  CHECK(s == 0.0);
  for (double v : constant.frames[0].values()) CHECK(v == 0.0);
}
