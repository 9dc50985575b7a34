#include "rc4d/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace rc4d {

namespace fs = std::filesystem;

namespace {

template <typename T>
T prov(Container const &c, char const *key)
{
  std::string const k = std::string("provenance.") + key;
  if (!c.provenance.contains(key) || c.provenance.at(key).is_null()) throw ValidationError(k, "invalid manifest key '" + k + "': missing");
  try {
    return c.provenance.at(key).get<T>();
  }
  catch (nlohmann::json::exception const &) {
    throw ValidationError(k, "invalid manifest key '" + k + "': wrong type");
  }
}

Array const &require(Container const &c, std::string const &name, Role role, DType dtype)
{
  auto const &a = c.get(name);
  if (a.role != role) throw ValidationError(name, "array '" + name + "' must have role " + role_name(role));
  if (a.dtype() != dtype) throw ValidationError(name, "array '" + name + "' must have dtype " + dtype_name(dtype));
  return a;
}

Array f64_array(std::string name, Role role, std::vector<double> v)
{
  Array a;
  a.name = std::move(name);
  a.role = role;
  a.shape = {static_cast<std::int64_t>(v.size())};
  a.data = std::move(v);
  return a;
}

std::string sample_id(std::size_t i)
{
  std::ostringstream s;
  s << "sample_" << std::setw(4) << std::setfill('0') << i;
  return s.str();
}

nlohmann::json finite_or_string(double v)
{
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

} // namespace

Container make_phantom(PhantomSpec const &spec)
{
  spec.validate();
  Container c;
  c.documents["phantom"] = to_json(spec);
  c.provenance["matrix"] = spec.matrix;
  ImageSeries baseline;
  baseline.frames.push_back(magnitude(rasterize(spec, 0.0)));
  c.put(series_to_array("baseline", baseline));
  return c;
}

PhantomSpec phantom_of(Container const &c)
{
  auto const it = c.documents.find("phantom");
  if (it == c.documents.end()) throw ValidationError("documents", "invalid manifest key 'documents': phantom.json not listed");
  return phantom_from_json(it->second);
}

Container acquire(Container const &phantom, AcquireOptions const &opt)
{
  auto const spec = phantom_of(phantom);
  spec.validate();
  auto const p = plan({spec.matrix, opt.n_spokes, opt.readout_oversampling, opt.spoke_interval});

  WaveformParams wp = opt.waveform;
  wp.seed = opt.seed;
  double const duration = std::max(p.timestamps.back() + wp.dt, 2.0 * wp.period);
  auto const   wave = synthesize(wp, duration);

  int const                        m = p.samples_per_spoke();
  double const                     n2 = static_cast<double>(spec.matrix) * spec.matrix;
  std::vector<std::complex<float>> ks;
  ks.reserve(static_cast<std::size_t>(p.n_samples()));
  for (int s = 0; s < p.n_spokes(); s++) {
    auto const kp = p.spoke_kpoints(s);
    for (auto v : analytic_kspace(spec, wave.at(p.timestamps[static_cast<std::size_t>(s)]), kp)) {
      // scaled to the pixel-sum convention of the nuFFT
      ks.emplace_back(static_cast<float>(v.real() * n2), static_cast<float>(v.imag() * n2));
    }
  }

  Container c;
  c.documents["phantom"] = to_json(spec);
  c.put(f64_array("angles", Role::angles, p.angles));
  c.put(f64_array("timestamps", Role::timestamps, p.timestamps));
  Array k;
  k.name = "kspace";
  k.role = Role::kspace;
  k.shape = {p.n_spokes(), m};
  k.data = std::move(ks);
  c.put(std::move(k));
  c.put(f64_array("waveform", Role::waveform, wave.values));

  auto &pr = c.provenance;
  pr = phantom.provenance;
  pr["seed"] = opt.seed;
  pr["matrix"] = spec.matrix;
  pr["n_spokes_acquired"] = p.n_spokes();
  pr["n_spokes_kept"] = p.n_spokes();
  pr["acceleration"] = 1.0;
  pr["n_bins"] = nullptr;
  pr["readout_oversampling"] = opt.readout_oversampling;
  pr["readout_samples"] = m;
  pr["spoke_interval"] = opt.spoke_interval;
  pr["waveform"] = {{"period", wp.period}, {"amplitude", wp.amplitude}, {"drift", wp.drift},
                    {"jitter", wp.jitter},  {"noise", wp.noise},         {"dt", wp.dt}};
  return c;
}

SpokePlan plan_of(Container const &c)
{
  auto const &angles = require(c, "angles", Role::angles, DType::f64).as<double>();
  auto const &times = require(c, "timestamps", Role::timestamps, DType::f64).as<double>();
  if (angles.size() != times.size()) throw ValidationError("timestamps", "angles and timestamps differ in length");
  if (angles.empty()) throw ValidationError("angles", "container holds no spokes");

  int const    matrix = prov<int>(c, "matrix");
  double const ros = prov<double>(c, "readout_oversampling");
  SpokePlan    p = plan({matrix, 1, ros, 1.0});
  p.angles = angles;
  p.timestamps = times;
  p.acquired_spokes = prov<int>(c, "n_spokes_acquired");
  if (prov<int>(c, "readout_samples") != p.samples_per_spoke()) {
    throw ValidationError("provenance.readout_samples", "invalid manifest key 'provenance.readout_samples': inconsistent with matrix");
  }
  return p;
}

RespWaveform waveform_of(Container const &c)
{
  auto const &v = require(c, "waveform", Role::waveform, DType::f64).as<double>();
  if (!c.provenance.contains("waveform") || !c.provenance["waveform"].is_object()) {
    throw ValidationError("provenance.waveform", "invalid manifest key 'provenance.waveform': missing");
  }
  auto const  &wj = c.provenance["waveform"];
  RespWaveform w;
  w.values = v;
  try {
    w.params.period = wj.at("period").get<double>();
    w.params.amplitude = wj.at("amplitude").get<double>();
    w.params.drift = wj.at("drift").get<double>();
    w.params.jitter = wj.at("jitter").get<double>();
    w.params.noise = wj.at("noise").get<double>();
    w.params.dt = wj.at("dt").get<double>();
  }
  catch (nlohmann::json::exception const &) {
    throw ValidationError("provenance.waveform", "invalid manifest key 'provenance.waveform': incomplete parameters");
  }
  w.params.seed = prov<std::uint64_t>(c, "seed");
  w.dt = w.params.dt;
  return w;
}

Container undersample(Container const &acquired, int keep_first)
{
  if (acquired.find("bin_of_spoke")) {
    throw ValidationError("bin_of_spoke", "undersampling must run before gating");
  }
  auto const p = plan_of(acquired);
  auto const u = undersample(p, keep_first);

  Container c = acquired;
  auto const &ks = require(acquired, "kspace", Role::kspace, DType::c64);
  auto const  m = static_cast<std::size_t>(p.samples_per_spoke());
  if (ks.shape.size() != 2 || ks.shape[0] != p.n_spokes() || static_cast<std::size_t>(ks.shape[1]) != m) {
    throw ValidationError("kspace", "array 'kspace' must be [n_spokes, readout_samples]");
  }
  auto const                      &kv = ks.as<std::complex<float>>();
  std::vector<std::complex<float>> kept(kv.begin(), kv.begin() + static_cast<std::ptrdiff_t>(m * static_cast<std::size_t>(keep_first)));
  Array                            k = ks;
  k.shape[0] = keep_first;
  k.data = std::move(kept);
  c.put(std::move(k));
  c.put(f64_array("angles", Role::angles, u.angles));
  c.put(f64_array("timestamps", Role::timestamps, u.timestamps));
  c.provenance["n_spokes_kept"] = keep_first;
  c.provenance["acceleration"] = u.acceleration();
  return c;
}

BinAssignment bins_of(Container const &c)
{
  auto const   &b = require(c, "bin_of_spoke", Role::bins, DType::i32).as<std::int32_t>();
  auto const   &r = require(c, "bin_amplitudes", Role::bins, DType::f64).as<double>();
  BinAssignment out;
  out.bin_of_spoke = b;
  out.representative = r;
  for (auto v : b) {
    if (v < 0 || v >= out.n_bins()) throw ValidationError("bin_of_spoke", "array 'bin_of_spoke' holds an out-of-range bin");
  }
  return out;
}

Container gate(Container const &acquired, int n_bins)
{
  auto const p = plan_of(acquired);
  auto const w = waveform_of(acquired);
  auto const bins = bin_spokes(w, p, n_bins);

  Container c = acquired;
  Array     b;
  b.name = "bin_of_spoke";
  b.role = Role::bins;
  b.shape = {p.n_spokes()};
  b.data = bins.bin_of_spoke;
  c.put(std::move(b));
  c.put(f64_array("bin_amplitudes", Role::bins, bins.representative));
  c.provenance["n_bins"] = n_bins;
  try {
    auto const r = regularity_score(w);
    c.provenance["regularity_score"] = r.score;
    c.provenance["is_regular"] = r.is_regular;
  }
  catch (Error const &) {
    c.provenance["regularity_score"] = nullptr;
    c.provenance["is_regular"] = nullptr;
  }
  return c;
}

std::vector<SpokeSet> binned_data(Container const &gated)
{
  auto const  p = plan_of(gated);
  auto const  bins = bins_of(gated);
  auto const &ks = require(gated, "kspace", Role::kspace, DType::c64);
  auto const  m = static_cast<std::size_t>(p.samples_per_spoke());
  if (ks.shape.size() != 2 || ks.shape[0] != p.n_spokes() || static_cast<std::size_t>(ks.shape[1]) != m) {
    throw ValidationError("kspace", "array 'kspace' must be [n_spokes, readout_samples]");
  }
  if (bins.bin_of_spoke.size() != static_cast<std::size_t>(p.n_spokes())) {
    throw ValidationError("bin_of_spoke", "array 'bin_of_spoke' does not match the spoke count");
  }
  auto const &kv = ks.as<std::complex<float>>();

  std::vector<SpokeSet> out;
  for (int b = 0; b < bins.n_bins(); b++) {
    auto const idx = bins.spokes_in_bin(b);
    if (idx.empty()) throw Error("empty bin");
    SpokeSet s{p.subset(idx), {}};
    s.samples.reserve(idx.size() * m);
    for (int i : idx) {
      for (std::size_t j = 0; j < m; j++) {
        auto const v = kv[static_cast<std::size_t>(i) * m + j];
        s.samples.emplace_back(v.real(), v.imag());
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

Container reconstruct(Container const &gated, ReconOptions const &opt)
{
  auto bins = binned_data(gated);

  Container c;
  c.documents["phantom"] = gated.documents.at("phantom");
  c.provenance = gated.provenance;
  if (opt.method == ReconMethod::nufft) {
    c.put(series_to_array("recon", gridding_series(bins, opt.gridding)));
    c.provenance["method"] = "nufft";
  }
  else {
    auto const res = reconstruct(std::move(bins), opt.cs, opt.gridding);
    c.put(series_to_array("recon", res.image));
    c.provenance["method"] = "cs";
    c.provenance["cs"] = {{"lambda_t", res.lambda}, {"epsilon", res.epsilon}, {"iterations", res.iterations}};
    if (opt.trace) c.documents["trace"] = res.trace;
  }
  c.put(gated.get("bin_amplitudes"));
  return c;
}

ImageSeries truth_series(Container const &c)
{
  auto const  spec = phantom_of(c);
  auto const &amps = require(c, "bin_amplitudes", Role::bins, DType::f64).as<double>();
  return render_series(spec, amps);
}

namespace {

std::vector<Mask> components(Mask const &m, int min_area)
{
  std::vector<Mask> out;
  Grid<int>         label(m.width(), m.height(), -1);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < m.height(); y++) {
    for (int x = 0; x < m.width(); x++) {
      if (!m(x, y) || label(x, y) >= 0) continue;
      Mask comp(m.width(), m.height());
      int  area = 0;
      stack.assign(1, {x, y});
      label(x, y) = static_cast<int>(out.size());
      while (!stack.empty()) {
        auto const [cx, cy] = stack.back();
        stack.pop_back();
        comp(cx, cy) = 1;
        area++;
        for (auto [nx, ny] : {std::pair{cx - 1, cy}, std::pair{cx + 1, cy}, std::pair{cx, cy - 1}, std::pair{cx, cy + 1}}) {
          if (nx < 0 || ny < 0 || nx >= m.width() || ny >= m.height()) continue;
          if (!m(nx, ny) || label(nx, ny) >= 0) continue;
          label(nx, ny) = static_cast<int>(out.size());
          stack.push_back({nx, ny});
        }
      }
      if (area >= min_area) out.push_back(std::move(comp));
    }
  }
  return out;
}

double median(std::vector<double> v)
{
  if (v.empty()) return 0.0;
  auto const mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

} // namespace

LesionScores lesion_scores(ImageSeries const &pred, PhantomSpec const &spec, std::vector<double> const &amplitudes,
                           double spacing_mm)
{
  int const idx = spec.find("lesion");
  if (idx < 0) throw Error("phantom has no lesion");
  if (static_cast<std::size_t>(pred.n_frames()) != amplitudes.size()) throw Error("frame count does not match bin amplitudes");
  auto const  &lesion = spec.ellipses[static_cast<std::size_t>(idx)];
  int const    n = spec.matrix;
  LesionScores out;
  double       hd_sum = 0;
  int          hd_frames = 0;

  for (std::size_t f = 0; f < amplitudes.size(); f++) {
    auto const &img = pred.frames[f];
    if (img.width() != n || img.height() != n) throw Error("prediction grid does not match phantom matrix");
    auto const truth = magnitude(rasterize(spec, amplitudes[f]));
    auto const gt = ellipse_mask(lesion, n, amplitudes[f]);
    Box const  gb = bounding_box(gt);
    int const  pad = std::max(gb.x1 - gb.x0, gb.y1 - gb.y0);
    Box const  win{std::max(0, gb.x0 - pad), std::max(0, gb.y0 - pad), std::min(n, gb.x1 + pad), std::min(n, gb.y1 + pad)};

    std::vector<double> inside, outside;
    for (int y = win.y0; y < win.y1; y++) {
      for (int x = win.x0; x < win.x1; x++) (gt(x, y) ? inside : outside).push_back(truth(x, y));
    }
    double const in_level = median(inside), out_level = median(outside);
    double const threshold = 0.5 * (in_level + out_level);
    bool const   brighter = in_level >= out_level;

    Mask cand(n);
    for (int y = win.y0; y < win.y1; y++) {
      for (int x = win.x0; x < win.x1; x++) {
        cand(x, y) = (brighter ? img(x, y) > threshold : img(x, y) < threshold) ? 1 : 0;
      }
    }

    SegSample sample;
    sample.spacing_mm = spacing_mm;
    if (std::any_of(gt.values().begin(), gt.values().end(), [](auto v) { return v != 0; })) {
      sample.truth.push_back({gt, gb, 1.0});
    }
    Mask const *largest = nullptr;
    long        largest_area = 0;
    auto const  comps = components(cand, 2);
    for (auto const &comp : comps) {
      double sum = 0;
      long   area = 0;
      for (std::size_t i = 0; i < comp.size(); i++) {
        if (comp[i]) {
          sum += img[i];
          area++;
        }
      }
      sample.predicted.push_back({comp, bounding_box(comp), sum / static_cast<double>(area)});
      if (area > largest_area) {
        largest_area = area;
        largest = &comp;
      }
    }
    auto const counts = match_and_count(sample, 0.5);
    out.detection += counts.detection;
    out.segmentation += counts.segmentation;
    if (largest && !sample.truth.empty()) {
      hd_sum += hd95(*largest, gt, spacing_mm);
      hd_frames++;
    }
  }
  if (hd_frames > 0) out.hd95_mm = hd_sum / hd_frames;
  return out;
}

nlohmann::json evaluate(Container const &pred, Container const *ref, EvaluateOptions const &opt)
{
  auto const *pa = pred.series_array();
  if (!pa) throw ValidationError("arrays", "prediction container holds no [frames, height, width] image series");
  auto const p = array_to_series(*pa);

  ImageSeries r;
  if (ref) {
    auto const *ra = ref->series_array();
    if (!ra) throw ValidationError("arrays", "reference container holds no [frames, height, width] image series");
    r = array_to_series(*ra);
  }
  else {
    r = truth_series(pred);
  }
  if (p.n_frames() != r.n_frames() || p.width() != r.width() || p.height() != r.height()) {
    throw ValidationError("shape", "prediction and reference series differ in shape");
  }

  nlohmann::json report;
  report["rmse"] = rmse(p, r);
  report["psnr_db"] = finite_or_string(psnr(p, r, opt.quality));
  report["one_minus_ssim"] = 1.0 - ssim(p, r, opt.quality);
  report["msssim"] = msssim(p, r, opt.quality);
  report["detection"] = nullptr;
  report["segmentation"] = nullptr;
  report["hd95_mm"] = nullptr;

  // lesion scores need the phantom geometry and the bin amplitudes
  Container const *geo = pred.documents.contains("phantom") && pred.find("bin_amplitudes") ? &pred : nullptr;
  if (!geo && ref && ref->documents.contains("phantom") && ref->find("bin_amplitudes")) geo = ref;
  if (geo) {
    auto const spec = phantom_of(*geo);
    if (spec.find("lesion") >= 0 && spec.matrix == p.width() && spec.matrix == p.height()) {
      auto const amps = require(*geo, "bin_amplitudes", Role::bins, DType::f64).as<double>();
      auto const s = lesion_scores(p, spec, amps, opt.fov_mm / spec.matrix);
      auto       prf_json = [](Counts const &c) {
        auto const     v = prf_dice(c);
        nlohmann::json j;
        j["precision"] = v.precision_defined ? nlohmann::json(v.precision) : nlohmann::json(nullptr);
        j["recall"] = v.recall_defined ? nlohmann::json(v.recall) : nlohmann::json(nullptr);
        j["dice"] = v.dice_defined ? nlohmann::json(v.dice) : nlohmann::json(nullptr);
        j["tp"] = c.tp;
        j["fp"] = c.fp;
        j["fn"] = c.fn;
        return j;
      };
      report["detection"] = prf_json(s.detection);
      report["segmentation"] = prf_json(s.segmentation);
      if (s.hd95_mm) report["hd95_mm"] = *s.hd95_mm;
    }
  }

  if (opt.wall_time_s) {
    report["wall_time_s"] = *opt.wall_time_s;
  }
  else if (auto it = pred.documents.find("timing"); it != pred.documents.end() && it->second.contains("wall_time_s")) {
    report["wall_time_s"] = it->second["wall_time_s"];
  }
  else {
    report["wall_time_s"] = nullptr;
  }
  return report;
}

RealImage resize_bilinear(RealImage const &img, int width, int height)
{
  if (width < 1 || height < 1 || img.size() == 0) throw Error("invalid resize");
  RealImage    out(width, height);
  double const sx = static_cast<double>(img.width()) / width;
  double const sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; y++) {
    double const fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    int const    y0 = static_cast<int>(std::floor(fy));
    int const    y1 = std::min(y0 + 1, img.height() - 1);
    double const ty = fy - y0;
    for (int x = 0; x < width; x++) {
      double const fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      int const    x0 = static_cast<int>(std::floor(fx));
      int const    x1 = std::min(x0 + 1, img.width() - 1);
      double const tx = fx - x0;
      out(x, y) = (1 - ty) * ((1 - tx) * img(x0, y0) + tx * img(x1, y0)) + ty * ((1 - tx) * img(x0, y1) + tx * img(x1, y1));
    }
  }
  return out;
}

std::pair<double, double> zscore(ImageSeries &s)
{
  double      sum = 0;
  std::size_t n = 0;
  for (auto const &f : s.frames) {
    for (double v : f.values()) sum += v;
    n += f.size();
  }
  if (n == 0) throw Error("empty series");
  double const mean = sum / static_cast<double>(n);
  double       var = 0;
  for (auto const &f : s.frames) {
    for (double v : f.values()) var += (v - mean) * (v - mean);
  }
  double std = std::sqrt(var / static_cast<double>(n));
  // a constant series is only centred
  double const scale = std > 0 ? std : 1.0;
  for (auto &f : s.frames) {
    for (auto &v : f.values()) v = (v - mean) / scale;
  }
  return {mean, std};
}

void export_training(std::vector<std::pair<Container, Container>> const &pairs, ExportOptions const &opt,
                     fs::path const &out)
{
  if (opt.size < 1) throw Error("export size must be positive");
  if (opt.split_train < 0 || opt.split_test < 0 || opt.split_train + opt.split_test == 0) throw Error("invalid split ratio");
  if (pairs.empty()) throw Error("nothing to export");

  std::size_t const n = pairs.size();
  auto n_train = static_cast<std::size_t>(std::lround(static_cast<double>(n) * opt.split_train / (opt.split_train + opt.split_test)));
  if (opt.split_train > 0) n_train = std::max<std::size_t>(n_train, 1);
  n_train = std::min(n_train, n);

  fs::create_directories(out);
  nlohmann::json index;
  index["format_version"] = container_format_version;
  index["size"] = opt.size;
  index["split_ratio"] = {opt.split_train, opt.split_test};
  index["samples"] = nlohmann::json::array();
  index["train"] = nlohmann::json::array();
  index["test"] = nlohmann::json::array();

  for (std::size_t i = 0; i < n; i++) {
    auto const &[full, under] = pairs[i];
    auto const *fa = full.series_array();
    auto const *ua = under.series_array();
    if (!fa || !ua) throw ValidationError("arrays", "export inputs must hold a [frames, height, width] image series");
    auto y = array_to_series(*fa);
    auto x = array_to_series(*ua);
    if (x.n_frames() != y.n_frames()) throw Error("frame-count mismatch between fully and undersampled series");
    if (x.width() != y.width() || x.height() != y.height()) throw Error("grid mismatch between fully and undersampled series");
    if (index.contains("frames") && index["frames"] != x.n_frames()) throw Error("frame-count mismatch across samples");
    index["frames"] = x.n_frames();

    for (auto &f : x.frames) f = resize_bilinear(f, opt.size, opt.size);
    for (auto &f : y.frames) f = resize_bilinear(f, opt.size, opt.size);
    auto const [xm, xs] = zscore(x);
    auto const [ym, ys] = zscore(y);

    Container sample;
    sample.put(series_to_array("x", x));
    sample.put(series_to_array("y", y));
    sample.provenance = {{"x_mean", xm}, {"x_std", xs}, {"y_mean", ym}, {"y_std", ys}, {"size", opt.size}};
    for (char const *key : {"seed", "acceleration", "n_spokes_kept", "n_bins", "matrix"}) {
      if (under.provenance.contains(key)) sample.provenance[key] = under.provenance[key];
    }
    if (full.provenance.contains("n_spokes_kept")) sample.provenance["reference_spokes"] = full.provenance["n_spokes_kept"];

    auto const id = sample_id(i);
    write_container(sample, out / id);
    std::string const split = i < n_train ? "train" : "test";
    index["samples"].push_back({{"id", id}, {"path", id}, {"split", split}});
    index[split].push_back(id);
  }

  std::ofstream f(out / "index.json");
  f << index.dump(2) << "\n";
  if (!f) throw Error("failed to write index.json");
}

} // namespace rc4d
