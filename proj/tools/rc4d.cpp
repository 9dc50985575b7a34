// rc4d: radial 4D-MRI simulation, reconstruction and dataset export.
//
//   rc4d phantom  --matrix 64 --out ph
//   rc4d acquire  --in ph --spokes 3000 --seed 1 --out acq
//   rc4d undersample --in acq --keep 1000 --out us
//   rc4d gate     --in us --bins 8 --out gated
//   rc4d recon    --in gated --method cs --trace --out rec
//   rc4d evaluate --in rec [--ref other] --out report.json
//   rc4d export-training --full rec1x --under rec3x --size 64 --out data

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rc4d/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rc4d;

namespace {

nlohmann::json read_json(fs::path const &p)
{
  std::ifstream in(p);
  if (!in) throw ValidationError(p.string(), "cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  }
  catch (nlohmann::json::parse_error const &e) {
    throw ValidationError(p.string(), p.string() + " is not valid JSON");
  }
}

void write_json(nlohmann::json const &j, fs::path const &p)
{
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  if (!out) throw Error("failed to write " + p.string());
}

std::pair<int, int> parse_split(std::string const &s)
{
  auto const colon = s.find(':');
  if (colon == std::string::npos) throw ValidationError("--split", "--split expects TRAIN:TEST");
  try {
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  }
  catch (std::exception const &) {
    throw ValidationError("--split", "--split expects TRAIN:TEST");
  }
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Radial 4D-MRI simulation and reconstruction engine"};
  app.require_subcommand(1);

  std::string in, out, ref, phantom_json;
  int         matrix = 64, spokes = 3000, keep = 0, bins = 8, size = 64, iters = 60;
  std::uint64_t seed = 0;
  std::string method = "nufft", split = "37:11";
  bool        trace = false, timing = false;
  double      tr = 3e-3, ros = 2.0, fov = 374.0, period = 4.0, amplitude = 1.0, drift = 0.0, jitter = 0.0, noise = 0.0,
         lambda = -1.0;
  std::vector<std::string> full, under;

  auto *ph = app.add_subcommand("phantom", "write the analytic liver phantom");
  ph->add_option("--matrix", matrix, "pixels per side")->default_val(64);
  ph->add_option("--spec", phantom_json, "phantom JSON to use instead of the built-in scene");
  ph->add_option("--out", out)->required();

  auto *acq = app.add_subcommand("acquire", "simulate golden-angle radial acquisition");
  acq->add_option("--in", in)->required();
  acq->add_option("--spokes", spokes)->default_val(3000);
  acq->add_option("--seed", seed)->default_val(0);
  acq->add_option("--tr", tr, "seconds between spokes")->default_val(3e-3);
  acq->add_option("--readout-os", ros, "readout oversampling")->default_val(2.0);
  acq->add_option("--period", period, "breathing period, s")->default_val(4.0);
  acq->add_option("--amplitude", amplitude)->default_val(1.0);
  acq->add_option("--drift", drift, "baseline drift per second")->default_val(0.0);
  acq->add_option("--jitter", jitter, "cycle-length std as a fraction of the period")->default_val(0.0);
  acq->add_option("--noise", noise)->default_val(0.0);
  acq->add_option("--out", out)->required();

  auto *us = app.add_subcommand("undersample", "keep the first K spokes");
  us->add_option("--in", in)->required();
  us->add_option("--keep", keep)->required();
  us->add_option("--out", out)->required();

  auto *gt = app.add_subcommand("gate", "sort spokes into respiratory bins");
  gt->add_option("--in", in)->required();
  gt->add_option("--bins", bins)->default_val(8);
  gt->add_option("--out", out)->required();

  auto *rc = app.add_subcommand("recon", "reconstruct every respiratory bin");
  rc->add_option("--in", in)->required();
  rc->add_option("--method", method)->check(CLI::IsMember({"nufft", "cs"}))->default_val("nufft");
  rc->add_flag("--trace", trace, "attach the CS objective trace (trace.json)");
  rc->add_flag("--timing", timing, "attach wall time (timing.json); output is then not reproducible");
  rc->add_option("--lambda", lambda, "temporal TV weight (default: auto-scaled)");
  rc->add_option("--iters", iters)->default_val(60);
  rc->add_option("--out", out)->required();

  auto *ev = app.add_subcommand("evaluate", "score a reconstruction");
  ev->add_option("--in", in)->required();
  ev->add_option("--ref", ref, "reference container (default: phantom truth)");
  ev->add_option("--fov-mm", fov)->default_val(374.0);
  ev->add_option("--out", out)->required();

  auto *ex = app.add_subcommand("export-training", "write paired 2D+t training samples");
  ex->add_option("--full", full, "fully sampled reconstruction (repeatable)")->required();
  ex->add_option("--under", under, "undersampled reconstruction, paired with --full by order")->required();
  ex->add_option("--size", size)->default_val(64);
  ex->add_option("--split", split, "train:test ratio")->default_val("37:11");
  ex->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  }
  catch (CLI::CallForHelp const &e) {
    return app.exit(e);
  }
  catch (CLI::ParseError const &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ph) {
      PhantomSpec spec = phantom_json.empty() ? liver_phantom(matrix) : phantom_from_json(read_json(phantom_json));
      write_container(make_phantom(spec), out);
    }
    else if (*acq) {
      AcquireOptions opt;
      opt.n_spokes = spokes;
      opt.seed = seed;
      opt.spoke_interval = tr;
      opt.readout_oversampling = ros;
      opt.waveform.period = period;
      opt.waveform.amplitude = amplitude;
      opt.waveform.drift = drift;
      opt.waveform.jitter = jitter;
      opt.waveform.noise = noise;
      write_container(acquire(read_container(in), opt), out);
    }
    else if (*us) {
      write_container(undersample(read_container(in), keep), out);
    }
    else if (*gt) {
      write_container(gate(read_container(in), bins), out);
    }
    else if (*rc) {
      ReconOptions opt;
      opt.method = method == "cs" ? ReconMethod::cs : ReconMethod::nufft;
      opt.trace = trace;
      opt.cs.max_iters = iters;
      if (lambda >= 0) opt.cs.lambda_t = lambda;
      auto const input = read_container(in);
      auto const t0 = std::chrono::steady_clock::now();
      auto       result = reconstruct(input, opt);
      double const wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (timing) result.documents["timing"] = {{"wall_time_s", wall}};
      std::cerr << "recon (" << method << "): " << wall << " s\n";
      write_container(result, out);
    }
    else if (*ev) {
      auto const pred = read_container(in);
      EvaluateOptions opt;
      opt.fov_mm = fov;
      if (ref.empty()) {
        write_json(evaluate(pred, nullptr, opt), out);
      }
      else {
        auto const r = read_container(ref);
        write_json(evaluate(pred, &r, opt), out);
      }
    }
    else if (*ex) {
      if (full.size() != under.size()) throw ValidationError("--under", "--full and --under must be given the same number of times");
      std::vector<std::pair<Container, Container>> pairs;
      for (std::size_t i = 0; i < full.size(); i++) pairs.emplace_back(read_container(full[i]), read_container(under[i]));
      ExportOptions opt;
      opt.size = size;
      std::tie(opt.split_train, opt.split_test) = parse_split(split);
      export_training(pairs, opt, out);
    }
  }
  catch (ValidationError const &e) {
    std::cerr << "error [" << e.key() << "]: " << e.what() << "\n";
    return 2;
  }
  catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
