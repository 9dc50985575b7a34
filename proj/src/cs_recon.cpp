#include "rc4d/cs_recon.hpp"

#include <algorithm>
#include <cmath>

namespace rc4d {

namespace {

double norm2(Series const &x)
{
  double acc = 0;
  for (auto const &f : x) {
    for (auto v : f.values()) acc += std::norm(v);
  }
  return acc;
}

Series axpy(Series const &x, double a, Series const &g)
{
  Series out = x;
  for (std::size_t b = 0; b < out.size(); b++) {
    auto dst = out[b].values();
    auto src = g[b].values();
    for (std::size_t i = 0; i < dst.size(); i++) dst[i] += a * src[i];
  }
  return out;
}

double distance2(Series const &a, Series const &b)
{
  double acc = 0;
  for (std::size_t f = 0; f < a.size(); f++) {
    for (std::size_t i = 0; i < a[f].size(); i++) acc += std::norm(a[f][i] - b[f][i]);
  }
  return acc;
}

} // namespace

void CsConfig::validate() const
{
  if (lambda_t && *lambda_t < 0) throw Error("lambda_t must be non-negative");
  if (lambda_s != 0.0) throw Error("spatial regularization is not implemented; lambda_s must be 0");
  if (max_iters < 1) throw Error("max_iters must be at least 1");
  if (!(shrink > 0 && shrink < 1)) throw Error("shrink factor must lie in (0, 1)");
  if (initial_step < 0) throw Error("initial step must be non-negative");
  if (!(huber_fraction > 0)) throw Error("huber fraction must be positive");
}

CsProblem::CsProblem(std::vector<SpokeSet> bins, CsConfig const &cfg, GriddingConfig const &gridding)
  : prox_iters_(cfg.prox_iters)
{
  cfg.validate();
  if (bins.empty()) throw Error("no respiratory bins");
  for (auto &b : bins) {
    if (b.plan.n_spokes() == 0) throw Error("empty bin");
    b.validate();
    if (b.plan.matrix != bins.front().plan.matrix) throw Error("bins disagree on matrix size");
  }
  for (auto &b : bins) {
    auto w = density_weights(b.plan);
    ops_.emplace_back(b.plan, gridding);
    init_.push_back(ops_.back().reconstruct(b.samples, w));
    data_.push_back(std::move(b.samples));
  }

  double range = 0;
  for (auto const &f : init_) {
    for (auto v : f.values()) range = std::max(range, std::abs(v));
  }
  if (!(range > 0)) range = 1.0;
  epsilon_ = cfg.huber_fraction * range;
  lambda_ = cfg.lambda_t ? *cfg.lambda_t : 0.01 * data_term(init_) / frames();
}

double CsProblem::data_term(Series const &x) const
{
  double acc = 0;
  for (std::size_t b = 0; b < ops_.size(); b++) {
    std::vector<Complex> pred(data_[b].size());
    ops_[b].forward_into(x[b], pred);
    for (std::size_t j = 0; j < pred.size(); j++) acc += std::norm(pred[j] - data_[b][j]);
  }
  return acc;
}

double CsProblem::tv_term(Series const &x) const
{
  double      acc = 0;
  std::size_t nf = x.size();
  for (std::size_t b = 0; b < nf; b++) {
    auto const &cur = x[b];
    auto const &next = x[(b + 1) % nf];
    for (std::size_t i = 0; i < cur.size(); i++) {
      double const d = std::abs(next[i] - cur[i]);
      acc += d <= epsilon_ ? d * d / (2.0 * epsilon_) : d - epsilon_ / 2.0;
    }
  }
  return acc;
}

Series CsProblem::data_gradient(Series const &x) const
{
  Series g;
  for (std::size_t b = 0; b < ops_.size(); b++) {
    std::vector<Complex> r(data_[b].size());
    ops_[b].forward_into(x[b], r);
    for (std::size_t j = 0; j < r.size(); j++) r[j] = 2.0 * (r[j] - data_[b][j]);
    g.push_back(ops_[b].adjoint(r));
  }
  return g;
}

Series CsProblem::tv_gradient(Series const &x) const
{
  std::size_t const nf = x.size();
  Series            g(nf, ComplexImage(x.front().width(), x.front().height()));
  for (std::size_t b = 0; b < nf; b++) {
    auto const &cur = x[b];
    auto const &next = x[(b + 1) % nf];
    for (std::size_t i = 0; i < cur.size(); i++) {
      Complex const d = next[i] - cur[i];
      Complex const s = d / std::max(epsilon_, std::abs(d));
      g[(b + 1) % nf][i] += s;
      g[b][i] -= s;
    }
  }
  return g;
}

Series CsProblem::gradient(Series const &x) const
{
  return axpy(data_gradient(x), lambda_, tv_gradient(x));
}

Series CsProblem::prox_tv(Series const &z, double mu, std::vector<Complex> &dual) const
{
  std::size_t const nf = z.size();
  std::size_t const np = z.front().size();
  if (dual.size() != nf * np) dual.assign(nf * np, Complex{});
  Series out = z;
  if (mu <= 0) return out;

  double const         step = 1.0 / (4.0 * mu + epsilon_);
  std::vector<Complex> p(nf), x(nf);
  for (std::size_t i = 0; i < np; i++) {
    for (std::size_t b = 0; b < nf; b++) p[b] = dual[b * np + i];
    auto primal = [&] {
      // x = z - mu D^H p, (D^H p)_b = p_{b-1} - p_b
      for (std::size_t b = 0; b < nf; b++) x[b] = z[b][i] - mu * (p[(b + nf - 1) % nf] - p[b]);
    };
    for (int it = 0; it < prox_iters_; it++) {
      primal();
      for (std::size_t b = 0; b < nf; b++) {
        Complex const q = p[b] + step * ((x[(b + 1) % nf] - x[b]) - epsilon_ * p[b]);
        double const  m = std::abs(q);
        p[b] = m > 1.0 ? q / m : q;
      }
    }
    primal();
    for (std::size_t b = 0; b < nf; b++) {
      out[b][i] = x[b];
      dual[b * np + i] = p[b];
    }
  }
  return out;
}

double CsProblem::normal_operator_norm(int iterations) const
{
  Series v;
  for (std::size_t b = 0; b < ops_.size(); b++) {
    ComplexImage f(matrix());
    for (std::size_t i = 0; i < f.size(); i++) {
      // deterministic, non-degenerate start
      f[i] = Complex(1.0 + 0.37 * static_cast<double>((i * 7 + b * 3) % 11), 0.21 * static_cast<double>(i % 5));
    }
    v.push_back(std::move(f));
  }
  double estimate = 0;
  for (int it = 0; it < iterations; it++) {
    double const n = std::sqrt(norm2(v));
    for (auto &f : v) {
      for (auto &val : f.values()) val /= n;
    }
    Series w;
    for (std::size_t b = 0; b < ops_.size(); b++) w.push_back(ops_[b].adjoint(ops_[b].forward(v[b]).samples));
    estimate = std::sqrt(norm2(w));
    v = std::move(w);
  }
  return estimate;
}

CsResult reconstruct(std::vector<SpokeSet> bins, CsConfig const &cfg, GriddingConfig const &gridding)
{
  CsProblem const problem(std::move(bins), cfg, gridding);

  CsResult res;
  res.lambda = problem.lambda();
  res.epsilon = problem.epsilon();

  Series               x = problem.initializer();
  std::vector<Complex> dual;
  double               f = problem.objective(x);
  if (!std::isfinite(f)) throw Error("diverged");
  res.trace.push_back(f);

  // gradient of the data term is 2 F^H (F x - y)
  double const lipschitz = 2.0 * problem.normal_operator_norm();
  double       step = cfg.initial_step > 0 ? cfg.initial_step : (lipschitz > 0 ? 1.0 / lipschitz : 1.0);

  for (int it = 0; it < cfg.max_iters; it++) {
    Series const g = problem.data_gradient(x);
    bool         accepted = false;
    double       trial = step * 2.0;
    Series       next;
    double       f_next = f;
    for (int attempt = 0; attempt < 40; attempt++) {
      auto dual_trial = dual;
      next = problem.prox_tv(axpy(x, -trial, g), trial * problem.lambda(), dual_trial);
      f_next = problem.objective(next);
      if (!std::isfinite(f_next)) throw Error("diverged");
      double const moved = distance2(next, x);
      if (f_next <= f - cfg.sufficient_decrease * moved / trial) {
        accepted = true;
        dual = std::move(dual_trial);
        break;
      }
      trial *= cfg.shrink;
    }
    if (!accepted) break;

    step = trial;
    x = std::move(next);
    double const prev = f;
    f = f_next;
    res.trace.push_back(f);
    res.iterations = it + 1;
    if (std::abs(prev - f) <= cfg.tol * std::max(std::abs(prev), 1e-300)) break;
  }

  res.complex = x;
  for (auto const &frame : x) res.image.frames.push_back(magnitude(frame));
  return res;
}

double objective(Series const &x, std::vector<SpokeSet> bins, CsConfig const &cfg, GriddingConfig const &gridding)
{
  CsProblem const problem(std::move(bins), cfg, gridding);
  if (static_cast<int>(x.size()) != problem.frames()) throw Error("series length does not match bin count");
  return problem.objective(x);
}

ImageSeries gridding_series(std::vector<SpokeSet> const &bins, GriddingConfig const &gridding)
{
  ImageSeries out;
  for (auto const &b : bins) {
    if (b.plan.n_spokes() == 0) throw Error("empty bin");
    NufftOperator const op(b.plan, gridding);
    out.frames.push_back(magnitude(op.reconstruct(b.samples, density_weights(b.plan))));
  }
  return out;
}

} // namespace rc4d
