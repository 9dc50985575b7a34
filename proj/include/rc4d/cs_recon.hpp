#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rc4d/nufft.hpp"

namespace rc4d {

struct CsConfig
{
  // Temporal TV weight. Unset: 0.01 * (data term of the initializer) / frames.
  std::optional<double> lambda_t;
  double                lambda_s = 0.0; // spatial TV; reserved, must be 0
  int                   max_iters = 60;
  double                initial_step = 0.0; // 0: 1 / Lipschitz estimate of the data gradient
  double                shrink = 0.5;
  double                sufficient_decrease = 1e-4;
  double                tol = 1e-5;
  double                huber_fraction = 1e-6; // epsilon relative to initializer dynamic range
  int                   prox_iters = 40;

  void validate() const;
};

using Series = std::vector<ComplexImage>;

// Data consistency across respiratory bins plus cyclic temporal TV:
//   sum_b ||F_b X_b - y_b||^2 + lambda * sum_b H_eps(X_{b+1} - X_b)
// H_eps is the Huber function applied pixelwise to complex magnitudes.
class CsProblem
{
public:
  CsProblem(std::vector<SpokeSet> bins, CsConfig const &cfg, GriddingConfig const &gridding = {});

  int    frames() const noexcept { return static_cast<int>(ops_.size()); }
  int    matrix() const noexcept { return ops_.front().matrix(); }
  double lambda() const noexcept { return lambda_; }
  double epsilon() const noexcept { return epsilon_; }

  // Density-compensated gridding reconstruction of every bin.
  Series const &initializer() const noexcept { return init_; }

  double data_term(Series const &x) const;
  double tv_term(Series const &x) const; // unweighted Huber TV
  double objective(Series const &x) const { return data_term(x) + lambda_ * tv_term(x); }

  // Gradient G with d(objective) = sum Re(conj(G) dX).
  Series data_gradient(Series const &x) const;
  Series tv_gradient(Series const &x) const; // unweighted
  Series gradient(Series const &x) const;

  // argmin_x 1/2 ||x - z||^2 + mu * tv_term(x), per pixel, by projected
  // gradient on the dual. `dual` carries the warm start between calls.
  Series prox_tv(Series const &z, double mu, std::vector<Complex> &dual) const;

  // Largest eigenvalue of sum_b F_b^H F_b, by power iteration.
  double normal_operator_norm(int iterations = 15) const;

private:
  std::vector<NufftOperator>        ops_;
  std::vector<std::vector<Complex>> data_;
  Series                            init_;
  double                            lambda_ = 0;
  double                            epsilon_ = 0;
  int                               prox_iters_ = 40;
};

struct CsResult
{
  ImageSeries         image;   // magnitude
  Series              complex;
  std::vector<double> trace;   // objective at the initializer, then after each iteration
  int                 iterations = 0;
  double              lambda = 0;
  double              epsilon = 0;
};

// Proximal gradient with backtracking. Throws "diverged" on a non-finite
// objective and on any empty bin.
CsResult reconstruct(std::vector<SpokeSet> bins, CsConfig const &cfg = {}, GriddingConfig const &gridding = {});

double objective(Series const &x, std::vector<SpokeSet> bins, CsConfig const &cfg = {},
                 GriddingConfig const &gridding = {});

// Density-compensated adjoint of every bin, magnitude only.
ImageSeries gridding_series(std::vector<SpokeSet> const &bins, GriddingConfig const &gridding = {});

} // namespace rc4d
