#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crowd/grid.hpp"
#include "crowd/kernel.hpp"
#include "crowd/linearized.hpp"
#include "crowd/solver.hpp"
#include "crowd/velocity.hpp"

namespace crowd {

/// W_d = integral of cos^d over [0, pi/2], by Gauss-Kronrod quadrature. Throws ConfigError for d < 0.
double wd(int d);

/// Norms of a sampled direction field, from grid differences. Gradients are
/// Frobenius norms of central differences on interior cells; the Hessian term
/// sums the second differences of both components.
struct DirectionNorms {
  double sup = 0.0;
  double grad_sup = 0.0;
  double l1 = 0.0;
  double grad_l1 = 0.0;
  double hess_l1 = 0.0;
  double div_sup = 0.0;
  double div_l1 = 0.0;
  double grad_div_l1 = 0.0;

  double w1inf() const { return sup + grad_sup; }
  double w11() const { return l1 + grad_l1; }
  double w21() const { return w11() + hess_l1; }
};

DirectionNorms direction_norms(const VecField& dir, const GridSpec& grid);

/// Continuum norms of scale * a(x) b(y) from a dense scan of its support.
struct KernelNorms {
  double sup = 0.0;
  double grad_sup = 0.0;
  double hess_sup = 0.0;

  double w1inf() const { return sup + grad_sup; }
  double grad_w1inf() const { return grad_sup + hess_sup; }
};

KernelNorms kernel_norms(const KernelSpec& spec, double scale);
KernelNorms kernel_norms(const SampledKernel& k);

/// ||eta_1 - eta_2||_W1inf for two continuum kernels.
double kernel_difference_w1inf(const SampledKernel& a, const SampledKernel& b);

/// sup of |fn| on [0, r] from a dense scan.
double sup_on(const SpeedLaw::Fn& fn, double r);

/// sup over interior cells of the Frobenius norm of the central-difference Jacobian,
/// maximized over the given fields.
double velocity_gradient_sup(const std::vector<VecField>& fields, const GridSpec& grid);

/// Everything the a-priori bounds consume, for one scalar equation (one
/// population) or for the whole system (sums of data norms, maxima of
/// coefficient norms).
struct BoundInputs {
  int d = 2;
  /// ||rho_o||_L1 summed over populations (enters through the convolution sum).
  double n1 = 0.0;
  double rho_sup = 0.0;
  double tv0 = 0.0;

  double v_sup = 0.0;
  double dv_sup = 0.0;
  double d2v_sup = 0.0;
  /// sup |q| and sup |q'| on [0, R_T].
  double q_sup = 0.0;
  double dq_sup = 0.0;

  DirectionNorms dir;

  double eta_sup = 0.0;
  double grad_eta_sup = 0.0;
  double grad_eta_w1inf = 0.0;

  double c_i = 0.0;
  /// Measured sup |grad V| over the run so far.
  double grad_v_sup = 0.0;

  double v_w1inf() const { return v_sup + dv_sup; }
  double v_w2inf() const { return v_sup + dv_sup + d2v_sup; }
};

/// Inputs for population `p` of `model` with datum `datum`; speed-law norms are
/// taken on [0, range]. C_I and the measured gradient are left at zero.
BoundInputs bound_inputs(const ModelSpec& model, const PopulationField& datum, std::size_t p,
                         double range);

/// System-level inputs: data norms summed, coefficient norms maximized.
BoundInputs system_inputs(std::span<const BoundInputs> per_population);

/// (2d + 1) ||q'|| ||grad V||.
double kappa0(const BoundInputs& in);

/// TV(rho_o) e^{k t} + d W_d e^{k t} ||q|| (C_I + ||div vdir||_inf) t.
double tv_bound_deviation(double t, const BoundInputs& in);
double tv_bound_deviation_log10(double t, const BoundInputs& in);

/// ||v||_W1inf ||vdir||_W1inf (N1 ||grad eta|| + 1).
double k1(const BoundInputs& in);
/// ||v||_W1inf ||vdir||_W11 (N1^2 ||grad eta||^2 + 2 N1 ||grad eta||_W1inf + 1).
double k2(const BoundInputs& in);

struct DifferentiableBounds {
  double linf = 0.0;
  double tv = 0.0;
  double linf_log10 = 0.0;
  double tv_log10 = 0.0;
};

/// L^inf bound ||rho_o|| e^{K1 t} and TV bound
/// TV(rho_o) e^{(2d+1) K1 t} + t e^{K1 t} d W_d K2 ||rho_o||.
DifferentiableBounds bounds_differentiable(double t, const BoundInputs& in);

/// Norms of the differences between two configurations.
struct StabilityDeltas {
  double datum_l1 = 0.0;
  double q_sup = 0.0;
  double dq_sup = 0.0;
  double dir_sup = 0.0;
  double div_dir_l1 = 0.0;
  double dir_w11 = 0.0;
  double v_sup = 0.0;
  double v_w1inf = 0.0;
  double eta_sup = 0.0;
  double eta_w1inf = 0.0;
};

/// Computes every delta from the two models and data (maxima over populations).
StabilityDeltas stability_deltas(const ModelSpec& a, const PopulationField& da, const ModelSpec& b,
                                 const PopulationField& db);

/// (1 + t e^{t b(t)}) (||drho_o|| + a(t)) with
///   F(t) = e^{k t} (TV(rho_o1) + t C_d ||q1|| (C_I + ||grad div vdir1||_L1)),  C_d = d W_d,
///   a(t) = t [ (C_I + ||vdir2||) F ||q1' - q2'|| + (C_I + ||div vdir2||_L1) ||q1 - q2||
///            + ||q1|| ||div(vdir2 - vdir1)||_L1 + ||q1'|| F ||vdir2 - vdir1|| ],
///   b(t) = C_I [ ||q1'|| F + ||q1|| ],
/// k the larger kappa0 of the two configurations and C_I the larger constant.
double stability_bound_deviation(double t, const BoundInputs& in1, const BoundInputs& in2,
                                 const StabilityDeltas& delta);
double stability_bound_deviation_log10(double t, const BoundInputs& in1, const BoundInputs& in2,
                                       const StabilityDeltas& delta);

/// Stability estimate of the differentiable family:
///   (||drho_o|| + t A_eta ||deta||_W1inf + t A_v ||dv||_W1inf + t A_vdir (||dvdir|| + ||dvdir||_W11))
///   * (1 + t A_rho e^{t A_rho}),
/// A_x = x' f(t) + x R e^{K t}, f(t) = e^{(2d+1) K1 t} (TV(rho_o1) + t d W_d K2 ||rho_o1||).
double stability_bound_differentiable(double t, const BoundInputs& in1, const BoundInputs& in2,
                                      const StabilityDeltas& delta);
double stability_bound_differentiable_log10(double t, const BoundInputs& in1,
                                            const BoundInputs& in2, const StabilityDeltas& delta);

struct BoundRow {
  double t = 0.0;
  std::string quantity;
  double measured = 0.0;
  /// May be +inf when the bound exceeds the double range; bound_log10 stays finite.
  double bound = 0.0;
  double bound_log10 = 0.0;
  /// log10(bound / measured); +inf when measured is 0.
  double slack_log10 = 0.0;
  bool dominated = false;
};

BoundRow make_row(double t, std::string quantity, double measured, double bound,
                  double bound_log10);

struct BoundReport {
  std::vector<BoundRow> rows;
  bool all_dominated() const;
};

/// Tracks the running quantities a bound needs (sup |grad V| and R_T) along a
/// run and evaluates the TV / L^inf bounds of the model family at given times.
class BoundMonitor {
 public:
  /// c_i[p] is the constant used for population p (ignored by the differentiable family).
  BoundMonitor(const ModelSpec& model, const PopulationField& datum, std::vector<double> c_i);

  /// Feed the transport of every step and the resulting state.
  void observe(const Transport& tr, const PopulationField& state);

  std::vector<BoundInputs> inputs() const;
  BoundInputs system() const;

  /// Per-population and total rows at time t for the given state.
  std::vector<BoundRow> evaluate(double t, const PopulationField& state) const;

 private:
  std::shared_ptr<const ModelSpec> model_;
  PopulationField datum_;
  std::vector<double> c_i_;
  std::vector<BoundInputs> base_;
  double grad_v_ = 0.0;
  double range_ = 0.0;
};

struct InvarianceReport {
  struct Row {
    double t = 0.0;
    std::vector<double> min;
    std::vector<double> max;
  };
  std::vector<Row> rows;
  double tol = 1e-6;
  bool pass = true;
};

/// Min and max per population at every stored time; passes iff all lie in [-tol, R + tol].
InvarianceReport check_invariance(const Trajectory& traj, double R, double tol = 1e-6);

}  // namespace crowd
