#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <variant>

#include "crowd/grid.hpp"
#include "crowd/kernel.hpp"
#include "crowd/velocity.hpp"

namespace crowd {

/// N(u) = u / sqrt(1 + |u|^2), cellwise. |N(u)| < 1.
VecField saturate(const VecField& u);

/// -eps N(grad(rho^j * eta)).
VecField gradient_avoidance(const PopulationField& state, std::size_t j, double eps,
                            const SampledKernel& k);

/// N((rho^j v(rho^j) dir) * eta): population j pushing along its own direction.
VecField flux_push(const PopulationField& state, std::size_t j, const SpeedLaw& law,
                   const VecField& dir, const SampledKernel& k);

/// Spatially constant or cell-varying scalar weight of a weighted-sum node.
using Coefficient = std::variant<double, Field2D>;

/// Immutable expression tree for a nonlocal deviation I(rho). Leaves read one
/// source population; inner nodes saturate or linearly combine their children.
/// Copies share the tree.
class NonlocalOp {
 public:
  /// The zero operator.
  NonlocalOp();

  static NonlocalOp zero() { return {}; }
  /// -eps N(grad(rho^source * eta)); with saturated = false the raw -eps grad(rho^source * eta).
  static NonlocalOp gradient_avoidance(double eps, std::shared_ptr<const SampledKernel> kernel,
                                       std::size_t source, bool saturated = true);
  static NonlocalOp flux_push(std::shared_ptr<const SampledKernel> kernel, std::size_t source,
                              SpeedLaw law, VecField direction);
  static NonlocalOp saturate(NonlocalOp inner);
  static NonlocalOp weighted_sum(Coefficient alpha, NonlocalOp left, Coefficient beta,
                                 NonlocalOp right);

  /// Leaves first, then the tree reduction.
  VecField evaluate(const PopulationField& state) const;

  bool is_zero() const;
  /// Largest source population index referenced by a leaf, plus one (0 for the zero operator).
  std::size_t populations_referenced() const;

  struct Node;

 private:
  explicit NonlocalOp(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Empirical lower bound for the constant C_I of the Lipschitz/regularity
/// hypothesis on I, from finitely many density samples:
///   sup|I(r) - I(r')| / |r - r'|_1,   |div(I(r) - I(r'))|_1 / |r - r'|_1,
///   sup|grad I(r)| / |r|_1,            |grad div I(r)|_1 / |r|_1.
/// Derivatives are second-order central differences on interior cells.
struct CIEstimate {
  double value = 0.0;
  double lipschitz_sup = 0.0;
  double lipschitz_div = 0.0;
  double gradient_sup = 0.0;
  double grad_div_l1 = 0.0;
  std::size_t pairs_used = 0;
};

/// Throws ConfigError for fewer than two samples and NumericError when every
/// sample pair is identical.
CIEstimate estimate_CI(const NonlocalOp& op, std::span<const PopulationField> samples);

/// Central-difference divergence; boundary cells are left at zero.
Field2D divergence(const VecField& u, const GridSpec& grid);

}  // namespace crowd
