#include "crowd/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "crowd/errors.hpp"

namespace crowd {

VecField saturate(const VecField& u) {
  VecField out(u.nx(), u.ny());
  auto ux = u.x.values(), uy = u.y.values();
  auto ox = out.x.values(), oy = out.y.values();
  for (std::size_t k = 0; k < ux.size(); ++k) {
    const double s = 1.0 / std::sqrt(1.0 + ux[k] * ux[k] + uy[k] * uy[k]);
    ox[k] = ux[k] * s;
    oy[k] = uy[k] * s;
  }
  return out;
}

namespace {

void check_source(const PopulationField& state, std::size_t j) {
  if (j >= state.n())
    throw DimensionError("nonlocal leaf refers to population " + std::to_string(j + 1) +
                         " but the state has " + std::to_string(state.n()));
}

VecField scaled(VecField v, double s) {
  v.x *= s;
  v.y *= s;
  return v;
}

}  // namespace

VecField gradient_avoidance(const PopulationField& state, std::size_t j, double eps,
                            const SampledKernel& k) {
  check_source(state, j);
  return scaled(saturate(convolve_gradient(state[j], k)), -eps);
}

VecField flux_push(const PopulationField& state, std::size_t j, const SpeedLaw& law,
                   const VecField& dir, const SampledKernel& k) {
  check_source(state, j);
  if (!state.grid().matches(dir.x)) throw DimensionError("push direction does not match grid");
  VecField q(state.grid().nx, state.grid().ny);
  auto rho = state[j].values();
  auto qx = q.x.values(), qy = q.y.values();
  auto dx = dir.x.values(), dy = dir.y.values();
  for (std::size_t c = 0; c < rho.size(); ++c) {
    const double f = law.flux(rho[c]);
    qx[c] = f * dx[c];
    qy[c] = f * dy[c];
  }
  return saturate(convolve_components(q, k));
}

struct GradientLeaf {
  double eps;
  std::shared_ptr<const SampledKernel> kernel;
  std::size_t source;
  bool saturated;
};

struct PushLeaf {
  std::shared_ptr<const SampledKernel> kernel;
  std::size_t source;
  SpeedLaw law;
  VecField direction;
};

struct SaturateNode {
  NonlocalOp inner;
};

struct SumNode {
  Coefficient alpha;
  NonlocalOp left;
  Coefficient beta;
  NonlocalOp right;
};

struct NonlocalOp::Node {
  std::variant<GradientLeaf, PushLeaf, SaturateNode, SumNode> body;
};

NonlocalOp::NonlocalOp() = default;

NonlocalOp NonlocalOp::gradient_avoidance(double eps, std::shared_ptr<const SampledKernel> kernel,
                                          std::size_t source, bool saturated) {
  if (!kernel) throw ConfigError("gradient-avoidance leaf needs a kernel");
  if (!std::isfinite(eps)) throw ConfigError("gradient-avoidance weight must be finite");
  return NonlocalOp(std::make_shared<const Node>(
      Node{GradientLeaf{eps, std::move(kernel), source, saturated}}));
}

NonlocalOp NonlocalOp::flux_push(std::shared_ptr<const SampledKernel> kernel, std::size_t source,
                                 SpeedLaw law, VecField direction) {
  if (!kernel) throw ConfigError("flux-push leaf needs a kernel");
  return NonlocalOp(std::make_shared<const Node>(
      Node{PushLeaf{std::move(kernel), source, std::move(law), std::move(direction)}}));
}

NonlocalOp NonlocalOp::saturate(NonlocalOp inner) {
  return NonlocalOp(std::make_shared<const Node>(Node{SaturateNode{std::move(inner)}}));
}

NonlocalOp NonlocalOp::weighted_sum(Coefficient alpha, NonlocalOp left, Coefficient beta,
                                    NonlocalOp right) {
  auto finite = [](const Coefficient& c) {
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d);
    for (double v : std::get<Field2D>(c).values())
      if (!std::isfinite(v)) return false;
    return true;
  };
  if (!finite(alpha) || !finite(beta)) throw ConfigError("weighted-sum coefficients must be finite");
  return NonlocalOp(std::make_shared<const Node>(
      Node{SumNode{std::move(alpha), std::move(left), std::move(beta), std::move(right)}}));
}

bool NonlocalOp::is_zero() const { return !node_; }

std::size_t NonlocalOp::populations_referenced() const {
  if (!node_) return 0;
  struct Visitor {
    std::size_t operator()(const GradientLeaf& l) const { return l.source + 1; }
    std::size_t operator()(const PushLeaf& l) const { return l.source + 1; }
    std::size_t operator()(const SaturateNode& s) const { return s.inner.populations_referenced(); }
    std::size_t operator()(const SumNode& s) const {
      return std::max(s.left.populations_referenced(), s.right.populations_referenced());
    }
  };
  return std::visit(Visitor{}, node_->body);
}

namespace {

void add_weighted(VecField& acc, const Coefficient& w, const VecField& term) {
  auto ax = acc.x.values(), ay = acc.y.values();
  auto tx = term.x.values(), ty = term.y.values();
  if (const auto* c = std::get_if<double>(&w)) {
    for (std::size_t k = 0; k < ax.size(); ++k) {
      ax[k] += *c * tx[k];
      ay[k] += *c * ty[k];
    }
    return;
  }
  const auto& f = std::get<Field2D>(w);
  if (!f.same_shape(term.x)) throw DimensionError("weighted-sum coefficient does not match grid");
  auto fv = f.values();
  for (std::size_t k = 0; k < ax.size(); ++k) {
    ax[k] += fv[k] * tx[k];
    ay[k] += fv[k] * ty[k];
  }
}

}  // namespace

VecField NonlocalOp::evaluate(const PopulationField& state) const {
  const auto& grid = state.grid();
  if (!node_) return VecField(grid.nx, grid.ny);
  struct Visitor {
    const PopulationField& state;
    VecField operator()(const GradientLeaf& l) const {
      check_source(state, l.source);
      VecField g = convolve_gradient(state[l.source], *l.kernel);
      if (l.saturated) g = crowd::saturate(g);
      return scaled(std::move(g), -l.eps);
    }
    VecField operator()(const PushLeaf& l) const {
      return crowd::flux_push(state, l.source, l.law, l.direction, *l.kernel);
    }
    VecField operator()(const SaturateNode& s) const {
      return crowd::saturate(s.inner.evaluate(state));
    }
    VecField operator()(const SumNode& s) const {
      const VecField left = s.left.evaluate(state);
      const VecField right = s.right.evaluate(state);
      VecField out(left.nx(), left.ny());
      add_weighted(out, s.alpha, left);
      add_weighted(out, s.beta, right);
      return out;
    }
  };
  return std::visit(Visitor{state}, node_->body);
}

Field2D divergence(const VecField& u, const GridSpec& grid) {
  Field2D d(u.nx(), u.ny());
  if (u.nx() < 3 || u.ny() < 3) return d;
  for (std::size_t j = 1; j + 1 < u.ny(); ++j)
    for (std::size_t i = 1; i + 1 < u.nx(); ++i)
      d(i, j) = (u.x(i + 1, j) - u.x(i - 1, j)) / (2.0 * grid.dx) +
                (u.y(i, j + 1) - u.y(i, j - 1)) / (2.0 * grid.dy);
  return d;
}

namespace {

double sup_magnitude(const VecField& u) {
  double m = 0.0;
  auto x = u.x.values(), y = u.y.values();
  for (std::size_t k = 0; k < x.size(); ++k) m = std::max(m, std::hypot(x[k], y[k]));
  return m;
}

// sup over interior cells of the Frobenius norm of the central-difference Jacobian.
double sup_jacobian(const VecField& u, const GridSpec& grid) {
  double m = 0.0;
  for (std::size_t j = 1; j + 1 < u.ny(); ++j)
    for (std::size_t i = 1; i + 1 < u.nx(); ++i) {
      const double a = (u.x(i + 1, j) - u.x(i - 1, j)) / (2.0 * grid.dx);
      const double b = (u.x(i, j + 1) - u.x(i, j - 1)) / (2.0 * grid.dy);
      const double c = (u.y(i + 1, j) - u.y(i - 1, j)) / (2.0 * grid.dx);
      const double d = (u.y(i, j + 1) - u.y(i, j - 1)) / (2.0 * grid.dy);
      m = std::max(m, std::sqrt(a * a + b * b + c * c + d * d));
    }
  return m;
}

// L1 norm of the central-difference gradient of div u; cells two layers from the
// boundary are excluded because div u itself is only defined on the interior.
double grad_div_l1(const VecField& u, const GridSpec& grid) {
  const Field2D d = divergence(u, grid);
  double s = 0.0;
  for (std::size_t j = 2; j + 2 < u.ny(); ++j)
    for (std::size_t i = 2; i + 2 < u.nx(); ++i) {
      const double gx = (d(i + 1, j) - d(i - 1, j)) / (2.0 * grid.dx);
      const double gy = (d(i, j + 1) - d(i, j - 1)) / (2.0 * grid.dy);
      s += std::hypot(gx, gy);
    }
  return s * grid.cell_area();
}

}  // namespace

CIEstimate estimate_CI(const NonlocalOp& op, std::span<const PopulationField> samples) {
  if (samples.size() < 2) throw ConfigError("C_I estimation needs at least two samples");
  const GridSpec& grid = samples.front().grid();
  for (const auto& s : samples)
    if (!(s.grid() == grid) || s.n() != samples.front().n())
      throw DimensionError("C_I samples must share one grid and population count");

  std::vector<VecField> values;
  values.reserve(samples.size());
  for (const auto& s : samples) values.push_back(op.evaluate(s));

  CIEstimate est;
  for (std::size_t a = 0; a < samples.size(); ++a) {
    const double norm = norms(samples[a]).l1_total;
    if (norm > 0.0) {
      est.gradient_sup = std::max(est.gradient_sup, sup_jacobian(values[a], grid) / norm);
      est.grad_div_l1 = std::max(est.grad_div_l1, grad_div_l1(values[a], grid) / norm);
    }
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      const double dist = l1_distance(samples[a], samples[b]);
      if (!(dist > 0.0)) continue;
      ++est.pairs_used;
      const VecField diff{values[a].x - values[b].x, values[a].y - values[b].y};
      est.lipschitz_sup = std::max(est.lipschitz_sup, sup_magnitude(diff) / dist);
      est.lipschitz_div =
          std::max(est.lipschitz_div, l1_norm(divergence(diff, grid), grid) / dist);
    }
  }
  if (est.pairs_used == 0) throw NumericError("C_I estimation: all sample pairs are identical");
  est.value =
      std::max({est.lipschitz_sup, est.lipschitz_div, est.gradient_sup, est.grad_div_l1});
  return est;
}

}  // namespace crowd
