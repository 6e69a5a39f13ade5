#include "crowd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "crowd/errors.hpp"
#include "crowd/nonlocal.hpp"

namespace crowd {

double wd(int d) {
  if (d < 0) throw ConfigError("W_d needs d >= 0");
  if (d == 0) return std::numbers::pi / 2.0;
  auto f = [d](double th) { return std::pow(std::cos(th), d); };
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numbers::pi / 2.0, 15, 1e-15, &err);
  if (!(err <= 1e-12)) throw NumericError("W_d quadrature did not reach 1e-12");
  return v;
}

DirectionNorms direction_norms(const VecField& u, const GridSpec& grid) {
  if (!grid.matches(u.x) || !grid.matches(u.y)) throw DimensionError("direction field does not match grid");
  DirectionNorms n;
  const double area = grid.cell_area();
  const double hx = grid.dx, hy = grid.dy;
  for (std::size_t k = 0; k < u.x.size(); ++k) {
    const double m = std::hypot(u.x.values()[k], u.y.values()[k]);
    n.sup = std::max(n.sup, m);
    n.l1 += m * area;
  }
  for (std::size_t j = 1; j + 1 < grid.ny; ++j)
    for (std::size_t i = 1; i + 1 < grid.nx; ++i) {
      double jac = 0.0, hess = 0.0;
      for (const Field2D* c : {&u.x, &u.y}) {
        const Field2D& f = *c;
        const double fx = (f(i + 1, j) - f(i - 1, j)) / (2.0 * hx);
        const double fy = (f(i, j + 1) - f(i, j - 1)) / (2.0 * hy);
        const double fxx = (f(i + 1, j) - 2.0 * f(i, j) + f(i - 1, j)) / (hx * hx);
        const double fyy = (f(i, j + 1) - 2.0 * f(i, j) + f(i, j - 1)) / (hy * hy);
        const double fxy = (f(i + 1, j + 1) - f(i - 1, j + 1) - f(i + 1, j - 1) + f(i - 1, j - 1)) /
                           (4.0 * hx * hy);
        jac += fx * fx + fy * fy;
        hess += std::sqrt(fxx * fxx + 2.0 * fxy * fxy + fyy * fyy);
      }
      jac = std::sqrt(jac);
      n.grad_sup = std::max(n.grad_sup, jac);
      n.grad_l1 += jac * area;
      n.hess_l1 += hess * area;
    }
  const Field2D div = divergence(u, grid);
  n.div_sup = linf_norm(div);
  n.div_l1 = l1_norm(div, grid);
  for (std::size_t j = 2; j + 2 < grid.ny; ++j)
    for (std::size_t i = 2; i + 2 < grid.nx; ++i) {
      const double gx = (div(i + 1, j) - div(i - 1, j)) / (2.0 * hx);
      const double gy = (div(i, j + 1) - div(i, j - 1)) / (2.0 * hy);
      n.grad_div_l1 += std::hypot(gx, gy) * area;
    }
  return n;
}

namespace {

constexpr std::size_t kKernelScan = 801;

struct Profile1D {
  std::vector<double> v, d1, d2;
};

Profile1D scan_profile(const AxisProfile& p, double half) {
  Profile1D out;
  for (std::size_t k = 0; k < kKernelScan; ++k) {
    const double x = -half + 2.0 * half * static_cast<double>(k) / (kKernelScan - 1);
    out.v.push_back(p.value(x));
    out.d1.push_back(p.first(x));
    out.d2.push_back(p.second(x));
  }
  return out;
}

}  // namespace

KernelNorms kernel_norms(const KernelSpec& spec, double scale) {
  const Profile1D a = scan_profile(spec.x_factor, spec.x_factor.half_width);
  const Profile1D b = scan_profile(spec.y_factor, spec.y_factor.half_width);
  KernelNorms n;
  const double s = std::abs(scale);
  for (std::size_t j = 0; j < kKernelScan; ++j)
    for (std::size_t i = 0; i < kKernelScan; ++i) {
      const double ex = a.d1[i] * b.v[j], ey = a.v[i] * b.d1[j];
      const double exx = a.d2[i] * b.v[j], eyy = a.v[i] * b.d2[j], exy = a.d1[i] * b.d1[j];
      n.sup = std::max(n.sup, s * std::abs(a.v[i] * b.v[j]));
      n.grad_sup = std::max(n.grad_sup, s * std::hypot(ex, ey));
      n.hess_sup = std::max(n.hess_sup, s * std::sqrt(exx * exx + 2.0 * exy * exy + eyy * eyy));
    }
  return n;
}

KernelNorms kernel_norms(const SampledKernel& k) { return kernel_norms(k.spec, k.scale); }

double kernel_difference_w1inf(const SampledKernel& k1, const SampledKernel& k2) {
  const double hx = std::max(k1.spec.x_factor.half_width, k2.spec.x_factor.half_width);
  const double hy = std::max(k1.spec.y_factor.half_width, k2.spec.y_factor.half_width);
  const Profile1D a1 = scan_profile(k1.spec.x_factor, hx), b1 = scan_profile(k1.spec.y_factor, hy);
  const Profile1D a2 = scan_profile(k2.spec.x_factor, hx), b2 = scan_profile(k2.spec.y_factor, hy);
  const double s1 = k1.scale, s2 = k2.scale;
  double sup = 0.0, grad = 0.0;
  for (std::size_t j = 0; j < kKernelScan; ++j)
    for (std::size_t i = 0; i < kKernelScan; ++i) {
      sup = std::max(sup, std::abs(s1 * a1.v[i] * b1.v[j] - s2 * a2.v[i] * b2.v[j]));
      const double gx = s1 * a1.d1[i] * b1.v[j] - s2 * a2.d1[i] * b2.v[j];
      const double gy = s1 * a1.v[i] * b1.d1[j] - s2 * a2.v[i] * b2.d1[j];
      grad = std::max(grad, std::hypot(gx, gy));
    }
  return sup + grad;
}

double sup_on(const SpeedLaw::Fn& fn, double r) {
  constexpr std::size_t points = 4001;
  double m = 0.0;
  for (std::size_t k = 0; k < points; ++k)
    m = std::max(m, std::abs(fn(r * static_cast<double>(k) / (points - 1))));
  return m;
}

double velocity_gradient_sup(const std::vector<VecField>& fields, const GridSpec& grid) {
  double m = 0.0;
  for (const auto& u : fields)
    for (std::size_t j = 1; j + 1 < grid.ny; ++j)
      for (std::size_t i = 1; i + 1 < grid.nx; ++i) {
        const double a = (u.x(i + 1, j) - u.x(i - 1, j)) / (2.0 * grid.dx);
        const double b = (u.x(i, j + 1) - u.x(i, j - 1)) / (2.0 * grid.dy);
        const double c = (u.y(i + 1, j) - u.y(i - 1, j)) / (2.0 * grid.dx);
        const double d = (u.y(i, j + 1) - u.y(i, j - 1)) / (2.0 * grid.dy);
        m = std::max(m, std::sqrt(a * a + b * b + c * c + d * d));
      }
  return m;
}

namespace {

void set_law_norms(BoundInputs& in, const SpeedLaw& law, double range) {
  in.v_sup = sup_on([&](double r) { return law(r); }, range);
  in.dv_sup = sup_on([&](double r) { return law.derivative(r); }, range);
  in.d2v_sup = sup_on([&](double r) { return law.second_derivative(r); }, range);
  in.q_sup = sup_on([&](double r) { return law.flux(r); }, range);
  in.dq_sup = sup_on([&](double r) { return law.flux_derivative(r); }, range);
}

}  // namespace

BoundInputs bound_inputs(const ModelSpec& model, const PopulationField& datum, std::size_t p,
                         double range) {
  if (p >= model.n() || datum.n() != model.n()) throw DimensionError("population index out of range");
  const auto& pop = model.populations[p];
  BoundInputs in;
  const NormRecord nr = norms(datum);
  in.n1 = nr.l1_total;
  in.rho_sup = nr.linf[p];
  in.tv0 = nr.tv[p];
  set_law_norms(in, pop.law, range);
  in.dir = direction_norms(pop.direction.total(), model.grid);
  if (pop.kernel) {
    const KernelNorms kn = kernel_norms(*pop.kernel);
    in.eta_sup = kn.sup;
    in.grad_eta_sup = kn.grad_sup;
    in.grad_eta_w1inf = kn.grad_w1inf();
  }
  return in;
}

BoundInputs system_inputs(std::span<const BoundInputs> per) {
  if (per.empty()) throw ConfigError("system inputs need at least one population");
  BoundInputs s = per.front();
  s.tv0 = 0.0;
  for (const auto& in : per) {
    auto mx = [](double& a, double b) { a = std::max(a, b); };
    mx(s.n1, in.n1);
    mx(s.rho_sup, in.rho_sup);
    s.tv0 += in.tv0;
    mx(s.v_sup, in.v_sup);
    mx(s.dv_sup, in.dv_sup);
    mx(s.d2v_sup, in.d2v_sup);
    mx(s.q_sup, in.q_sup);
    mx(s.dq_sup, in.dq_sup);
    mx(s.dir.sup, in.dir.sup);
    mx(s.dir.grad_sup, in.dir.grad_sup);
    mx(s.dir.l1, in.dir.l1);
    mx(s.dir.grad_l1, in.dir.grad_l1);
    mx(s.dir.hess_l1, in.dir.hess_l1);
    mx(s.dir.div_sup, in.dir.div_sup);
    mx(s.dir.div_l1, in.dir.div_l1);
    mx(s.dir.grad_div_l1, in.dir.grad_div_l1);
    mx(s.eta_sup, in.eta_sup);
    mx(s.grad_eta_sup, in.grad_eta_sup);
    mx(s.grad_eta_w1inf, in.grad_eta_w1inf);
    mx(s.c_i, in.c_i);
    mx(s.grad_v_sup, in.grad_v_sup);
  }
  return s;
}

double kappa0(const BoundInputs& in) {
  return (2.0 * in.d + 1.0) * in.dq_sup * in.grad_v_sup;
}

double k1(const BoundInputs& in) {
  return in.v_w1inf() * in.dir.w1inf() * (in.n1 * in.grad_eta_sup + 1.0);
}

double k2(const BoundInputs& in) {
  const double g = in.grad_eta_sup;
  return in.v_w1inf() * in.dir.w11() *
         (in.n1 * in.n1 * g * g + 2.0 * in.n1 * in.grad_eta_w1inf + 1.0);
}

namespace {

// Non-negative real stored as its natural logarithm, so that nested
// exponentials in the bounds stay representable.
struct LogReal {
  double lg = -std::numeric_limits<double>::infinity();

  LogReal() = default;
  explicit LogReal(double x) : lg(x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity()) {}
  static LogReal from_log(double l) {
    LogReal r;
    r.lg = l;
    return r;
  }
  bool zero() const { return lg == -std::numeric_limits<double>::infinity(); }
  double value() const { return std::exp(lg); }
  double log10() const { return lg / std::numbers::ln10; }
};

LogReal operator+(LogReal a, LogReal b) {
  if (a.zero()) return b;
  if (b.zero()) return a;
  const double hi = std::max(a.lg, b.lg), lo = std::min(a.lg, b.lg);
  if (std::isinf(hi)) return LogReal::from_log(hi);
  return LogReal::from_log(hi + std::log1p(std::exp(lo - hi)));
}

LogReal operator*(LogReal a, LogReal b) {
  if (a.zero() || b.zero()) return {};
  return LogReal::from_log(a.lg + b.lg);
}

double expo(double x) { return std::exp(x); }
LogReal expo(LogReal x) { return LogReal::from_log(x.value()); }

double as_log10(LogReal x) { return x.log10(); }

template <class T>
T tv_deviation(double t, const BoundInputs& in) {
  const T e = expo(T(kappa0(in)) * T(t));
  return T(in.tv0) * e +
         T(in.d * wd(in.d)) * e * T(in.q_sup) * T(in.c_i + in.dir.div_sup) * T(t);
}

template <class T>
T linf_differentiable(double t, const BoundInputs& in) {
  return T(in.rho_sup) * expo(T(k1(in)) * T(t));
}

template <class T>
T tv_differentiable(double t, const BoundInputs& in) {
  const double K1 = k1(in);
  return T(in.tv0) * expo(T((2.0 * in.d + 1.0) * K1) * T(t)) +
         T(t) * expo(T(K1) * T(t)) * T(in.d * wd(in.d)) * T(k2(in)) * T(in.rho_sup);
}

template <class T>
T stability_deviation(double t, const BoundInputs& in1, const BoundInputs& in2,
                      const StabilityDeltas& dl) {
  const double ci = std::max(in1.c_i, in2.c_i);
  const double kappa = std::max(kappa0(in1), kappa0(in2));
  const double cd = in1.d * wd(in1.d);
  const T tt(t);
  const T F = expo(T(kappa) * tt) * (T(in1.tv0) + tt * T(cd * in1.q_sup * (ci + in1.dir.grad_div_l1)));
  const T a = tt * (T(ci + in2.dir.sup) * F * T(dl.dq_sup) + T((ci + in2.dir.div_l1) * dl.q_sup) +
                    T(in1.q_sup * dl.div_dir_l1) + T(in1.dq_sup) * F * T(dl.dir_sup));
  const T b = T(ci) * (T(in1.dq_sup) * F + T(in1.q_sup));
  return (T(1.0) + tt * expo(tt * b)) * (T(dl.datum_l1) + a);
}

template <class T>
T stability_differentiable(double t, const BoundInputs& in1, const BoundInputs& in2,
                           const StabilityDeltas& dl) {
  const int d = in1.d;
  const double n11 = in1.n1, n12 = in2.n1;
  const double v1l1 = in1.dir.l1, div1 = in1.dir.div_l1, v1inf = in1.dir.sup;
  const double alpha = in1.d2v_sup * in1.eta_sup * n11 * in1.grad_eta_sup * v1l1 +
                       in2.dv_sup * in1.grad_eta_sup * v1l1 + in1.dv_sup * in1.eta_sup * div1;
  const double beta = in1.d2v_sup * n12 * n11 * in1.grad_eta_sup * v1l1 +
                      in1.dv_sup * n12 * div1 + in2.dv_sup * n12 * v1l1;
  const double gamma = div1 + n11 * in1.grad_eta_sup * v1l1;
  const double delta = in2.dv_sup * n12 * in2.grad_eta_sup + in2.v_sup;
  const double alpha_p = in1.dv_sup * in1.eta_sup;
  const double beta_p = in1.dv_sup * n12 * v1inf;
  const double gamma_p = v1inf;
  const double delta_p = in2.v_sup;

  const T tt(t);
  const T f = expo(T((2.0 * d + 1.0) * k1(in1)) * tt) *
              (T(in1.tv0) + tt * T(d * wd(d) * k2(in1) * in1.rho_sup));
  const double R = std::max(in1.rho_sup, in2.rho_sup);
  const T re = T(R) * expo(T(std::max(k1(in1), k1(in2))) * tt);
  const T a_rho = T(alpha_p) * f + T(alpha) * re;
  const T a_eta = T(beta_p) * f + T(beta) * re;
  const T a_v = T(gamma_p) * f + T(gamma) * re;
  const T a_dir = T(delta_p) * f + T(delta) * re;
  const T head = T(dl.datum_l1) + tt * a_eta * T(dl.eta_w1inf) + tt * a_v * T(dl.v_w1inf) +
                 tt * a_dir * T(dl.dir_sup + dl.dir_w11);
  return head * (T(1.0) + tt * a_rho * expo(tt * a_rho));
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("bound time must be finite and >= 0");
}

}  // namespace

double tv_bound_deviation(double t, const BoundInputs& in) {
  check_time(t);
  return tv_deviation<double>(t, in);
}

double tv_bound_deviation_log10(double t, const BoundInputs& in) {
  check_time(t);
  return as_log10(tv_deviation<LogReal>(t, in));
}

DifferentiableBounds bounds_differentiable(double t, const BoundInputs& in) {
  check_time(t);
  DifferentiableBounds b;
  b.linf = linf_differentiable<double>(t, in);
  b.tv = tv_differentiable<double>(t, in);
  b.linf_log10 = as_log10(linf_differentiable<LogReal>(t, in));
  b.tv_log10 = as_log10(tv_differentiable<LogReal>(t, in));
  return b;
}

double stability_bound_deviation(double t, const BoundInputs& in1, const BoundInputs& in2,
                                 const StabilityDeltas& delta) {
  check_time(t);
  return stability_deviation<double>(t, in1, in2, delta);
}

double stability_bound_deviation_log10(double t, const BoundInputs& in1, const BoundInputs& in2,
                                       const StabilityDeltas& delta) {
  check_time(t);
  return as_log10(stability_deviation<LogReal>(t, in1, in2, delta));
}

double stability_bound_differentiable(double t, const BoundInputs& in1, const BoundInputs& in2,
                                      const StabilityDeltas& delta) {
  check_time(t);
  return stability_differentiable<double>(t, in1, in2, delta);
}

double stability_bound_differentiable_log10(double t, const BoundInputs& in1,
                                            const BoundInputs& in2, const StabilityDeltas& delta) {
  check_time(t);
  return as_log10(stability_differentiable<LogReal>(t, in1, in2, delta));
}

StabilityDeltas stability_deltas(const ModelSpec& a, const PopulationField& da, const ModelSpec& b,
                                 const PopulationField& db) {
  if (a.n() != b.n() || !(a.grid == b.grid)) throw DimensionError("configurations are not comparable");
  if (!(da.grid() == db.grid()) || da.n() != db.n()) throw DimensionError("data are not comparable");
  StabilityDeltas dl;
  dl.datum_l1 = l1_distance(da, db);
  const double range = std::max(a.max_density, b.max_density);
  for (std::size_t p = 0; p < a.n(); ++p) {
    const auto& pa = a.populations[p];
    const auto& pb = b.populations[p];
    const SpeedLaw& la = pa.law;
    const SpeedLaw& lb = pb.law;
    auto mx = [](double& x, double y) { x = std::max(x, y); };
    mx(dl.q_sup, sup_on([&](double r) { return la.flux(r) - lb.flux(r); }, range));
    mx(dl.dq_sup,
       sup_on([&](double r) { return la.flux_derivative(r) - lb.flux_derivative(r); }, range));
    const double dv = sup_on([&](double r) { return la(r) - lb(r); }, range);
    mx(dl.v_sup, dv);
    mx(dl.v_w1inf,
       dv + sup_on([&](double r) { return la.derivative(r) - lb.derivative(r); }, range));
    const VecField ua = pa.direction.total(), ub = pb.direction.total();
    const VecField diff{ua.x - ub.x, ua.y - ub.y};
    const DirectionNorms dn = direction_norms(diff, a.grid);
    mx(dl.dir_sup, dn.sup);
    mx(dl.div_dir_l1, dn.div_l1);
    mx(dl.dir_w11, dn.w11());
    if (pa.kernel && pb.kernel) {
      mx(dl.eta_w1inf, kernel_difference_w1inf(*pa.kernel, *pb.kernel));
      mx(dl.eta_sup, std::abs(kernel_norms(*pa.kernel).sup - kernel_norms(*pb.kernel).sup));
    }
  }
  return dl;
}

BoundRow make_row(double t, std::string quantity, double measured, double bound,
                  double bound_log10) {
  BoundRow r;
  r.t = t;
  r.quantity = std::move(quantity);
  r.measured = measured;
  r.bound = bound;
  r.bound_log10 = bound_log10;
  r.slack_log10 = measured > 0.0 ? bound_log10 - std::log10(measured)
                                 : std::numeric_limits<double>::infinity();
  if (std::isfinite(bound))
    r.dominated = measured <= bound * (1.0 + 1e-12) + 1e-300;
  else
    r.dominated = std::isfinite(measured) && (measured <= 0.0 || std::log10(measured) <= bound_log10);
  return r;
}

bool BoundReport::all_dominated() const {
  return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.dominated; });
}

BoundMonitor::BoundMonitor(const ModelSpec& model, const PopulationField& datum,
                           std::vector<double> c_i)
    : model_(std::make_shared<const ModelSpec>(model)), datum_(datum), c_i_(std::move(c_i)) {
  if (c_i_.size() != model.n()) throw DimensionError("one C_I per population is required");
  for (std::size_t p = 0; p < model.n(); ++p)
    base_.push_back(bound_inputs(model, datum, p, model.max_density));
  observe(transport(datum, model), datum);
}

void BoundMonitor::observe(const Transport& tr, const PopulationField& state) {
  grad_v_ = std::max(grad_v_, velocity_gradient_sup(tr.field, model_->grid));
  for (const auto& f : state.populations()) range_ = std::max(range_, linf_norm(f));
}

std::vector<BoundInputs> BoundMonitor::inputs() const {
  std::vector<BoundInputs> out = base_;
  // R_T: the running sup of the densities, or of the convolution argument of v
  double range = std::min(range_, model_->max_density);
  if (model_->family == ModelFamily::Differentiable) {
    double mass = 0.0;
    for (const auto& p : model_->populations) mass += p.kernel ? p.kernel->mass : 0.0;
    range = range_ * mass;
  }
  if (!(range > 0.0)) range = model_->max_density;
  for (std::size_t p = 0; p < out.size(); ++p) {
    set_law_norms(out[p], model_->populations[p].law, range);
    out[p].c_i = c_i_[p];
    out[p].grad_v_sup = grad_v_;
  }
  return out;
}

BoundInputs BoundMonitor::system() const {
  const auto per = inputs();
  return system_inputs(per);
}

namespace {

double log10_sum(const std::vector<double>& logs) {
  LogReal acc;
  for (double l : logs) acc = acc + LogReal::from_log(l * std::numbers::ln10);
  return acc.log10();
}

}  // namespace

std::vector<BoundRow> BoundMonitor::evaluate(double t, const PopulationField& state) const {
  const auto per = inputs();
  const NormRecord nr = norms(state);
  std::vector<BoundRow> rows;
  double total = 0.0;
  std::vector<double> logs;
  for (std::size_t p = 0; p < per.size(); ++p) {
    const std::string tag = std::to_string(p + 1);
    if (model_->family == ModelFamily::Deviation) {
      const double b = tv_bound_deviation(t, per[p]);
      const double bl = tv_bound_deviation_log10(t, per[p]);
      rows.push_back(make_row(t, "tv_" + tag, nr.tv[p], b, bl));
      total += b;
      logs.push_back(bl);
    } else {
      const DifferentiableBounds b = bounds_differentiable(t, per[p]);
      rows.push_back(make_row(t, "linf_" + tag, nr.linf[p], b.linf, b.linf_log10));
      rows.push_back(make_row(t, "tv_" + tag, nr.tv[p], b.tv, b.tv_log10));
      total += b.tv;
      logs.push_back(b.tv_log10);
    }
  }
  rows.push_back(make_row(t, "tv", nr.tv_total, total, log10_sum(logs)));
  return rows;
}

InvarianceReport check_invariance(const Trajectory& traj, double R, double tol) {
  InvarianceReport rep;
  rep.tol = tol;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    InvarianceReport::Row row;
    row.t = traj.times[k];
    for (const auto& f : traj.states[k].populations()) {
      row.min.push_back(min_value(f));
      row.max.push_back(max_value(f));
      if (row.min.back() < -tol || row.max.back() > R + tol) rep.pass = false;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace crowd
