#include "floqscat/driving.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>
#include <set>

#include "floqscat/error.hpp"

namespace floqscat {

using nlohmann::json;

TimeField::TimeField(FieldKind kind, Index sites, double tau, std::string family, Eval value, Eval primitive,
                     bool periodic)
    : kind_(kind), sites_(sites), tau_(tau), periodic_(periodic), family_(std::move(family)),
      value_(std::move(value)), primitive_(std::move(primitive)) {
  if (!(tau_ > 0.0)) fail(ErrorCode::InvalidArgument, "field period must be positive");
}

TimeField TimeField::zero(FieldKind kind, Index sites, double tau) {
  TimeField f;
  f.kind_ = kind;
  f.sites_ = sites;
  f.tau_ = tau;
  f.spec = {{"family", "zero"}};
  return f;
}

void TimeField::sample(double t, RVec& out) const {
  out.resize(sites_);
  if (!value_) {
    out.setZero();
    return;
  }
  for (Index i = 0; i < sites_; ++i) out(i) = value_(i, t);
}

double magnetic_value(const TimeField& field, const FiniteLattice& lat, Index x, Index y, double t) {
  const auto& edges = lat.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].x == x && edges[e].y == y) return field(static_cast<Index>(e), t);
    if (edges[e].x == y && edges[e].y == x) return -field(static_cast<Index>(e), t);
  }
  fail(ErrorCode::InvalidArgument, "vertices are not adjacent");
}

double TimeEnvelope::operator()(double t) const {
  if (kind == "none") return 1.0;
  if (kind == "power") return std::pow(1.0 + (t / scale) * (t / scale), -exponent / 2.0);
  if (kind == "gaussian") return std::exp(-0.5 * (t / scale) * (t / scale));
  fail(ErrorCode::UnknownFamily, "unknown envelope '" + kind + "'");
}

TimeEnvelope TimeEnvelope::from_json(const json& j) {
  TimeEnvelope w;
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "scale" && key != "exponent") {
      fail(ErrorCode::MalformedSpec, "unknown envelope key '" + key + "'");
    }
  }
  w.kind = j.value("kind", "none");
  w.scale = j.value("scale", 1.0);
  w.exponent = j.value("exponent", 1.0);
  if (w.kind != "none" && w.kind != "power" && w.kind != "gaussian") {
    fail(ErrorCode::UnknownFamily, "unknown envelope '" + w.kind + "'");
  }
  return w;
}

json TimeEnvelope::to_json() const { return {{"kind", kind}, {"scale", scale}, {"exponent", exponent}}; }

double Weight::b(double absx) const { return std::sqrt(c * std::pow(1.0 + absx, -decay)); }

Weight Weight::from_json(const json& j) {
  Weight w;
  for (const auto& [key, _] : j.items()) {
    if (key != "c" && key != "decay" && key != "class" && key != "exponent") {
      fail(ErrorCode::MalformedSpec, "unknown weight key '" + key + "'");
    }
  }
  w.c = j.value("c", 1.0);
  w.decay = j.value("decay", 2.0);
  const std::string cls = j.value("class", "a");
  if (cls != "a" && cls != "p") fail(ErrorCode::MalformedSpec, "weight class must be 'a' or 'p'");
  w.cls = cls[0];
  w.exponent = j.value("exponent", 2.0);
  return w;
}

json Weight::to_json() const {
  return {{"c", c}, {"decay", decay}, {"class", std::string(1, cls)}, {"exponent", exponent}};
}

// ---------------------------------------------------------------------------
// Families

namespace {

void check_keys(const json& spec, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok{"family"};
  for (const char* k : allowed) ok.insert(k);
  for (const auto& [key, _] : spec.items()) {
    if (!ok.count(key)) {
      fail(ErrorCode::MalformedSpec,
           "unknown key '" + key + "' for family '" + spec.value("family", std::string("?")) + "'");
    }
  }
}

std::vector<double> profile_values(const json& spec, const FiniteLattice& lat) {
  const double A = spec.value("A", 1.0);
  const std::string prof = spec.value("profile", "gaussian");
  const double width = spec.value("width", 1.0);
  std::vector<double> g(static_cast<std::size_t>(lat.size()));
  if (prof == "random") {
    std::mt19937_64 rng(spec.value("seed", 1ull));
    std::uniform_real_distribution<double> u(-A, A);
    for (auto& x : g) x = u(rng);
    return g;
  }
  for (Index i = 0; i < lat.size(); ++i) {
    const double r = lat.abs_x(i);
    double v = 0.0;
    if (prof == "gaussian") {
      v = std::exp(-0.5 * (r / width) * (r / width));
    } else if (prof == "exp") {
      v = std::exp(-r / width);
    } else if (prof == "power") {
      v = std::pow(1.0 + r, -width);
    } else if (prof == "uniform") {
      v = 1.0;
    } else {
      fail(ErrorCode::UnknownFamily, "unknown profile '" + prof + "'");
    }
    g[static_cast<std::size_t>(i)] = A * v;
  }
  return g;
}

// Spatial weights g_x times cos(omega t + phase); closed-form primitive.
TimeField sinusoid(FieldKind kind, const std::string& family, std::vector<double> g, double tau, int harmonic,
                   double phase, bool use_sin) {
  const double omega = kTwoPi * harmonic / tau;
  auto gp = std::make_shared<const std::vector<double>>(std::move(g));
  TimeField::Eval val, prim;
  if (use_sin) {
    val = [gp, omega, phase](Index i, double t) { return (*gp)[static_cast<std::size_t>(i)] * std::sin(omega * t + phase); };
    prim = [gp, omega, phase](Index i, double t) {
      return (*gp)[static_cast<std::size_t>(i)] * (std::cos(phase) - std::cos(omega * t + phase)) / omega;
    };
  } else {
    val = [gp, omega, phase](Index i, double t) { return (*gp)[static_cast<std::size_t>(i)] * std::cos(omega * t + phase); };
    prim = [gp, omega, phase](Index i, double t) {
      return (*gp)[static_cast<std::size_t>(i)] * (std::sin(omega * t + phase) - std::sin(phase)) / omega;
    };
  }
  return TimeField(kind, static_cast<Index>(gp->size()), tau, family, val, prim, true);
}

}  // namespace

double cos_power_integral(double s, double z) {
  if (!(s > 0.0)) fail(ErrorCode::InvalidArgument, "cos_power_integral needs s > 0");
  if (z <= 0.0) return 0.0;
  // Power series up to z = 2: sum (-1)^k z^{2k+s} / ((2k)! (2k+s)).
  auto series = [s](double zz) {
    double sum = 0.0;
    double fact = 1.0;  // (2k)!
    double zp = std::pow(zz, s);
    for (int k = 0; k < 40; ++k) {
      const double term = zp / (fact * (2 * k + s));
      sum += (k % 2 == 0) ? term : -term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      zp *= zz * zz;
      fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    return sum;
  };
  if (z <= 2.0) return series(z);
  if (s < 1.0 && z >= 30.0) {
    // G(inf) = Gamma(s) cos(pi s / 2); tail from the asymptotic expansion of
    // int_z^inf e^{iu} u^{s-1} du = i e^{iz} z^{s-1} sum_k (s-1)...(s-k) (i/z)^k.
    cplx sum = 0.0;
    cplx term = 1.0;
    double prev = 1e300;
    for (int k = 0; k < 60; ++k) {
      if (std::abs(term) > prev) break;
      sum += term;
      prev = std::abs(term);
      if (prev < 1e-17) break;
      term *= (s - 1.0 - k) * cplx(0.0, 1.0 / z);
    }
    const cplx tail = cplx(0.0, 1.0) * std::exp(cplx(0.0, z)) * std::pow(z, s - 1.0) * sum;
    return boost::math::tgamma(s) * std::cos(kPi * s / 2.0) - tail.real();
  }
  using GL = boost::math::quadrature::gauss<double, 20>;
  double sum = series(2.0);
  const int panels = static_cast<int>(std::ceil((z - 2.0) / 1.0));
  const double h = (z - 2.0) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = 2.0 + p * h;
    sum += GL::integrate([s](double u) { return std::cos(u) * std::pow(u, s - 1.0); }, a, a + h);
  }
  return sum;
}

TimeField make_electric_field(const json& spec, const FiniteLattice& lat) {
  const std::string family = spec.value("family", "");
  TimeField f;
  try {
    if (family == "zero") {
      check_keys(spec, {"tau"});
      f = TimeField::zero(FieldKind::ElectricVertex, lat.size(), spec.value("tau", 1.0));
    } else if (family == "power-decay-sinusoidal") {
      check_keys(spec, {"A", "a", "tau", "harmonic", "phase"});
      const double A = spec.value("A", 1.0), a = spec.value("a", 2.0);
      std::vector<double> g;
      for (Index i = 0; i < lat.size(); ++i) g.push_back(A * std::pow(1.0 + lat.abs_x(i), -a));
      f = sinusoid(FieldKind::ElectricVertex, family, g, spec.value("tau", 1.0), spec.value("harmonic", 1),
                   spec.value("phase", 0.0), false);
    } else if (family == "exp-decay-sinusoidal") {
      check_keys(spec, {"A", "length", "tau", "harmonic", "phase"});
      const double A = spec.value("A", 1.0), ell = spec.value("length", 1.0);
      std::vector<double> g;
      for (Index i = 0; i < lat.size(); ++i) g.push_back(A * std::exp(-lat.abs_x(i) / ell));
      f = sinusoid(FieldKind::ElectricVertex, family, g, spec.value("tau", 1.0), spec.value("harmonic", 1),
                   spec.value("phase", 0.0), false);
    } else if (family == "profile-sinusoidal") {
      check_keys(spec, {"A", "profile", "width", "seed", "shape", "tau", "harmonic", "phase"});
      const std::string shape = spec.value("shape", "sin");
      if (shape != "sin" && shape != "cos") fail(ErrorCode::MalformedSpec, "shape must be sin or cos");
      f = sinusoid(FieldKind::ElectricVertex, family, profile_values(spec, lat), spec.value("tau", 1.0),
                   spec.value("harmonic", 1), spec.value("phase", 0.0), shape == "sin");
    } else if (family == "shifted-power-decay") {
      check_keys(spec, {"A", "a", "tau", "envelope"});
      const double A = spec.value("A", 1.0), a = spec.value("a", 2.0);
      const TimeEnvelope w = spec.contains("envelope") ? TimeEnvelope::from_json(spec.at("envelope")) : TimeEnvelope{};
      auto pos = std::make_shared<const RMat>(lat.positions());
      auto val = [pos, A, a, w](Index i, double t) {
        const double sh = std::sin(t);
        double r2 = 0.0;
        for (Index j = 0; j < pos->cols(); ++j) r2 += ((*pos)(i, j) + sh) * ((*pos)(i, j) + sh);
        return A * w(t) / (1.0 + std::pow(std::sqrt(r2), a));
      };
      f = TimeField(FieldKind::ElectricVertex, lat.size(), spec.value("tau", kTwoPi), family, val, nullptr,
                    w.kind == "none");
    } else if (family == "site-oscillatory") {
      check_keys(spec, {"A", "power", "gamma", "tau"});
      const double A = spec.value("A", 1.0);
      const double p = spec.value("power", 2.0 * lat.dimension());
      const double gamma = spec.value("gamma", 1.0);
      const double tau = spec.value("tau", kTwoPi);
      if (!(gamma > 0.0)) fail(ErrorCode::MalformedSpec, "gamma must be positive");
      auto m = std::make_shared<std::vector<double>>();
      bool periodic = gamma == 1.0;
      for (Index i = 0; i < lat.size(); ++i) {
        // max(1, |x|^p): the x = 0 site would otherwise carry a constant q with nonzero mean
        const double mi = std::max(1.0, std::pow(lat.abs_x(i), p));
        m->push_back(mi);
        const double cycles = mi * tau / kTwoPi;
        if (std::abs(cycles - std::round(cycles)) > 1e-9 * std::max(1.0, cycles)) periodic = false;
      }
      TimeField::Eval val = [m, A, gamma](Index i, double t) {
        return A * std::cos((*m)[static_cast<std::size_t>(i)] * std::pow(std::abs(t), gamma));
      };
      TimeField::Eval prim;
      if (gamma == 1.0) {
        prim = [m, A](Index i, double t) {
          const double mi = (*m)[static_cast<std::size_t>(i)];
          return A * std::sin(mi * t) / mi;
        };
      } else {
        prim = [m, A, gamma](Index i, double t) {
          const double mi = (*m)[static_cast<std::size_t>(i)];
          const double s = 1.0 / gamma;
          const double q = (A / gamma) * std::pow(mi, -s) * cos_power_integral(s, mi * std::pow(std::abs(t), gamma));
          return t < 0 ? -q : q;
        };
      }
      f = TimeField(FieldKind::ElectricVertex, lat.size(), tau, family, val, prim, periodic);
    } else if (family == "tabulated") {
      check_keys(spec, {"A", "profile", "width", "seed", "tau", "times", "samples"});
      const double tau = spec.value("tau", 1.0);
      auto times = std::make_shared<std::vector<double>>(spec.at("times").get<std::vector<double>>());
      auto samples = std::make_shared<std::vector<double>>(spec.at("samples").get<std::vector<double>>());
      if (times->size() != samples->size() || times->size() < 2) {
        fail(ErrorCode::MalformedSpec, "tabulated field needs matching times/samples (>= 2 points)");
      }
      if (!std::is_sorted(times->begin(), times->end()) || times->front() < 0.0 || times->back() >= tau) {
        fail(ErrorCode::MalformedSpec, "tabulated times must be sorted within [0, tau)");
      }
      auto g = std::make_shared<const std::vector<double>>(profile_values(spec, lat));
      auto val = [times, samples, g, tau](Index i, double t) {
        double tt = std::fmod(t, tau);
        if (tt < 0) tt += tau;
        const auto& ts = *times;
        const auto& ys = *samples;
        // periodic linear interpolation
        auto it = std::upper_bound(ts.begin(), ts.end(), tt);
        double t0, t1, y0, y1;
        if (it == ts.begin()) {
          t0 = ts.back() - tau, y0 = ys.back(), t1 = ts.front(), y1 = ys.front();
        } else if (it == ts.end()) {
          t0 = ts.back(), y0 = ys.back(), t1 = ts.front() + tau, y1 = ys.front();
        } else {
          const auto k = static_cast<std::size_t>(it - ts.begin());
          t0 = ts[k - 1], y0 = ys[k - 1], t1 = ts[k], y1 = ys[k];
        }
        const double y = y0 + (y1 - y0) * (tt - t0) / (t1 - t0);
        return (*g)[static_cast<std::size_t>(i)] * y;
      };
      f = TimeField(FieldKind::ElectricVertex, lat.size(), tau, family, val, nullptr, true);
    } else {
      fail(ErrorCode::UnknownFamily, "unknown electric family '" + family + "'");
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::MalformedSpec, "electric field spec: " + std::string(ex.what()));
  }
  f.spec = spec;
  return f;
}

TimeField make_magnetic_field(const json& spec, const FiniteLattice& lat) {
  const std::string family = spec.value("family", "");
  const Index ne = static_cast<Index>(lat.edges().size());
  TimeField f;
  try {
    if (family == "zero") {
      check_keys(spec, {"tau"});
      f = TimeField::zero(FieldKind::MagneticEdge, ne, spec.value("tau", 1.0));
    } else if (family == "uniform-sinusoidal" || family == "weighted-sinusoidal") {
      check_keys(spec, {"B", "decay", "tau", "harmonic", "phase"});
      const double B = spec.value("B", 0.1);
      const double decay = spec.value("decay", 0.0);
      std::vector<double> g;
      for (const auto& e : lat.edges()) {
        double w = B;
        if (family == "weighted-sinusoidal") {
          w *= std::pow(1.0 + lat.abs_x(e.x), -decay / 2.0) * std::pow(1.0 + lat.abs_x(e.y), -decay / 2.0);
        }
        g.push_back(w);
      }
      f = sinusoid(FieldKind::MagneticEdge, family, g, spec.value("tau", 1.0), spec.value("harmonic", 1),
                   spec.value("phase", 0.0), false);
    } else if (family == "constant-offset") {
      check_keys(spec, {"B", "tau"});
      const double B = spec.value("B", 0.1);
      f = TimeField(FieldKind::MagneticEdge, ne, spec.value("tau", 1.0), family,
                    [B](Index, double) { return B; }, [B](Index, double t) { return B * t; }, true);
    } else {
      fail(ErrorCode::UnknownFamily, "unknown magnetic family '" + family + "'");
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::MalformedSpec, "magnetic field spec: " + std::string(ex.what()));
  }
  f.spec = spec;
  return f;
}

StaticElectricPotential make_static_potential(const json& spec, const PeriodicGraph& g) {
  const std::string family = spec.value("family", "zero");
  StaticElectricPotential p = StaticElectricPotential::zero(g);
  try {
    if (family == "zero") {
      check_keys(spec, {"defects"});
    } else if (family == "constant") {
      check_keys(spec, {"value", "defects"});
      p = StaticElectricPotential::constant(g, spec.at("value").get<double>());
    } else if (family == "periodic") {
      check_keys(spec, {"values", "defects"});
      p.periodic = spec.at("values").get<std::vector<double>>();
      if (static_cast<int>(p.periodic.size()) != g.nu()) {
        fail(ErrorCode::PotentialShapeMismatch, "periodic potential needs one value per cell vertex");
      }
    } else if (family == "random") {
      check_keys(spec, {"amplitude", "seed", "defects"});
      std::mt19937_64 rng(spec.value("seed", 1ull));
      std::uniform_real_distribution<double> u(-spec.value("amplitude", 1.0), spec.value("amplitude", 1.0));
      for (auto& v : p.periodic) v = u(rng);
    } else if (family == "defect") {
      check_keys(spec, {"offset", "vertex", "value", "defects"});
      std::vector<int> off = spec.value("offset", std::vector<int>(static_cast<std::size_t>(g.dimension()), 0));
      const int v = spec.contains("vertex") ? g.vertex_index(spec.at("vertex").get<std::string>()) : 0;
      p.defects.push_back({off, v, spec.at("value").get<double>()});
    } else {
      fail(ErrorCode::UnknownFamily, "unknown static potential family '" + family + "'");
    }
    if (spec.contains("defects")) {
      for (const auto& d : spec.at("defects")) {
        const int v = d.contains("vertex") ? g.vertex_index(d.at("vertex").get<std::string>()) : 0;
        p.defects.push_back({d.at("offset").get<std::vector<int>>(), v, d.at("value").get<double>()});
      }
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::MalformedSpec, "static potential spec: " + std::string(ex.what()));
  }
  return p;
}

StaticMagneticPotential make_static_magnetic(const json& spec, const PeriodicGraph& g) {
  const std::string family = spec.value("family", "zero");
  try {
    if (family == "zero") {
      check_keys(spec, {});
      return StaticMagneticPotential::zero(g);
    }
    if (family == "constant") {
      check_keys(spec, {"phi"});
      return StaticMagneticPotential::constant(g, spec.at("phi").get<double>());
    }
    if (family == "values") {
      check_keys(spec, {"alpha"});
      StaticMagneticPotential a{spec.at("alpha").get<std::vector<double>>()};
      if (a.alpha.size() != g.edges().size()) {
        fail(ErrorCode::PotentialShapeMismatch, "alpha needs one value per cell edge");
      }
      return a;
    }
    if (family == "random") {
      check_keys(spec, {"amplitude", "seed"});
      std::mt19937_64 rng(spec.value("seed", 1ull));
      return StaticMagneticPotential::random(g, rng, spec.value("amplitude", kPi));
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::MalformedSpec, "static magnetic spec: " + std::string(ex.what()));
  }
  fail(ErrorCode::UnknownFamily, "unknown static magnetic family '" + family + "'");
}

// ---------------------------------------------------------------------------
// Primitive

namespace {
using GL10 = boost::math::quadrature::gauss<double, 10>;
}

PrimitiveQ PrimitiveQ::of(const TimeField& q, const PrimitiveOptions& opt) {
  if (q.kind() != FieldKind::ElectricVertex) fail(ErrorCode::InvalidArgument, "primitive_of needs an electric field");
  PrimitiveQ Q;
  Q.field_ = std::make_shared<const TimeField>(q);
  Q.sites_ = q.sites();
  Q.tau_ = q.period();
  Q.horizon_ = opt.horizon > 0.0 ? opt.horizon : q.period();
  Q.closed_ = q.has_primitive();

  // sup-norm estimate on a uniform grid (used for tol_Q)
  double qmax = 0.0;
  const int probe = 256;
  for (int j = 0; j < probe; ++j) {
    const double t = q.period() * (j + 0.5) / probe;
    for (Index i = 0; i < q.sites(); ++i) qmax = std::max(qmax, std::abs(q(i, t)));
  }
  Q.tol_q_ = 1e-10 * q.period() * qmax;

  if (!Q.closed_) {
    const auto& abs = GL10::abscissa();
    const auto& wts = GL10::weights();
    auto build = [&](int panels) {
      const double h = Q.horizon_ / panels;
      RMat table = RMat::Zero(panels + 1, Q.sites_);
      for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(Q.sites_);
        for (std::size_t k = 0; k < abs.size(); ++k) {
          for (int sgn : {-1, 1}) {
            if (abs[k] == 0.0 && sgn < 0) continue;
            const double t = mid + sgn * abs[k] * h / 2;
            for (Index i = 0; i < Q.sites_; ++i) acc(i) += wts[k] * q(i, t);
          }
        }
        table.row(p + 1) = table.row(p) + acc * (h / 2);
      }
      return table;
    };
    int panels = opt.initial_panels;
    RMat prev = build(panels);
    for (;;) {
      if (2 * panels > opt.max_panels) {
        fail(ErrorCode::QuadratureBudgetExceeded, "primitive table did not converge within " +
                                                      std::to_string(opt.max_panels) + " panels");
      }
      RMat next = build(2 * panels);
      panels *= 2;
      const double change = (next.row(panels) - prev.row(panels / 2)).cwiseAbs().maxCoeff();
      prev = std::move(next);
      if (change <= 0.1 * Q.tol_q_ || qmax == 0.0) break;
    }
    Q.table_ = std::move(prev);
    Q.panels_ = panels;
    Q.h_ = Q.horizon_ / panels;
  }

  Q.residual_ = 0.0;
  if (q.periodic()) {
    for (Index i = 0; i < Q.sites_; ++i) Q.residual_ = std::max(Q.residual_, std::abs(Q(i, Q.tau_)));
    if (opt.check_period && Q.residual_ > Q.tol_q_) {
      fail(ErrorCode::PeriodMeanNonzero, "max |Q_x(tau)| = " + std::to_string(Q.residual_) + " exceeds tol_Q = " +
                                             std::to_string(Q.tol_q_));
    }
  }
  return Q;
}

double PrimitiveQ::operator()(Index x, double t) const {
  if (!field_) return 0.0;
  if (field_->is_zero()) return 0.0;
  if (closed_) return field_->primitive(x, t);
  double shift = 0.0;
  if (t < 0.0 || t > horizon_ * (1.0 + 1e-14)) {
    if (!field_->periodic() || horizon_ != tau_) {
      fail(ErrorCode::InvalidArgument, "primitive requested outside its table");
    }
    const double n = std::floor(t / tau_);
    shift = n * table_(panels_, x);
    t -= n * tau_;
  }
  const int p = std::min(panels_ - 1, std::max(0, static_cast<int>(t / h_)));
  const double a = p * h_;
  double part = 0.0;
  if (t > a) {
    part = GL10::integrate([&](double s) { return (*field_)(x, s); }, a, t);
  }
  return shift + table_(p, x) + part;
}

void PrimitiveQ::sample(double t, RVec& out) const {
  out.resize(sites_);
  for (Index i = 0; i < sites_; ++i) out(i) = (*this)(i, t);
}

// ---------------------------------------------------------------------------
// Conditions

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Unverifiable: return "unverifiable-at-truncation";
  }
  return "?";
}

Verdict ConditionReport::overall() const {
  Verdict v = Verdict::Pass;
  for (const auto& c : clauses) {
    if (c.verdict == Verdict::Fail) return Verdict::Fail;
    if (c.verdict == Verdict::Unverifiable) v = Verdict::Unverifiable;
  }
  return v;
}

const ClauseResult& ConditionReport::clause(const std::string& name) const {
  for (const auto& c : clauses) {
    if (c.clause == name) return c;
  }
  fail(ErrorCode::InvalidArgument, "no clause '" + name + "' in " + condition);
}

json ConditionReport::to_json() const {
  json cl = json::array();
  for (const auto& c : clauses) {
    cl.push_back({{"clause", c.clause}, {"verdict", std::string(to_string(c.verdict))}, {"measured", c.measured},
                  {"bound", c.bound}, {"note", c.note}});
  }
  return {{"condition", condition}, {"overall", std::string(to_string(overall()))}, {"clauses", cl},
          {"weights", weights}};
}

namespace {

struct Checker {
  const ConditionInputs& in;
  const FiniteLattice& lat;
  int shell;
  std::vector<double> times;
  std::optional<PrimitiveQ> own_Q;
  const PrimitiveQ* Q = nullptr;

  Checker(const ConditionInputs& inputs, double t0, double t1, int n)
      : in(inputs), lat(*inputs.lat), shell(inputs.shell > 0 ? inputs.shell : std::max(1, inputs.lat->radius() / 10)) {
    for (int j = 0; j < n; ++j) times.push_back(t0 + (t1 - t0) * j / n);
    if (in.q && !in.q->is_zero()) {
      if (in.Q) {
        Q = in.Q;
      } else {
        PrimitiveOptions opt;
        opt.check_period = false;
        if (!in.q->periodic()) opt.horizon = t1;
        own_Q = PrimitiveQ::of(*in.q, opt);
        Q = &*own_Q;
      }
    }
  }

  bool outer(Index i) const { return lat.sup_offset(i) > lat.radius() - shell; }
  bool outer_edge(const FiniteLattice::Edge& e) const { return outer(e.x) || outer(e.y); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

  double Qv(Index x, double t) const { return Q ? (*Q)(x, t) : 0.0; }
  double beta(Index e, double t) const {
    double b = 0.0;
    if (in.alpha) b += in.alpha->alpha.at(static_cast<std::size_t>(lat.edges()[static_cast<std::size_t>(e)].cell_edge));
    if (in.delta) b += (*in.delta)(e, t);
    return b;
  }
  double delta(Index e, double t) const { return in.delta ? (*in.delta)(e, t) : 0.0; }

  static ClauseResult pointwise(const std::string& name, double worst_ratio, const std::string& note = "") {
    return {name, worst_ratio <= 1.0 + 1e-12 ? Verdict::Pass : Verdict::Fail, worst_ratio, 1.0, note};
  }
  static double ratio(double lhs, double rhs) {
    if (lhs <= 0.0) return 0.0;
    if (rhs <= 0.0) return std::numeric_limits<double>::infinity();
    return lhs / rhs;
  }
  static ClauseResult infinite_sum(const std::string& name, double total, double outer_part) {
    if (outer_part == 0.0) return {name, Verdict::Pass, total, 0.0, "no mass in the outer shell"};
    return {name, Verdict::Unverifiable, total, outer_part, "truncated sum; outer shell contributes the bound value"};
  }
  static ClauseResult little_o(const std::string& name, double overall_max, double outer_max) {
    if (overall_max == 0.0 || outer_max <= 0.1 * overall_max) {
      return {name, Verdict::Pass, outer_max, overall_max, "outer-shell sup <= 0.1 x overall sup"};
    }
    return {name, Verdict::Unverifiable, outer_max, overall_max, "no visible decay at this truncation"};
  }

  const Weight& need_weight(char cls) const {
    if (!in.b) fail(ErrorCode::MissingWeight, "condition needs a weight b");
    if (in.b->cls != cls) {
      fail(ErrorCode::MissingWeight, std::string("condition needs a weight of class ") + cls);
    }
    return *in.b;
  }

  // b_x^2 = c (1+|x|)^{-decay} is parametric, so class membership is decided
  // from the exponents; `measured` reports the truncated quantity.
  ClauseResult weight_class(const Weight& b) const {
    const int d = lat.dimension();
    if (!(b.c > 0.0)) return {"weight-class", Verdict::Fail, b.c, 0.0, "weight vanishes"};
    if (b.cls == 'a') {
      double sup = 0.0;
      for (Index i = 0; i < lat.size(); ++i) {
        sup = std::max(sup, std::pow(1.0 + lat.abs_x(i), b.exponent) * b.b(lat.abs_x(i)) * b.b(lat.abs_x(i)));
      }
      if (!(b.exponent > 1.0)) return {"weight-class", Verdict::Fail, b.exponent, 1.0, "class exponent a must exceed 1"};
      const bool ok = b.exponent <= b.decay;
      return {"weight-class", ok ? Verdict::Pass : Verdict::Fail, sup, b.decay,
              ok ? "(1+|x|)^a b^2 bounded" : "(1+|x|)^a b^2 grows: a exceeds the weight decay"};
    }
    const double p = b.exponent;
    const double pmax = d == 3 ? 1.2 : 4.0 / 3.0;
    if (d < 3 || p < 1.0 || p >= pmax) {
      return {"weight-class", Verdict::Fail, p, pmax, "class p requires d >= 3 and 1 <= p < 6/5 (d=3) or 4/3 (d>=4)"};
    }
    double total = 0.0;
    for (Index i = 0; i < lat.size(); ++i) total += std::pow(b.b(lat.abs_x(i)), 2.0 * p);
    const bool ok = b.decay * p > d;
    return {"weight-class", ok ? Verdict::Pass : Verdict::Fail, total, static_cast<double>(d),
            ok ? "sum of b^{2p} converges" : "sum of b^{2p} diverges: decay * p <= d"};
  }

  ClauseResult periodic(const std::string& name, std::initializer_list<const TimeField*> fields) const {
    double worst = 0.0;
    for (const TimeField* f : fields) {
      if (!f || f->is_zero()) continue;
      if (!f->periodic()) return {name, Verdict::Fail, 0.0, 0.0, "field family is not periodic"};
      for (std::size_t j = 0; j < times.size(); j += 8) {
        for (Index i = 0; i < f->sites(); ++i) {
          worst = std::max(worst, std::abs((*f)(i, times[j] + in.tau) - (*f)(i, times[j])));
        }
      }
    }
    return {name, worst <= 1e-12 ? Verdict::Pass : Verdict::Fail, worst, 1e-12, ""};
  }

  ClauseResult q_period() const {
    double worst = 0.0;
    if (Q) {
      for (Index i = 0; i < lat.size(); ++i) worst = std::max(worst, std::abs((*Q)(i, in.tau)));
    }
    const double tol = Q ? std::max(Q->tol(), 1e-14) : 0.0;
    return {"Q-period", worst <= tol ? Verdict::Pass : Verdict::Fail, worst, tol, ""};
  }

  ClauseResult q_decay(double t_from) const {
    double all = 0.0, out = 0.0;
    if (Q) {
      for (double t : times) {
        if (t < t_from) continue;
        for (Index i = 0; i < lat.size(); ++i) {
          const double v = std::abs((*Q)(i, t));
          all = std::max(all, v);
          if (outer(i)) out = std::max(out, v);
        }
      }
    }
    return little_o("Q-decay", all, out);
  }

  ClauseResult sup_field(const std::string& name, const TimeField* f) const {
    double m = 0.0;
    if (f) {
      for (double t : times)
        for (Index i = 0; i < f->sites(); ++i) m = std::max(m, std::abs((*f)(i, t)));
    }
    return {name, std::isfinite(m) ? Verdict::Pass : Verdict::Fail, m, 0.0, "bounded family"};
  }

  // int_0^tau sum_x |f_x(t)| dt (rectangle rule on the periodic grid)
  std::pair<double, double> l1_l1(const TimeField* f) const {
    double total = 0.0, out = 0.0;
    if (!f) return {0.0, 0.0};
    for (double t : times) {
      for (Index i = 0; i < f->sites(); ++i) {
        const double v = std::abs((*f)(i, t)) * dt();
        total += v;
        if (outer(i)) out += v;
      }
    }
    return {total, out};
  }
};

}  // namespace

ConditionReport check_condition(const std::string& name, const ConditionInputs& in) {
  if (!in.lat) fail(ErrorCode::InvalidArgument, "check_condition needs a lattice");
  static const std::set<std::string> known{"MZ_p", "MZ_a", "VZ_p", "VZ_a", "M", "V", "H", "R"};
  if (!known.count(name)) fail(ErrorCode::UnknownCondition, "unknown condition '" + name + "'");
  const double t_end = name == "R" ? (in.t_max > 0.0 ? in.t_max : 10.0 * in.tau) : in.tau;
  Checker ck(in, 0.0, t_end, name == "R" ? std::max(in.time_samples, 1024) : in.time_samples);
  const FiniteLattice& lat = *in.lat;
  ConditionReport rep;
  rep.condition = name;
  if (in.b) rep.weights["b"] = in.b->to_json();
  if (in.w) rep.weights["w"] = in.w->to_json();
  const auto& edges = lat.edges();
  const Index ne = static_cast<Index>(edges.size());

  if (name == "MZ_p" || name == "MZ_a") {
    const Weight& b = ck.need_weight(name.back());
    rep.clauses.push_back(ck.periodic("magnetic-periodic", {in.delta}));
    rep.clauses.push_back(ck.weight_class(b));
    double worst = 0.0;
    for (double t : ck.times) {
      for (Index e = 0; e < ne; ++e) {
        const auto& ed = edges[static_cast<std::size_t>(e)];
        worst = std::max(worst, Checker::ratio(std::abs(ck.beta(e, t)), 2.0 * b.b(lat.abs_x(ed.x)) * b.b(lat.abs_x(ed.y))));
      }
    }
    rep.clauses.push_back(Checker::pointwise("magnetic-bound", worst, "|beta(e,t)| <= 2 b_x b_y"));
  } else if (name == "VZ_p" || name == "VZ_a") {
    const Weight& b = ck.need_weight(name.back());
    rep.clauses.push_back(ck.weight_class(b));
    ClauseResult sv = ck.sup_field("potential-bounded", in.v);
    const ClauseResult sq = ck.sup_field("potential-bounded", in.q);
    sv.measured = std::max(sv.measured, sq.measured);
    rep.clauses.push_back(sv);
    double worst = 0.0;
    if (in.v) {
      for (double t : ck.times)
        for (Index i = 0; i < lat.size(); ++i) {
          const double bx = b.b(lat.abs_x(i));
          worst = std::max(worst, Checker::ratio(std::abs((*in.v)(i, t)), bx * bx));
        }
    }
    rep.clauses.push_back(Checker::pointwise("v-bound", worst, "|v_x(t)| <= b_x^2"));
    rep.clauses.push_back(ck.q_period());
    rep.clauses.push_back(ck.q_decay(0.0));
    worst = 0.0;
    if (ck.Q) {
      for (double t : ck.times)
        for (const auto& ed : edges) {
          worst = std::max(worst, Checker::ratio(std::abs(ck.Qv(ed.y, t) - ck.Qv(ed.x, t)),
                                                 b.b(lat.abs_x(ed.x)) * b.b(lat.abs_x(ed.y))));
        }
    }
    rep.clauses.push_back(Checker::pointwise("Q-difference", worst, "|Q_y - Q_x| <= b_y b_x"));
  } else if (name == "M") {
    rep.clauses.push_back({"p-bounded", Verdict::Pass, in.p ? in.p->sup() : 0.0, 0.0, "finite values"});
    rep.clauses.push_back(ck.periodic("delta-periodic", {in.delta}));
    double total = 0.0, out = 0.0;
    if (in.delta) {
      for (double t : ck.times)
        for (Index e = 0; e < ne; ++e) {
          const double v = std::abs(std::sin(ck.delta(e, t))) * ck.dt();
          total += v;
          if (ck.outer_edge(edges[static_cast<std::size_t>(e)])) out += v;
        }
    }
    rep.clauses.push_back(Checker::infinite_sum("sin-delta-integrable", total, out));
  } else if (name == "V") {
    rep.clauses.push_back(ck.periodic("periodic", {in.v, in.q}));
    const auto [vt, vo] = ck.l1_l1(in.v);
    rep.clauses.push_back(Checker::infinite_sum("v-L1-l1", vt, vo));
    ClauseResult ql = ck.sup_field("q-L1-linf", in.q);
    ql.measured *= in.tau;
    rep.clauses.push_back(ql);
    rep.clauses.push_back(ck.q_period());
    double qt = 0.0, qo = 0.0, dt_ = 0.0, do_ = 0.0;
    if (ck.Q) {
      for (double t : ck.times) {
        for (Index i = 0; i < lat.size(); ++i) {
          const double v = ck.Qv(i, t) * ck.Qv(i, t) * ck.dt();
          qt += v;
          if (ck.outer(i)) qo += v;
        }
        for (const auto& ed : edges) {
          const double v = std::abs(ck.Qv(ed.y, t) - ck.Qv(ed.x, t)) * ck.dt() * 2.0;  // both orientations
          dt_ += v;
          if (ck.outer_edge(ed)) do_ += v;
        }
      }
    }
    rep.clauses.push_back(Checker::infinite_sum("Q-L2-l2", qt, qo));
    rep.clauses.push_back(Checker::infinite_sum("Q-difference-L1-l1", dt_, do_));
  } else if (name == "H") {
    if (!in.h0) fail(ErrorCode::InvalidArgument, "Condition H needs h0");
    ClauseResult ql = ck.sup_field("q-L1-B", in.q);
    ql.measured *= in.tau;
    rep.clauses.push_back(ql);
    const auto [vt, vo] = ck.l1_l1(in.v);
    rep.clauses.push_back(Checker::infinite_sum("v-L1-B1", vt, vo));
    rep.clauses.push_back(ck.q_period());
    double qt = 0.0, qo = 0.0, jsup = 0.0, jo = 0.0, kt = 0.0, ko = 0.0;
    const Mat h0 = Mat(*in.h0);
    if (ck.Q) {
      const int stride = std::max<int>(1, static_cast<int>(ck.times.size()) / 32);
      for (std::size_t j = 0; j < ck.times.size(); ++j) {
        const double t = ck.times[j];
        double js = 0.0, jso = 0.0;
        for (Index i = 0; i < lat.size(); ++i) {
          const double Qi = ck.Qv(i, t);
          qt += Qi * Qi * ck.dt();
          if (ck.outer(i)) qo += Qi * Qi * ck.dt();
          // for diagonal q, int_0^t q Q ds = Q(t)^2 / 2
          js += 0.5 * Qi * Qi;
          if (ck.outer(i)) jso += 0.5 * Qi * Qi;
        }
        if (js > jsup) {
          jsup = js;
          jo = jso;
        }
        if (j % static_cast<std::size_t>(stride) == 0) {
          RVec Qt(lat.size());
          for (Index i = 0; i < lat.size(); ++i) Qt(i) = ck.Qv(i, t);
          const Mat K = Qt.cast<cplx>().asDiagonal() * h0 - h0 * Qt.cast<cplx>().asDiagonal();
          Eigen::BDCSVD<Mat> svd(K);
          kt += svd.singularValues().sum() * ck.dt() * stride;
          for (Index x = 0; x < lat.size(); ++x)
            for (Index y = 0; y < lat.size(); ++y) {
              if ((ck.outer(x) || ck.outer(y)) && std::abs(K(x, y)) > 0.0) ko += std::abs(K(x, y)) * ck.dt() * stride;
            }
        }
      }
    }
    rep.clauses.push_back(Checker::infinite_sum("Q-L2-B2", qt, qo));
    rep.clauses.push_back(Checker::infinite_sum("J2-Linf-B1", jsup, jo));
    rep.clauses.push_back(Checker::infinite_sum("commutator-L1-B1", kt, ko));
  } else {  // R
    if (!in.b) fail(ErrorCode::MissingWeight, "Condition R needs a weight b");
    if (!in.w) fail(ErrorCode::MissingWeight, "Condition R needs a time envelope w");
    const Weight& b = ck.need_weight('p');
    const TimeEnvelope& w = *in.w;
    rep.clauses.push_back({"a-exponent", in.rho_a > 1.0 ? Verdict::Pass : Verdict::Fail, in.rho_a, 1.0, "a > 1"});
    rep.clauses.push_back(ck.weight_class(b));
    double w2 = 0.0;
    for (double t : ck.times) w2 += w(t) * w(t) * ck.dt();
    const bool l2 = w.kind == "gaussian" || (w.kind == "power" && w.exponent > 0.5);
    rep.clauses.push_back({"w-L2", l2 ? Verdict::Pass : Verdict::Fail, w2, 0.0,
                           l2 ? "envelope family is square integrable" : "envelope family is not in L^2"});
    rep.clauses.push_back(ck.q_decay(1.0));
    auto F = [&](Index x, Index y) { return in.c * std::pow(1.0 + lat.abs_x(x), -in.rho_a) + b.b(lat.abs_x(y)); };
    double worst = 0.0;
    if (in.v) {
      for (double t : ck.times)
        for (Index i = 0; i < lat.size(); ++i) worst = std::max(worst, Checker::ratio(std::abs((*in.v)(i, t)), w(t) * F(i, i)));
    }
    rep.clauses.push_back(Checker::pointwise("v-bound", worst, "|v_x(t)| <= w(t) F_x"));
    worst = 0.0;
    for (double t : ck.times) {
      for (Index e = 0; e < ne; ++e) {
        const auto& ed = edges[static_cast<std::size_t>(e)];
        const double lhs = std::abs(ck.beta(e, t)) + std::abs(ck.Qv(ed.y, t) - ck.Qv(ed.x, t));
        worst = std::max(worst, Checker::ratio(lhs, w(t) * F(ed.x, ed.y)));
        worst = std::max(worst, Checker::ratio(lhs, w(t) * F(ed.y, ed.x)));
      }
    }
    rep.clauses.push_back(Checker::pointwise("magnetic-bound", worst, "|beta| + |Q_y - Q_x| <= w(t) F_y"));
  }
  return rep;
}

// ---------------------------------------------------------------------------

double sparse_op_norm(const SpMat& a, double tol, int max_iter) {
  if (a.nonZeros() == 0) return 0.0;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  Vec x(a.cols());
  for (Index i = 0; i < x.size(); ++i) x(i) = cplx(g(rng), g(rng));
  x.normalize();
  const SpMat adj = a.adjoint();
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec y = adj * (a * x);
    const double lam = y.norm();
    if (lam == 0.0) return 0.0;
    x = y / lam;
    if (std::abs(lam - prev) <= tol * lam) return std::sqrt(lam);
    prev = lam;
  }
  fail(ErrorCode::SolverStagnation, "power iteration for the operator norm did not converge");
}

MagneticDifference magnetic_difference(const FiniteLattice& lat, const RVec& alpha_phase, const RVec& beta_phase,
                                       const std::optional<Weight>& b) {
  const Index ne = static_cast<Index>(lat.edges().size());
  if (alpha_phase.size() != ne || beta_phase.size() != ne) {
    fail(ErrorCode::PotentialShapeMismatch, "phase vectors must have one value per truncated edge");
  }
  Vec hop(ne);
  for (Index e = 0; e < ne; ++e) {
    const double d = beta_phase(e) - alpha_phase(e);
    hop(e) = cplx(0.0, -1.0) * std::exp(cplx(0.0, alpha_phase(e) + d / 2)) * std::sin(d / 2);
  }
  MagneticDifference out;
  OperatorPattern(lat).fill_hopping(hop, RVec::Zero(lat.size()), out.F);
  out.bound = lat.graph().kappa_plus();
  if (b) {
    RVec inv(lat.size());
    for (Index i = 0; i < lat.size(); ++i) {
      const double bi = b->b(lat.abs_x(i));
      if (bi == 0.0) fail(ErrorCode::WeightVanishes, "weight vanishes at vertex " + std::to_string(i));
      inv(i) = 1.0 / bi;
    }
    const Vec invc = inv.cast<cplx>();
    SpMat fb = invc.asDiagonal() * out.F * invc.asDiagonal();
    fb.makeCompressed();
    out.Fb_norm = sparse_op_norm(fb, 1e-10, 20000);
    out.bound_holds = out.Fb_norm <= out.bound * (1.0 + 1e-9);
    out.Fb = std::move(fb);
  }
  return out;
}

}  // namespace floqscat
