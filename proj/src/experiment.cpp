#include "floqscat/experiment.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "floqscat/error.hpp"
#include "floqscat/howland.hpp"
#include "floqscat/parallel.hpp"
#include "floqscat/scattering.hpp"

#ifndef FLOQSCAT_VERSION
#define FLOQSCAT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace floqscat {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
  fail(ErrorCode::ConfigInvalid, field + ": " + msg);
}

enum class T { Int, Real, Bool, String, Array, Object, Any };

struct Knob {
  const char* name;
  T type;
  json fallback;  // null: required
  bool positive = false;
};

const std::vector<Knob>& common_knobs() {
  static const std::vector<Knob> k{
      {"schema", T::Int, kConfigSchemaVersion},
      {"kind", T::String, json()},
      {"graph", T::Any, json()},
      {"magnetic", T::Any, json{{"family", "zero"}}},
      {"potential", T::Any, json{{"family", "zero"}}},
      {"seed", T::Int, 0},
      {"exp", T::String, "auto"},
  };
  return k;
}

const std::map<std::string, std::vector<Knob>>& kind_knobs() {
  static const json packet_default = json::object();
  static const std::map<std::string, std::vector<Knob>> k{
      {"bands", {{"n_k", T::Int, 256, true}}},
      {"quasienergy",
       {{"L", T::Int, json(), true},
        {"tau", T::Real, 1.0, true},
        {"fields", T::Object, json::object()},
        {"step_rule", T::String, "midpoint"},
        {"n_steps", T::Int, 1024, true},
        {"unitarity_tol", T::Real, 1e-8, true},
        {"direct_tol", T::Real, 1e-9, true}}},
      {"gauge-check",
       {{"L", T::Int, json(), true},
        {"tau", T::Real, 1.0, true},
        {"fields", T::Object, json::object()},
        {"step_rule", T::String, "midpoint"},
        {"ladder", T::Array, json::array({1024, 2048, 4096})},
        {"eigenphase_tol", T::Real, 1e-7, true},
        {"order_range", T::Array, json::array({1.8, 2.2})}}},
      {"scattering",
       {{"L", T::Int, json(), true},
        {"tau", T::Real, 1.0, true},
        {"fields", T::Object, json::object()},
        {"step_rule", T::String, "midpoint"},
        {"n_periods", T::Int, 100, true},
        {"steps_per_period", T::Int, 512, true},
        {"conv_tol", T::Real, 1e-3, true},
        {"isometry_tol", T::Real, 1e-3, true},
        {"intertwining_tol", T::Real, 1e-2, true},
        {"boundary_cap", T::Real, 1e-6, true},
        {"shell", T::Int, 0},
        {"packet", T::Object, packet_default},
        {"probe", T::String, "wave"},
        {"initial", T::String, "packet"},
        {"projector", T::String, "identity"},
        {"pr_min", T::Real, 0.1, true},
        {"comparison", T::String, "laplacian"},
        {"gauge_compare", T::Bool, false},
        {"gauge_tol", T::Real, 1e-3, true}}},
      {"time-decaying",
       {{"L", T::Int, json(), true},
        {"tau", T::Real, kTwoPi, true},
        {"fields", T::Object, json::object()},
        {"step_rule", T::String, "midpoint"},
        {"t_max", T::Real, 50.0, true},
        {"dt_sample", T::Real, 1.0, true},
        {"steps_per_sample", T::Int, 64, true},
        {"conv_tol", T::Real, 1e-3, true},
        {"boundary_cap", T::Real, 1e-6, true},
        {"shell", T::Int, 0},
        {"packet", T::Object, packet_default},
        {"comparison", T::String, "laplacian"},
        {"gauge", T::Bool, false}}},
      {"resolvent-sample",
       {{"L", T::Int, json(), true},
        {"weight_exponent", T::Real, 1.0, true},
        {"lambdas", T::Array, json::array()},
        {"ladder", T::Object, json::object()},
        {"plateau_tol", T::Real, 0.2, true},
        {"neumann_factor", T::Real, 2.0, true},
        {"tol", T::Real, 1e-9, true},
        {"krylov_dim", T::Int, 40, true},
        {"delta", T::Real, 0.05, true}}},
  };
  return k;
}

bool type_ok(const json& v, T t) {
  switch (t) {
    case T::Int: return v.is_number_integer();
    case T::Real: return v.is_number();
    case T::Bool: return v.is_boolean();
    case T::String: return v.is_string();
    case T::Array: return v.is_array();
    case T::Object: return v.is_object();
    case T::Any: return true;
  }
  return false;
}

const char* type_name(T t) {
  switch (t) {
    case T::Int: return "an integer";
    case T::Real: return "a number";
    case T::Bool: return "a boolean";
    case T::String: return "a string";
    case T::Array: return "an array";
    case T::Object: return "an object";
    case T::Any: return "a value";
  }
  return "";
}

// Spec references are inline objects or paths relative to the config file.
json resolve_ref(const json& v, const fs::path& base, const std::string& field) {
  if (v.is_object()) return v;
  if (!v.is_string()) invalid(field, "expected an object or a path");
  const std::string s = v.get<std::string>();
  if (s.rfind("builtin:", 0) == 0) return v;
  fs::path p(s);
  if (p.is_relative()) p = base / p;
  std::ifstream in(p);
  if (!in) invalid(field, "file not found: " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    invalid(field, std::string("cannot parse ") + p.string() + ": " + e.what());
  }
}

PeriodicGraph graph_of(const json& g) {
  if (g.is_string()) {
    const std::string name = g.get<std::string>().substr(8);
    if (name == "z1") return PeriodicGraph::lattice_zd(1);
    if (name == "z2") return PeriodicGraph::lattice_zd(2);
    if (name == "z3") return PeriodicGraph::lattice_zd(3);
    if (name == "hexagonal") return PeriodicGraph::hexagonal();
    if (name == "diamond-chain") return PeriodicGraph::diamond_chain();
    invalid("graph", "unknown builtin graph '" + name + "'");
  }
  return PeriodicGraph::from_json(g);
}

template <class Fn>
auto checked(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    invalid(field, e.what());
  }
}

// Everything a run needs, rebuilt from a resolved config.
struct Setup {
  std::shared_ptr<const PeriodicGraph> graph;
  std::shared_ptr<const FiniteLattice> lat;
  StaticMagneticPotential alpha;
  StaticElectricPotential p;
  std::optional<DrivenHamiltonian> h;
  ExpOptions exp;
};

Setup build_setup(const json& r) {
  Setup s;
  s.graph = std::make_shared<const PeriodicGraph>(checked("graph", [&] { return graph_of(r.at("graph")); }));
  s.alpha = checked("magnetic", [&] { return make_static_magnetic(r.at("magnetic"), *s.graph); });
  s.p = checked("potential", [&] { return make_static_potential(r.at("potential"), *s.graph); });
  s.exp.method = checked("exp", [&] { return exp_method_from_string(r.at("exp").get<std::string>()); });
  if (!r.contains("L")) return s;
  s.lat = std::make_shared<const FiniteLattice>(truncate(*s.graph, r.at("L").get<int>()));
  if (!r.contains("fields")) return s;
  DrivenHamiltonian h(s.lat, s.alpha, s.p, r.at("tau").get<double>());
  const json& f = r.at("fields");
  if (f.contains("delta")) h.with_magnetic(checked("fields.delta", [&] { return make_magnetic_field(f.at("delta"), *s.lat); }));
  if (f.contains("v")) h.with_potential(checked("fields.v", [&] { return make_electric_field(f.at("v"), *s.lat); }));
  if (f.contains("q")) {
    TimeField q = checked("fields.q", [&] { return make_electric_field(f.at("q"), *s.lat); });
    checked("fields.q", [&] {
      h.with_q(std::move(q));
      return 0;
    });
  }
  h.with_step_rule(checked("step_rule", [&] { return step_rule_from_string(r.at("step_rule").get<std::string>()); }));
  s.h = std::move(h);
  return s;
}

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string verdict_line(const std::string& v) { return "verdict: " + v + "\n"; }

int exit_for(const std::string& verdict) { return verdict == "pass" ? 0 : 2; }

StepOptions step_opts(const Setup& s) {
  StepOptions o;
  o.exp = s.exp;
  return o;
}

// Delta_alpha, or h_alpha = Delta_alpha + p
SpMat comparison_of(const json& r, const Setup& s) {
  return r.at("comparison") == "static" ? schrodinger(*s.lat, s.alpha, s.p) : magnetic_laplacian(*s.lat, s.alpha);
}

Vec packet_of(const json& r, const FiniteLattice& lat) {
  const Index dim = lat.positions().cols();
  const json& pk = r.at("packet");
  const auto center = pk.value("center", std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  const auto k0 = pk.value("k0", std::vector<double>(static_cast<std::size_t>(dim), kPi / 2));
  return gaussian_packet(lat, center, pk.value("sigma", 10.0), k0);
}

// ---------------------------------------------------------------------------

ExperimentResult run_bands(const json& r, const Setup& s) {
  ExperimentResult out;
  std::vector<double> p = s.p.periodic;
  const auto b = band_structure(*s.graph, s.alpha, p, r.at("n_k").get<int>());
  std::ostringstream csv;
  csv.precision(15);
  for (Index j = 0; j < b.k_points.cols(); ++j) csv << "k_" << j + 1 << ',';
  for (Index j = 0; j < b.sheets.cols(); ++j) csv << "lambda_" << j + 1 << (j + 1 < b.sheets.cols() ? "," : "\n");
  for (Index i = 0; i < b.sheets.rows(); ++i) {
    for (Index j = 0; j < b.k_points.cols(); ++j) csv << b.k_points(i, j) << ',';
    for (Index j = 0; j < b.sheets.cols(); ++j) csv << b.sheets(i, j) << (j + 1 < b.sheets.cols() ? "," : "\n");
  }
  json j = {{"dimension", b.dimension}, {"n_k", b.n_k}, {"sheets", b.sheets.cols()}, {"intervals", b.intervals},
            {"flat", b.flat}, {"flat_value", b.flat_value}, {"spectrum", b.spectrum()}};
  std::string sigma = "σ=";
  const auto spec = b.spectrum();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    sigma += (i ? "∪[" : "[") + fmt6(spec[i].first) + "," + fmt6(spec[i].second) + "]";
  }
  out.summary = "bands: " + std::to_string(b.sheets.cols()) + " sheet(s), n_k=" + std::to_string(b.n_k) + "\n" +
                sigma + "\n";
  for (std::size_t i = 0; i < b.flat.size(); ++i) {
    if (b.flat[i]) out.summary += "flat band " + std::to_string(i + 1) + " at " + fmt6(b.flat_value[i]) + "\n";
  }
  out.verdict = "pass";
  out.artifacts["bands.csv"] = csv.str();
  out.artifacts["bands.json"] = j.dump(2) + "\n";
  return out;
}

ExperimentResult run_quasienergy(const json& r, const Setup& s) {
  ExperimentResult out;
  const DrivenHamiltonian& h = *s.h;
  const double tau = h.period();
  const auto mono = monodromy(h, 0.0, r.at("n_steps").get<int>(), step_opts(s));
  QuasienergyOptions qo;
  qo.unitarity_tol = r.at("unitarity_tol").get<double>();
  const auto q = quasienergy_spectrum(mono.U, tau, qo);
  json j = q.to_json();
  j["monodromy_unitarity_defect"] = mono.unitarity_defect;
  out.verdict = "pass";
  out.summary = "quasienergy: N=" + std::to_string(h.dim()) + ", tau=" + fmt6(tau) + ", " +
                std::to_string(q.distinct.size()) + " distinct values in [0," + fmt6(q.omega) + ")\n" +
                "unitarity defect " + sci(q.unitarity_defect) + "\n";
  const bool autonomous = !h.delta() && !h.v() && !h.q();
  if (autonomous) {
    const RVec ev = hermitian_eigenvalues(Mat(h.comparison()));
    RVec folded(ev.size());
    for (Index i = 0; i < ev.size(); ++i) folded(i) = fold_quasienergy(std::exp(cplx(0.0, -tau * ev(i))), tau);
    const double d = quasienergy_set_distance(q.lambda, folded, q.omega);
    j["direct_defect"] = d;
    out.summary += "autonomous: folded eigenvalues vs monodromy eigenphases " + sci(d) + "\n";
    if (d > r.at("direct_tol").get<double>()) out.verdict = "not-converged";
  }
  std::ostringstream csv;
  csv.precision(15);
  csv << "index,mu_re,mu_im,lambda\n";
  for (Index i = 0; i < q.lambda.size(); ++i) {
    csv << i << ',' << q.mu(i).real() << ',' << q.mu(i).imag() << ',' << q.lambda(i) << '\n';
  }
  out.artifacts["quasienergy.csv"] = csv.str();
  out.artifacts["quasienergy.json"] = j.dump(2) + "\n";
  return out;
}

ExperimentResult run_gauge(const json& r, const Setup& s) {
  ExperimentResult out;
  const auto ladder = r.at("ladder").get<std::vector<int>>();
  const auto range = r.at("order_range").get<std::vector<double>>();
  std::vector<GaugeEquivalence> rows;
  json j = {{"ladder", json::array()}};
  std::ostringstream csv;
  csv.precision(15);
  csv << "n_steps,monodromy_defect,eigenphase_defect,observed_order\n";
  bool order_ok = true;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    rows.push_back(gauge_equivalence_check(*s.h, ladder[i], step_opts(s)));
    double order = std::nan("");
    if (i > 0) {
      order = std::log(rows[i - 1].monodromy_defect / rows[i].monodromy_defect) /
              std::log(static_cast<double>(ladder[i]) / ladder[i - 1]);
      order_ok = order_ok && order >= range[0] && order <= range[1];
    }
    json row = rows.back().to_json();
    if (i > 0) row["observed_order"] = order;
    j["ladder"].push_back(row);
    csv << ladder[i] << ',' << rows[i].monodromy_defect << ',' << rows[i].eigenphase_defect << ',';
    if (i > 0) csv << order;
    csv << '\n';
  }
  const double last = rows.back().eigenphase_defect;
  const bool phase_ok = last <= r.at("eigenphase_tol").get<double>();
  out.verdict = phase_ok && order_ok ? "pass" : "not-converged";
  j["verdict"] = out.verdict;
  out.summary = "gauge-check: eigenphase defect " + sci(last) + " at n_steps=" + std::to_string(ladder.back()) +
                (order_ok ? ", defect order within range\n" : ", defect order OUT of range\n");
  out.artifacts["gauge.csv"] = csv.str();
  out.artifacts["gauge.json"] = j.dump(2) + "\n";
  return out;
}

ExperimentResult run_scattering(const json& r, const Setup& s) {
  ExperimentResult out;
  const DrivenHamiltonian& h = *s.h;
  const FiniteLattice& lat = *s.lat;
  ScatteringOptions opt;
  opt.n_periods = r.at("n_periods").get<int>();
  opt.steps_per_period = r.at("steps_per_period").get<int>();
  opt.conv_tol = r.at("conv_tol").get<double>();
  opt.boundary_cap = r.at("boundary_cap").get<double>();
  opt.shell = r.at("shell").get<int>();
  opt.strict_boundary = false;
  opt.step = step_opts(s);
  const SpMat comparison = comparison_of(r, s);
  const auto ops = ScatteringOperators::build(h, comparison, opt.steps_per_period, opt.step);

  Vec f;
  if (r.at("initial") == "packet") {
    f = packet_of(r, lat);
  } else {
    // most localized Schur vector of the monodromy
    Eigen::ComplexSchur<Mat> cs(ops.M);
    Index best = 0;
    double pr = 2.0;
    for (Index k = 0; k < ops.M.cols(); ++k) {
      const double v = participation_ratio(cs.matrixU().col(k));
      if (v < pr) {
        pr = v;
        best = k;
      }
    }
    f = cs.matrixU().col(best);
    f.normalize();
  }
  std::optional<Mat> P;
  const std::string proj = r.at("projector");
  if (proj == "band") {
    std::vector<double> p(static_cast<std::size_t>(s.graph->nu()), 0.0);
    if (r.at("comparison") == "static") p = s.p.periodic;
    const auto bands = band_structure(*s.graph, s.alpha, p, 256);
    P = ac_projector(Mat(comparison), bands, r.at("pr_min").get<double>());
  } else if (proj == "monodromy") {
    P = monodromy_ac_projector(ops.M, r.at("pr_min").get<double>());
  }

  const bool adjoint = r.at("probe") == "adjoint";
  ScatteringReport rep = adjoint ? adjoint_wave_probe(ops, lat, f, opt, P) : wave_operator_apply(ops, lat, f, opt, P);
  rep.comparison = r.at("comparison") == "static" ? "h_alpha" : "Delta_alpha";
  if (P) rep.comparison += " with " + proj + " projector";
  json j = rep.to_json();
  const double iso = *std::max_element(rep.isometry.begin(), rep.isometry.end());
  const double inter = rep.intertwining.empty() ? 0.0 : *std::max_element(rep.intertwining.begin(), rep.intertwining.end());
  const double bmax = *std::max_element(rep.boundary.begin(), rep.boundary.end());
  const double inter_final = rep.intertwining.empty() ? 0.0 : rep.intertwining.back();
  std::string verdict = rep.verdict;
  if (verdict == "pass" && !adjoint) {
    if (iso > r.at("isometry_tol").get<double>() || inter_final > r.at("intertwining_tol").get<double>()) {
      verdict = "not-converged";
    }
  }
  out.summary = std::string("scattering (") + (adjoint ? "adjoint probe" : "wave operator") + "): N=" +
                std::to_string(lat.size()) + ", " + std::to_string(opt.n_periods) + " periods of tau=" + fmt6(ops.tau) +
                "\nfinal decrement " + sci(rep.final_decrement()) + "\nmax isometry defect " + sci(iso) +
                "\nintertwining defect " + sci(inter_final) + " final, " + sci(inter) + " max\nmax boundary mass " + sci(bmax) + "\n";

  if (r.at("gauge_compare").get<bool>()) {
    const DrivenHamiltonian g = gauge_transform(h);
    const auto gops = ScatteringOperators::build(g, comparison, opt.steps_per_period, opt.step);
    const ScatteringReport grep = wave_operator_apply(gops, lat, f, opt, P);
    const double diff = (grep.final_state - rep.final_state).norm();
    j["gauge"] = grep.to_json();
    j["gauge"]["final_state_difference"] = diff;
    j["gauge"]["monodromy_difference"] = (gops.M - ops.M).cwiseAbs().maxCoeff();
    out.summary += "gauge run: final decrement " + sci(grep.final_decrement()) + ", |W_n f - W_n f (gauge)| = " +
                   sci(diff) + "\n";
    if (verdict == "pass" && (grep.verdict != "pass" || diff > r.at("gauge_tol").get<double>())) {
      verdict = grep.verdict == "pass" ? "not-converged" : grep.verdict;
    }
    out.artifacts["scattering_gauge.csv"] = grep.to_csv();
  }
  j["verdict"] = verdict;
  out.verdict = verdict;
  out.artifacts["scattering.csv"] = rep.to_csv();
  out.artifacts["scattering.json"] = j.dump(2) + "\n";
  return out;
}

ExperimentResult run_time_decaying(const json& r, const Setup& s) {
  ExperimentResult out;
  const FiniteLattice& lat = *s.lat;
  TimeDecayingOptions opt;
  opt.t_max = r.at("t_max").get<double>();
  opt.dt_sample = r.at("dt_sample").get<double>();
  opt.steps_per_sample = r.at("steps_per_sample").get<int>();
  opt.conv_tol = r.at("conv_tol").get<double>();
  opt.boundary_cap = r.at("boundary_cap").get<double>();
  opt.shell = r.at("shell").get<int>();
  opt.strict_boundary = false;
  opt.step = step_opts(s);
  const Vec f = packet_of(r, lat);
  const SpMat comparison = comparison_of(r, s);
  ScatteringReport rep;
  if (r.at("gauge").get<bool>()) {
    const DrivenHamiltonian g = gauge_transform(*s.h);
    const GaugeTransform J(std::make_shared<const PrimitiveQ>(*s.h->Q()));
    rep = time_decaying_scenario(g, comparison, lat, f, opt, &J);
  } else {
    rep = time_decaying_scenario(*s.h, comparison, lat, f, opt);
  }
  rep.comparison = r.at("comparison") == "static" ? "h_alpha" : "Delta_alpha";
  const double bmax = *std::max_element(rep.boundary.begin(), rep.boundary.end());
  out.summary = std::string("time-decaying") + (r.at("gauge").get<bool>() ? " (gauge)" : "") + ": N=" +
                std::to_string(lat.size()) + ", t_max=" + fmt6(opt.t_max) + "\nfinal decrement " +
                sci(rep.final_decrement()) + "\nfinal adjoint decrement " + sci(rep.adjoint_decrements.back()) +
                "\nisometry defect " + sci(rep.isometry.front()) + "\nmax boundary mass " + sci(bmax) + "\n";
  out.verdict = rep.verdict;
  out.artifacts["time_decaying.csv"] = rep.to_csv();
  out.artifacts["time_decaying.json"] = rep.to_json().dump(2) + "\n";
  return out;
}

ExperimentResult run_resolvent(const json& r, const Setup& s) {
  ExperimentResult out;
  ResolventOptions opt;
  opt.tol = r.at("tol").get<double>();
  opt.krylov_dim = r.at("krylov_dim").get<int>();
  opt.delta = r.at("delta").get<double>();
  const RVec w = rho_weight(*s.lat, r.at("weight_exponent").get<double>());
  std::vector<cplx> lams;
  for (const auto& l : r.at("lambdas")) lams.emplace_back(l.at(0).get<double>(), l.at(1).get<double>());
  const auto fixed = weighted_resolvent_sample(*s.lat, w, lams, opt);
  json j = {{"samples", to_json(fixed)}};
  bool ok = true;
  out.summary = "resolvent-sample: N=" + std::to_string(s.lat->size()) + "\n";
  const double factor = r.at("neumann_factor").get<double>();
  for (const auto& x : fixed) {
    const double ratio = x.norm / x.neumann;  // = (norm * varrho) / (neumann * varrho)
    out.summary += "lambda=" + fmt6(x.lambda.real()) + "+" + fmt6(x.lambda.imag()) + "i  norm " + sci(x.norm) +
                   "  norm*varrho " + sci(x.norm * x.varrho) + "  neumann*varrho " + sci(x.neumann * x.varrho) + "\n";
    if (x.varrho >= s.graph->kappa_plus()) ok = ok && ratio <= factor && ratio >= 1.0 / factor;
  }
  std::ostringstream csv;
  csv.precision(15);
  csv << "group,re,im,norm,varrho,scaled,neumann,near_threshold\n";
  auto rows = [&csv](const char* grp, const std::vector<ResolventSample>& v) {
    for (const auto& x : v) {
      csv << grp << ',' << x.lambda.real() << ',' << x.lambda.imag() << ',' << x.norm << ',' << x.varrho << ','
          << x.scaled << ',' << x.neumann << ',' << (x.near_threshold ? 1 : 0) << '\n';
    }
  };
  rows("fixed", fixed);
  const json& ladder = r.at("ladder");
  if (!ladder.empty()) {
    std::vector<cplx> lad;
    for (double e : ladder.at("eps").get<std::vector<double>>()) lad.emplace_back(ladder.at("re").get<double>(), e);
    const auto ls = weighted_resolvent_sample(*s.lat, w, lad, opt);
    double lo = ls.front().norm, hi = lo;
    for (const auto& x : ls) {
      lo = std::min(lo, x.norm);
      hi = std::max(hi, x.norm);
    }
    // spread relative to the largest sample
    const double variation = (hi - lo) / hi;
    j["ladder"] = to_json(ls);
    j["ladder_variation"] = variation;
    j["ladder_max_over_min"] = hi / lo;
    ok = ok && variation <= r.at("plateau_tol").get<double>();
    rows("ladder", ls);
    out.summary += "ladder at Re lambda=" + fmt6(ladder.at("re").get<double>()) + ": norms vary by " +
                   fmt6(100.0 * variation) + "%\n";
  }
  out.verdict = ok ? "pass" : "not-converged";
  j["verdict"] = out.verdict;
  out.artifacts["resolvent.csv"] = csv.str();
  out.artifacts["resolvent.json"] = j.dump(2) + "\n";
  return out;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"bands", "quasienergy", "gauge-check", "scattering", "time-decaying",
                                          "resolvent-sample"};
  return k;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "config: cannot open " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("config: ") + e.what());
  }
  if (!cfg.is_object()) fail(ErrorCode::ConfigInvalid, "config: top level must be an object");
  cfg["_base"] = fs::absolute(fs::path(path)).parent_path().string();
  return cfg;
}

void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorCode::ConfigInvalid, "override: expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorCode::ConfigInvalid, "override: empty path component in '" + key + "'");
    if (!node->is_object()) fail(ErrorCode::ConfigInvalid, "override: '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

json validate_config(const json& cfg, const std::string& kind_in) {
  if (!cfg.is_object()) invalid("config", "top level must be an object");
  std::string kind = kind_in;
  if (cfg.contains("kind")) {
    if (!cfg.at("kind").is_string()) invalid("kind", "expected a string");
    const std::string k = cfg.at("kind").get<std::string>();
    if (!kind.empty() && k != kind) invalid("kind", "config is for '" + k + "' but '" + kind + "' was requested");
    kind = k;
  }
  if (kind.empty()) invalid("kind", "missing experiment kind");
  const auto& kk = kind_knobs();
  if (!kk.count(kind)) invalid("kind", "unknown experiment kind '" + kind + "'");
  const fs::path base = cfg.contains("_base") ? fs::path(cfg.at("_base").get<std::string>()) : fs::current_path();

  std::vector<Knob> knobs = common_knobs();
  knobs.insert(knobs.end(), kk.at(kind).begin(), kk.at(kind).end());
  std::set<std::string> names;
  for (const auto& k : knobs) names.insert(k.name);
  for (const auto& [key, _] : cfg.items()) {
    if (key != "_base" && !names.count(key)) invalid(key, "unknown key for kind '" + kind + "'");
  }
  json r = json::object();
  for (const auto& k : knobs) {
    if (!cfg.contains(k.name)) {
      if (k.fallback.is_null() && std::string(k.name) != "kind") invalid(k.name, "required");
      r[k.name] = k.fallback;
      continue;
    }
    const json& v = cfg.at(k.name);
    if (!type_ok(v, k.type)) invalid(k.name, std::string("expected ") + type_name(k.type));
    if (k.positive && !(v.get<double>() > 0.0)) invalid(k.name, "must be positive");
    r[k.name] = v;
  }
  r["kind"] = kind;
  if (r.at("schema").get<int>() != kConfigSchemaVersion) {
    invalid("schema", "unsupported version " + std::to_string(r.at("schema").get<int>()));
  }
  r["graph"] = resolve_ref(r.at("graph"), base, "graph");
  r["magnetic"] = resolve_ref(r.at("magnetic"), base, "magnetic");
  r["potential"] = resolve_ref(r.at("potential"), base, "potential");
  if (r.contains("fields")) {
    json fields = json::object();
    for (const auto& [key, v] : r.at("fields").items()) {
      if (key != "v" && key != "delta" && key != "q") invalid("fields." + key, "unknown field (expected v, delta or q)");
      json spec = resolve_ref(v, base, "fields." + key);
      const std::string family = spec.value("family", "zero");
      if (family != "zero") {
        if (!spec.contains("tau")) {
          spec["tau"] = r.at("tau");
        } else if (std::abs(spec.at("tau").get<double>() - r.at("tau").get<double>()) > 1e-12 * r.at("tau").get<double>()) {
          invalid("fields." + key + ".tau", "differs from the experiment period tau");
        }
      }
      fields[key] = spec;
    }
    r["fields"] = fields;
  }
  for (const char* key : {"step_rule", "exp"}) {
    if (!r.contains(key)) continue;
    checked(key, [&] {
      if (std::string(key) == "exp") return static_cast<int>(exp_method_from_string(r.at(key).get<std::string>()));
      return static_cast<int>(step_rule_from_string(r.at(key).get<std::string>()));
    });
  }
  auto one_of = [&r](const char* key, std::initializer_list<const char*> opts) {
    if (!r.contains(key)) return;
    for (const char* o : opts) {
      if (r.at(key) == o) return;
    }
    invalid(key, "unrecognized value " + r.at(key).dump());
  };
  one_of("probe", {"wave", "adjoint"});
  one_of("initial", {"packet", "localized-eigenvector"});
  one_of("projector", {"identity", "band", "monodromy"});
  one_of("comparison", {"laplacian", "static"});
  if (r.contains("ladder") && kind == "gauge-check") {
    const auto& l = r.at("ladder");
    if (l.empty()) invalid("ladder", "needs at least one entry");
    for (const auto& n : l) {
      if (!n.is_number_integer() || n.get<int>() <= 0) invalid("ladder", "entries must be positive integers");
    }
    const auto& o = r.at("order_range");
    if (o.size() != 2 || !o[0].is_number() || !o[1].is_number()) invalid("order_range", "expected [lo, hi]");
  }
  if (kind == "resolvent-sample") {
    for (std::size_t i = 0; i < r.at("lambdas").size(); ++i) {
      const auto& l = r.at("lambdas")[i];
      if (!l.is_array() || l.size() != 2 || !l[0].is_number() || !l[1].is_number()) {
        invalid("lambdas[" + std::to_string(i) + "]", "expected [re, im]");
      }
    }
    const auto& lad = r.at("ladder");
    if (!lad.empty()) {
      for (const auto& [key, _] : lad.items()) {
        if (key != "re" && key != "eps") invalid("ladder." + key, "unknown key");
      }
      if (!lad.contains("re") || !lad.at("re").is_number()) invalid("ladder.re", "expected a number");
      if (!lad.contains("eps") || !lad.at("eps").is_array() || lad.at("eps").empty()) invalid("ladder.eps", "expected a non-empty array");
      for (const auto& e : lad.at("eps")) {
        if (!e.is_number() || !(e.get<double>() > 0.0)) invalid("ladder.eps", "entries must be positive");
      }
    }
    if (r.at("lambdas").empty() && lad.empty()) invalid("lambdas", "nothing to sample: give lambdas or a ladder");
  }
  if (r.contains("shell") && r.at("shell").get<int>() < 0) invalid("shell", "must be non-negative");
  if (r.contains("dt_sample") && r.at("dt_sample").get<double>() > r.at("t_max").get<double>()) {
    invalid("dt_sample", "exceeds t_max");
  }

  // build everything once so spec errors surface here with their field
  const Setup s = build_setup(r);
  if (r.contains("packet")) {
    const json& pk = r.at("packet");
    for (const auto& [key, _] : pk.items()) {
      if (key != "center" && key != "sigma" && key != "k0") invalid("packet." + key, "unknown key");
    }
    const auto dim = static_cast<std::size_t>(s.lat->positions().cols());
    for (const char* key : {"center", "k0"}) {
      if (pk.contains(key) && (!pk.at(key).is_array() || pk.at(key).size() != dim)) {
        invalid(std::string("packet.") + key, "needs " + std::to_string(dim) + " coordinates");
      }
    }
    if (pk.contains("sigma") && !(pk.at("sigma").is_number() && pk.at("sigma").get<double>() > 0.0)) {
      invalid("packet.sigma", "must be positive");
    }
  }
  if (kind == "gauge-check" || r.value("gauge_compare", false) || r.value("gauge", false)) {
    if (!s.h || !s.h->q()) invalid("fields.q", "required for the gauge transform");
  }
  if (kind == "bands" && !s.p.defects.empty()) invalid("potential.defects", "band structure needs a periodic potential");
  return r;
}

ExperimentResult run_experiment(const json& resolved) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const Setup s = build_setup(resolved);
  const auto t1 = clock::now();
  const std::string kind = resolved.at("kind");
  ExperimentResult out;
  if (kind == "bands") {
    out = run_bands(resolved, s);
  } else if (kind == "quasienergy") {
    out = run_quasienergy(resolved, s);
  } else if (kind == "gauge-check") {
    out = run_gauge(resolved, s);
  } else if (kind == "scattering") {
    out = run_scattering(resolved, s);
  } else if (kind == "time-decaying") {
    out = run_time_decaying(resolved, s);
  } else if (kind == "resolvent-sample") {
    out = run_resolvent(resolved, s);
  } else {
    invalid("kind", "unknown experiment kind '" + kind + "'");
  }
  const auto t2 = clock::now();
  out.kind = kind;
  out.exit_code = exit_for(out.verdict);
  out.summary += verdict_line(out.verdict);
  out.timings = {{"setup_s", std::chrono::duration<double>(t1 - t0).count()},
                 {"run_s", std::chrono::duration<double>(t2 - t1).count()}};
  return out;
}

json make_manifest(const json& resolved, const ExperimentResult& r) {
  json cfg = resolved;
  cfg.erase("_base");
  json files = json::array();
  for (const auto& [name, _] : r.artifacts) files.push_back(name);
  files.push_back("summary.txt");
  return {{"tool", "floqscat"},
          {"versions",
           {{"floqscat", FLOQSCAT_VERSION},
            {"config_schema", kConfigSchemaVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}}},
          {"kind", r.kind},
          {"config", cfg},
          {"threads", thread_count()},
          {"timings", r.timings},
          {"artifacts", files},
          {"verdict", r.verdict},
          {"exit_code", r.exit_code}};
}

void write_outputs(const std::string& dir, const json& manifest, const ExperimentResult& r) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::InvalidArgument, "cannot create output directory " + dir + ": " + ec.message());
  auto put = [&dir](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + (fs::path(dir) / name).string());
    out << text;
  };
  for (const auto& [name, text] : r.artifacts) put(name, text);
  put("summary.txt", r.summary);
  put("manifest.json", manifest.dump(2) + "\n");
}

}  // namespace floqscat
