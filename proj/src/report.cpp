#include "ddtax/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ddtax/engine.hpp"
#include "ddtax/mc.hpp"
#include "ddtax/model.hpp"
#include "ddtax/tax.hpp"

namespace ddtax {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '"') c = ';';
  return s;
}

ProcessModel parse_model(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "levy") {
    LevyModel m;
    m.mu = j.value("mu", 0.0);
    m.sigma = j.value("sigma", 0.0);
    m.lambda = j.value("lambda", 0.0);
    m.eta = j.value("eta", 1.0);
    return m;
  }
  if (family == "diffusion") {
    const std::string kind = j.at("kind").get<std::string>();
    DiffusionModel d;
    if (kind == "bm") {
      const double mu = j.value("mu", 0.0), sg = j.at("sigma").get<double>();
      d.mu = [mu](double) { return mu; };
      d.sigma = [sg](double) { return sg; };
      d.label = "bm-diffusion(mu=" + fmt(mu) + ",sigma=" + fmt(sg) + ")";
    } else if (kind == "ou") {
      const double th = j.at("theta").get<double>(), mu = j.value("mu", 0.0),
                   sg = j.at("sigma").get<double>();
      d.mu = [th, mu](double v) { return th * (mu - v); };
      d.sigma = [sg](double) { return sg; };
      d.label = "ou-diffusion(theta=" + fmt(th) + ",mu=" + fmt(mu) +
                ",sigma=" + fmt(sg) + ")";
    } else if (kind == "cir") {
      const double th = j.at("theta").get<double>(), mu = j.value("mu", 0.0),
                   sg = j.at("sigma").get<double>();
      d.mu = [th, mu](double v) { return th * (mu - v); };
      d.sigma = [sg](double v) { return sg * std::sqrt(std::max(v, 0.0)); };
      d.label = "cir-diffusion(theta=" + fmt(th) + ",mu=" + fmt(mu) +
                ",sigma=" + fmt(sg) + ")";
    } else {
      throw std::invalid_argument("config: unknown diffusion kind '" + kind +
                                  "' (bm, ou, cir)");
    }
    return d;
  }
  if (family == "oujump") {
    OUJumpModel m;
    m.theta = j.at("theta").get<double>();
    m.mu = j.value("mu", 0.0);
    m.sigma = j.at("sigma").get<double>();
    m.lambda = j.at("lambda").get<double>();
    m.eta = j.at("eta").get<double>();
    return m;
  }
  throw std::invalid_argument("config: unknown model family '" + family +
                              "' (levy, diffusion, oujump)");
}

DrawdownBoundary parse_boundary(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ruin") return DrawdownBoundary::ruin();
  if (kind == "classic")
    return DrawdownBoundary::classic(j.at("d").get<double>());
  if (kind == "proportional")
    return DrawdownBoundary::proportional(j.at("xi").get<double>());
  if (kind == "affine")
    return DrawdownBoundary::affine(j.at("xi").get<double>(),
                                    j.at("d").get<double>());
  if (kind == "tabulated")
    return DrawdownBoundary::tabulated(j.at("m").get<std::vector<double>>(),
                                       j.at("f").get<std::vector<double>>());
  throw std::invalid_argument("config: unknown boundary kind '" + kind + "'");
}

TaxSchedule parse_tax(const json& j) {
  if (j.is_null()) return TaxSchedule::none();
  const std::string kind = j.value("kind", "none");
  if (kind == "none") return TaxSchedule::none();
  if (kind == "constant") return TaxSchedule::constant(j.at("rate").get<double>());
  if (kind == "piecewise")
    return TaxSchedule::piecewise_constant(
        j.at("breaks").get<std::vector<double>>(),
        j.at("values").get<std::vector<double>>());
  if (kind == "tabulated")
    return TaxSchedule::tabulated(j.at("m").get<std::vector<double>>(),
                                  j.at("rate").get<std::vector<double>>());
  throw std::invalid_argument("config: unknown tax kind '" + kind + "'");
}

struct JobContext {
  ProcessModel model;
  DrawdownBoundary boundary;
  TaxSchedule tax;
  Interval domain{0.0, 0.0};
  EngineConfig engine;
  FactoryOptions factory;
  // mc block
  bool mc_enabled = true;
  McConfig mc;
  double allowance = 0.01;
};

double query_K(const json& q) {
  const json& K = q.at("K");
  if (K.is_string()) {
    const std::string s = K.get<std::string>();
    if (s == "inf" || s == "infinity")
      return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("config: K must be a number or \"inf\"");
  }
  return K.get<double>();
}

Interval derive_domain(const json& cfg, const DrawdownBoundary& f) {
  if (cfg.contains("domain")) {
    const json& d = cfg.at("domain");
    return {d.at("lo").get<double>(), d.at("hi").get<double>()};
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  auto fold = [&](const json& q) {
    const double x = q.at("x").get<double>();
    const double K = query_K(q);
    lo = std::min(lo, x);
    if (!std::isfinite(K))
      throw std::invalid_argument(
          "config: a domain block is required when K is infinite");
    hi = std::max(hi, K);
  };
  if (cfg.contains("queries"))
    for (const json& q : cfg.at("queries")) fold(q);
  if (cfg.contains("table")) {
    const json& t = cfg.at("table");
    lo = std::min(lo, t.at("x").get<double>());
    hi = std::max(hi, t.at("grid").at("to").get<double>());
  }
  if (!(hi > lo))
    throw std::invalid_argument("config: could not derive a working domain");
  // Leave room below for the boundary: size by its value at the low edge.
  const double f_lo = boundary_floor(f, lo);
  const double pad = 0.05 * (hi - lo) + 1e-3;
  return {std::min(lo, f_lo) - pad, hi + pad};
}

// Running maxima start at the lowest query level and climb to the top of the
// working domain; the boundary and tax schedule are only evaluated there,
// never at the padded bottom.
Interval maxima_interval(const json& cfg, Interval domain) {
  double lo = domain.hi;
  bool have_x = false;
  if (cfg.contains("queries"))
    for (const json& q : cfg.at("queries")) {
      lo = std::min(lo, q.at("x").get<double>());
      have_x = true;
    }
  if (cfg.contains("table")) {
    lo = std::min(lo, cfg.at("table").at("x").get<double>());
    have_x = true;
  }
  return {have_x ? lo : domain.lo, domain.hi};
}

JobContext make_context(const json& cfg, const ReportOptions& opt) {
  JobContext c;
  c.model = parse_model(cfg.at("model"));
  c.boundary = parse_boundary(cfg.at("boundary"));
  c.tax = cfg.contains("tax") ? parse_tax(cfg.at("tax")) : TaxSchedule::none();
  c.domain = derive_domain(cfg, c.boundary);
  if (cfg.contains("engine")) {
    const json& e = cfg.at("engine");
    c.engine.abs_tol = e.value("abs_tol", c.engine.abs_tol);
    c.engine.tail_tol = e.value("tail_tol", c.engine.tail_tol);
  }
  if (cfg.contains("mc")) {
    const json& m = cfg.at("mc");
    c.mc_enabled = m.value("enabled", true);
    c.mc.n_paths = m.value("paths", c.mc.n_paths);
    c.mc.dt = m.value("dt", c.mc.dt);
    c.mc.t_max = m.value("t_max", c.mc.t_max);
    c.mc.seed = m.value("seed", c.mc.seed);
    c.allowance = m.value("allowance", c.allowance);
  }
  if (opt.seed_override) c.mc.seed = *opt.seed_override;
  if (!opt.mc_enabled) c.mc_enabled = false;
  c.mc.jobs = opt.jobs;
  c.mc.parallel = !opt.force_serial;

  validate_model(c.model);
  std::ostringstream issues;
  const Interval max_iv = maxima_interval(cfg, c.domain);
  const ValidationReport vb = validate_boundary(c.boundary, max_iv);
  for (const auto& i : vb.issues)
    issues << "boundary: " << i.what << " (at " << fmt(i.where) << ")\n";
  const ValidationReport vt = validate_tax(c.tax, max_iv);
  for (const auto& i : vt.issues)
    issues << "tax: " << i.what << " (at " << fmt(i.where) << ")\n";
  if (!vb.ok || !vt.ok)
    throw std::invalid_argument("config validation failed:\n" + issues.str());
  return c;
}

enum class Functional {
  Exit,
  Law,
  Density,
  TaxExit,
  TaxLaw,
  TaxEpvEither,
  TaxEpvUpper,
};

Functional parse_functional(const std::string& s) {
  if (s == "exit") return Functional::Exit;
  if (s == "law") return Functional::Law;
  if (s == "density") return Functional::Density;
  if (s == "tax_exit") return Functional::TaxExit;
  if (s == "tax_law") return Functional::TaxLaw;
  if (s == "tax_epv_until_either") return Functional::TaxEpvEither;
  if (s == "tax_epv_on_upper_exit") return Functional::TaxEpvUpper;
  throw std::invalid_argument("config: unknown functional '" + s + "'");
}

bool is_taxed(Functional f) {
  return f == Functional::TaxExit || f == Functional::TaxLaw ||
         f == Functional::TaxEpvEither || f == Functional::TaxEpvUpper;
}

struct RowResult {
  double analytic = 0.0;
  double quad_error = 0.0;
  bool extrapolated = false;
};

RowResult eval_row(const JobContext& c, const ParamsFactory& factory,
                   Functional fn, const FunctionalQuery& fq) {
  switch (fn) {
    case Functional::Exit: {
      const ExitParams p = factory(c.boundary, fq.q, 0.0);
      const EngineResult e = exit_transform(p, fq.x, fq.K, c.engine);
      return {e.value, e.quad_error, e.extrapolated};
    }
    case Functional::Law: {
      const ExitParams p = factory(c.boundary, fq.q, fq.s);
      const EngineResult e = drawdown_law(p, fq.x, fq.K, c.engine);
      return {e.value, e.quad_error, e.extrapolated};
    }
    case Functional::Density: {
      const ExitParams p = factory(c.boundary, fq.q, fq.s);
      const EngineResult e = drawdown_density(p, fq.x, fq.K, c.engine);
      return {e.value, e.quad_error, e.extrapolated};
    }
    default:
      break;
  }
  TaxSetup st{c.model, c.boundary, c.tax, fq.x, c.factory, c.engine};
  TaxValue v;
  switch (fn) {
    case Functional::TaxExit:
      v = tax_exit(st, fq.q, fq.K);
      break;
    case Functional::TaxLaw:
      v = tax_drawdown_law(st, fq.q, fq.s, fq.K);
      break;
    case Functional::TaxEpvEither:
      v = tax_epv(st, fq.q, fq.K, TaxEpvMode::UntilEither);
      break;
    default:
      v = tax_epv(st, fq.q, fq.K, TaxEpvMode::OnUpperExit);
      break;
  }
  return {v.value, v.quad_error, v.extrapolated};
}

bool mc_comparable(Functional f, const FunctionalQuery& fq) {
  if (f == Functional::Density) return false;
  return std::isfinite(fq.K);
}

McEstimate pick_estimate(const McFunctionals& mf, Functional f) {
  switch (f) {
    case Functional::Exit:
    case Functional::TaxExit:
      return mf.g;
    case Functional::Law:
    case Functional::TaxLaw:
      return mf.h;
    case Functional::TaxEpvEither:
      return mf.epv;
    case Functional::TaxEpvUpper:
      return mf.epv_upper;
    default:
      return {};
  }
}

void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << body;
}

}  // namespace

RunSummary run_report(const std::string& config_text, const ReportOptions& opt,
                      std::ostream& log) {
  const json cfg = json::parse(config_text);
  const JobContext c = make_context(cfg, opt);
  const ParamsFactory factory =
      make_params_factory(c.model, c.domain, c.factory);

  std::ostringstream csv;
  csv << "#schema=ddtax.report.v1\n";
  csv << "functional,x,K,q,s,analytic,quad_error,extrapolated,"
         "mc_mean,mc_se,mc_n,abs_diff,tolerance,status,error\n";

  RunSummary sum;
  for (const json& qj : cfg.at("queries")) {
    ++sum.rows;
    std::string fname = "?";
    FunctionalQuery fq;
    std::string status = "ok", error;
    RowResult rr;
    McEstimate est{};
    std::size_t mc_n = 0;
    double diff = 0.0, tol = 0.0;
    // a malformed row becomes an error row; the rest of the report still runs
    try {
      fname = qj.at("functional").get<std::string>();
      const Functional fn = parse_functional(fname);
      fq.x = qj.at("x").get<double>();
      fq.K = query_K(qj);
      fq.q = qj.value("q", 0.0);
      fq.s = qj.value("s", 0.0);
      validate_query(fq);
      rr = eval_row(c, factory, fn, fq);
      if (c.mc_enabled && mc_comparable(fn, fq)) {
        const TaxSchedule sched = is_taxed(fn) ? c.tax : TaxSchedule::none();
        const McFunctionals mf =
            mc_functionals(c.model, c.boundary, sched, fq, c.mc);
        est = pick_estimate(mf, fn);
        mc_n = mf.n;
        diff = std::abs(rr.analytic - est.mean);
        tol = std::max(3.0 * est.se, c.allowance);
        status = diff <= tol ? "pass" : "fail";
        if (status == "fail") ++sum.failures;
      } else {
        status = "skip";
      }
    } catch (const std::exception& e) {
      status = "error";
      error = e.what();
      ++sum.failures;
    }

    csv << fname << ',' << fmt(fq.x) << ',' << fmt(fq.K) << ',' << fmt(fq.q)
        << ',' << fmt(fq.s) << ',' << fmt(rr.analytic) << ','
        << fmt(rr.quad_error) << ',' << (rr.extrapolated ? 1 : 0) << ',';
    if (mc_n > 0)
      csv << fmt(est.mean) << ',' << fmt(est.se) << ',' << mc_n << ','
          << fmt(diff) << ',' << fmt(tol);
    else
      csv << ",,,,";
    csv << ',' << status << ',' << csv_safe(error) << '\n';
    log << "[" << status << "] " << fname << " x=" << fmt(fq.x)
        << " K=" << fmt(fq.K) << " q=" << fmt(fq.q) << " s=" << fmt(fq.s);
    if (status == "pass" || status == "fail")
      log << " analytic=" << fmt(rr.analytic) << " mc=" << fmt(est.mean)
          << " tol=" << fmt(tol);
    if (!error.empty()) log << " error=" << error;
    log << "\n";
  }

  std::filesystem::path dir(opt.out_dir.empty() ? "." : opt.out_dir);
  std::filesystem::create_directories(dir);
  const std::string name =
      cfg.contains("output") ? cfg.at("output").value("csv", "report.csv")
                             : std::string("report.csv");
  const std::filesystem::path out = dir / name;
  write_file(out, csv.str());
  sum.outputs.push_back(out.string());
  log << "wrote " << out.string() << " (" << sum.rows << " rows, "
      << sum.failures << " failures)\n";
  return sum;
}

RunSummary run_table(const std::string& config_text, const ReportOptions& opt,
                     std::ostream& log) {
  const json cfg = json::parse(config_text);
  const JobContext c = make_context(cfg, opt);
  const ParamsFactory factory =
      make_params_factory(c.model, c.domain, c.factory);
  const json& t = cfg.at("table");
  const std::string fname = t.at("functional").get<std::string>();
  const Functional fn = parse_functional(fname);
  if (fn != Functional::Exit && fn != Functional::Law)
    throw std::invalid_argument("table: functional must be exit or law");
  const double x = t.at("x").get<double>();
  const double q = t.value("q", 0.0), s = t.value("s", 0.0);
  const json& grid = t.at("grid");
  const double from = grid.at("from").get<double>(),
               to = grid.at("to").get<double>();
  const int n = grid.at("n").get<int>();
  if (n < 2 || !(to > from) || !(from >= x))
    throw std::invalid_argument("table: need n >= 2 and x <= from < to");
  std::vector<double> Ks(n);
  for (int i = 0; i < n; ++i)
    Ks[static_cast<std::size_t>(i)] = from + (to - from) * i / (n - 1);

  const ExitParams p = factory(c.boundary, q, s);
  const std::vector<EngineResult> vals =
      fn == Functional::Exit ? exit_transform_curve(p, x, Ks, c.engine)
                             : drawdown_law_curve(p, x, Ks, c.engine);

  std::ostringstream csv;
  csv << "#schema=ddtax.table.v1\n";
  csv << "K," << fname << ",quad_error,extrapolated\n";
  for (std::size_t i = 0; i < Ks.size(); ++i)
    csv << fmt(Ks[i]) << ',' << fmt(vals[i].value) << ','
        << fmt(vals[i].quad_error) << ',' << (vals[i].extrapolated ? 1 : 0)
        << '\n';

  std::filesystem::path dir(opt.out_dir.empty() ? "." : opt.out_dir);
  std::filesystem::create_directories(dir);
  const std::string name =
      cfg.contains("output") ? cfg.at("output").value("csv", "table.csv")
                             : std::string("table.csv");
  const std::filesystem::path out = dir / name;
  write_file(out, csv.str());
  RunSummary sum;
  sum.rows = n;
  sum.outputs.push_back(out.string());
  log << "wrote " << out.string() << " (" << n << " levels)\n";
  return sum;
}

int run_validate(const std::string& config_text, std::ostream& log) {
  const json cfg = json::parse(config_text);
  const ProcessModel model = parse_model(cfg.at("model"));
  const DrawdownBoundary boundary = parse_boundary(cfg.at("boundary"));
  const TaxSchedule tax =
      cfg.contains("tax") ? parse_tax(cfg.at("tax")) : TaxSchedule::none();
  int bad = 0;
  try {
    validate_model(model);
    log << "model: ok (" << model_label(model) << ")\n";
  } catch (const std::exception& e) {
    log << "model: " << e.what() << "\n";
    ++bad;
  }
  Interval domain{};
  try {
    domain = derive_domain(cfg, boundary);
    log << "domain: [" << fmt(domain.lo) << ", " << fmt(domain.hi) << "]\n";
  } catch (const std::exception& e) {
    log << "domain: " << e.what() << "\n";
    return bad + 1;
  }
  const Interval max_iv = maxima_interval(cfg, domain);
  const ValidationReport vb = validate_boundary(boundary, max_iv);
  if (vb.ok) {
    log << "boundary: ok (" << boundary_label(boundary) << ")\n";
  } else {
    for (const auto& i : vb.issues)
      log << "boundary: " << i.what << " (at " << fmt(i.where) << ")\n";
    ++bad;
  }
  const ValidationReport vt = validate_tax(tax, max_iv);
  if (vt.ok) {
    log << "tax: ok (" << tax_label(tax) << ")\n";
  } else {
    for (const auto& i : vt.issues)
      log << "tax: " << i.what << " (at " << fmt(i.where) << ")\n";
    ++bad;
  }
  return bad;
}

}  // namespace ddtax
