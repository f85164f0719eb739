#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aniso/aniso.hpp"
#include "experiment_config.hpp"

namespace fs = std::filesystem;
using namespace aniso;
using aniso::cli::ExperimentConfig;

namespace {

enum Status { kOk = 0, kPrecondition = 1, kUsage = 2 };

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Outputs {
 public:
  Outputs(fs::path dir, bool plot) : dir_(std::move(dir)), plot_(plot) { fs::create_directories(dir_); }

  void csv(const std::string& stem, const report::CsvTable& t) const { write(stem + ".csv", t.str()); }
  void chart(const std::string& stem, const report::Chart& c) const {
    if (plot_) write(stem + ".svg", report::render_svg(c));
  }

 private:
  void write(const std::string& name, const std::string& body) const {
    auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    out.close();
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    std::cout << "wrote " << path.string() << '\n';
  }
  fs::path dir_;
  bool plot_;
};

std::vector<Point> sample_domain(const DomainSpec& D, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Box b = D.bounding_box();
  std::vector<Point> out;
  while (static_cast<int>(out.size()) < n) {
    Point x(D.dim());
    for (int j = 0; j < D.dim(); ++j) x[j] = std::uniform_real_distribution<double>(b.lo[j], b.hi[j])(rng);
    if (D.contains(x)) out.push_back(x);
  }
  return out;
}

/// Prints the report summary and turns a failed rate condition into a nonzero status.
int rate_summary(const RateReport& r) {
  std::cout << "predicted exponent: " << num(r.predicted_exponent) << '\n'
            << "fitted slope: " << num(r.fitted_slope) << " (rms residual " << num(r.fit_residual) << ")\n";
  if (r.exact) std::cout << "errors are at round-off level; the slope is not meaningful\n";
  if (!r.condition_holds) {
    std::cerr << "error: " << r.note << '\n';
    return kPrecondition;
  }
  return kOk;
}

report::Series series(std::string label, std::vector<double> x, std::vector<double> y) {
  return {std::move(label), std::move(x), std::move(y)};
}

// ---------------------------------------------------------------------------

int check_domain(const ExperimentConfig& e, const Outputs& out) {
  auto mode = e.mode == "wide" ? AlphaMode::wide : AlphaMode::narrow;
  CertifyOptions opt;
  opt.seed = e.seed;
  auto r = verify_alpha_type(e.domain, e.profile, e.spline_order(), e.k_max, mode, opt);
  std::cout << "domain: " << e.domain_path.string() << '\n'
            << "mode: " << e.mode << '\n'
            << "passes: " << (r.passes ? "yes" : "no") << '\n';
  if (r.passes) {
    std::cout << "K0 = " << r.K0 << '\n' << "Gamma0 = " << to_string(r.Gamma0) << '\n' << "c0 = " << num(r.c0) << '\n';
    if (mode == AlphaMode::wide) std::cout << "sublevel = " << r.sublevel << '\n';
  } else {
    std::cout << "witness: " << r.witness << '\n';
  }
  out.csv("alpha_type", report::alpha_type_table(r));
  std::vector<double> k, c0;
  for (const auto& lv : r.levels)
    if (lv.passes) k.push_back(static_cast<double>(lv.k)), c0.push_back(lv.c0);
  out.chart("alpha_type", {"chain constant per level", "k", "c0", false, false, {series("c0", k, c0)}});
  if (!r.passes) {
    std::cerr << "error: domain is not of alpha-type: " << r.witness << '\n';
    return kPrecondition;
  }
  return kOk;
}

int approx_rate(const ExperimentConfig& e, const Outputs& out) {
  RateOptions opt{.lambda = e.lambda, .p = e.p, .q = e.q,
                  .op = e.operator_name == "stepped" ? RateOperator::stepped : RateOperator::quasi_interpolant,
                  .k_min = e.k_min, .k_max = e.k_max, .m = e.m, .nodes = e.error_nodes, .extra_levels = e.extra_levels};
  auto family = cli::make_family(e);
  auto r = rate_experiment(family, e.domain, e.profile, opt);
  out.csv("approx_rate", report::rate_table(r));
  std::vector<double> k, err;
  for (const auto& pt : r.points) k.push_back(static_cast<double>(pt.k)), err.push_back(pt.error);
  out.chart("approx_rate", {"approximation error", "k", "error", false, true, {series("error", k, err)}});
  return rate_summary(r);
}

int recover_rate(const ExperimentConfig& e, const Outputs& out) {
  RateOptions opt{.lambda = e.lambda, .p = e.p, .q = e.q, .k_min = e.k_min, .k_max = e.k_max, .m = e.m,
                  .nodes = e.error_nodes, .extra_levels = e.extra_levels};
  auto family = cli::make_family(e);
  auto r = recovery_experiment(family, e.domain, e.profile, opt);
  out.csv("recover_rate", report::recovery_table(r));
  std::vector<double> n, err;
  for (const auto& pt : r.points) n.push_back(pt.n), err.push_back(pt.error);
  out.chart("recover_rate", {"recovery error", "samples", "error", true, true, {series("error", n, err)}});
  return rate_summary(r);
}

int stechkin(const ExperimentConfig& e, const Outputs& out) {
  StechkinOptions opt{.lambda = e.lambda, .p = e.p, .q = e.q, .s = e.s, .k_min = e.k_min, .k_max = e.k_max,
                      .m = e.m, .seed = e.seed, .probes = e.probes, .nodes = e.error_nodes,
                      .extra_levels = e.extra_levels};
  std::vector<double> rhos = e.rho;
  if (rhos.empty()) {
    double rho0 = 1.01 * norm_proxy(e.domain, e.profile, e.spline_order(), e.lambda, e.q, e.s, e.rho_level, e.seed,
                                    e.probes, e.error_nodes, e.extra_levels);
    for (int i = 0; i < e.rho_count; ++i) rhos.push_back(rho0 * std::exp2(i));
  }
  auto family = cli::make_family(e);
  auto r = stechkin_experiment(family, e.domain, e.profile, rhos, opt);
  out.csv("stechkin", report::stechkin_table(r));
  std::vector<double> rho, err;
  for (const auto& pt : r.points) rho.push_back(pt.rho), err.push_back(pt.error);
  out.chart("stechkin", {"error against operator-norm budget", "rho", "error", true, true, {series("error", rho, err)}});
  std::cout << "gamma = " << num(r.gamma) << ", tau = " << num(r.tau) << '\n'
            << "predicted slope: " << num(r.predicted_slope) << '\n'
            << "fitted slope: " << num(r.fitted_slope) << " (rms residual " << num(r.fit_residual) << ")\n";
  return kOk;
}

int extend_norm(const ExperimentConfig& e, const Outputs& out) {
  const auto m = e.spline_order();
  CertifyOptions copt;
  copt.seed = e.seed;
  auto cert = verify_alpha_type(e.domain, e.profile, m, e.k_max, AlphaMode::narrow, copt);
  if (!cert.passes) {
    std::cerr << "error: domain is not of alpha-type: " << cert.witness << '\n';
    return kPrecondition;
  }
  const auto sp = e.space();
  auto family = cli::make_family(e);
  auto points = sample_domain(e.domain, e.residual_samples, e.seed);
  report::CsvTable t({"field", "k_max", "source_norm", "extension_norm", "ratio", "restriction_residual"});
  report::Chart chart{"extension norm ratio", "k_max", "ratio", false, false, {}};
  for (std::size_t i = 0; i < family.size(); ++i) {
    double source = besov_norm(family[i], e.domain, sp, e.quadrature);
    std::vector<double> ks, ratios;
    for (long long k = std::max(e.k_min, cert.K0); k <= e.k_max; ++k) {
      auto ext = extend(family[i], e.domain, e.profile, m, k, cert);
      auto q = quasi_interpolant(family[i], e.domain, e.profile, m, k);
      double residual = 0;
      for (const auto& x : points) residual = std::max(residual, std::abs(ext.value(x) - q.value(x)));
      Box b = ext.support_box();
      for (int j = 0; j < b.dim(); ++j) b.lo[j] -= e.extension_pad, b.hi[j] += e.extension_pad;
      double norm = besov_norm(ext.field(), DomainSpec::from_boxes({b}), sp, e.quadrature);
      t.add({static_cast<long long>(i), k, source, norm, norm / source, residual});
      ks.push_back(static_cast<double>(k));
      ratios.push_back(norm / source);
    }
    chart.series.push_back(series("field " + std::to_string(i), ks, ratios));
  }
  out.csv("extend_norm", t);
  out.chart("extend_norm", chart);
  return kOk;
}

int moduli(const ExperimentConfig& e, const Outputs& out) {
  auto family = cli::make_family(e);
  report::CsvTable t({"field", "axis", "order", "t", "omega", "omega_prime"});
  report::Chart chart{"moduli of continuity", "t", "modulus", true, true, {}};
  for (std::size_t i = 0; i < family.size(); ++i)
    for (int j = 0; j < e.domain.dim(); ++j) {
      int l = static_cast<int>(e.profile.l()[j]);
      auto sup = sup_modulus_profile(family[i], e.domain, j, l, e.p, e.quadrature);
      auto avg = averaged_modulus_profile(family[i], e.domain, j, l, e.p, e.quadrature);
      std::vector<double> ts, w, wp;
      for (int k = avg.i_lo; k <= avg.i_hi; ++k) {
        t.add({static_cast<long long>(i), j, l, avg.t(k), sup.at(k), avg.at(k)});
        ts.push_back(avg.t(k));
        w.push_back(sup.at(k));
        wp.push_back(avg.at(k));
      }
      std::string tag = "f" + std::to_string(i) + " axis " + std::to_string(j);
      chart.series.push_back(series(tag + " sup", ts, w));
      chart.series.push_back(series(tag + " avg", ts, wp));
    }
  out.csv("moduli", t);
  out.chart("moduli", chart);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic B-spline approximation experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".";
  bool plot = false;
  std::optional<std::uint64_t> seed;
  std::optional<long long> k_min, k_max;
  app.add_option("--config", config_path, "experiment config (key = value)")->required();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_flag("--plot", plot, "also write an SVG chart per report");
  app.add_option("--seed", seed, "seed for randomized probes and sampling");
  app.add_option("--k-min", k_min, "first level");
  app.add_option("--k-max", k_max, "last level");

  using Runner = int (*)(const ExperimentConfig&, const Outputs&);
  const std::vector<std::tuple<const char*, const char*, Runner>> commands{
      {"check-domain", "certify the domain as alpha-type and report K0, c0", check_domain},
      {"approx-rate", "error of the quasi-interpolant across levels", approx_rate},
      {"recover-rate", "derivative recovery error against sample count", recover_rate},
      {"stechkin", "error against operator-norm budget", stechkin},
      {"extend-norm", "Besov norm of the extension relative to the source", extend_norm},
      {"moduli", "sup and averaged moduli of continuity on the t-grid", moduli},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kOk : kUsage;
  }

  try {
    auto e = cli::make_experiment(cli::KeyValueConfig::load(config_path));
    if (seed) e.seed = *seed;
    if (k_min) e.k_min = *k_min;
    if (k_max) e.k_max = *k_max;
    if (e.k_min > e.k_max) throw ParseError("k_min exceeds k_max", 0);
    Outputs out(out_dir, plot);
    for (const auto& [name, help, fn] : commands)
      if (app.got_subcommand(name)) return fn(e, out);
  } catch (const ParseError& err) {
    std::cerr << config_path << ": " << err.what() << '\n';
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kPrecondition;
  }
  return kUsage;
}
