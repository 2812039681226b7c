// pluginfdr: command-line front end.
//
//   pluginfdr estimate --pvalues p.csv --estimator storey [--adjust du --supports s.json]
//   pluginfdr bh --pvalues p.csv --alpha 0.05 [--estimator SPEC --adjust ...]
//   pluginfdr fet --input tables.csv --alternative two-sided --emit-supports s.json
//   pluginfdr simulate gaussian|fet|dirac|analytic --config cfg.json --out report.csv
//   pluginfdr verify imc|orders|bounds|pc-compare --seed 1 --out verify.csv
//
// Exit codes: 0 success, 1 input error, 2 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <pluginfdr/pluginfdr.hpp>
#include <pluginfdr/verify.hpp>

namespace pf = pluginfdr;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitVerify = 2;

struct Common {
  std::string pvalues;
  std::string supports;
  std::vector<std::string> estimators;
  std::string adjust = "none";
  std::size_t rand_reps = pf::kDefaultRandReps;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out = "-";
  bool no_guarantee = false;
};

unsigned worker_count(unsigned requested) { return requested ? requested : pf::default_worker_count(); }

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const std::string& what) {
  if (!seed) throw pf::InputError(what + " is randomized; pass --seed");
  return *seed;
}

pf::PValueVector load_pvalues(const Common& c, bool need_supports) {
  if (need_supports && c.supports.empty()) {
    throw pf::InputError("adjustment '" + c.adjust + "' requires --supports");
  }
  if (c.supports.empty()) return pf::io::read_pvalues(c.pvalues, nullptr);
  const auto supports = pf::io::read_supports(c.supports);
  return pf::io::read_pvalues(c.pvalues, &supports);
}

struct Estimated {
  pf::EstimateResult result;
  double mc_se = 0.0;
};

Estimated run_estimator(const pf::EstimatorSpec& spec, pf::Adjustment adj, const pf::PValueVector& pv,
                        const Common& c) {
  if (adj != pf::Adjustment::rand) return {pf::apply_adjustment(spec, adj, pv), 0.0};
  pf::RandomizeOptions opt;
  opt.replications = c.rand_reps;
  opt.seed = require_seed(c.seed, "--adjust rand");
  opt.workers = worker_count(c.threads);
  opt.allow_no_guarantee = c.no_guarantee;
  const auto r = pf::adjust_randomized(spec, pv, opt);
  // Delta-method SE of 1/mean(1/m̂0).
  const double se = r.reciprocal_se / (r.reciprocal_mean * r.reciprocal_mean);
  return {r.estimate, se};
}

void add_common(CLI::App* cmd, Common& c, bool estimator_required) {
  cmd->add_option("--pvalues,-p", c.pvalues, "p-value CSV (column p; optional support_index, is_null)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--supports", c.supports, "null supports JSON")->check(CLI::ExistingFile);
  auto* est = cmd->add_option("--estimator,-e", c.estimators,
                              "estimator spec: JSON, JSON file, or kind name (storey, pc_new, ...); repeatable");
  if (estimator_required) est->required();
  cmd->add_option("--adjust", c.adjust, "discrete adjustment")
      ->check(CLI::IsMember({"none", "du", "mid", "rand"}));
  cmd->add_option("--rand-reps", c.rand_reps, "replications of the randomized adjustment")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "seed for randomized paths");
  cmd->add_option("--threads", c.threads, "worker threads (default: PLUGIN_FDR_THREADS or all cores)");
  cmd->add_option("--out,-o", c.out, "output CSV ('-' for stdout)");
  cmd->add_flag("--allow-no-guarantee", c.no_guarantee, "permit randomizing legacy PC or PC-ZZD");
}

int cmd_estimate(const Common& c) {
  const auto adj = pf::parse_adjustment(c.adjust);
  const auto pv = load_pvalues(c, adj != pf::Adjustment::none);
  std::string out = "estimator,adjustment,m,m0_hat,pi0_hat_raw,pi0_hat,mc_se,seed,warnings\n";
  for (const auto& arg : c.estimators) {
    for (const auto& spec : pf::io::parse_estimators(arg)) {
      const auto e = run_estimator(spec, adj, pv, c);
      std::string warn;
      for (const auto& w : e.result.warnings) warn += (warn.empty() ? "" : "; ") + w;
      out += pf::io::csv_field(spec.id()) + "," + c.adjust + "," + std::to_string(pv.size()) + "," +
             pf::io::fmt(e.result.m0_hat) + "," + pf::io::fmt(e.result.pi0_hat_raw) + "," +
             pf::io::fmt(e.result.pi0_hat) + "," + pf::io::fmt(e.mc_se) + "," +
             (c.seed ? std::to_string(*c.seed) : "") + "," + pf::io::csv_field(warn) + "\n";
    }
  }
  pf::io::write_file(c.out, out);
  return kExitOk;
}

int cmd_bh(const Common& c, double alpha) {
  const auto adj = pf::parse_adjustment(c.adjust);
  const auto pv = load_pvalues(c, adj != pf::Adjustment::none);
  double m0_hat = static_cast<double>(pv.size());
  if (!c.estimators.empty()) {
    const auto specs = pf::io::parse_estimators(c.estimators.front());
    if (c.estimators.size() != 1 || specs.size() != 1) throw pf::InputError("bh takes a single estimator");
    m0_hat = run_estimator(specs.front(), adj, pv, c).result.m0_hat;
  } else if (adj != pf::Adjustment::none) {
    throw pf::InputError("--adjust needs --estimator");
  }
  const auto r = pf::bh_stepup(pv, alpha, m0_hat);
  std::vector<char> rejected(pv.size(), 0);
  for (std::size_t i : r.rejected) rejected[i] = 1;
  const double pi0_hat = m0_hat / static_cast<double>(pv.size());
  std::string out = "index,p,rejected,threshold,m0_hat,pi0_hat\n";
  for (std::size_t i = 0; i < pv.size(); ++i) {
    out += std::to_string(i) + "," + pf::io::fmt(pv[i]) + "," + (rejected[i] ? "1" : "0") + "," +
           pf::io::fmt(r.threshold) + "," + pf::io::fmt(m0_hat) + "," + pf::io::fmt(pi0_hat) + "\n";
  }
  pf::io::write_file(c.out, out);
  std::cerr << "rejections: " << r.k_hat << "\n";
  return kExitOk;
}

int cmd_fet(const std::string& input, const std::string& alternative, const std::string& emit,
            const std::string& out_path) {
  const auto alt = alternative == "greater" ? pf::Alternative::greater : pf::Alternative::two_sided;
  const auto tables = pf::io::parse_tables(pf::io::read_file(input));
  std::vector<pf::DiscreteNullDistribution> supports;
  std::string out = "p\n";
  for (const auto& t : tables) {
    auto r = pf::fisher_exact(t, alt);
    out += pf::io::fmt(r.p) + "\n";
    supports.push_back(std::move(r.support));
  }
  pf::io::write_file(out_path, out);
  if (!emit.empty()) pf::io::write_file(emit, pf::io::format_supports(supports));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

std::vector<double> number_list(const json& cfg, const char* key, double fallback) {
  if (!cfg.contains(key)) return {fallback};
  const auto& v = cfg.at(key);
  if (v.is_array()) return v.get<std::vector<double>>();
  return {v.get<double>()};
}

std::vector<pf::MethodSpec> methods_from(const json& cfg, std::vector<std::string> default_adjust,
                                         std::size_t rand_reps) {
  std::vector<pf::EstimatorSpec> specs;
  if (cfg.contains("estimators")) {
    for (const auto& j : cfg.at("estimators")) specs.push_back(pf::io::estimator_from_json(j));
  } else {
    specs = {pf::EstimatorSpec::storey(0.5), pf::EstimatorSpec::pc_new(), pf::EstimatorSpec::poly(2.0, 0.5)};
  }
  auto adjustments = cfg.value("adjustments", default_adjust);
  std::vector<pf::MethodSpec> methods;
  if (cfg.value("include_bh", true)) methods.push_back(pf::MethodSpec::plain_bh());
  if (cfg.value("include_oracle", true)) methods.push_back(pf::MethodSpec::oracle());
  for (const auto& s : specs) {
    for (const auto& a : adjustments) methods.push_back(pf::MethodSpec::of(s, pf::parse_adjustment(a), rand_reps));
  }
  return methods;
}

std::uint64_t config_seed(const json& cfg, const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
  throw pf::InputError("simulation is randomized; give \"seed\" in the config or pass --seed");
}

int cmd_simulate(const std::string& kind, const std::string& config_path, const std::string& out_path,
                 const std::optional<std::uint64_t>& seed_flag, unsigned threads) {
  json cfg = json::object();
  if (!config_path.empty()) {
    try {
      cfg = json::parse(pf::io::read_file(config_path));
    } catch (const json::exception& e) {
      throw pf::InputError(std::string("config: ") + e.what());
    }
  }
  const unsigned workers = worker_count(threads);
  std::vector<pf::ExperimentReport> reports;
  try {
    if (kind == "analytic") {
      const auto m = cfg.value("m", std::size_t{10000});
      std::vector<pf::EstimatorSpec> specs;
      if (cfg.contains("estimators")) {
        for (const auto& j : cfg.at("estimators")) specs.push_back(pf::io::estimator_from_json(j));
      } else {
        specs = {pf::EstimatorSpec::pc_new(), pf::EstimatorSpec::storey(0.5), pf::EstimatorSpec::poly(2.0, 0.5)};
      }
      std::string out = "config_point,estimator,bias,variance,mse\n";
      for (double mu : number_list(cfg, "mu", 1.5)) {
        for (double pi0 : number_list(cfg, "pi0", 0.6)) {
          const auto m0 = pf::m0_from_pi0(m, pi0);
          char point[96];
          std::snprintf(point, sizeof point, "analytic:m=%zu;m0=%zu;mu=%g", m, m0, mu);
          for (const auto& s : specs) {
            const auto g = s.homogeneous_transform();
            if (!g) throw pf::InputError("analytic mode needs homogeneous estimators, got " + s.id());
            const auto bv = pf::closed_form_bias_var(*g, mu, m, m0);
            out += std::string(point) + "," + pf::io::csv_field(s.id()) + "," + pf::io::fmt(bv.bias) + "," +
                   pf::io::fmt(bv.variance) + "," + pf::io::fmt(bv.mse) + "\n";
          }
        }
      }
      pf::io::write_file(out_path, out);
      return kExitOk;
    }
    const std::uint64_t seed = config_seed(cfg, seed_flag);
    const auto reps = cfg.value("replications", std::size_t{200});
    const double alpha = cfg.value("alpha", 0.05);
    const auto rand_reps = cfg.value("rand_reps", std::size_t{200});
    if (kind == "gaussian") {
      pf::GaussianConfig g;
      g.m = cfg.value("m", std::size_t{10000});
      g.replications = reps;
      g.alpha = alpha;
      g.seed = seed;
      const auto methods = methods_from(cfg, {"none"}, rand_reps);
      std::vector<std::size_t> m0s;
      if (cfg.contains("m0")) {
        m0s.push_back(cfg.at("m0").get<std::size_t>());
      } else {
        for (double pi0 : number_list(cfg, "pi0", 0.6)) m0s.push_back(pf::m0_from_pi0(g.m, pi0));
      }
      std::size_t point = 0;
      for (double mu : number_list(cfg, "mu", 1.5)) {
        for (std::size_t m0 : m0s) {
          g.mu = mu;
          g.m0 = m0;
          g.seed = pf::derive_seed(seed, point++);
          reports.push_back(pf::run_gaussian(g, methods, workers));
        }
      }
    } else if (kind == "fet") {
      pf::FetConfig f;
      f.m = cfg.value("m", std::size_t{500});
      f.n_per_group = cfg.value("N", 25U);
      f.p3 = cfg.value("p3", 0.4);
      f.rate_low = cfg.value("rate_low", 0.01);
      f.rate_high = cfg.value("rate_high", 0.10);
      const auto alt = cfg.value("alternative", std::string("two-sided"));
      if (alt != "greater" && alt != "two-sided") throw pf::InputError("alternative must be greater or two-sided");
      f.alternative = alt == "greater" ? pf::Alternative::greater : pf::Alternative::two_sided;
      f.replications = reps;
      f.alpha = alpha;
      const auto methods = methods_from(cfg, {"none", "du", "mid", "rand"}, rand_reps);
      std::vector<std::size_t> m3s;
      if (cfg.contains("m3")) {
        m3s.push_back(cfg.at("m3").get<std::size_t>());
      } else {
        for (double pi1 : number_list(cfg, "pi1", 0.3)) m3s.push_back(pf::fet_m3_from_pi1(f.m, pi1));
      }
      std::size_t point = 0;
      for (std::size_t m3 : m3s) {
        f.m3 = m3;
        f.seed = pf::derive_seed(seed, point++);
        reports.push_back(pf::run_fet(f, methods, workers));
      }
    } else {
      const auto m = cfg.value("m", std::size_t{100});
      const auto methods = methods_from(cfg, {"none"}, rand_reps);
      std::size_t point = 0;
      for (double pi0 : number_list(cfg, "pi0", 1.0)) {
        const auto m0 = cfg.contains("m0") ? cfg.at("m0").get<std::size_t>() : pf::m0_from_pi0(m, pi0);
        reports.push_back(pf::run_dirac(m, m0, reps, alpha, pf::derive_seed(seed, point++), methods, workers));
      }
    }
  } catch (const json::exception& e) {
    throw pf::InputError(std::string("config: ") + e.what());
  }
  pf::io::write_file(out_path, pf::io::format_report(reports));
  return kExitOk;
}

int cmd_verify(const std::string& kind, const std::string& out_path, const std::optional<std::uint64_t>& seed,
               std::size_t samples, unsigned threads) {
  pf::VerifyOptions opt;
  opt.seed = require_seed(seed, "verify " + kind);
  opt.workers = worker_count(threads);
  opt.samples = samples;
  std::vector<pf::io::VerifyRow> rows;
  if (kind == "orders") {
    rows = pf::verify_orders(opt);
  } else if (kind == "bounds") {
    rows = pf::verify_bounds(opt);
  } else if (kind == "imc") {
    rows = pf::verify_imc_suite(opt);
  } else {
    rows = pf::verify_pc_compare(opt);
  }
  pf::io::write_file(out_path, pf::io::format_verify(rows));
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.pass ? 0 : 1;
  std::cerr << "verify " << kind << ": " << rows.size() - failed << "/" << rows.size() << " passed\n";
  return failed ? kExitVerify : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Null-proportion estimation and plug-in BH for continuous and discrete p-values"};
  app.require_subcommand(1);

  Common est_opts;
  auto* estimate = app.add_subcommand("estimate", "estimate m0 / pi0");
  add_common(estimate, est_opts, true);

  Common bh_opts;
  double alpha = 0.05;
  auto* bh = app.add_subcommand("bh", "(plug-in) Benjamini-Hochberg step-up");
  add_common(bh, bh_opts, false);
  bh->add_option("--alpha,-a", alpha, "target FDR level")->check(CLI::Range(0.0, 1.0));

  std::string fet_input;
  std::string fet_alt = "two-sided";
  std::string fet_emit;
  std::string fet_out = "-";
  auto* fet = app.add_subcommand("fet", "Fisher exact test on 2x2 tables");
  fet->add_option("--input,-i", fet_input, "CSV with columns a,b,c,d")->required()->check(CLI::ExistingFile);
  fet->add_option("--alternative", fet_alt, "greater or two-sided")->check(CLI::IsMember({"greater", "two-sided"}));
  fet->add_option("--emit-supports", fet_emit, "write null supports JSON here");
  fet->add_option("--out,-o", fet_out, "p-value CSV ('-' for stdout)");

  std::string sim_kind;
  std::string sim_config;
  std::string sim_out = "-";
  std::optional<std::uint64_t> sim_seed;
  unsigned sim_threads = 0;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiments");
  simulate->add_option("kind", sim_kind, "gaussian, fet, dirac or analytic")
      ->required()
      ->check(CLI::IsMember({"gaussian", "fet", "dirac", "analytic"}));
  simulate->add_option("--config,-c", sim_config, "JSON config")->check(CLI::ExistingFile);
  simulate->add_option("--out,-o", sim_out, "report CSV ('-' for stdout)");
  simulate->add_option("--seed", sim_seed, "overrides the config seed");
  simulate->add_option("--threads", sim_threads, "worker threads");

  std::string ver_kind;
  std::string ver_out = "-";
  std::optional<std::uint64_t> ver_seed;
  std::size_t ver_samples = 0;
  unsigned ver_threads = 0;
  auto* verify = app.add_subcommand("verify", "oracle checks");
  verify->add_option("kind", ver_kind, "imc, orders, bounds or pc-compare")
      ->required()
      ->check(CLI::IsMember({"imc", "orders", "bounds", "pc-compare"}));
  verify->add_option("--out,-o", ver_out, "verification CSV ('-' for stdout)");
  verify->add_option("--seed", ver_seed, "seed");
  verify->add_option("--samples", ver_samples, "Monte Carlo sample count (default per suite)");
  verify->add_option("--threads", ver_threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*estimate) return cmd_estimate(est_opts);
    if (*bh) return cmd_bh(bh_opts, alpha);
    if (*fet) return cmd_fet(fet_input, fet_alt, fet_emit, fet_out);
    if (*simulate) return cmd_simulate(sim_kind, sim_config, sim_out, sim_seed, sim_threads);
    if (*verify) return cmd_verify(ver_kind, ver_out, ver_seed, ver_samples, ver_threads);
  } catch (const pf::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
