// ncscale: generate instances, run scaling engines, certify nc-rank and run
// property suites.
//
// Exit codes: 0 ok, 1 parse/config error, 2 engine stall/boundary stop,
// 3 uncertified rank, 4 failed verification.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ncscale/generators.hpp"
#include "ncscale/io.hpp"
#include "ncscale/ncrank.hpp"
#include "ncscale/scaling_engine.hpp"
#include "ncscale/verify.hpp"

namespace {

using namespace ncscale;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitEngine = 2;
constexpr int kExitUncertified = 3;
constexpr int kExitVerifyFailed = 4;

struct CommonOptions {
  std::string norm = "1";
  int max_iters = 1000;
  double tol = 1e-6;
  double step = 0.1;
  double mm_tau = 1.0;
  int max_blowup_d = 0;
  std::string smooth_p = "8";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

double parse_p(const std::string& s, const char* flag) {
  if (s == "inf" || s == "linf") return kInf;
  try {
    std::size_t pos = 0;
    const double p = std::stod(s, &pos);
    if (pos == s.size()) return p;
  } catch (const std::exception&) {
  }
  throw InvalidInput(std::string(flag) + ": expected a number >= 1 or 'inf'");
}

FlowConfig make_config(const CommonOptions& o) {
  FlowConfig cfg;
  cfg.norm = PermInvariantNorm(parse_p(o.norm, "--norm"));
  cfg.max_iters = o.max_iters;
  cfg.tolerance = o.tol;
  cfg.step_size = o.step;
  cfg.mm_tau = o.mm_tau;
  cfg.max_blowup_dim = o.max_blowup_d;
  cfg.smoothing_p = parse_p(o.smooth_p, "--smooth-p");
  cfg.seed = o.seed;
  if (!o.seed_given) {
    if (const char* env = std::getenv("NCSCALE_SEED")) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw InvalidInput("NCSCALE_SEED: not an unsigned integer");
      }
    }
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--norm", o.norm, "residual reporting norm l_p (p or inf)");
  app->add_option("--max-iters", o.max_iters, "iteration cap");
  app->add_option("--tol", o.tol, "residual tolerance");
  app->add_option("--step", o.step, "initial step size");
  app->add_option("--mm-tau", o.mm_tau, "minimizing-movement time step");
  app->add_option("--max-blowup-d", o.max_blowup_d,
                  "largest blow-up size for the rank lower bound (0: n - 1)");
  app->add_option("--smooth-p", o.smooth_p, "l_p smoothing of the flow metric");
  app->add_option_function<std::uint64_t>(
      "--seed",
      [&o](const std::uint64_t& s) {
        o.seed = s;
        o.seed_given = true;
      },
      "random seed (falls back to NCSCALE_SEED)");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& family, const GeneratorParams& p,
                 const std::string& out) {
  write_text(out, emit_instance(generate(family, p)));
  return kExitOk;
}

// Scaling of the original tuple from a scaling of the reduced one.
ScalingPair lift(const Reduction& red, const ScalingPair& s) {
  const int n = red.transform.n();
  const int np = s.n();
  ComplexMatrix g = ComplexMatrix::Identity(n, n);
  ComplexMatrix h = ComplexMatrix::Identity(n, n);
  g.topLeftCorner(np, np) = s.g();
  h.topLeftCorner(np, np) = s.h();
  return {red.transform.g() * g, red.transform.h() * h};
}

int cmd_scale(const std::string& path, const std::string& engine,
              const CommonOptions& o, const std::string& report_path) {
  const FlowConfig cfg = make_config(o);
  const Instance inst = load_instance(path);
  const MatrixTuple& a = inst.tuple;
  const int n = a.n();
  const auto start = std::chrono::steady_clock::now();

  // Support-deficient tuples are reduced first; a reduced tuple lacking left
  // support is scaled through its adjoint, which swaps the two marginals.
  const SupportRanks ranks = check_full_support(a);
  std::optional<Reduction> red;
  MatrixTuple b = a;
  if (ranks.left_rank < n || ranks.right_rank < n) {
    red = reduce_tuple(a);
    b = red->reduced;
  }
  const bool use_adjoint =
      engine != "sinkhorn" && check_full_support(b).left_rank < b.n();
  const MatrixTuple work = use_adjoint ? b.adjoint() : b;

  FlowTrace trace;
  if (engine == "sinkhorn") {
    const SupportRanks wr = check_full_support(work);
    if (wr.left_rank < work.n() || wr.right_rank < work.n()) {
      trace.stop = StopReason::kStall;
      trace.message = "sinkhorn: reduced tuple lacks two-sided support";
    } else {
      trace = run_sinkhorn(work, cfg);
    }
  } else if (engine == "gd") {
    trace = run_gradient_descent(work, PDPoint::identity(work.n()), cfg);
  } else if (engine == "mm") {
    trace = run_minimizing_movement(work, PDPoint::identity(work.n()), cfg);
  } else {
    throw InvalidInput("--engine must be sinkhorn, gd or mm");
  }

  std::ofstream tout(o.out.empty() ? "trace.jsonl" : o.out);
  if (!tout) throw InvalidInput("cannot write trace file");
  write_trace(tout, trace);

  const RankCertificate cert = ncrank(a, cfg);
  Json report;
  report["instance"] = inst.name.empty() ? path : inst.name;
  report["engine"] = engine;
  report["n"] = n;
  report["reduced_n"] = b.n();
  report["adjoint"] = use_adjoint;
  report["stop"] = to_string(trace.stop);
  report["message"] = trace.message;
  report["iterations"] = trace.records.empty() ? 0 : trace.records.back().step;
  if (!trace.records.empty()) {
    const FlowRecord& best = trace.best_by_residual();
    ScalingPair s = best.scaling;
    if (use_adjoint) s = ScalingPair(s.h(), s.g());
    if (red) s = lift(*red, s);
    const double l1 = residual(a, s, PermInvariantNorm::l1()).sum;
    report["residual_l1"] = l1;
    report["residual_l2"] = residual(a, s, PermInvariantNorm::l2()).sum;
    report["residual_norm"] = {{"norm", cfg.norm.name()},
                               {"value", residual(a, s, cfg.norm).sum}};
    report["duality_gap"] = l1 - 2.0 * cert.corank();
  } else {
    report["residual_l1"] = nullptr;
    report["residual_l2"] = nullptr;
    report["duality_gap"] = nullptr;
  }
  report["certificate"] = certificate_to_json(cert);
  report["config"] = config_to_json(cfg);
  report["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  write_text(report_path, report.dump(2) + "\n");
  const bool bad = trace.stop == StopReason::kStall ||
                   trace.stop == StopReason::kBoundary ||
                   trace.stop == StopReason::kLineSearch;
  return bad ? kExitEngine : kExitOk;
}

int cmd_ncrank(const std::string& path, const CommonOptions& o) {
  const FlowConfig cfg = make_config(o);
  const Instance inst = load_instance(path);
  const RankCertificate cert = ncrank(inst.tuple, cfg);
  write_text(o.out, certificate_to_json(cert).dump(2) + "\n");
  if (!cert.certified) {
    std::cerr << "uncertified: " << cert.lower << " <= nc-rank <= "
              << cert.upper << "\n";
    return kExitUncertified;
  }
  return kExitOk;
}

int cmd_verify(std::vector<std::string> suites, const std::string& path,
               const CommonOptions& o) {
  const FlowConfig cfg = make_config(o);
  std::optional<Instance> inst;
  if (!path.empty()) inst = load_instance(path);
  if (suites.empty()) {
    suites = inst ? std::vector<std::string>{"duality"} : suite_names();
  }
  Json summary;
  summary["suites"] = Json::array();
  bool all = true;
  for (const auto& name : suites) {
    const SuiteResult r = run_suite(name, cfg.seed, inst ? &*inst : nullptr);
    Json js;
    js["name"] = r.name;
    js["passed"] = r.passed();
    js["checks"] = Json::array();
    for (const auto& c : r.checks) {
      js["checks"].push_back({{"name", c.name},
                              {"count", c.count},
                              {"failures", c.failures},
                              {"max_violation", c.max_violation},
                              {"passed", c.passed()}});
    }
    summary["suites"].push_back(js);
    all = all && r.passed();
  }
  summary["passed"] = all;
  write_text(o.out, summary.dump(2) + "\n");
  return all ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator scaling, capacity flows and nc-rank certification"};
  app.require_subcommand(1);

  CommonOptions opts;
  GeneratorParams gp;
  std::string family;
  std::string instance;
  std::string engine = "sinkhorn";
  std::string report_path;
  std::vector<std::string> suites;

  auto* gen = app.add_subcommand("generate", "emit a structured instance");
  gen->add_option("family", family, "instance family")
      ->required()
      ->check(CLI::IsMember(generator_families()));
  gen->add_option("--n", gp.n, "dimension");
  gen->add_option("--m", gp.m, "number of matrices");
  gen->add_option("--k", gp.k, "zero-block: dimension of the shrunk subspace");
  gen->add_option("--l", gp.l, "zero-block: dimension of its image");
  gen->add_option_function<std::uint64_t>(
      "--seed",
      [&](const std::uint64_t& s) {
        gp.seed = s;
        opts.seed_given = true;
      },
      "random seed (falls back to NCSCALE_SEED)");
  gen->add_option("--out", opts.out, "output file (default stdout)");

  auto* scale = app.add_subcommand("scale", "run a scaling engine");
  scale->add_option("instance", instance, "instance JSON file")->required();
  scale->add_option("--engine", engine, "sinkhorn, gd or mm")
      ->check(CLI::IsMember({"sinkhorn", "gd", "mm"}));
  add_common(scale, opts);
  scale->add_option("--out", opts.out, "trace file (default trace.jsonl)");
  scale->add_option("--report", report_path, "report file (default stdout)");

  auto* rank = app.add_subcommand("ncrank", "certify the nc-rank");
  rank->add_option("instance", instance, "instance JSON file")->required();
  add_common(rank, opts);
  rank->add_option("--out", opts.out, "certificate file (default stdout)");

  auto* ver = app.add_subcommand("verify", "run property suites");
  ver->add_option("--suite", suites, "suite name (repeatable)")
      ->check(CLI::IsMember(suite_names()));
  ver->add_option("--instance", instance, "instance for the duality suite");
  add_common(ver, opts);
  ver->add_option("--out", opts.out, "summary file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      if (!opts.seed_given) {
        if (const char* env = std::getenv("NCSCALE_SEED")) {
          gp.seed = std::stoull(env);
        }
      }
      return cmd_generate(family, gp, opts.out);
    }
    if (*scale) return cmd_scale(instance, engine, opts, report_path);
    if (*rank) return cmd_ncrank(instance, opts);
    if (*ver) return cmd_verify(suites, instance, opts);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NotFullSupport& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEngine;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEngine;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
