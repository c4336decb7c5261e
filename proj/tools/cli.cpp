#include "cli.hpp"

#include <edgemarket/baselines.hpp>
#include <edgemarket/dynamics.hpp>
#include <edgemarket/eg_core.hpp>
#include <edgemarket/io.hpp>
#include <edgemarket/netprofit.hpp>
#include <edgemarket/scenario.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace edgemarket::cli {

namespace {

namespace fs = std::filesystem;

// CES prices only clear the market up to tol / step of the price loop.
constexpr double kCesClearingTol = 1e-4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InputArgs {
  std::string instance;
  std::string scenario;
};

void add_input_options(CLI::App* cmd, InputArgs& in) {
  auto* inst = cmd->add_option("--instance", in.instance, "Market instance JSON");
  auto* scen = cmd->add_option("--scenario", in.scenario, "Edge-computing scenario JSON");
  inst->excludes(scen);
}

MarketInstance load_market(const InputArgs& in, std::ostream& err) {
  if (in.instance.empty() == in.scenario.empty()) {
    throw UsageError("give exactly one of --instance or --scenario");
  }
  if (!in.instance.empty()) return io::instance_from_json(io::read_file(in.instance));
  auto built = build_instance(io::scenario_from_json(io::read_file(in.scenario)));
  for (const auto& w : built.warnings) err << "warning: " << w << '\n';
  return std::move(built.instance);
}

// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  io::write_file(target, text);
}

unsigned worker_count(std::size_t jobs) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EDGEMARKET_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) workers = std::min(workers, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(jobs, 1)));
}

// Runs job(k) for k < count on worker threads; rethrows the lowest-index failure.
template <class Job>
void parallel_for(std::size_t count, Job job) {
  std::vector<std::exception_ptr> failures(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        job(k);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned workers = worker_count(count);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

std::string join(const Eigen::VectorXd& v, int precision) {
  std::ostringstream os;
  os << std::setprecision(precision);
  for (Eigen::Index k = 0; k < v.size(); ++k) os << (k ? " " : "") << v(k);
  return os.str();
}

// -- generate ---------------------------------------------------------------

struct GenerateArgs {
  GenerationConfig config;
  std::uint64_t seed = 7;
  std::string out;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
  auto* cmd = app.add_subcommand("generate", "Generate a scenario and its market instance");
  cmd->add_option("--m", a.config.n_ens, "Number of ENs")->check(CLI::PositiveNumber);
  cmd->add_option("--n", a.config.n_services, "Number of services")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "RNG seed");
  cmd->add_option("--area", a.config.area_km, "Side of the square area (km)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--delay-per-km", a.config.delay_per_km, "Network delay per km")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--total-budget", a.config.total_budget, "Budget split equally among services")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "Output directory")->required();
}

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  const auto scenario = generate(a.config, a.seed);
  const auto built = build_instance(scenario);
  for (const auto& w : built.warnings) err << "warning: " << w << '\n';
  const fs::path dir(a.out);
  fs::create_directories(dir);
  io::write_file(dir / "scenario.json", io::to_json(scenario));
  io::write_file(dir / "instance.json", io::to_json(built.instance));
  out << "wrote " << (dir / "scenario.json").string() << " and "
      << (dir / "instance.json").string() << '\n';
  return kOk;
}

// -- solve ------------------------------------------------------------------

struct SolveArgs {
  std::string method = "eg";
  InputArgs input;
  std::string out = ".";
  std::string trace;
  std::optional<double> tol;
  std::optional<int> max_iters;
  double rho = 0.99;
  double step = 0.001;
  double p0 = 0.2;
  bool diminishing = false;
  int max_rounds = 10000;
  double damping = 1.0;
  bool normalize = false;
  bool pretty = false;
  double cert_tol = 1e-6;
};

void add_solve(CLI::App& app, SolveArgs& a) {
  auto* cmd = app.add_subcommand("solve", "Compute an equilibrium and its certificate");
  cmd->add_option("--method", a.method, "eg | eg-pg | propdyn | ces | propbr | netprofit")
      ->check(CLI::IsMember({"eg", "eg-pg", "propdyn", "ces", "propbr", "netprofit"}));
  add_input_options(cmd, a.input);
  cmd->add_option("--out", a.out, "Output directory for solution.json and certificate.json");
  cmd->add_option("--trace", a.trace, "Write the iteration trace as CSV");
  cmd->add_option("--tol", a.tol, "Stopping tolerance of the chosen method")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", a.max_iters, "Iteration budget")->check(CLI::PositiveNumber);
  cmd->add_option("--rho", a.rho, "CES exponent")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--step", a.step, "CES price step")->check(CLI::PositiveNumber);
  cmd->add_option("--p0", a.p0, "CES initial price")->check(CLI::PositiveNumber);
  cmd->add_flag("--diminishing", a.diminishing, "CES step decays as step / sqrt(t + 1)");
  cmd->add_option("--max-rounds", a.max_rounds, "Best-response round budget")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--damping", a.damping, "Proportional response damping in (0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--normalize-budgets", a.normalize, "Rescale budgets to sum to one first");
  cmd->add_option("--cert-tol", a.cert_tol, "Certificate threshold for exit status 0")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--pretty", a.pretty, "Print a readable summary");
}

bool certificate_ok(SolveMethod method, const CertificateReport& cert, double primal,
                    const MarketInstance& inst, double tol) {
  const double money = std::max(1.0, inst.budgets().maxCoeff());
  switch (method) {
    case SolveMethod::ces:
      return cert.clearing_slack <= kCesClearingTol && cert.budget_slack <= tol * money;
    case SolveMethod::propbr:
      return cert.clearing_slack <= tol && cert.budget_slack <= tol * money;
    default:
      return cert.passes(tol, inst.budgets().maxCoeff(), primal);
  }
}

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  const auto method = parse_solve_method(a.method);
  if (!method) throw UsageError("unknown method " + a.method);
  MarketInstance inst = load_market(a.input, err);
  if (a.normalize) inst = inst.with_normalized_budgets();

  EquilibriumSolution sol;
  DynamicsTrace trace;
  bool gave_up = false;
  try {
    switch (*method) {
      case SolveMethod::eg:
      case SolveMethod::eg_projected_gradient: {
        EgOptions o;
        o.engine = *method == SolveMethod::eg ? EgEngine::proportional_response
                                              : EgEngine::projected_gradient;
        if (a.tol) o.tol = *a.tol;
        if (a.max_iters) o.max_iters = *a.max_iters;
        o.certificate_tol = a.cert_tol;
        o.damping = a.damping;
        sol = solve_eg(inst, o);
        break;
      }
      case SolveMethod::propdyn: {
        PropDynOptions o;
        if (a.tol) o.tol = *a.tol;
        if (a.max_iters) o.max_iters = *a.max_iters;
        o.damping = a.damping;
        auto r = propdyn_run(inst, o);
        sol = std::move(r.solution);
        trace = std::move(r.trace);
        break;
      }
      case SolveMethod::ces: {
        CesOptions o;
        o.rho = a.rho;
        o.step = a.step;
        o.p0 = a.p0;
        o.diminishing_step = a.diminishing;
        if (a.tol) o.tol = *a.tol;
        if (a.max_iters) o.max_iters = *a.max_iters;
        auto r = ces_dual_decomposition(inst, o);
        sol = std::move(r.solution);
        trace = std::move(r.trace);
        break;
      }
      case SolveMethod::propbr: {
        PropBrOptions o;
        if (a.tol) o.tol = *a.tol;
        o.max_rounds = a.max_rounds;
        auto r = propbr_run(inst, o);
        sol = std::move(r.solution);
        trace = std::move(r.trace);
        break;
      }
      case SolveMethod::netprofit: {
        NetProfitOptions o;
        if (a.max_iters) o.max_iters = *a.max_iters;
        o.certificate_tol = a.cert_tol;
        sol = solve_netprofit(inst, o);
        break;
      }
      case SolveMethod::baseline:
        throw UsageError("baseline is not a solve method");
    }
  } catch (const NonConvergenceError& e) {
    err << "not converged: " << e.what() << '\n';
    sol = e.best_iterate();
    trace = e.trace();
    gave_up = true;
  }

  const bool netprofit = *method == SolveMethod::netprofit;
  const auto cert = netprofit ? netprofit_certificate(inst, sol) : kkt_certificate(inst, sol);
  const double primal =
      netprofit ? netprofit_objective(inst, sol) : eg_objective(inst, sol.allocation);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  io::write_file(dir / "solution.json", io::to_json(sol));
  io::write_file(dir / "certificate.json", io::to_json(cert));
  if (!a.trace.empty()) {
    std::ostringstream csv;
    io::write_trace_csv(csv, trace);
    emit(a.trace, csv.str(), out);
  }

  if (a.pretty) {
    out << "method      " << to_string(sol.method) << '\n'
        << "converged   " << (sol.converged ? "yes" : "no") << " after " << sol.iterations
        << " iterations\n"
        << "prices      " << join(sol.prices.p, 6) << '\n'
        << "utilities   " << join(sol.utilities, 6) << '\n';
    if (netprofit) out << "surpluses   " << join(sol.surpluses, 6) << '\n';
    out << "kkt         " << std::setprecision(3) << cert.max_kkt_residual << "  gap "
        << cert.duality_gap << "  clearing " << cert.clearing_slack << "  budget "
        << cert.budget_slack << '\n';
  } else {
    out << "method=" << to_string(sol.method) << " converged=" << (sol.converged ? "true" : "false")
        << " iterations=" << sol.iterations << '\n';
  }

  if (gave_up || !sol.converged) return kNotConverged;
  if (!certificate_ok(*method, cert, primal, inst, a.cert_tol)) {
    err << "certificate above tolerance " << a.cert_tol << '\n';
    return kCertificateFailed;
  }
  return kOk;
}

// -- compare ----------------------------------------------------------------

struct CompareArgs {
  InputArgs input;
  std::string out;
  bool pretty = false;
};

void add_compare(CLI::App& app, CompareArgs& a) {
  auto* cmd = app.add_subcommand("compare", "Compare ME, Prop, SW1, SW2 and maxmin allocations");
  add_input_options(cmd, a.input);
  cmd->add_option("--out", a.out, "CSV path (stdout when omitted)");
  cmd->add_flag("--pretty", a.pretty, "Aligned table instead of CSV");
}

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
  const auto inst = load_market(a.input, err);
  const auto rows = compare_schemes(inst);
  std::ostringstream text;
  if (a.pretty) {
    text << std::left << std::setw(8) << "scheme" << std::right;
    for (const char* h : {"total_u", "min_u", "ef", "min_prop", "min_si"}) {
      text << std::setw(13) << h;
    }
    text << '\n' << std::setprecision(6);
    for (const auto& r : rows) {
      text << std::left << std::setw(8) << r.scheme << std::right << std::setw(13)
           << r.total_utility() << std::setw(13) << r.min_utility() << std::setw(13)
           << r.report.ef_index << std::setw(13) << r.report.proportionality_ratios.minCoeff()
           << std::setw(13) << r.report.sharing_incentive_margins.minCoeff() << '\n';
    }
  } else {
    io::write_comparison_csv(text, rows);
  }
  emit(a.out, text.str(), out);
  return kOk;
}

// -- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string kind;
  InputArgs input;
  std::string out;
  std::vector<double> ratios{0.5, 1.0, 2.0};
  std::vector<double> scales{1.0, 10.0, 1e3, 1e6};
  std::vector<int> m_values{8};
  std::vector<int> n_values{4, 8, 16};
  std::uint64_t seed = 7;
};

void add_sweep(CLI::App& app, SweepArgs& a) {
  auto* cmd = app.add_subcommand("sweep", "Parameter sweeps");
  cmd->add_option("--kind", a.kind, "budget-ratio | budget-scale | size")
      ->required()
      ->check(CLI::IsMember({"budget-ratio", "budget-scale", "size"}));
  add_input_options(cmd, a.input);
  cmd->add_option("--out", a.out, "CSV path (stdout when omitted)");
  cmd->add_option("--ratios", a.ratios, "B_1 : B_2 values for budget-ratio")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd->add_option("--scales", a.scales, "Budget multipliers for budget-scale")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd->add_option("--m-values", a.m_values, "EN counts for size")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd->add_option("--n-values", a.n_values, "Service counts for size")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Generator seed for size");
}

std::string sweep_budget_ratio(const SweepArgs& a, const MarketInstance& inst) {
  if (inst.n_services() < 2) throw UsageError("budget-ratio sweep needs at least two services");
  std::vector<EquilibriumSolution> sols(a.ratios.size());
  const double pair_total = inst.budgets()(0) + inst.budgets()(1);
  parallel_for(a.ratios.size(), [&](std::size_t k) {
    Eigen::VectorXd b = inst.budgets();
    const double r = a.ratios[k];
    b(0) = pair_total * r / (1.0 + r);
    b(1) = pair_total / (1.0 + r);
    sols[k] = solve_eg(inst.with_budgets(b));
  });
  std::ostringstream csv;
  csv << "ratio";
  for (Eigen::Index j = 1; j <= inst.n_ens(); ++j) csv << ",p_" << j;
  for (Eigen::Index i = 1; i <= inst.n_services(); ++i) csv << ",u_" << i;
  csv << '\n';
  for (std::size_t k = 0; k < sols.size(); ++k) {
    csv << io::format_double(a.ratios[k]);
    for (Eigen::Index j = 0; j < inst.n_ens(); ++j) {
      csv << ',' << io::format_double(sols[k].prices.p(j));
    }
    for (Eigen::Index i = 0; i < inst.n_services(); ++i) {
      csv << ',' << io::format_double(sols[k].utilities(i));
    }
    csv << '\n';
  }
  return csv.str();
}

std::string sweep_budget_scale(const SweepArgs& a, const MarketInstance& inst) {
  auto scales = a.scales;
  std::sort(scales.begin(), scales.end());
  std::vector<BudgetSweepRow> rows(scales.size());
  parallel_for(scales.size(), [&](std::size_t k) {
    rows[k] = std::move(budget_sweep(inst, {scales[k]}).front());
  });
  std::ostringstream csv;
  io::write_budget_sweep_csv(csv, rows);
  return csv.str();
}

std::string sweep_size(const SweepArgs& a, std::ostream& err) {
  struct Point {
    int m;
    int n;
    std::vector<Eigen::Index> services;
    Eigen::VectorXd utilities;
    std::vector<std::string> warnings;
  };
  std::vector<Point> points;
  for (int m : a.m_values) {
    for (int n : a.n_values) points.push_back({m, n, {}, {}, {}});
  }
  parallel_for(points.size(), [&](std::size_t k) {
    GenerationConfig config;
    config.n_ens = points[k].m;
    config.n_services = points[k].n;
    auto built = build_instance(generate(config, a.seed));
    points[k].utilities = solve_eg(built.instance).utilities;
    points[k].services = std::move(built.kept_services);
    points[k].warnings = std::move(built.warnings);
  });
  std::ostringstream csv;
  csv << "m,n,service,utility\n";
  for (const auto& p : points) {
    for (const auto& w : p.warnings) err << "warning (m=" << p.m << ", n=" << p.n << "): " << w << '\n';
    for (std::size_t r = 0; r < p.services.size(); ++r) {
      csv << p.m << ',' << p.n << ',' << p.services[r] + 1 << ','
          << io::format_double(p.utilities(static_cast<Eigen::Index>(r))) << '\n';
    }
  }
  return csv.str();
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  std::string csv;
  if (a.kind == "size") {
    csv = sweep_size(a, err);
  } else {
    const auto inst = load_market(a.input, err);
    csv = a.kind == "budget-ratio" ? sweep_budget_ratio(a, inst) : sweep_budget_scale(a, inst);
  }
  emit(a.out, csv, out);
  return kOk;
}

// -- audit ------------------------------------------------------------------

struct AuditArgs {
  InputArgs input;
  std::string solution;
  std::string scheme;
  std::string out;
  double cert_tol = 1e-6;
};

void add_audit(CLI::App& app, AuditArgs& a) {
  auto* cmd = app.add_subcommand("audit", "Fairness and efficiency audit of an allocation");
  add_input_options(cmd, a.input);
  auto* sol = cmd->add_option("--solution", a.solution, "Solution JSON to audit");
  auto* scheme = cmd->add_option("--scheme", a.scheme, "Audit a baseline: prop | sw1 | sw2 | maxmin")
                     ->check(CLI::IsMember({"prop", "sw1", "sw2", "maxmin"}));
  sol->excludes(scheme);
  cmd->add_option("--out", a.out, "JSON path (stdout when omitted)");
  cmd->add_option("--cert-tol", a.cert_tol, "Certificate threshold of the Pareto check")
      ->check(CLI::PositiveNumber);
}

int cmd_audit(const AuditArgs& a, std::ostream& out, std::ostream& err) {
  if (a.solution.empty() == a.scheme.empty()) {
    throw UsageError("give exactly one of --solution or --scheme");
  }
  const auto inst = load_market(a.input, err);
  FairnessReport report;
  if (!a.solution.empty()) {
    const auto sol = io::solution_from_json(io::read_file(a.solution));
    report = audit(inst, sol, a.cert_tol);
  } else {
    Allocation alloc;
    if (a.scheme == "prop") {
      alloc = proportional_allocation(inst);
    } else if (a.scheme == "sw1") {
      alloc = welfare_max(inst, Eigen::VectorXd::Ones(inst.n_services()));
    } else if (a.scheme == "sw2") {
      alloc = welfare_max(inst, inst.budgets());
    } else {
      alloc = maxmin_allocation(inst);
    }
    report = audit(inst, alloc, a.cert_tol);
  }
  emit(a.out, io::to_json(report), out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Market-equilibrium allocation of edge-node capacity"};
  app.name(args.empty() ? "edgemarket" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  GenerateArgs gen;
  SolveArgs solve;
  CompareArgs compare;
  SweepArgs sweep;
  AuditArgs audit_args;
  add_generate(app, gen);
  add_solve(app, solve);
  add_compare(app, compare);
  add_sweep(app, sweep);
  add_audit(app, audit_args);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (app.got_subcommand("generate")) return cmd_generate(gen, out, err);
    if (app.got_subcommand("solve")) return cmd_solve(solve, out, err);
    if (app.got_subcommand("compare")) return cmd_compare(compare, out, err);
    if (app.got_subcommand("sweep")) return cmd_sweep(sweep, out, err);
    if (app.got_subcommand("audit")) return cmd_audit(audit_args, out, err);
  } catch (const NonConvergenceError& e) {
    err << "not converged: " << e.what() << '\n';
    return kNotConverged;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace edgemarket::cli
