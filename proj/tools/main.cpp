// Batch front-end: config-driven solves, method comparison, convergence
// studies, and projection diagnostics. Emits CSV/JSON for external plotting.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpfem/benchsuite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flat key=value config file; '#' starts a comment. Values become option
// defaults, so command-line flags win.
std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

struct CommonOpts {
  std::string config_path;
  std::string case_name;
  double delta = 0, dx = 0, horizon = 0;
  double a = 0, c = 0;  // element parameter overrides; 0 keeps the case default
  std::string variant = "k_tilde";
  double cutoff = 0;  // 0 means no cutoff
  double eval_step = 0, window_step = 0;
  std::string out_dir = ".";
  bool history = false;
};

void add_common(CLI::App* cmd, CommonOpts& o,
                const std::map<std::string, std::string>& cfg) {
  auto with_default = [&cfg](CLI::Option* opt, const std::string& key) {
    auto it = cfg.find(key);
    if (it != cfg.end()) {
      opt->default_val(it->second);
      opt->required(false);
    }
    return opt;
  };
  cmd->add_option("--config", o.config_path, "flat key=value config file");
  with_default(cmd->add_option("--case", o.case_name, "benchmark case name")->required(),
               "case");
  with_default(cmd->add_option("--delta", o.delta, "time step"), "delta");
  with_default(cmd->add_option("--dx", o.dx, "element grid step"), "dx");
  with_default(cmd->add_option("--T", o.horizon, "horizon override"), "T");
  with_default(cmd->add_option("--a", o.a, "test element parameter override"), "a");
  with_default(cmd->add_option("--c", o.c, "trial element Hessian override"), "c");
  with_default(cmd->add_option("--variant", o.variant, "k_h | k_tilde | k_dual"), "variant");
  with_default(cmd->add_option("--cutoff", o.cutoff, "band cutoff radius (0: dense)"),
               "cutoff");
  with_default(cmd->add_option("--eval-step", o.eval_step, "residuation grid step"),
               "eval_step");
  with_default(cmd->add_option("--window-step", o.window_step, "error grid step"),
               "window_step");
  with_default(cmd->add_option("--out", o.out_dir, "output directory"), "out");
  with_default(cmd->add_flag("--history", o.history, "dump per-step coefficients"),
               "history");
}

mpfem::StiffnessVariant parse_variant(const std::string& s) {
  if (s == "k_h") return mpfem::StiffnessVariant::k_h;
  if (s == "k_tilde") return mpfem::StiffnessVariant::k_tilde;
  if (s == "k_dual") return mpfem::StiffnessVariant::k_dual;
  throw std::invalid_argument("unknown stiffness variant: " + s);
}

mpfem::BenchmarkCase resolve_case(const CommonOpts& o) {
  mpfem::BenchmarkCase bc = mpfem::find_case(o.case_name);
  if (o.c > 0) bc.w_param = o.c;
  if (o.a > 0) bc.z_param = o.a;
  if (o.window_step > 0) bc.window_step = o.window_step;
  return bc;
}

mpfem::CaseRunOptions resolve_options(const CommonOpts& o) {
  mpfem::CaseRunOptions opts;
  opts.variant = parse_variant(o.variant);
  if (o.cutoff > 0) opts.cutoff = o.cutoff;
  if (o.horizon > 0) opts.horizon = o.horizon;
  opts.eval_step = o.eval_step;
  opts.keep_history = o.history;
  return opts;
}

json report_json(const mpfem::RunReport& rep, const CommonOpts& o) {
  json j;
  j["case"] = o.case_name;
  j["variant"] = rep.variant;
  j["params"] = rep.params;
  j["config"] = {{"case", o.case_name},   {"delta", o.delta},
                 {"dx", o.dx},            {"T", o.horizon},
                 {"a", o.a},              {"c", o.c},
                 {"variant", o.variant},  {"cutoff", o.cutoff},
                 {"eval_step", o.eval_step}, {"window_step", o.window_step},
                 {"history", o.history}};
  j["timings"] = {{"assembly_seconds", rep.assembly_seconds},
                  {"step_seconds", rep.step_seconds}};
  if (rep.linf_error) j["linf_error"] = *rep.linf_error;
  j["diagnostics"] = {{"truncated_entries", rep.diagnostics.truncated_entries},
                      {"clamped_argmax", rep.diagnostics.clamped_argmax},
                      {"moved_seeds", rep.diagnostics.moved_seeds},
                      {"tie_breaks", rep.diagnostics.tie_breaks},
                      {"clamped_coefficients", rep.clamped_coefficients},
                      {"band_approximation", rep.band_approximation}};
  return j;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write output file: " + p.string());
  out << body;
}

void dump_history(const mpfem::RunReport& rep, const fs::path& dir) {
  for (std::size_t t = 0; t < rep.history.size(); ++t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < rep.history[t].size(); ++i)
      os << i << ',' << mpfem::format_scalar(rep.history[t][i]) << '\n';
    write_file(dir / ("coeffs_t" + std::to_string(t) + ".csv"), os.str());
  }
}

int cmd_solve(const CommonOpts& o) {
  mpfem::BenchmarkCase bc = resolve_case(o);
  double delta = o.delta > 0 ? o.delta : bc.delta;
  double dx = o.dx > 0 ? o.dx : bc.dx;
  mpfem::RunReport rep = mpfem::run_case(bc, delta, dx, resolve_options(o));

  fs::path dir(o.out_dir);
  fs::create_directories(dir);
  CommonOpts echo = o;
  echo.delta = delta;
  echo.dx = dx;
  write_file(dir / "report.json", report_json(rep, echo).dump(2) + "\n");
  std::ostringstream os;
  mpfem::dump_grid_csv(rep.final_values, os);
  write_file(dir / "values_T.csv", os.str());
  if (o.history) dump_history(rep, dir);
  if (rep.linf_error) std::cout << "linf_error " << *rep.linf_error << "\n";
  return 0;
}

int cmd_compare_fm(const CommonOpts& o) {
  mpfem::BenchmarkCase bc = resolve_case(o);
  double delta = o.delta > 0 ? o.delta : bc.delta;
  double dx = o.dx > 0 ? o.dx : bc.dx;
  mpfem::ControlProblem prob = bc.problem;
  if (o.horizon > 0) prob.horizon = o.horizon;
  mpfem::BasisFamily W = mpfem::family_from_grid(bc.w_kind, bc.w_param,
                                                 mpfem::regular_grid(bc.w_box, dx));
  double es = o.eval_step > 0 ? o.eval_step : dx;
  mpfem::RunGrids grids =
      mpfem::make_run_grids(prob.domain, es, bc.window, bc.window_step);
  mpfem::AssemblyConfig cfg;
  cfg.dt = delta;
  const double T = prob.horizon;
  std::function<double(std::span<const double>)> ref =
      [&bc, T](std::span<const double> x) { return bc.reference(x, T); };
  mpfem::ComparisonReport rep = mpfem::compare_methods(prob, W, cfg, grids, &ref);

  fs::path dir(o.out_dir);
  fs::create_directories(dir);
  std::ostringstream os;
  os << "x,reference,fm_value,mfem_value\n";
  for (int x = 0; x < grids.window.count(); ++x) {
    auto pt = grids.window.point(x);
    for (int k = 0; k < grids.window.dim; ++k) os << mpfem::format_scalar(pt[k]) << ',';
    os << mpfem::format_scalar(bc.reference(pt, T)) << ','
       << mpfem::format_scalar(rep.fm_values[x]) << ','
       << mpfem::format_scalar(rep.mfem_values[x]) << '\n';
  }
  write_file(dir / "comparison.csv", os.str());

  json j;
  j["case"] = o.case_name;
  j["steps"] = rep.steps;
  j["ordering_violations"] = rep.ordering_violations;
  j["max_violation"] = rep.max_violation;
  if (rep.fm_error) j["fm_error"] = *rep.fm_error;
  if (rep.mfem_error) j["mfem_error"] = *rep.mfem_error;
  write_file(dir / "report.json", j.dump(2) + "\n");
  std::cout << "ordering_violations " << rep.ordering_violations << "\n";
  return 0;
}

int cmd_convergence(const CommonOpts& o, const std::string& deltas_arg) {
  mpfem::BenchmarkCase bc = resolve_case(o);
  std::vector<double> deltas;
  std::stringstream ss(deltas_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) deltas.push_back(std::stod(tok));
  if (deltas.empty()) throw std::invalid_argument("convergence: empty delta list");
  std::optional<double> horizon;
  if (o.horizon > 0) horizon = o.horizon;
  mpfem::ConvergenceTable table =
      mpfem::convergence_study(bc, deltas, parse_variant(o.variant), horizon);

  fs::path dir(o.out_dir);
  fs::create_directories(dir);
  std::ostringstream os;
  mpfem::dump_convergence_csv(table, os);
  write_file(dir / "convergence.csv", os.str());
  if (table.slope) std::cout << "slope " << *table.slope << "\n";
  return 0;
}

int cmd_project(const CommonOpts& o, double t_arg) {
  mpfem::BenchmarkCase bc = resolve_case(o);
  double dx = o.dx > 0 ? o.dx : bc.dx;
  double es = o.eval_step > 0 ? o.eval_step : dx;
  double t = t_arg >= 0 ? t_arg : bc.problem.horizon;
  mpfem::BasisFamily W = mpfem::family_from_grid(bc.w_kind, bc.w_param,
                                                 mpfem::regular_grid(bc.w_box, dx));
  mpfem::BasisFamily Z = mpfem::family_from_grid(
      bc.z_kind, bc.z_param, mpfem::regular_grid(bc.z_box, dx * bc.z_step_factor));
  mpfem::PointList grid = mpfem::regular_grid(bc.problem.domain, es);
  mpfem::GridFunction v = mpfem::sample_on_grid(
      [&](std::span<const double> x) { return bc.reference(x, t); }, grid);
  mpfem::GridFunction pw = mpfem::project_primal(W, v);
  mpfem::GridFunction pz = mpfem::project_dual(Z, v);
  mpfem::GridFunction pi = mpfem::project_combined(W, Z, v);

  fs::path dir(o.out_dir);
  fs::create_directories(dir);
  std::ostringstream os;
  os << "x,value,primal,dual,combined\n";
  for (int x = 0; x < grid.count(); ++x) {
    auto pt = grid.point(x);
    for (int k = 0; k < grid.dim; ++k) os << mpfem::format_scalar(pt[k]) << ',';
    os << mpfem::format_scalar(v.values[x]) << ',' << mpfem::format_scalar(pw.values[x])
       << ',' << mpfem::format_scalar(pz.values[x]) << ','
       << mpfem::format_scalar(pi.values[x]) << '\n';
  }
  write_file(dir / "projections.csv", os.str());
  return 0;
}

int cmd_bench_all(const std::string& out_dir) {
  fs::path dir(out_dir);
  fs::create_directories(dir);
  std::ostringstream os;
  os << "case,delta,dx,a,c,variant,linf_error,seconds\n";
  for (const auto& bc : mpfem::benchmark_catalog()) {
    auto t0 = std::chrono::steady_clock::now();
    mpfem::RunReport rep = mpfem::run_case(bc, bc.delta, bc.dx);
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    os << bc.name << ',' << mpfem::format_scalar(bc.delta) << ','
       << mpfem::format_scalar(bc.dx) << ',' << mpfem::format_scalar(bc.z_param) << ','
       << mpfem::format_scalar(bc.w_param) << ',' << rep.variant << ','
       << mpfem::format_scalar(rep.linf_error.value_or(0)) << ','
       << mpfem::format_scalar(secs) << '\n';
    std::cout << bc.name << " linf_error " << rep.linf_error.value_or(0) << "\n";
  }
  write_file(dir / "bench.csv", os.str());
  return 0;
}

int fail_json(const std::string& kind, const std::string& message) {
  json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cout << j.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-plus finite element solver for finite-horizon optimal control"};
  app.require_subcommand(1);

  // A config file only supplies defaults, so it must be loaded before the
  // options are declared.
  std::map<std::string, std::string> cfg;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") cfg = load_config(argv[i + 1]);

  CommonOpts o;
  std::string deltas_arg;
  double project_t = -1;
  std::string bench_out = ".";

  CLI::App* solve = app.add_subcommand("solve", "run one case and dump the value grid");
  add_common(solve, o, cfg);
  CLI::App* compare = app.add_subcommand("compare-fm", "finite elements vs baseline");
  add_common(compare, o, cfg);
  CLI::App* conv = app.add_subcommand("convergence", "error across a delta list");
  add_common(conv, o, cfg);
  auto* deltas_opt = conv->add_option("--deltas", deltas_arg, "comma-separated time steps");
  if (auto it = cfg.find("deltas"); it != cfg.end())
    deltas_opt->default_val(it->second);
  else
    deltas_opt->required();
  CLI::App* project = app.add_subcommand("project", "dump projector diagnostics");
  add_common(project, o, cfg);
  project->add_option("--t", project_t, "time of the reference slice (default: T)");
  CLI::App* bench = app.add_subcommand("bench-all", "run the whole catalog");
  bench->add_option("--out", bench_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (compare->parsed()) return cmd_compare_fm(o);
    if (conv->parsed()) return cmd_convergence(o, deltas_arg);
    if (project->parsed()) return cmd_project(o, project_t);
    if (bench->parsed()) return cmd_bench_all(bench_out);
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    bool unknown = msg.rfind("unknown benchmark case", 0) == 0;
    return fail_json(unknown ? "unknown_case" : "invalid_parameter", msg);
  } catch (const std::exception& e) {
    return fail_json("runtime_error", e.what());
  }
  return 0;
}
