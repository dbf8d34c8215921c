// Command-line surface: generate synthetic problems, solve them with either
// solver, compare solvers over a penalty grid, score estimates against the
// planted truth, and emit convergence-rate traces for plotting.
//
// Exit codes: 0 success, 2 usage error, 3 no convergence, 4 I/O error.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "ggl/ggl.hpp"

namespace fs = std::filesystem;
using ggl::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitIo = 4;

int thread_count_from_env() {
  const char* env = std::getenv("GGL_NUM_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ggl::IoError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ggl::IoError("cannot write file: " + path);
  out << text;
  if (!out) throw ggl::IoError("write failed: " + path);
}

// Penalty selection: exactly one of (lambda1, lambda2) / (w1, w2).
struct PenaltyChoice {
  std::optional<double> lambda1, lambda2, w1, w2;

  ggl::GglParams resolve() const {
    const bool has_lambda = lambda1.has_value() || lambda2.has_value();
    const bool has_w = w1.has_value() || w2.has_value();
    if (has_lambda == has_w)
      throw std::invalid_argument("specify exactly one of --lambda1/--lambda2 or --w1/--w2");
    if (has_lambda) {
      ggl::GglParams p{lambda1.value_or(0.0), lambda2.value_or(0.0)};
      p.validate();
      if (p.lambda1 == 0.0 && p.lambda2 == 0.0)
        throw std::invalid_argument("penalties must not both be zero");
      return p;
    }
    if (!w1.has_value() || !w2.has_value())
      throw std::invalid_argument("--w1 and --w2 must be given together");
    return ggl::reparam_to_lambda(*w1, *w2);
  }
};

json newton_config_json(const ggl::NewtonConfig& c) {
  return json{{"eta_bar", c.eta_bar},
              {"tau", c.tau},
              {"mu", c.mu},
              {"rho", c.rho},
              {"max_newton_iters", c.max_newton_iters},
              {"max_cg_iters", c.max_cg_iters},
              {"max_linesearch_steps", c.max_linesearch_steps}};
}

json admm_config_json(const ggl::AdmmConfig& c) {
  return json{{"sigma0", c.sigma},
              {"tau", c.tau},
              {"max_iters", c.max_iters},
              {"adapt",
               json{{"enabled", c.adapt.enabled},
                    {"ratio_threshold", c.adapt.ratio_threshold},
                    {"scale", c.adapt.scale},
                    {"period", c.adapt.period}}}};
}

json ppdna_config_json(const ggl::PpdnaConfig& c) {
  return json{{"epsilon", c.epsilon},
              {"sigma0", c.sigma0},
              {"sigma_growth", c.sigma_growth},
              {"sigma_max", c.sigma_max},
              {"eps0", c.eps0},
              {"gamma0", c.gamma0},
              {"schedule_ratio", c.schedule_ratio},
              {"max_outer_iters", c.max_outer_iters},
              {"warm_start",
               json{{"enabled", c.warm_start.enabled},
                    {"max_iters", c.warm_start.max_iters},
                    {"tol_multiplier", c.warm_start.tol_multiplier}}},
              {"newton", newton_config_json(c.newton)},
              {"admm", admm_config_json(c.warm_admm)}};
}

// Shared numeric-option plumbing with config-file fallback: CLI flag beats
// config file beats built-in default.
struct ConfigOverlay {
  json values;

  template <typename T>
  void apply(const CLI::App& app, const std::string& flag, const std::string& key, T& target) const {
    const CLI::Option* opt = app.get_option_no_throw(flag);
    if (opt != nullptr && opt->count() > 0) return;  // CLI wins
    if (values.contains(key)) target = values[key].get<T>();
  }
};

ConfigOverlay load_overlay(const std::string& path) {
  ConfigOverlay o;
  if (path.empty()) {
    o.values = json::object();
    return o;
  }
  std::ifstream in(path);
  if (!in) throw ggl::IoError("cannot open config file: " + path);
  try {
    in >> o.values;
  } catch (const json::exception& e) {
    throw ggl::IoError("malformed config file " + path + ": " + e.what());
  }
  return o;
}

void write_solution_files(const std::string& out_dir, const ggl::Ensemble& sparse_theta,
                          const std::string& solver) {
  const int kk = sparse_theta.classes();
  for (int k = 0; k < kk; ++k)
    ggl::write_csv_matrix((fs::path(out_dir) / ("theta_" + std::to_string(k + 1) + ".csv")).string(),
                          sparse_theta.block(k));
  json sol;
  sol["p"] = sparse_theta.dim();
  sol["K"] = kk;
  sol["solver"] = solver;
  json trips = json::array();
  for (int k = 0; k < kk; ++k)
    for (int i = 0; i < sparse_theta.dim(); ++i)
      for (int j = i; j < sparse_theta.dim(); ++j)
        if (sparse_theta.block(k)(i, j) != 0.0)
          trips.push_back({k, i, j, sparse_theta.block(k)(i, j)});
  sol["triplets"] = std::move(trips);
  write_text((fs::path(out_dir) / "solution.json").string(), sol.dump(2) + "\n");
}

// ---------------------------------------------------------------- generate

int cmd_generate(int p, int kk, int samples, std::uint64_t seed, int neighbors, int extra_denom,
                 const std::string& out_dir) {
  ensure_dir(out_dir);
  const ggl::GroundTruth gt = ggl::gen_nn_network(p, kk, neighbors, extra_denom, seed);
  const auto observations = ggl::sample_gaussian(gt, samples, seed);
  std::vector<std::string> files;
  std::vector<long> counts;
  for (int k = 0; k < kk; ++k) {
    const std::string name = "cov_" + std::to_string(k + 1) + ".csv";
    ggl::write_csv_matrix((fs::path(out_dir) / name).string(),
                          ggl::sample_covariance(observations[static_cast<size_t>(k)]));
    files.push_back(name);
    counts.push_back(samples);
  }
  ggl::write_manifest((fs::path(out_dir) / "manifest.json").string(), "covariance", p, kk, files,
                      counts);
  ggl::write_ground_truth(out_dir, gt);
  std::cout << "generated p=" << p << " K=" << kk << " seed=" << seed
            << " common_edges=" << gt.common_edge_count;
  for (int k = 0; k < kk; ++k)
    std::cout << " class" << (k + 1) << "_edges="
              << gt.common_edge_count + gt.extra_edges[static_cast<size_t>(k)].size();
  std::cout << " -> " << out_dir << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- solve

struct SolveOutcome {
  bool converged = false;
  double eta = 0.0;
  double pobj = 0.0;
  double dobj = 0.0;
  double relgap = 0.0;
  int iterations = 0;
  long newton_total = 0;
  double wall_ms = 0.0;
  ggl::Ensemble sparse_theta;
  json summary;
};

SolveOutcome run_ppdna(const ggl::ProblemData& data, const ggl::GglParams& params,
                       const ggl::PpdnaConfig& cfg, const std::string& trace_path) {
  SolveOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  ggl::PpdnaResult res = ggl::solve_ppdna(data, params, cfg);
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out.converged = res.converged;
  out.eta = res.eta_p;
  out.pobj = res.pobj;
  out.dobj = res.dobj;
  out.relgap = res.relgap;
  out.iterations = res.outer_iters;
  for (const auto& s : res.sub_stats) out.newton_total += s.newton_iters;
  out.sparse_theta = ggl::sparse_estimate(res.theta, res.x, params);
  if (!trace_path.empty()) {
    std::ofstream tf(trace_path);
    if (!tf) throw ggl::IoError("cannot write trace: " + trace_path);
    ggl::write_trace_csv(tf, res.trace);
  }
  out.summary["iterations"] = res.outer_iters;
  out.summary["newton_total"] = out.newton_total;
  out.summary["admm_warm_iters"] = res.admm_warm_iters;
  out.summary["iteration_display"] =
      std::to_string(res.outer_iters) + "(" + std::to_string(out.newton_total) + ")";
  return out;
}

SolveOutcome run_admm(const ggl::ProblemData& data, const ggl::GglParams& params,
                      const ggl::AdmmConfig& cfg, const std::string& trace_path) {
  SolveOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  ggl::AdmmResult res = ggl::solve_admm(data, params, cfg);
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out.converged = res.converged;
  out.eta = res.eta_a;
  out.pobj = ggl::primal_objective(res.theta, data, params);
  out.dobj = ggl::dual_objective_global(ggl::dual_feasible_projection(res.x, params), data, params);
  out.relgap = std::isfinite(out.dobj)
                   ? std::abs(out.pobj - out.dobj) / (1.0 + std::abs(out.pobj) + std::abs(out.dobj))
                   : std::numeric_limits<double>::infinity();
  out.iterations = res.iters;
  out.sparse_theta = ggl::sparse_estimate(res.theta, res.x, params);
  if (!trace_path.empty()) {
    std::ofstream tf(trace_path);
    if (!tf) throw ggl::IoError("cannot write trace: " + trace_path);
    ggl::write_admm_trace_csv(tf, res.trace);
  }
  out.summary["iterations"] = res.iters;
  out.summary["iteration_display"] = std::to_string(res.iters);
  return out;
}

int cmd_solve(const std::string& manifest, const std::string& out_dir, const std::string& solver,
              const PenaltyChoice& penalty, const ggl::PpdnaConfig& pcfg,
              const ggl::AdmmConfig& acfg) {
  ensure_dir(out_dir);
  const ggl::ProblemData data = ggl::load_problem(manifest);
  const ggl::GglParams params = penalty.resolve();
  const auto [w1, w2] = ggl::reparam_from_lambda(params);

  SolveOutcome out;
  if (solver == "ppdna") {
    out = run_ppdna(data, params, pcfg, (fs::path(out_dir) / "trace.csv").string());
  } else if (solver == "admm") {
    out = run_admm(data, params, acfg, (fs::path(out_dir) / "trace.csv").string());
  } else {
    throw std::invalid_argument("unknown solver '" + solver + "' (use ppdna or admm)");
  }

  write_solution_files(out_dir, out.sparse_theta, solver);
  const auto [nnz, density] = ggl::nnz_density(out.sparse_theta);

  json summary = out.summary;
  summary["solver"] = solver;
  summary["manifest"] = manifest;
  summary["converged"] = out.converged;
  summary["eta"] = out.eta;
  summary["pobj"] = out.pobj;
  summary["dobj"] = out.dobj;
  summary["relgap"] = out.relgap;
  summary["wall_ms"] = out.wall_ms;
  summary["lambda1"] = params.lambda1;
  summary["lambda2"] = params.lambda2;
  summary["w1"] = w1;
  summary["w2"] = w2;
  summary["nnz"] = nnz;
  summary["density"] = density;
  summary["tol"] = solver == "ppdna" ? pcfg.epsilon : acfg.tol;
  summary["config"] = json{{"ppdna", ppdna_config_json(pcfg)}, {"admm", admm_config_json(acfg)}};
  write_text((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");

  std::cout << solver << ": " << (out.converged ? "converged" : "iteration cap")
            << " eta=" << out.eta << " pobj=" << out.pobj << " relgap=" << out.relgap
            << " iterations=" << out.summary["iteration_display"].get<std::string>()
            << " time_ms=" << out.wall_ms << "\n";
  return out.converged ? kExitOk : kExitNoConvergence;
}

// ----------------------------------------------------------------- compare

std::vector<std::pair<double, double>> parse_grid(const std::string& grid) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(grid);
  std::string cell;
  while (std::getline(ss, cell, ';')) {
    if (cell.empty()) continue;
    const auto colon = cell.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("grid cell '" + cell + "' is not of the form a:b");
    out.emplace_back(std::stod(cell.substr(0, colon)), std::stod(cell.substr(colon + 1)));
  }
  if (out.empty()) throw std::invalid_argument("empty penalty grid");
  return out;
}

int cmd_compare(const std::string& manifest, const std::string& out_dir, const std::string& grid,
                const std::string& grid_w, const ggl::PpdnaConfig& pcfg_base,
                const ggl::AdmmConfig& acfg_base) {
  ensure_dir(out_dir);
  const ggl::ProblemData data = ggl::load_problem(manifest);
  if (grid.empty() == grid_w.empty())
    throw std::invalid_argument("specify exactly one of --grid (lambda pairs) or --grid-w");
  std::vector<ggl::GglParams> cells;
  for (const auto& [a, b] : parse_grid(grid.empty() ? grid_w : grid))
    cells.push_back(grid.empty() ? ggl::reparam_to_lambda(a, b) : ggl::GglParams{a, b});

  struct Row {
    std::string text;
  };
  const std::vector<std::string> solvers{"ppdna", "admm"};
  std::vector<Row> rows(cells.size() * solvers.size());
  const std::string instance = fs::path(manifest).parent_path().filename().string();

  auto run_cell = [&](size_t idx) {
    const ggl::GglParams& params = cells[idx / solvers.size()];
    const std::string& solver = solvers[idx % solvers.size()];
    std::ostringstream line;
    line.precision(10);
    line << instance << ',' << params.lambda1 << ',' << params.lambda2 << ',' << solver << ',';
    try {
      SolveOutcome out = solver == "ppdna" ? run_ppdna(data, params, pcfg_base, "")
                                           : run_admm(data, params, acfg_base, "");
      const auto [nnz, density] = ggl::nnz_density(out.sparse_theta);
      (void)nnz;
      line << density << ',' << out.summary["iteration_display"].get<std::string>() << ','
           << out.wall_ms / 1000.0 << ',' << out.eta << ',' << out.pobj << ','
           << (out.converged ? "ok" : "cap");
    } catch (const std::exception& e) {
      line << ",,,,"
           << "failed";
      std::cerr << "compare cell (" << params.lambda1 << "," << params.lambda2 << "," << solver
                << ") failed: " << e.what() << "\n";
    }
    rows[idx].text = line.str();
  };

  const int threads = std::min<int>(thread_count_from_env(), static_cast<int>(rows.size()));
  if (threads <= 1) {
    for (size_t i = 0; i < rows.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    std::mutex next_mutex;
    size_t next = 0;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        while (true) {
          size_t idx;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= rows.size()) return;
            idx = next++;
          }
          run_cell(idx);
        }
      });
    for (auto& th : pool) th.join();
  }

  std::ostringstream csv;
  csv << "instance,lambda1,lambda2,solver,density,iterations,time_s,error,pobj,status\n";
  for (const auto& r : rows) csv << r.text << '\n';
  write_text((fs::path(out_dir) / "compare.csv").string(), csv.str());
  std::cout << "compare: " << rows.size() << " rows -> " << (fs::path(out_dir) / "compare.csv")
            << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- metrics

int cmd_metrics(const std::string& truth_dir, const std::vector<std::string>& estimate_dirs,
                const std::string& out_path) {
  // class count from the truth export
  int kk = 0;
  while (fs::exists(fs::path(truth_dir) / ("truth_precision_" + std::to_string(kk + 1) + ".csv")))
    ++kk;
  if (kk == 0) throw std::invalid_argument("no truth_precision_*.csv under " + truth_dir);
  const ggl::GroundTruth truth = ggl::load_ground_truth(truth_dir, kk);

  json all = json::array();
  std::ostringstream roc;
  roc << "estimate,lambda1,lambda2,w1,w2,tp,fp,fn,sse,tp_diff,fp_diff,nnz,density\n";
  for (const auto& dir : estimate_dirs) {
    std::vector<ggl::Matrix> blocks;
    for (int k = 0; k < kk; ++k) {
      const std::string f = (fs::path(dir) / ("theta_" + std::to_string(k + 1) + ".csv")).string();
      blocks.push_back(ggl::read_csv_matrix(f));
    }
    const ggl::Ensemble est = ggl::Ensemble::from_blocks(std::move(blocks));
    const ggl::EdgeReport rep = ggl::edge_report(est, truth);
    json j = ggl::edge_report_json(rep);
    j["estimate_dir"] = dir;
    double l1 = 0, l2 = 0, w1 = 0, w2 = 0;
    const fs::path sumf = fs::path(dir) / "summary.json";
    if (fs::exists(sumf)) {
      std::ifstream in(sumf);
      json s;
      in >> s;
      l1 = s.value("lambda1", 0.0);
      l2 = s.value("lambda2", 0.0);
      w1 = s.value("w1", 0.0);
      w2 = s.value("w2", 0.0);
      j["lambda1"] = l1;
      j["lambda2"] = l2;
    }
    all.push_back(j);
    roc.precision(10);
    roc << dir << ',' << l1 << ',' << l2 << ',' << w1 << ',' << w2 << ',' << rep.tp_total << ','
        << rep.fp_total << ',' << rep.fn_total << ',' << rep.sse << ',' << rep.tp_diff_total << ','
        << rep.fp_diff_total << ',' << rep.nnz << ',' << rep.density << '\n';
    std::cout << "metrics " << dir << ": tp=" << rep.tp_total << " fp=" << rep.fp_total
              << " fn=" << rep.fn_total << " sse=" << rep.sse << " nnz=" << rep.nnz << "\n";
  }
  const json out = all.size() == 1 ? all.front() : all;
  write_text(out_path, out.dump(2) + "\n");
  if (estimate_dirs.size() > 1) {
    const fs::path roc_path = fs::path(out_path).parent_path() / "roc.csv";
    write_text(roc_path.string(), roc.str());
  }
  return kExitOk;
}

// -------------------------------------------------------------------- rate

int cmd_rate(const std::string& manifest, const std::string& out_dir, const PenaltyChoice& penalty,
             const std::string& policy, double sigma_fixed, double sigma0, double zeta,
             double ref_tol, double tol, double ref_sigma_max, double warm_eta,
             const ggl::PpdnaConfig& base) {
  ensure_dir(out_dir);
  const ggl::ProblemData data = ggl::load_problem(manifest);
  const ggl::GglParams params = penalty.resolve();

  // Reference solve at high accuracy. The achievable eta_P floor scales like
  // sigma * machine epsilon (V = Theta + sigma*X is formed at magnitude
  // sigma), so the reference runs with a moderate sigma cap and more outer
  // iterations instead of a huge sigma.
  ggl::PpdnaConfig ref_cfg = base;
  ref_cfg.epsilon = ref_tol;
  ref_cfg.record_iterates = false;
  ref_cfg.sigma_max = ref_sigma_max;
  ref_cfg.max_outer_iters = std::max(base.max_outer_iters, 400);
  const ggl::PpdnaResult ref = ggl::solve_ppdna(data, params, ref_cfg);

  // Demonstration runs: the growth policy starts cold so the whole decay of
  // d_t is visible; a frozen huge sigma makes the first cold subproblem
  // intractable (it is the original problem solved exactly in one shot), so
  // the fixed policy takes a light ADMM start down to eta_A ~ warm_eta and
  // shows its constant-rate decay from there.
  ggl::PpdnaConfig run_cfg = base;
  run_cfg.epsilon = tol;
  run_cfg.record_iterates = true;
  run_cfg.require_both_criteria = true;  // the linear-rate regime executes both criteria
  run_cfg.warm_start.enabled = false;
  run_cfg.max_outer_iters = std::max(base.max_outer_iters, 400);
  if (policy == "fixed") {
    run_cfg.sigma0 = sigma_fixed;
    run_cfg.sigma_max = sigma_fixed;
    run_cfg.warm_start.enabled = true;
    run_cfg.warm_start.max_iters = 1000;
    run_cfg.warm_start.tol_multiplier = warm_eta / tol;
  } else if (policy == "growth") {
    run_cfg.sigma0 = sigma0;
    run_cfg.sigma_growth = zeta;
  } else {
    throw std::invalid_argument("unknown sigma policy '" + policy + "' (use fixed or growth)");
  }

  ggl::SolveTrace trace;
  bool converged = false;
  try {
    ggl::PpdnaResult run = ggl::solve_ppdna(data, params, run_cfg);
    trace = std::move(run.trace);
    converged = run.converged;
  } catch (const ggl::PpdnaFailure& f) {
    trace = f.trace;  // plot whatever progress exists
    std::cerr << "rate: demo run stopped early: " << f.what() << "\n";
  }

  const std::vector<double> d = ggl::distance_series(trace.iterates, ref.omega, ref.theta, ref.x);
  std::ostringstream csv;
  csv << "t,sigma,eta_p,d,log10_d\n";
  csv.precision(12);
  for (size_t t = 0; t < d.size(); ++t) {
    csv << trace.rows[t].iter << ',' << trace.rows[t].sigma << ',' << trace.rows[t].eta_p << ','
        << d[t] << ',' << (d[t] > 0 ? std::log10(d[t]) : -std::numeric_limits<double>::infinity())
        << '\n';
  }
  write_text((fs::path(out_dir) / "rate.csv").string(), csv.str());

  json summary;
  summary["policy"] = policy;
  summary["converged"] = converged;
  summary["ref_tol"] = ref_tol;
  summary["tol"] = tol;
  summary["ref_eta"] = ref.eta_p;
  summary["iterations"] = trace.rows.empty() ? 0 : trace.rows.back().iter;
  summary["lambda1"] = params.lambda1;
  summary["lambda2"] = params.lambda2;
  write_text((fs::path(out_dir) / "rate_summary.json").string(), summary.dump(2) + "\n");
  std::cout << "rate: policy=" << policy << " points=" << d.size() << " final_d="
            << (d.empty() ? 0.0 : d.back()) << " -> " << (fs::path(out_dir) / "rate.csv") << "\n";
  return converged ? kExitOk : kExitNoConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group graphical Lasso solvers and experiment tools"};
  app.require_subcommand(1);

  // ---- generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic nearest-neighbor instance");
  int gen_p = 100, gen_k = 3, gen_samples = 10000, gen_neighbors = 5, gen_extra_denom = 4;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--p", gen_p, "variable count");
  gen->add_option("--K", gen_k, "number of classes");
  gen->add_option("--samples", gen_samples, "Gaussian samples per class");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--neighbors", gen_neighbors, "mutual kNN neighbor count");
  gen->add_option("--extra-denom", gen_extra_denom,
                  "per-class extras = ceil(N/extra-denom); <= 0 disables");
  gen->add_option("--out", gen_out, "output directory")->required();

  // shared solver options
  std::string manifest, out_dir, solver = "ppdna", config_path;
  PenaltyChoice penalty;
  double opt_l1 = 0, opt_l2 = 0, opt_w1 = 0, opt_w2 = 0;
  double tol = 1e-6;
  ggl::PpdnaConfig pcfg;
  ggl::AdmmConfig acfg;
  bool no_warm_start = false, no_admm_adapt = false;

  auto add_solver_options = [&](CLI::App* cmd, bool with_solver_choice) {
    cmd->add_option("--manifest", manifest, "problem manifest JSON")->required();
    cmd->add_option("--out", out_dir, "output directory")->required();
    if (with_solver_choice) cmd->add_option("--solver", solver, "ppdna or admm");
    cmd->add_option("--lambda1", opt_l1, "element-wise l1 weight");
    cmd->add_option("--lambda2", opt_l2, "group l2 weight");
    cmd->add_option("--w1", opt_w1, "sparsity control (reparameterized)");
    cmd->add_option("--w2", opt_w2, "similarity control (reparameterized)");
    cmd->add_option("--tol", tol, "KKT residual target");
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    cmd->add_option("--sigma0", pcfg.sigma0, "initial proximal penalty");
    cmd->add_option("--zeta", pcfg.sigma_growth, "sigma growth ratio");
    cmd->add_option("--sigma-max", pcfg.sigma_max, "sigma cap");
    cmd->add_option("--max-outer", pcfg.max_outer_iters, "outer iteration cap");
    cmd->add_flag("--no-warm-start", no_warm_start, "start from the identity instead of ADMM");
    cmd->add_option("--warm-iters", pcfg.warm_start.max_iters, "warm-start ADMM iteration cap");
    cmd->add_option("--tau-admm", acfg.tau, "ADMM step length");
    cmd->add_option("--admm-sigma0", acfg.sigma, "initial ADMM penalty");
    cmd->add_option("--admm-max-iters", acfg.max_iters, "ADMM iteration cap");
    cmd->add_flag("--no-admm-adapt", no_admm_adapt, "freeze the ADMM penalty");
  };

  auto* solve = app.add_subcommand("solve", "solve one instance");
  add_solver_options(solve, true);

  auto* compare = app.add_subcommand("compare", "run both solvers over a penalty grid");
  std::string grid, grid_w;
  compare->add_option("--manifest", manifest, "problem manifest JSON")->required();
  compare->add_option("--out", out_dir, "output directory")->required();
  compare->add_option("--grid", grid, "lambda pairs 'l1:l2;l1:l2;...'");
  compare->add_option("--grid-w", grid_w, "reparameterized pairs 'w1:w2;...'");
  compare->add_option("--tol", tol, "KKT residual target");
  compare->add_option("--config", config_path, "JSON config file (flags override it)");

  auto* metrics = app.add_subcommand("metrics", "score estimates against the planted truth");
  std::string truth_dir, metrics_out = "metrics.json";
  std::vector<std::string> estimate_dirs;
  metrics->add_option("--truth-dir", truth_dir, "directory with truth_precision_*.csv")->required();
  metrics->add_option("--estimate-dir", estimate_dirs, "solve output directory (repeatable)")
      ->required();
  metrics->add_option("--out", metrics_out, "metrics JSON path");

  auto* rate = app.add_subcommand("rate", "convergence-rate trace against a reference solution");
  std::string policy = "fixed";
  double sigma_fixed = 1e8, rate_sigma0 = 1.0, rate_zeta = 1.3, ref_tol = 1e-10;
  double rate_tol = 1e-8, ref_sigma_max = 1e5, rate_warm_eta = 1e-2;
  rate->add_option("--manifest", manifest, "problem manifest JSON")->required();
  rate->add_option("--out", out_dir, "output directory")->required();
  rate->add_option("--lambda1", opt_l1, "element-wise l1 weight");
  rate->add_option("--lambda2", opt_l2, "group l2 weight");
  rate->add_option("--w1", opt_w1, "sparsity control");
  rate->add_option("--w2", opt_w2, "similarity control");
  rate->add_option("--policy", policy, "fixed or growth");
  rate->add_option("--sigma", sigma_fixed, "fixed sigma value");
  rate->add_option("--sigma0", rate_sigma0, "growth policy: initial sigma");
  rate->add_option("--zeta", rate_zeta, "growth policy: ratio");
  rate->add_option("--ref-tol", ref_tol, "reference solve accuracy");
  rate->add_option("--ref-sigma-max", ref_sigma_max, "sigma cap for the reference solve");
  rate->add_option("--tol", rate_tol, "demo run accuracy");
  rate->add_option("--warm-eta", rate_warm_eta, "fixed policy: ADMM pre-solve target eta_A");
  rate->add_option("--config", config_path, "JSON config file (flags override it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    // config file < CLI flags, applied to the active subcommand
    CLI::App* active = app.get_subcommands().front();
    const ConfigOverlay overlay = load_overlay(config_path);
    if (active != gen && active != metrics) {
      overlay.apply(*active, "--tol", "tol", tol);
      if (active == solve || active == compare || active == rate) {
        overlay.apply(*active, "--sigma0", "sigma0", pcfg.sigma0);
        overlay.apply(*active, "--zeta", "zeta", pcfg.sigma_growth);
        overlay.apply(*active, "--sigma-max", "sigma_max", pcfg.sigma_max);
        overlay.apply(*active, "--max-outer", "max_outer", pcfg.max_outer_iters);
        overlay.apply(*active, "--warm-iters", "warm_iters", pcfg.warm_start.max_iters);
        overlay.apply(*active, "--tau-admm", "tau_admm", acfg.tau);
        overlay.apply(*active, "--admm-sigma0", "admm_sigma0", acfg.sigma);
        overlay.apply(*active, "--admm-max-iters", "admm_max_iters", acfg.max_iters);
      }
    }
    pcfg.epsilon = tol;
    acfg.tol = tol;
    pcfg.warm_start.enabled = !no_warm_start;
    acfg.adapt.enabled = !no_admm_adapt;
    pcfg.warm_admm.tau = acfg.tau;
    pcfg.warm_admm.sigma = acfg.sigma;
    pcfg.warm_admm.adapt = acfg.adapt;

    auto fill_penalty = [&](CLI::App* cmd) {
      if (cmd->count("--lambda1")) penalty.lambda1 = opt_l1;
      if (cmd->count("--lambda2")) penalty.lambda2 = opt_l2;
      if (cmd->count("--w1")) penalty.w1 = opt_w1;
      if (cmd->count("--w2")) penalty.w2 = opt_w2;
      if (!penalty.lambda1 && !penalty.lambda2 && !penalty.w1 && !penalty.w2) {
        if (overlay.values.contains("lambda1")) penalty.lambda1 = overlay.values["lambda1"].get<double>();
        if (overlay.values.contains("lambda2")) penalty.lambda2 = overlay.values["lambda2"].get<double>();
        if (overlay.values.contains("w1")) penalty.w1 = overlay.values["w1"].get<double>();
        if (overlay.values.contains("w2")) penalty.w2 = overlay.values["w2"].get<double>();
      }
    };

    if (app.got_subcommand(gen)) {
      return cmd_generate(gen_p, gen_k, gen_samples, gen_seed, gen_neighbors, gen_extra_denom,
                          gen_out);
    }
    if (app.got_subcommand(solve)) {
      fill_penalty(solve);
      return cmd_solve(manifest, out_dir, solver, penalty, pcfg, acfg);
    }
    if (app.got_subcommand(compare)) {
      return cmd_compare(manifest, out_dir, grid, grid_w, pcfg, acfg);
    }
    if (app.got_subcommand(metrics)) {
      return cmd_metrics(truth_dir, estimate_dirs, metrics_out);
    }
    if (app.got_subcommand(rate)) {
      fill_penalty(rate);
      return cmd_rate(manifest, out_dir, penalty, policy, sigma_fixed, rate_sigma0, rate_zeta,
                      ref_tol, rate_tol, ref_sigma_max, rate_warm_eta, pcfg);
    }
    return kExitUsage;
  } catch (const ggl::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ggl::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
