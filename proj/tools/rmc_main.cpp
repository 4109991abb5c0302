#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rmc/errors.hpp"
#include "rmc/io.hpp"
#include "rmc/metrics.hpp"
#include "rmc/obsmat.hpp"
#include "rmc/solver.hpp"
#include "rmc/synth.hpp"

namespace fs = std::filesystem;
using namespace rmc;

namespace {

// instance directory layout
constexpr const char* kObservedFile = "observed.mtx";
constexpr const char* kSStarFile = "s_star.mtx";
constexpr const char* kUStarFile = "u_star.txt";
constexpr const char* kSigmaStarFile = "sigma_star.txt";
constexpr const char* kVStarFile = "v_star.txt";
constexpr const char* kManifestFile = "manifest.txt";

// run directory layout
constexpr const char* kTraceFile = "trace.csv";
constexpr const char* kXFile = "x.txt";
constexpr const char* kSigmaFile = "sigma.txt";
constexpr const char* kYFile = "y.txt";
constexpr const char* kSFile = "s.mtx";
constexpr const char* kRunManifestFile = "run_manifest.txt";

struct SynthArgs {
  std::size_t rows = 0, cols = 0, rank = 0;
  double p = 0.0, rho = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  bool strict_a2 = false;
};

int cmd_synth(const SynthArgs& args) {
  InstanceSpec spec;
  spec.d_rows = args.rows;
  spec.d_cols = args.cols;
  spec.r = args.rank;
  spec.p = args.p;
  spec.rho = args.rho;
  spec.seed = args.seed;
  spec.strict_per_row = args.strict_a2;
  auto [obs, gt] = generate(spec);

  fs::create_directories(args.out);
  fs::path dir(args.out);
  write_matrix_market(obs, (dir / kObservedFile).string());
  write_matrix_market(gt.rows, gt.cols, gt.s_star.entries, (dir / kSStarFile).string());
  write_matrix_text((dir / kUStarFile).string(), gt.u_star);
  write_vector_text((dir / kSigmaStarFile).string(), gt.sigma_star);
  write_matrix_text((dir / kVStarFile).string(), gt.v_star);
  write_manifest((dir / kManifestFile).string(),
                 {{"d_rows", std::to_string(gt.rows)},
                  {"d_cols", std::to_string(gt.cols)},
                  {"r", std::to_string(gt.rank)},
                  {"p", format_double(gt.p)},
                  {"rho", format_double(gt.rho)},
                  {"seed", std::to_string(gt.seed)}});
  std::cout << "wrote instance to " << args.out << " (|Omega| = " << obs.nnz()
            << ", corruption entries = " << gt.s_star.entries.size() << ")\n";
  return 0;
}

struct SolveArgs {
  std::string instance;
  std::string out;
  SolverConfig cfg;
  bool timing = false;
};

int cmd_solve(const SolveArgs& args) {
  fs::path inst(args.instance);
  ObservedMatrix obs = read_matrix_market((inst / kObservedFile).string());

  RunResult result = run(obs, args.cfg);
  const SolverState& st = result.state;

  fs::create_directories(args.out);
  fs::path dir(args.out);
  {
    std::FILE* f = std::fopen((dir / kTraceFile).string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot open trace file");
    std::fprintf(f, "iter,tau,rank,dropped,wall_ms\n");
    for (const TraceRecord& rec : st.trace) {
      if (args.timing)
        std::fprintf(f, "%zu,%.17g,%zu,%zu,%.17g\n", rec.iter, rec.tau, rec.rank, rec.dropped,
                     rec.wall_ms);
      else
        std::fprintf(f, "%zu,%.17g,%zu,%zu,0\n", rec.iter, rec.tau, rec.rank, rec.dropped);
    }
    std::fclose(f);
  }
  write_matrix_text((dir / kXFile).string(), st.factors.x);
  write_vector_text((dir / kSigmaFile).string(), st.factors.sigma);
  write_matrix_text((dir / kYFile).string(), st.factors.y);
  write_matrix_market(obs.rows(), obs.cols(), st.correction.entries, (dir / kSFile).string());

  double wall_total = 0.0;
  for (const TraceRecord& rec : st.trace) wall_total += rec.wall_ms;
  std::string drop_list;
  for (std::size_t ev : st.drop_events) {
    if (!drop_list.empty()) drop_list += ' ';
    drop_list += std::to_string(ev);
  }

  Manifest mf{{"instance", args.instance},
              {"observed", (inst / kObservedFile).string()},
              {"trace", kTraceFile},
              {"x", kXFile},
              {"sigma", kSigmaFile},
              {"y", kYFile},
              {"s", kSFile},
              {"outcome", result.outcome == SolveOutcome::Converged ? "Converged" : "MaxIters"},
              {"final_tau", format_double(st.tau)},
              {"final_rank", std::to_string(st.factors.rank())},
              {"iterations", std::to_string(st.iter)},
              {"wall_ms", args.timing ? format_double(wall_total) : "0"},
              {"s_budget", std::to_string(args.cfg.s)},
              {"r0", std::to_string(args.cfg.r0)},
              {"kappa", format_double(args.cfg.kappa)},
              {"tol", format_double(args.cfg.tol)},
              {"max_iters", std::to_string(args.cfg.max_iters)},
              {"stagnation_window", std::to_string(args.cfg.stagnation_window)},
              {"stagnation_ratio", format_double(args.cfg.stagnation_ratio)},
              {"rank_check_period", std::to_string(args.cfg.rank_check_period)},
              {"threads", std::to_string(args.cfg.threads)},
              {"seed", std::to_string(args.cfg.seed)},
              {"subsample_per_row", std::to_string(args.cfg.subsample_per_row)},
              {"drop_events", drop_list},
              {"thin_row_warnings", std::to_string(st.thin_row_warnings)},
              {"empty_row_warnings", std::to_string(st.empty_row_warnings)}};
  // echo the instance manifest so a run is self-describing
  if (fs::exists(inst / kManifestFile))
    for (const auto& [k, v] : read_manifest((inst / kManifestFile).string()))
      mf.emplace_back("instance_" + k, v);
  write_manifest((dir / kRunManifestFile).string(), mf);

  if (st.thin_row_warnings || st.empty_row_warnings)
    std::cerr << "warning: " << st.thin_row_warnings << " thin and " << st.empty_row_warnings
              << " empty row/column systems encountered\n";
  std::cout << (result.outcome == SolveOutcome::Converged ? "Converged" : "MaxIters")
            << " after " << st.iter << " iterations, tau = " << format_double(st.tau)
            << ", rank = " << st.factors.rank() << "\n";
  return result.outcome == SolveOutcome::Converged ? 0 : 2;
}

struct EvalArgs {
  std::string run;
  std::string instance;
};

int cmd_eval(const EvalArgs& args) {
  fs::path rdir(args.run), idir(args.instance);

  FactorTriple factors{read_matrix_text((rdir / kXFile).string()),
                       read_vector_text((rdir / kSigmaFile).string()),
                       read_matrix_text((rdir / kYFile).string())};
  ObservedMatrix s_est = read_matrix_market((rdir / kSFile).string());
  ObservedMatrix obs = read_matrix_market((idir / kObservedFile).string());

  Manifest report;
  report.emplace_back("rank", std::to_string(factors.rank()));

  // residual against the instance, independent of whatever the run reported
  std::vector<std::size_t> excl;
  {
    // map the correction support back onto observed entry ids
    std::size_t cursor = 0;
    for (const Entry& e : s_est.entries()) {
      auto [lo, hi] = obs.row_range(e.row);
      for (std::size_t id = std::max(lo, cursor); id < hi; ++id) {
        if (obs.entry(id).col == e.col) {
          excl.push_back(id);
          break;
        }
      }
      cursor = 0;
    }
  }
  MaskedView view(obs, excl);
  ProjectedResidual res = project_residual(view, factors.x, factors.sigma, factors.y);
  report.emplace_back("tau_recomputed", format_double(res.norm));

  const bool have_gt = fs::exists(idir / kUStarFile) && fs::exists(idir / kSigmaStarFile) &&
                       fs::exists(idir / kVStarFile);
  if (!have_gt) {
    std::cerr << "warning: ground truth files missing; residual-only report\n";
    report.emplace_back("ground_truth", "missing");
  } else {
    GroundTruth gt;
    gt.u_star = read_matrix_text((idir / kUStarFile).string());
    gt.sigma_star = read_vector_text((idir / kSigmaStarFile).string());
    gt.v_star = read_matrix_text((idir / kVStarFile).string());
    gt.rows = gt.u_star.rows();
    gt.cols = gt.v_star.rows();
    gt.rank = gt.sigma_star.size();
    if (fs::exists(idir / kManifestFile)) {
      Manifest im = read_manifest((idir / kManifestFile).string());
      if (const std::string* v = manifest_find(im, "p")) gt.p = std::stod(*v);
      if (const std::string* v = manifest_find(im, "rho")) gt.rho = std::stod(*v);
    }
    if (fs::exists(idir / kSStarFile)) {
      ObservedMatrix s_star = read_matrix_market((idir / kSStarFile).string());
      gt.s_star.entries = s_star.entries();
    }
    const bool desk = gt.rows * gt.cols <= InstanceSpec{}.dense_cap;
    if (desk) {
      Matrix l(gt.rows, gt.cols);
      for (std::size_t i = 0; i < gt.rows; ++i)
        for (std::size_t j = 0; j < gt.cols; ++j) {
          double v = 0.0;
          for (std::size_t c = 0; c < gt.rank; ++c)
            v += gt.u_star(i, c) * gt.sigma_star[c] * gt.v_star(j, c);
          l(i, j) = v;
        }
      gt.l_star = std::move(l);
    }

    RecoveryError err = recovery_error(factors, gt);
    report.emplace_back("rel_frobenius", format_double(err.rel_frobenius));
    report.emplace_back("max_norm", format_double(err.max_norm));
    report.emplace_back("angle_x", format_double(err.angle_x.sines.empty() ? 0.0 : err.angle_x.sines[0]));
    report.emplace_back("angle_y", format_double(err.angle_y.sines.empty() ? 0.0 : err.angle_y.sines[0]));
    report.emplace_back("rank_mismatch", err.rank_mismatch ? "true" : "false");

    if (desk) {
      // stable rank of the correction error S - S*
      Matrix diff(gt.rows, gt.cols);
      for (const Entry& e : s_est.entries()) diff(e.row, e.col) += e.value;
      for (const Entry& e : gt.s_star.entries) diff(e.row, e.col) -= e.value;
      if (frobenius_norm(diff) > 0.0)
        report.emplace_back("stable_rank_s_diff", format_double(stable_rank(diff)));
      else
        report.emplace_back("stable_rank_s_diff", "0");
      try {
        Theorem1Report t1 = theorem1_check(gt);
        report.emplace_back("theorem1_cond_a_lhs", format_double(t1.cond_a_lhs));
        report.emplace_back("theorem1_cond_a_rhs", format_double(t1.cond_a_rhs));
        report.emplace_back("theorem1_cond_b_lhs", format_double(t1.cond_b_lhs));
        report.emplace_back("theorem1_cond_b_rhs", format_double(t1.cond_b_rhs));
        report.emplace_back("theorem1_eta", format_double(t1.eta));
        report.emplace_back("theorem1_holds", t1.holds ? "true" : "false");
      } catch (const UnsupportedAtScale&) {
        report.emplace_back("theorem1", "skipped_at_scale");
      }
    } else {
      report.emplace_back("dense_diagnostics", "skipped_at_scale");
    }
  }

  for (const auto& [k, v] : report) std::cout << k << " = " << v << "\n";
  write_manifest((rdir / "eval.txt").string(), report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust matrix completion via alternating least squares"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a ground-truthed instance");
  synth->add_option("--rows", synth_args.rows, "row count")->required();
  synth->add_option("--cols", synth_args.cols, "column count")->required();
  synth->add_option("--rank", synth_args.rank, "true rank")->required();
  synth->add_option("--p", synth_args.p, "observation probability")->required();
  synth->add_option("--rho", synth_args.rho, "corruption probability")->required();
  synth->add_option("--seed", synth_args.seed, "master seed")->default_val(0);
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_flag("--strict-a2", synth_args.strict_a2,
                  "exactly floor(rho*cols) corruptions per row");

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "run the solver on an instance directory");
  solve->add_option("--instance", solve_args.instance, "instance directory")->required();
  solve->add_option("--out", solve_args.out, "run output directory")->required();
  solve->add_option("--s", solve_args.cfg.s, "sparsity budget")->default_val(0);
  solve->add_option("--r0", solve_args.cfg.r0, "initial rank estimate")->required();
  solve->add_option("--kappa", solve_args.cfg.kappa, "condition number cap")->default_val(1e6);
  solve->add_option("--tol", solve_args.cfg.tol, "residual tolerance")->default_val(1e-7);
  solve->add_option("--max-iters", solve_args.cfg.max_iters)->default_val(500);
  solve->add_option("--stagnation-window", solve_args.cfg.stagnation_window)->default_val(5);
  solve->add_option("--stagnation-ratio", solve_args.cfg.stagnation_ratio)->default_val(0.9);
  solve->add_option("--rank-check-period", solve_args.cfg.rank_check_period)->default_val(5);
  solve->add_option("--threads", solve_args.cfg.threads, "1 = bitwise-reproducible serial mode")
      ->default_val(1);
  solve->add_option("--seed", solve_args.cfg.seed, "seed for the initializer")->default_val(0);
  solve->add_option("--subsample-per-row", solve_args.cfg.subsample_per_row,
                    "cap observations used per row solve (0 = off)")
      ->default_val(0);
  solve->add_flag("--timing", solve_args.timing,
                  "write measured wall times (trace is no longer run-to-run identical)");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "metrics report for a finished run");
  eval->add_option("--run", eval_args.run, "run directory")->required();
  eval->add_option("--instance", eval_args.instance, "instance directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (solve->parsed()) return cmd_solve(solve_args);
    if (eval->parsed()) return cmd_eval(eval_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
