#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncsbp/config.hpp"
#include "ncsbp/coupling.hpp"
#include "ncsbp/problems.hpp"
#include "ncsbp/sbp_operator.hpp"

using nlohmann::json;
using namespace ncsbp;

namespace {

int check_ops(int p_min, int p_max, int gap_max, double tol) {
  json out;
  out["tolerance"] = tol;
  bool ok = true;
  json ops = json::array();
  for (int p = p_min; p <= p_max; ++p) {
    const SbpReport r = verify_sbp_definition(build_lgl_sbp(p));
    const bool pass = r.passes(tol);
    ok = ok && pass;
    ops.push_back({{"p", p},
                   {"accuracy", r.accuracy},
                   {"sbp", r.sbp},
                   {"skew", r.skew},
                   {"quadrature", r.quadrature},
                   {"min_weight", r.min_weight},
                   {"node_symmetry", r.node_symmetry},
                   {"pass", pass}});
  }
  out["operators"] = ops;
  json pairs = json::array();
  for (int p = p_min; p <= p_max; ++p) {
    for (int gap = 1; gap <= gap_max; ++gap) {
      const SbpOp1D lo = build_lgl_sbp(p);
      const SbpOp1D hi = build_lgl_sbp(p + gap);
      const InterpolationPair pair = build_interpolation_pair(lo, hi);
      const InterpolationReport ir = verify_interpolation_pair(pair, lo, hi);
      const MacroReport mr = verify_macro_sbp(assemble_macro_operator(lo, hi, pair), lo, hi);
      const bool pass = ir.adjoint <= tol && ir.low_to_high_exact <= 1e3 * tol &&
                        ir.high_to_low_exact <= 1e3 * tol && ir.constants <= tol && mr.passes(tol);
      ok = ok && pass;
      pairs.push_back({{"p_low", p},
                       {"p_high", p + gap},
                       {"adjoint", ir.adjoint},
                       {"low_to_high_exact", ir.low_to_high_exact},
                       {"high_to_low_exact", ir.high_to_low_exact},
                       {"high_to_low_witness", ir.high_to_low_witness},
                       {"constants", ir.constants},
                       {"vandermonde", ir.vandermonde},
                       {"macro_skew", mr.skew},
                       {"macro_boundary", mr.boundary},
                       {"macro_sbp", mr.sbp},
                       {"macro_constant", mr.constant},
                       {"pass", pass}});
    }
  }
  out["interpolation"] = pairs;
  out["pass"] = ok;
  std::cout << out.dump(2) << "\n";
  return ok ? 0 : 1;
}

std::vector<int> parse_grids(const std::string& text) {
  std::vector<int> grids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    grids.push_back(std::stoi(item));
  }
  if (grids.empty()) {
    throw std::invalid_argument("empty grid list");
  }
  return grids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-stable p-nonconforming SBP solver for compressible Navier-Stokes"};
  app.require_subcommand(1);

  int p_min = 1;
  int p_max = 8;
  int gap_max = 2;
  double tol = 1e-12;
  auto* ops_cmd = app.add_subcommand("check-ops", "Verify operator and interpolation identities (JSON)");
  ops_cmd->add_option("--p-min", p_min)->check(CLI::Range(1, kMaxDegree));
  ops_cmd->add_option("--p-max", p_max)->check(CLI::Range(1, kMaxDegree));
  ops_cmd->add_option("--gap-max", gap_max)->check(CLI::Range(1, 4));
  ops_cmd->add_option("--tol", tol);

  ConvergenceOptions conv;
  std::string problem = "viscous-shock";
  std::string grids = "4,8,16";
  std::string conv_out;
  std::string mode = "es";
  bool no_ip = false;
  auto* conv_cmd = app.add_subcommand("converge", "Viscous-shock convergence study");
  conv_cmd->add_option("--problem", problem)->check(CLI::IsMember({"viscous-shock"}));
  conv_cmd->add_option("--p", conv.p)->check(CLI::Range(1, 8));
  conv_cmd->add_flag("--mixed", conv.mixed, "degrees p and p+1");
  conv_cmd->add_option("--grids", grids, "comma-separated elements per direction");
  conv_cmd->add_option("--seed", conv.seed);
  conv_cmd->add_option("--t-end", conv.t_end);
  conv_cmd->add_option("--amplitude", conv.amplitude);
  conv_cmd->add_option("--rtol", conv.integrator.rtol);
  conv_cmd->add_option("--atol", conv.integrator.atol);
  conv_cmd->add_option("--mode", mode)->check(CLI::IsMember({"ec", "es"}));
  conv_cmd->add_option("--ip-scale", conv.scheme.ip_scale);
  conv_cmd->add_flag("--no-ip", no_ip);
  conv_cmd->add_flag("--slab", conv.slab, "one periodic element across x2 and x3");
  std::string dissipation = "scalar";
  conv_cmd->add_option("--dissipation", dissipation)->check(CLI::IsMember({"scalar", "matrix"}));
  conv_cmd->add_option("--out", conv_out, "CSV report");
  conv_cmd->add_flag("--verbose", conv.verbose);

  std::string config_path;
  std::string monitors_out;
  std::string monitors_json;
  auto* run_cmd = app.add_subcommand("run", "Time integration from a configuration file");
  run_cmd->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", monitors_out, "monitor CSV");
  run_cmd->add_option("--json", monitors_json, "monitor JSON");

  FreestreamOptions fs;
  std::string fs_boundary = "exact";
  std::string fs_mode = "both";
  auto* fs_cmd = app.add_subcommand("freestream", "Constant-state residual on a perturbed mesh");
  fs_cmd->add_option("--grid", fs.grid)->check(CLI::PositiveNumber);
  fs_cmd->add_option("--p", fs.p)->check(CLI::Range(1, 8));
  fs_cmd->add_flag("--mixed,!--conforming", fs.mixed);
  fs_cmd->add_option("--seed", fs.seed);
  fs_cmd->add_option("--amplitude", fs.amplitude);
  fs_cmd->add_option("--mu", fs.mu);
  fs_cmd->add_option("--boundary", fs_boundary)->check(CLI::IsMember({"exact", "periodic", "mirror"}));
  fs_cmd->add_option("--mode", fs_mode)->check(CLI::IsMember({"ec", "es", "both"}));

  MeshSpec mesh_spec;
  int mesh_grid = 4;
  int mesh_p = 2;
  bool mesh_mixed = false;
  std::string mesh_out;
  auto* mesh_cmd = app.add_subcommand("mesh", "Write a seeded perturbed mesh as JSON");
  mesh_cmd->add_option("--grid", mesh_grid)->check(CLI::PositiveNumber);
  mesh_cmd->add_option("--p", mesh_p)->check(CLI::Range(1, 8));
  mesh_cmd->add_flag("--mixed", mesh_mixed);
  mesh_cmd->add_option("--seed", mesh_spec.seed);
  mesh_cmd->add_option("--amplitude", mesh_spec.amplitude);
  mesh_cmd->add_option("--out", mesh_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ops_cmd) {
      return check_ops(p_min, p_max, gap_max, tol);
    }
    if (*conv_cmd) {
      conv.grids = parse_grids(grids);
      conv.scheme.mode = scheme_mode_from_string(mode);
      conv.scheme.interior_penalty = !no_ip;
      conv.scheme.dissipation = dissipation_kind_from_string(dissipation);
      const ConvergenceReport rep = run_convergence_study(conv);
      std::cout << rep.table();
      if (!conv_out.empty()) {
        rep.write_csv(conv_out);
      }
      for (const auto& row : rep.rows) {
        if (row.status != "completed") {
          std::cerr << "grid " << row.grid << ": " << row.status << "\n";
          return 2;
        }
      }
      return 0;
    }
    if (*run_cmd) {
      const KeyValueConfig cfg = KeyValueConfig::load(config_path);
      const TgvOptions opt = tgv_options_from_config(cfg);
      for (const auto& key : cfg.unused_keys()) {
        std::cerr << "warning: unused configuration key '" << key << "'\n";
      }
      const TgvRun run = run_tgv(opt);
      const auto& res = run.result;
      if (!monitors_out.empty()) {
        res.log.write_csv(monitors_out);
      }
      if (!monitors_json.empty()) {
        res.log.write_json(monitors_json);
      }
      std::cout << "status " << to_string(res.status) << " t " << res.t << " steps " << res.accepted
                << " rejected " << res.rejected << " rhs " << res.evaluations << "\n";
      if (!res.ok()) {
        std::cerr << res.message << "\n";
        return 2;
      }
      return 0;
    }
    if (*fs_cmd) {
      fs.boundary = boundary_kind_from_string(fs_boundary);
      json out = json::array();
      bool ok = true;
      for (const char* m : {"ec", "es"}) {
        if (fs_mode != "both" && fs_mode != m) {
          continue;
        }
        fs.scheme.mode = scheme_mode_from_string(m);
        const FreestreamReport r = freestream_check(fs);
        ok = ok && r.rhs_max <= 1e-10;
        out.push_back({{"mode", m},
                       {"elements", r.elements},
                       {"dofs", r.dofs},
                       {"gcl_before", r.stats.max_gcl_before},
                       {"gcl_after", r.stats.max_gcl_after},
                       {"metric_correction", r.stats.max_correction},
                       {"watertight", r.watertight},
                       {"rhs_max", r.rhs_max}});
      }
      std::cout << out.dump(2) << "\n";
      return ok ? 0 : 1;
    }
    if (*mesh_cmd) {
      mesh_spec.cells = {mesh_grid, mesh_grid, mesh_grid};
      mesh_spec.p_min = mesh_p;
      mesh_spec.p_max = mesh_mixed ? mesh_p + 1 : mesh_p;
      const std::string text = mesh_to_json(generate_perturbed_mesh(mesh_spec));
      if (mesh_out.empty()) {
        std::cout << text << "\n";
      } else {
        std::ofstream(mesh_out) << text << "\n";
      }
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
