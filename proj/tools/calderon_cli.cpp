// Command-line front end: forward solves, Born inversion, iteration, noise,
// catalog experiments, Fourier checks and L-curve traces.

#include "calderon/calderon.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace calderon;
namespace fs = std::filesystem;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::optional<int> nr, ntheta, i_cells, l_max, iters;
  std::optional<double> kappa, lambda, noise_eps;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned threads = 0;
  std::string gamma_path, dtn_path, recon_path, config_path;
  std::string experiment;
  double xi_max = 1.5;
  int xi_count = 12;
  int directions = 4;
  int moment_order = 30;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open " + path);
  return nlohmann::json::parse(is);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot write " + path);
  return os;
}

std::string out_file(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return (fs::path(o.out_dir) / name).string();
}

/// A conductivity file holds either a bare conductivity spec or a scenario with a "conductivity" key.
ConductivityModel load_conductivity(const std::string& path) {
  const nlohmann::json j = read_json(path);
  return parse_conductivity(j.contains("conductivity") ? j.at("conductivity") : j);
}

DtNMatrix load_dtn_checked(const std::string& path) {
  const DtNReadReport rep = load_dtn(path);
  if (rep.max_asymmetry > 1e-3) {
    std::cerr << "warning: DtN matrix departs from Hermitian symmetry by " << rep.max_asymmetry << '\n';
  }
  return rep.matrix;
}

Kappa data_kappa(const Options& o, const DtNMatrix& dtn) {
  if (o.kappa) return Kappa(*o.kappa);
  return Kappa(dtn.kappa().value_or(0.0));
}

BasisSpec basis_for(const Options& o, const DtNMatrix& dtn) {
  const int l_max = o.l_max.value_or(dtn.l_max());
  if (l_max > dtn.l_max()) throw std::invalid_argument("--l-max exceeds the l_max of the DtN data");
  return BasisSpec(o.i_cells.value_or(50), l_max);
}

DtNMatrix restrict_dtn(const DtNMatrix& dtn, const BasisSpec& basis) {
  if (basis.l_max == dtn.l_max()) return dtn;
  return dtn.truncated_positive(basis.l_max);
}

void write_reconstruction(const Options& o, const std::string& stem, const BornReconstruction& rec) {
  save_reconstruction(out_file(o, stem + ".json"), rec);
  write_csv(out_file(o, stem + ".csv"), rec.sample(build_grid(o.nr.value_or(50), o.ntheta.value_or(50))));
}

int cmd_forward(const Options& o) {
  const ConductivityModel model = run_stage("config", [&] { return load_conductivity(o.gamma_path); });
  const int l_max = o.l_max.value_or(24);
  DtNMatrix dtn = run_stage("forward", [&] {
    if (model.analytic()) return conformal_dtn_matrix(*model.layers, *model.map, l_max).matrix;
    const int nr = o.nr.value_or(50), nt = o.ntheta.value_or(50);
    if (nt / 2 <= l_max) throw std::invalid_argument("--l-max must be below ntheta / 2");
    return dtn_matrix(model.field, build_grid(nr, nt), l_max);
  });
  if (o.kappa) dtn.set_kappa(*o.kappa);
  const std::string path = out_file(o, "dtn.json");
  run_stage("output", [&] {
    save_dtn(path, dtn);
    return 0;
  });
  std::cout << "wrote " << path << '\n';
  return 0;
}

int cmd_born(const Options& o) {
  const DtNMatrix dtn = run_stage("config", [&] { return load_dtn_checked(o.dtn_path); });
  const BasisSpec basis = run_stage("config", [&] { return basis_for(o, dtn); });
  const Kappa kappa = run_stage("config", [&] { return data_kappa(o, dtn); });
  const BornReconstruction rec =
      run_stage("born", [&] { return born_reconstruct(restrict_dtn(dtn, basis), kappa, basis, o.lambda); });
  run_stage("output", [&] {
    write_reconstruction(o, "born", rec);
    if (!rec.trace.empty()) {
      auto os = open_out(out_file(o, "lcurve.csv"));
      write_lcurve_csv(os, rec.trace);
    }
    return 0;
  });
  std::cout << "lambda " << rec.lambda << ", residual " << rec.residual_norm << ", solution norm "
            << rec.solution_norm << '\n';
  return 0;
}

int cmd_iterate(const Options& o) {
  BornReconstruction born0;
  if (!o.recon_path.empty()) {
    born0 = run_stage("config", [&] { return load_reconstruction(o.recon_path); });
  } else {
    const DtNMatrix dtn = run_stage("config", [&] { return load_dtn_checked(o.dtn_path); });
    const BasisSpec basis = run_stage("config", [&] { return basis_for(o, dtn); });
    born0 = run_stage("born", [&] { return born_reconstruct(restrict_dtn(dtn, basis), Kappa{}, basis, o.lambda); });
  }
  std::optional<ConductivityModel> truth;
  if (!o.gamma_path.empty()) truth = run_stage("config", [&] { return load_conductivity(o.gamma_path); });
  IterationConfig cfg;
  cfg.steps = o.iters.value_or(1);
  cfg.forward_grid = build_grid(o.nr.value_or(50), o.ntheta.value_or(50));
  ComplexPolarFunction reference;
  if (truth) reference = [&](double r, double th) { return cplx(truth->field(r, th)); };
  const IterationResult res = run_stage("iterate", [&] {
    if (cfg.steps < 1) throw std::invalid_argument("--iters must be at least 1");
    return iterate_scheme(born0, cfg, reference);
  });
  run_stage("output", [&] {
    for (std::size_t n = 0; n < res.iterates.size(); ++n) {
      write_reconstruction(o, "iterate_" + std::to_string(n), res.iterates[n]);
    }
    if (!res.errors.empty()) {
      auto os = open_out(out_file(o, "errors.csv"));
      write_error_table_csv(os, res.errors);
      write_error_table_text(std::cout, res.errors);
    }
    return 0;
  });
  if (res.diverged) {
    std::cerr << "iterate: stopped early: " << res.stop_reason << '\n';
    return kExitNumerical;
  }
  return 0;
}

int cmd_noise(const Options& o) {
  const DtNMatrix dtn = run_stage("config", [&] { return load_dtn_checked(o.dtn_path); });
  const NoiseModel model{o.noise_eps.value_or(0.0), o.seed.value_or(20240611)};
  const DtNMatrix noisy = run_stage("noise", [&] { return add_noise(dtn, model); });
  const std::string path = out_file(o, "dtn_noisy.json");
  run_stage("output", [&] {
    save_dtn(path, noisy);
    return 0;
  });
  std::cout << "wrote " << path << " (" << noisy.provenance() << ")\n";
  return 0;
}

Scenario scenario_with_overrides(const Options& o) {
  Scenario s = o.config_path.empty() ? catalog_scenario(o.experiment) : scenario_from_json(read_json(o.config_path));
  if (o.nr || o.ntheta) {
    GridSize g = s.forward.value_or(s.work_grid);
    g.n_r = o.nr.value_or(g.n_r);
    g.n_theta = o.ntheta.value_or(g.n_theta);
    if (s.forward) s.forward = g;
    s.work_grid = g;
  }
  if (o.i_cells) s.i_cells = *o.i_cells;
  if (o.l_max) s.l_max = *o.l_max;
  if (o.kappa) s.kappa = *o.kappa;
  if (o.lambda) s.lambda = *o.lambda;
  if (o.noise_eps) s.noise_levels = {*o.noise_eps};
  if (o.seed) s.seed = *o.seed;
  if (o.iters) s.iterations = *o.iters;
  validate(s);
  return s;
}

int cmd_experiment(const Options& o) {
  const Scenario s = run_stage("config", [&] { return scenario_with_overrides(o); });
  const std::string dir = (fs::path(o.out_dir) / ("experiment_" + s.name)).string();
  const RunReport rep = run(s, dir);
  for (const auto& v : rep.variants) {
    std::cout << '[' << v.label << "] lambda = " << v.born.lambda << '\n';
    write_error_table_text(std::cout, v.errors);
    if (v.diverged) std::cout << "stopped: " << v.stop_reason << '\n';
  }
  std::cout << "outputs in " << dir << '\n';
  return 0;
}

int cmd_fourier_check(const Options& o) {
  const DtNMatrix dtn = run_stage("config", [&] { return load_dtn_checked(o.dtn_path); });
  const BornReconstruction rec = run_stage("config", [&] { return load_reconstruction(o.recon_path); });
  run_stage("config", [&] {
    if (!rec.kappa.is_zero() || (dtn.kappa() && *dtn.kappa() != 0.0)) {
      throw std::invalid_argument("fourier-check compares the kappa = 0 pairing with the moment series");
    }
    if (o.xi_count < 1 || o.directions < 1 || !(o.xi_max > 0.0)) throw std::invalid_argument("empty frequency sweep");
    return 0;
  });
  const Eigen::MatrixXcd mu = run_stage("fourier", [&] { return mu0_table(rec, o.moment_order); });
  auto pairing_os = open_out(out_file(o, "fourier_pairing.csv"));
  auto series_os = open_out(out_file(o, "fourier_series.csv"));
  auto cmp_os = open_out(out_file(o, "fourier_check.csv"));
  write_fourier_csv_header(pairing_os);
  write_fourier_csv_header(series_os);
  cmp_os << "xi1,xi2,abs_diff,pairing_tail,series_tail\n";
  cmp_os.precision(17);
  double worst = 0.0;
  for (int d = 0; d < o.directions; ++d) {
    const double alpha = kPi * d / o.directions;
    for (int k = 1; k <= o.xi_count; ++k) {
      const double rho = o.xi_max * k / o.xi_count;
      const Eigen::Vector2d xi(rho * std::cos(alpha), rho * std::sin(alpha));
      const FourierValue p = run_stage("fourier", [&] { return pairing_fourier_born_k0(dtn, xi); });
      const FourierValue s = run_stage("fourier", [&] { return series_fourier_k0(mu, xi); });
      write_fourier_csv_row(pairing_os, xi, p);
      write_fourier_csv_row(series_os, xi, s);
      const double diff = std::abs(p.value - s.value);
      worst = std::max(worst, diff);
      cmp_os << xi(0) << ',' << xi(1) << ',' << diff << ',' << p.tail_estimate << ',' << s.tail_estimate << '\n';
    }
  }
  std::cout << "max |pairing - series| = " << worst << " over |xi| <= " << o.xi_max << '\n';
  return 0;
}

int cmd_lcurve(const Options& o) {
  const DtNMatrix dtn = run_stage("config", [&] { return load_dtn_checked(o.dtn_path); });
  const BasisSpec basis = run_stage("config", [&] { return basis_for(o, dtn); });
  const Kappa kappa = run_stage("config", [&] { return data_kappa(o, dtn); });
  const LCurveSelection sel = run_stage("lcurve", [&] {
    const TikhonovSolver solver(assemble_system(restrict_dtn(dtn, basis), basis, kappa));
    return l_curve_select(solver, default_lambda_grid(solver.scale()));
  });
  run_stage("output", [&] {
    auto os = open_out(out_file(o, "lcurve.csv"));
    write_lcurve_csv(os, sel.trace);
    return 0;
  });
  std::cout << "selected lambda " << sel.lambda << " (index " << sel.index << ", "
            << (sel.sharp_corner ? "past the sharp corner at index " + std::to_string(sel.corner_index)
                                 : std::string("no sharp corner"))
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Born-approximation reconstruction of conductivities on the unit disk"};
  app.require_subcommand(1);
  Options o;

  auto grid_flags = [&](CLI::App* c) {
    c->add_option("--nr", o.nr, "radial grid nodes")->check(CLI::PositiveNumber);
    c->add_option("--ntheta", o.ntheta, "angular grid nodes")->check(CLI::PositiveNumber);
  };
  auto inverse_flags = [&](CLI::App* c) {
    c->add_option("--i-cells", o.i_cells, "radial cells I of the reconstruction basis")->check(CLI::PositiveNumber);
    c->add_option("--l-max", o.l_max, "highest boundary mode L")->check(CLI::PositiveNumber);
    c->add_option("--kappa", o.kappa, "background parameter kappa");
    c->add_option("--lambda", o.lambda, "fixed Tikhonov parameter (default: L-curve)")->check(CLI::PositiveNumber);
  };
  auto common_flags = [&](CLI::App* c) {
    c->add_option("--out-dir", o.out_dir, "output directory");
    c->add_option("--threads", o.threads, "worker thread cap (0 = all cores)");
  };

  auto* forward = app.add_subcommand("forward", "conductivity spec -> DtN JSON");
  forward->add_option("--gamma", o.gamma_path, "conductivity or scenario JSON")->required();
  grid_flags(forward);
  forward->add_option("--l-max", o.l_max, "highest boundary mode L")->check(CLI::PositiveNumber);
  forward->add_option("--kappa", o.kappa, "background parameter recorded with the data");
  common_flags(forward);

  auto* born = app.add_subcommand("born", "DtN JSON -> Born reconstruction");
  born->add_option("--dtn", o.dtn_path, "DtN JSON")->required();
  grid_flags(born);
  inverse_flags(born);
  common_flags(born);

  auto* iterate = app.add_subcommand("iterate", "iterative refinement at kappa = 0");
  auto* dtn_opt = iterate->add_option("--dtn", o.dtn_path, "DtN JSON");
  auto* rec_opt = iterate->add_option("--recon", o.recon_path, "starting reconstruction JSON");
  dtn_opt->excludes(rec_opt);
  iterate->add_option("--gamma", o.gamma_path, "reference conductivity for the error table");
  iterate->add_option("--iters", o.iters, "number of iterations")->check(CLI::PositiveNumber);
  grid_flags(iterate);
  inverse_flags(iterate);
  common_flags(iterate);

  auto* noise = app.add_subcommand("noise", "add complex Gaussian noise to a DtN matrix");
  noise->add_option("--dtn", o.dtn_path, "DtN JSON")->required();
  noise->add_option("--noise-eps", o.noise_eps, "noise amplitude epsilon")->required()->check(CLI::NonNegativeNumber);
  noise->add_option("--seed", o.seed, "generator seed");
  common_flags(noise);

  auto* experiment = app.add_subcommand("experiment", "run a catalog scenario or a scenario JSON");
  auto* exp_id = experiment->add_option("id", o.experiment, "1, 1n, 2a, 2b, 3a, 3b, 4a, 4b or 5");
  auto* exp_cfg = experiment->add_option("--config", o.config_path, "scenario JSON");
  exp_id->excludes(exp_cfg);
  grid_flags(experiment);
  inverse_flags(experiment);
  experiment->add_option("--noise-eps", o.noise_eps, "single noise level")->check(CLI::NonNegativeNumber);
  experiment->add_option("--seed", o.seed, "noise seed");
  experiment->add_option("--iters", o.iters, "iterations of the refinement scheme")->check(CLI::NonNegativeNumber);
  common_flags(experiment);

  auto* fourier = app.add_subcommand("fourier-check", "compare the plane-wave pairing with the moment series");
  fourier->add_option("--dtn", o.dtn_path, "DtN JSON")->required();
  fourier->add_option("--recon", o.recon_path, "reconstruction JSON")->required();
  fourier->add_option("--xi-max", o.xi_max, "largest |xi|");
  fourier->add_option("--xi-count", o.xi_count, "frequencies per direction");
  fourier->add_option("--directions", o.directions, "directions in [0, pi)");
  fourier->add_option("--moment-order", o.moment_order, "moment series truncation N");
  common_flags(fourier);

  auto* lcurve = app.add_subcommand("lcurve", "emit the L-curve trace");
  lcurve->add_option("--dtn", o.dtn_path, "DtN JSON")->required();
  inverse_flags(lcurve);
  common_flags(lcurve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  set_thread_cap(o.threads);

  try {
    if (*forward) return cmd_forward(o);
    if (*born) return cmd_born(o);
    if (*iterate) {
      if (o.dtn_path.empty() && o.recon_path.empty()) throw StageError("config", "iterate needs --dtn or --recon", false);
      return cmd_iterate(o);
    }
    if (*noise) return cmd_noise(o);
    if (*experiment) {
      if (o.experiment.empty() && o.config_path.empty()) {
        throw StageError("config", "experiment needs an id or --config", false);
      }
      return cmd_experiment(o);
    }
    if (*fourier) return cmd_fourier_check(o);
    if (*lcurve) return cmd_lcurve(o);
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.what() << '\n';
    return e.numerical() ? kExitNumerical : kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
