#pragma once

// Scenario definitions, noise injection and the run pipeline behind the CLI.

#include "calderon/analytic_dtn.hpp"
#include "calderon/born_inverse.hpp"
#include "calderon/conductivity.hpp"
#include "calderon/dtn_matrix.hpp"
#include "calderon/forward_solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace calderon {

// ---- conductivity specifications ------------------------------------------------

/// A conductivity built from a JSON description, either a sum of smooth terms
/// {"terms": [...]} or {"type": "layered", "radii", "values", "map"}.
struct ConductivityModel {
  nlohmann::json spec;
  ConductivityField field;
  std::optional<LayeredRadialConductivity> layers;
  std::optional<MobiusMap> map;

  [[nodiscard]] bool analytic() const { return layers.has_value(); }
};

namespace detail {

inline cplx json_complex(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw std::invalid_argument("expected a number or [re, im]");
}

inline ConductivityField term_field(const nlohmann::json& t) {
  const std::string type = t.at("type").get<std::string>();
  if (type == "constant") return field::constant(t.at("value").get<double>());
  if (type == "sigma_kappa") return field::sigma_kappa(Kappa(t.at("kappa").get<double>()), t.value("scale", 1.0));
  if (type == "point_bump") {
    return field::point_bump(t.at("r").get<double>(), t.at("theta").get<double>(), t.at("radius").get<double>(),
                             t.value("amplitude", 1.0));
  }
  if (type == "polar_bump") {
    return field::polar_bump(t.at("r0").get<double>(), t.at("radial_width").get<double>(), t.at("theta0").get<double>(),
                             t.at("angular_width").get<double>(), t.value("amplitude", 1.0));
  }
  throw std::invalid_argument("unknown conductivity term '" + type + "'");
}

}  // namespace detail

inline ConductivityModel parse_conductivity(const nlohmann::json& spec) {
  ConductivityModel out;
  out.spec = spec;
  if (spec.value("type", std::string()) == "layered") {
    LayeredRadialConductivity layers(spec.at("radii").get<std::vector<double>>(),
                                     spec.at("values").get<std::vector<double>>());
    MobiusMap map = MobiusMap::identity();
    if (spec.contains("map")) {
      const auto& m = spec.at("map");
      if (!m.is_array() || m.size() != 4) throw std::invalid_argument("map must be [a, b, c, d]");
      map = MobiusMap(detail::json_complex(m[0]), detail::json_complex(m[1]), detail::json_complex(m[2]),
                      detail::json_complex(m[3]));
    }
    out.field = composed_conductivity(layers, map);
    out.layers = std::move(layers);
    out.map = map;
    return out;
  }
  if (!spec.contains("terms") || !spec.at("terms").is_array() || spec.at("terms").empty()) {
    throw std::invalid_argument("conductivity spec needs a nonempty 'terms' array or type 'layered'");
  }
  std::vector<ConductivityField> terms;
  for (const auto& t : spec.at("terms")) terms.push_back(detail::term_field(t));
  out.field = terms.size() == 1 ? terms.front() : field::sum(std::move(terms));
  if (!(out.field.lower_bound > 0.0)) throw std::invalid_argument("conductivity is not bounded below by a positive constant");
  return out;
}

namespace spec {

inline nlohmann::json constant(double c) { return {{"type", "constant"}, {"value", c}}; }
inline nlohmann::json sigma_kappa(double kappa, double scale = 1.0) {
  return {{"type", "sigma_kappa"}, {"kappa", kappa}, {"scale", scale}};
}
inline nlohmann::json point_bump(double r, double theta, double radius, double amplitude = 1.0) {
  return {{"type", "point_bump"}, {"r", r}, {"theta", theta}, {"radius", radius}, {"amplitude", amplitude}};
}
inline nlohmann::json polar_bump(double r0, double radial_width, double theta0, double angular_width,
                                 double amplitude = 1.0) {
  return {{"type", "polar_bump"},       {"r0", r0},
          {"radial_width", radial_width}, {"theta0", theta0},
          {"angular_width", angular_width}, {"amplitude", amplitude}};
}
inline nlohmann::json terms(std::vector<nlohmann::json> t) { return {{"terms", std::move(t)}}; }
inline nlohmann::json layered(std::vector<double> radii, std::vector<double> values, std::array<cplx, 4> map) {
  nlohmann::json m = nlohmann::json::array();
  for (const cplx& c : map) m.push_back({c.real(), c.imag()});
  return {{"type", "layered"}, {"radii", radii}, {"values", values}, {"map", m}};
}

}  // namespace spec

// ---- noise ------------------------------------------------------------------------

struct NoiseModel {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Uniform in (0, 1) from stream position k.
inline double counter_uniform(std::uint64_t seed, std::uint64_t k) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ (k * 0xD1B54A32D192ED03ull)) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Independent standard normal pair for stream position k (Box-Muller).
inline std::array<double, 2> counter_normal_pair(std::uint64_t seed, std::uint64_t k) {
  const double u1 = counter_uniform(seed, 2 * k), u2 = counter_uniform(seed, 2 * k + 1);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  return {rad * std::cos(2.0 * kPi * u2), rad * std::sin(2.0 * kPi * u2)};
}

}  // namespace detail

inline std::string noise_provenance(const NoiseModel& model) {
  std::ostringstream s;
  s << "noisy(" << model.epsilon << "," << model.seed << ")";
  return s.str();
}

/// Adds eps (N(0,1) + i N(0,1)) on the upper triangle of the positive block, mirrors it
/// conjugated, and adds real eps N(0,1) on the diagonal. The draw for (l, m) depends only on (seed, l, m).
inline DtNMatrix add_noise(const DtNMatrix& dtn, const NoiseModel& model) {
  if (!(model.epsilon >= 0.0) || !std::isfinite(model.epsilon)) throw std::invalid_argument("noise: epsilon must be >= 0");
  DtNMatrix out = dtn;
  if (model.epsilon == 0.0) return out;
  const int L = dtn.l_max();
  for (int l = 1; l <= L; ++l) {
    for (int m = l; m <= L; ++m) {
      const auto k = static_cast<std::uint64_t>(l) * 65536u + static_cast<std::uint64_t>(m);
      const auto g = detail::counter_normal_pair(model.seed, k);
      if (l == m) {
        out(l, l) += model.epsilon * g[0];
      } else {
        const cplx z = model.epsilon * cplx(g[0], g[1]);
        out(l, m) += z;
        out(m, l) += std::conj(z);
      }
      if (dtn.block() == DtNBlock::Full) {
        out(-l, -m) = std::conj(out(l, m));
        out(-m, -l) = std::conj(out(m, l));
      }
    }
  }
  out.set_provenance(noise_provenance(model));
  return out;
}

// ---- scenarios ----------------------------------------------------------------------

struct GridSize {
  int n_r = 50;
  int n_theta = 50;
};

struct Scenario {
  std::string name;
  std::string description;
  nlohmann::json conductivity;
  double kappa = 0.0;
  /// Also reconstruct at kappa = 0 for comparison (only meaningful when kappa != 0).
  bool compare_kappa0 = false;
  /// Spectral forward grid; nullopt means analytic DtN (layered conductivities).
  std::optional<GridSize> forward;
  /// Grid for the iterates' forward solves and for the L^p errors.
  GridSize work_grid;
  int i_cells = 50;
  int l_max = 24;
  int iterations = 0;
  std::vector<double> noise_levels{0.0};
  std::uint64_t seed = 20240611;
  std::optional<double> lambda;
  double cross_section_radius = 0.6;
};

inline void validate(const Scenario& s) {
  if (s.i_cells < 1 || s.l_max < 1) throw std::invalid_argument("scenario " + s.name + ": need i_cells, l_max >= 1");
  if (s.iterations < 0) throw std::invalid_argument("scenario " + s.name + ": iterations must be >= 0");
  if (s.forward && s.forward->n_theta / 2 <= s.l_max) {
    throw std::invalid_argument("scenario " + s.name + ": l_max must be < n_theta / 2");
  }
  if (s.iterations > 0 && s.work_grid.n_theta / 2 <= s.l_max) {
    throw std::invalid_argument("scenario " + s.name + ": iteration grid needs l_max < n_theta / 2");
  }
  if (s.iterations > 0 && s.kappa != 0.0) {
    throw std::invalid_argument("scenario " + s.name + ": the iterative scheme is defined at kappa = 0 only");
  }
  if (s.noise_levels.empty()) throw std::invalid_argument("scenario " + s.name + ": no noise levels");
  for (double e : s.noise_levels) {
    if (!(e >= 0.0)) throw std::invalid_argument("scenario " + s.name + ": noise levels must be >= 0");
  }
  if (!(s.cross_section_radius >= 0.0 && s.cross_section_radius <= 1.0)) {
    throw std::invalid_argument("scenario " + s.name + ": cross-section radius must lie in [0, 1]");
  }
  (void)Kappa(s.kappa);
}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json j{{"name", s.name},
                   {"description", s.description},
                   {"conductivity", s.conductivity},
                   {"kappa", s.kappa},
                   {"compare_kappa0", s.compare_kappa0},
                   {"work_grid", {{"n_r", s.work_grid.n_r}, {"n_theta", s.work_grid.n_theta}}},
                   {"i_cells", s.i_cells},
                   {"l_max", s.l_max},
                   {"iterations", s.iterations},
                   {"noise_levels", s.noise_levels},
                   {"seed", s.seed},
                   {"cross_section_radius", s.cross_section_radius}};
  j["forward"] = s.forward ? nlohmann::json{{"n_r", s.forward->n_r}, {"n_theta", s.forward->n_theta}}
                           : nlohmann::json("analytic");
  j["lambda"] = s.lambda ? nlohmann::json(*s.lambda) : nlohmann::json(nullptr);
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.name = j.value("name", std::string("custom"));
  s.description = j.value("description", std::string());
  s.conductivity = j.at("conductivity");
  s.kappa = j.value("kappa", 0.0);
  s.compare_kappa0 = j.value("compare_kappa0", false);
  if (j.contains("forward") && j.at("forward").is_object()) {
    s.forward = GridSize{j.at("forward").at("n_r").get<int>(), j.at("forward").at("n_theta").get<int>()};
  } else if (j.contains("forward") && j.at("forward") == "analytic") {
    s.forward.reset();
  } else {
    s.forward = GridSize{};
  }
  if (j.contains("work_grid")) {
    s.work_grid = {j.at("work_grid").at("n_r").get<int>(), j.at("work_grid").at("n_theta").get<int>()};
  } else if (s.forward) {
    s.work_grid = *s.forward;
  }
  s.i_cells = j.value("i_cells", 50);
  s.l_max = j.value("l_max", 24);
  s.iterations = j.value("iterations", 0);
  if (j.contains("noise_levels")) s.noise_levels = j.at("noise_levels").get<std::vector<double>>();
  s.seed = j.value("seed", s.seed);
  if (j.contains("lambda") && !j.at("lambda").is_null()) s.lambda = j.at("lambda").get<double>();
  s.cross_section_radius = j.value("cross_section_radius", 0.6);
  validate(s);
  return s;
}

inline nlohmann::json smiley_terms_json() {
  return nlohmann::json::array({spec::point_bump(0.6, kPi / 4, 0.25), spec::point_bump(0.6, 3 * kPi / 4, 0.25),
                                spec::polar_bump(0.6, 0.2, 3 * kPi / 2, kPi / 3)});
}

inline std::map<std::string, Scenario> scenario_catalog() {
  std::map<std::string, Scenario> out;
  auto add = [&](Scenario s) { out.emplace(s.name, std::move(s)); };

  Scenario e1;
  e1.name = "1";
  e1.description = "positive bump on a constant background";
  e1.conductivity = spec::terms({spec::constant(1.0), spec::point_bump(0.6, kPi / 4, 0.25, 1.0)});
  e1.forward = GridSize{50, 50};
  e1.work_grid = {50, 50};
  e1.iterations = 2;
  add(e1);

  Scenario e1n = e1;
  e1n.name = "1n";
  e1n.description = "negative bump on a constant background";
  e1n.conductivity = spec::terms({spec::constant(1.0), spec::point_bump(0.6, kPi / 4, 0.25, -0.5)});
  add(e1n);

  auto pairs = [](double radius, std::array<double, 3> half_gaps) {
    std::vector<nlohmann::json> t{spec::constant(1.0)};
    const std::array<double, 3> centers{3.0 / 6.0, 7.0 / 6.0, 11.0 / 6.0};
    for (int k = 0; k < 3; ++k) {
      t.push_back(spec::point_bump(radius, kPi * (centers[k] + half_gaps[k]), 0.1));
      t.push_back(spec::point_bump(radius, kPi * (centers[k] - half_gaps[k]), 0.1));
    }
    return spec::terms(std::move(t));
  };
  Scenario e2a;
  e2a.name = "2a";
  e2a.description = "bump pairs near the boundary";
  e2a.conductivity = pairs(0.8, {1.0 / 20, 1.0 / 25, 1.0 / 30});
  e2a.forward = GridSize{50, 100};
  e2a.work_grid = {50, 100};
  e2a.l_max = 49;
  e2a.iterations = 1;
  e2a.cross_section_radius = 0.8;
  add(e2a);

  Scenario e2b = e2a;
  e2b.name = "2b";
  e2b.description = "bump pairs near the origin";
  e2b.conductivity = pairs(0.4, {1.0 / 10, 1.0 / 13, 1.0 / 15});
  e2b.cross_section_radius = 0.4;
  add(e2b);

  Scenario e3a;
  e3a.name = "3a";
  e3a.description = "smiley on sigma_4 / J0(2)^2, kappa = 4 against kappa = 0";
  const double j02 = bessel_j(0, 2.0);
  {
    auto t = smiley_terms_json();
    t.insert(t.begin(), spec::sigma_kappa(4.0, 1.0 / (j02 * j02)));
    e3a.conductivity = {{"terms", t}};
  }
  e3a.kappa = 4.0;
  e3a.compare_kappa0 = true;
  e3a.forward = GridSize{50, 50};
  e3a.work_grid = {50, 50};
  add(e3a);

  Scenario e3b = e3a;
  e3b.name = "3b";
  e3b.description = "smiley on sigma_-9, kappa = -9 against kappa = 0";
  {
    auto t = smiley_terms_json();
    t.insert(t.begin(), spec::sigma_kappa(-9.0));
    e3b.conductivity = {{"terms", t}};
  }
  e3b.kappa = -9.0;
  add(e3b);

  const auto moebius_map = MobiusMap(4.0, -1.0, 1.0, -4.0).coefficients();
  Scenario e4a;
  e4a.name = "4a";
  e4a.description = "layered 3, 2, 1 composed with (4z - 1) / (z - 4)";
  e4a.conductivity = spec::layered({0.25, 0.5}, {3.0, 2.0, 1.0}, moebius_map);
  e4a.forward.reset();
  e4a.work_grid = {50, 50};
  e4a.iterations = 4;
  add(e4a);

  Scenario e4b = e4a;
  e4b.name = "4b";
  e4b.description = "layered 3, 1/2, 1 composed with (4z - 1) / (z - 4)";
  e4b.conductivity = spec::layered({0.25, 0.5}, {3.0, 0.5, 1.0}, moebius_map);
  add(e4b);

  Scenario e5;
  e5.name = "5";
  e5.description = "mixed bumps with complex Gaussian noise on the DtN matrix";
  e5.conductivity = spec::terms({spec::constant(1.0), spec::point_bump(0.6, 3 * kPi / 4, 0.25, -0.5),
                                 spec::polar_bump(0.6, 0.2, 3 * kPi / 2, kPi / 3)});
  e5.forward = GridSize{50, 50};
  e5.work_grid = {50, 50};
  e5.noise_levels = {0.0, 1e-3, 1e-2};
  add(e5);

  for (const auto& [name, s] : out) validate(s);
  return out;
}

inline Scenario catalog_scenario(const std::string& name) {
  auto cat = scenario_catalog();
  auto it = cat.find(name);
  if (it == cat.end()) throw std::invalid_argument("unknown experiment '" + name + "'");
  return it->second;
}

// ---- run ------------------------------------------------------------------------------

/// Error raised inside a pipeline stage, tagged with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool numerical)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), numerical_(numerical) {}
  [[nodiscard]] const std::string& stage() const { return stage_; }
  [[nodiscard]] bool numerical() const { return numerical_; }

 private:
  std::string stage_;
  bool numerical_;
};

template <class F>
auto run_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const NumericalError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), false);
  }
}

struct VariantResult {
  std::string label;
  double kappa = 0.0;
  double noise = 0.0;
  BornReconstruction born;
  std::vector<BornReconstruction> iterates;  // empty without iterations
  std::vector<ErrorRow> errors;
  bool diverged = false;
  std::string stop_reason;
};

struct RunReport {
  Scenario scenario;
  DtNMatrix dtn;
  std::vector<VariantResult> variants;
  std::vector<std::string> files;
};

inline std::string variant_label(double kappa, double eps, const Scenario& s) {
  std::ostringstream o;
  o << "kappa" << kappa;
  if (s.noise_levels.size() > 1 || eps > 0.0) o << "_eps" << eps;
  return o.str();
}

inline DtNMatrix scenario_dtn(const Scenario& s, const ConductivityModel& model) {
  if (model.analytic()) {
    if (s.forward) throw std::invalid_argument("layered conductivities use the analytic forward map");
    return conformal_dtn_matrix(*model.layers, *model.map, s.l_max).matrix;
  }
  if (!s.forward) throw std::invalid_argument("analytic forward map requires a layered conductivity");
  DtNMatrix m = dtn_matrix(model.field, build_grid(s.forward->n_r, s.forward->n_theta), s.l_max);
  m.set_kappa(s.kappa);
  return m;
}

/// Runs the pipeline; writes outputs to out_dir when it is nonempty.
inline RunReport run(const Scenario& s, const std::string& out_dir = "") {
  run_stage("config", [&] {
    validate(s);
    return 0;
  });
  const ConductivityModel model = run_stage("config", [&] { return parse_conductivity(s.conductivity); });
  RunReport report;
  report.scenario = s;
  report.dtn = run_stage("forward", [&] { return scenario_dtn(s, model); });
  const GridPtr work = build_grid(s.work_grid.n_r, s.work_grid.n_theta);
  const ComplexPolarFunction truth = [&](double r, double th) { return cplx(model.field(r, th)); };
  const BasisSpec basis(s.i_cells, s.l_max);

  std::vector<double> kappas{s.kappa};
  if (s.compare_kappa0 && s.kappa != 0.0) kappas.insert(kappas.begin(), 0.0);
  for (double eps : s.noise_levels) {
    const DtNMatrix data = run_stage("noise", [&] { return add_noise(report.dtn, {eps, s.seed}); });
    for (double k : kappas) {
      VariantResult v;
      v.label = variant_label(k, eps, s);
      v.kappa = k;
      v.noise = eps;
      v.born = run_stage("born", [&] { return born_reconstruct(data, Kappa(k), basis, s.lambda); });
      if (s.iterations > 0 && k == 0.0) {
        IterationConfig cfg;
        cfg.steps = s.iterations;
        cfg.forward_grid = work;
        const IterationResult it = run_stage("iterate", [&] { return iterate_scheme(v.born, cfg, truth); });
        v.iterates = it.iterates;
        v.errors = it.errors;
        v.diverged = it.diverged;
        v.stop_reason = it.stop_reason;
      } else {
        v.errors.push_back(error_row(truth, [&](double r, double th) { return v.born.value(r, th); }, work, 0));
      }
      report.variants.push_back(std::move(v));
    }
  }

  if (out_dir.empty()) return report;
  run_stage("output", [&] {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto path = [&](const std::string& f) {
      const std::string p = (fs::path(out_dir) / f).string();
      report.files.push_back(p);
      return p;
    };
    auto open = [](const std::string& p) {
      std::ofstream os(p);
      if (!os) throw std::runtime_error("cannot write " + p);
      return os;
    };
    {
      auto os = open(path("scenario.json"));
      os << to_json(s).dump(2) << '\n';
    }
    save_dtn(path("dtn.json"), report.dtn);
    std::ofstream table = open(path("errors.csv"));
    table << "variant,n,l1,l2,linf\n";
    table.precision(17);
    std::ofstream text = open(path("errors.txt"));
    text << "scenario " << s.name << ": " << s.description << '\n';
    for (const auto& v : report.variants) {
      const BornReconstruction& last = v.iterates.empty() ? v.born : v.iterates.back();
      save_reconstruction(path(v.label + "_born.json"), v.born);
      if (!v.iterates.empty()) save_reconstruction(path(v.label + "_final.json"), last);
      write_csv(path(v.label + "_born.csv"), v.born.sample(work));
      {
        auto os = open(path(v.label + "_cross_section.csv"));
        write_cross_section_csv(os, last, s.cross_section_radius);
      }
      {
        auto os = open(path(v.label + "_lcurve.csv"));
        write_lcurve_csv(os, v.born.trace);
      }
      for (const auto& e : v.errors) table << v.label << ',' << e.step << ',' << e.l1 << ',' << e.l2 << ',' << e.linf << '\n';
      text << "\n[" << v.label << "] lambda = " << v.born.lambda << '\n';
      write_error_table_text(text, v.errors);
      if (v.diverged) text << "stopped: " << v.stop_reason << '\n';
    }
    return 0;
  });
  return report;
}

}  // namespace calderon
