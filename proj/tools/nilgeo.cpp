// nilgeo command line: JSON on stdout (or --out), CSV rows with --csv.
// Exit codes: 0 ok, 1 invalid input, 2 solver infeasible, 3 an asserted signature failed.

#include "nilgeo/experiments.hpp"
#include "nilgeo/perturbation.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace nilgeo;

namespace {

struct Options {
  std::string algebra;
  std::string target;
  std::string zeta;
  std::string control;
  std::string config;
  std::string out;
  std::string csv;
  std::string experiment;
  std::string spec_path;
  std::uint64_t seed = 1;
  Eigen::Index grid = 2049;
  int modes = 12;
  int starts = 16;
  int samples = 0;
  bool asymptotic = false;
  bool shooting = false;
  bool product = false;
  std::string kind = "riemannian";
  double radius = 1.0;
  std::string profile_csv;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write " + path);
  out << text;
}

void emit(const Options& o, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (o.out.empty())
    std::cout << text;
  else
    write_text(o.out, text);
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json budget_echo(const Options& o) {
  return {{"seed", o.seed}, {"grid", o.grid}, {"modes", o.modes}, {"starts", o.starts}};
}

Budget budget_of(const Options& o) {
  Budget b;
  b.seed = o.seed;
  b.grid = o.grid;
  b.modes = o.modes;
  b.starts = o.starts;
  return b;
}

int cmd_validate(const Options& o) {
  LoadedSpec L = load_spec(o.spec_path);
  const auto& S = *L.structure;
  json j = envelope(L.hash, {{"spec", o.spec_path}});
  j["name"] = L.name;
  j["dim"] = S.dim();
  j["step"] = S.algebra().step();
  j["rank"] = S.rank();
  j["carnot"] = S.is_carnot();
  j["homogeneous_dimension"] = S.homogeneous_dimension();
  j["derived"] = S.algebra().derived_indices();
  j["complement"] = S.algebra().complement_indices();
  j["exact_distance_oracle"] = has_exact_oracle(S);
  emit(o, j);
  return 0;
}

int cmd_endpoint(const Options& o) {
  LoadedSpec L = load_spec(o.algebra);
  const auto& S = *L.structure;
  SampledControl u;
  if (!o.control.empty()) {
    u = control_from_json(read_json_file(o.control), o.grid);
  } else {
    Rng rng(derive_seed(o.seed, 0));
    u = random_smooth_control(rng, S.rank(), o.grid);
  }
  const bool product = o.product || S.algebra().step() != 2;
  json cfg = budget_echo(o);
  cfg["control"] = o.control;
  cfg["product"] = product;
  json j = envelope(L.hash, cfg);
  j["endpoint"] = vec_json(product ? endpoint_product(S, u) : endpoint_step2(S, u));
  j["energy"] = energy(S, u);
  j["length"] = length(S, u);
  emit(o, j);
  return 0;
}

int cmd_distance(const Options& o) {
  LoadedSpec L = load_spec(o.algebra);
  const auto& S = *L.structure;
  Vec t = parse_vector(o.target);
  if (t.size() != S.dim()) throw SpecError("--target needs " + std::to_string(S.dim()) + " coordinates");
  Budget b = budget_of(o);
  DistanceEstimate e;
  if (o.asymptotic)
    e = asymptotic_distance(S, t, b);
  else if (o.shooting)
    e = distance_shooting(S, t, b);
  else
    e = distance_upper(S, t, b);
  json cfg = budget_echo(o);
  cfg["target"] = o.target;
  cfg["asymptotic"] = o.asymptotic;
  cfg["shooting"] = o.shooting;
  json j = envelope(L.hash, cfg);
  j["lower"] = e.lower;
  j["upper"] = e.upper;
  j["residual"] = e.residual;
  j["methods"] = e.methods;
  j["best_start"] = e.best_start;
  if (!o.asymptotic) {
    if (auto iv = exact_distance(S, t)) j["exact"] = {iv->lo, iv->hi};
  }
  if (e.witness) j["witness"] = control_to_json(*e.witness);
  emit(o, j);
  return 0;
}

int cmd_perturb(const Options& o) {
  LoadedSpec L = load_spec(o.algebra);
  const auto& S = *L.structure;
  SampledControl u;
  if (!o.control.empty()) {
    u = control_from_json(read_json_file(o.control), o.grid);
  } else {
    Rng rng(derive_seed(o.seed, 0));
    u = random_smooth_control(rng, S.rank(), o.grid);
  }
  Vec zeta = parse_vector(o.zeta);
  if (zeta.size() != S.dim()) throw SpecError("--zeta needs " + std::to_string(S.dim()) + " coordinates");
  PerturbationResult r = build_perturbation(S, u, zeta);
  PerturbationCertificate c = verify_perturbation(S, u, r, zeta);
  json cfg = budget_echo(o);
  cfg["zeta"] = o.zeta;
  cfg["control"] = o.control;
  json j = envelope(L.hash, cfg);
  j["endpoint_residual"] = c.endpoint_residual;
  j["orthogonality_residual"] = c.orthogonality_residual;
  j["energy"] = c.energy;
  j["energy_exact"] = c.energy_exact;
  j["bound"] = c.bound;
  j["K"] = c.K;
  j["N"] = c.N;
  j["C"] = r.C;
  j["zeta_norm"] = r.decomposition.zeta_norm;
  j["passed"] = c.passed;
  j["perturbation"] = fourier_to_json(r.v_fourier);
  emit(o, j);
  return c.passed ? 0 : 3;
}

int cmd_experiment(const Options& o) {
  json cfg = o.config.empty() ? json::object() : read_json_file(o.config);
  if (!cfg.is_object()) throw SpecError("--config must hold a JSON object");
  // command-line budgets override the file
  if (!cfg.contains("seed") || o.seed != 1) cfg["seed"] = o.seed;
  if (o.samples > 0) cfg["samples"] = o.samples;

  auto need = [&](const char* dflt) {
    std::string a = !o.algebra.empty() ? o.algebra : cfg.value("algebra", std::string(dflt));
    cfg["algebra"] = a;
    return load_spec(a);
  };
  ExperimentReport rep;
  std::string hash;
  const std::string& n = o.experiment;
  if (n == "gap_scan") {
    auto L = need("heisenberg_riemannian");
    hash = L.hash;
    rep = gap_scan(*L.structure, cfg);
  } else if (n == "mismatch_scan") {
    auto L = need("heisenberg");
    hash = L.hash;
    rep = mismatch_scan(*L.structure, stretched_heisenberg(*L.structure), cfg);
  } else if (n == "ballbox_check") {
    auto L = need("heisenberg_riemannian");
    hash = L.hash;
    rep = ballbox_check(*L.structure, cfg);
  } else if (n == "heisenberg_volume") {
    rep = heisenberg_volume(cfg);
  } else if (n == "mc_ball_volume") {
    auto L = need("heisenberg_riemannian");
    hash = L.hash;
    rep = mc_ball_volume(*L.structure, cfg);
  } else if (n == "finsler_linf_volume") {
    rep = finsler_linf_volume(cfg);
  } else if (n == "engel_gap") {
    auto L = need("engel_riemannian");
    hash = L.hash;
    rep = engel_gap(*L.structure, cfg);
  } else if (n == "rough_isometry_scan") {
    const std::string map = cfg.value("map", std::string("shear"));
    cfg["map"] = map;
    auto L = need(map == "shear" ? "hxr_riemannian" : "heisenberg_riemannian");
    hash = L.hash;
    const auto& S = *L.structure;
    PointMap phi;
    if (map == "shear") {
      // (x, y, z, t) -> (x, y, z + t, t) on H x R
      const auto& comp = S.algebra().complement_indices();
      Mat Lm = Mat::Zero(static_cast<Eigen::Index>(S.algebra().derived_indices().size()),
                         static_cast<Eigen::Index>(comp.size()));
      Lm(0, static_cast<Eigen::Index>(comp.size()) - 1) = 1.0;
      Automorphism a = shear_automorphism(S, Lm);
      phi = [a](const Vec& p) { return a.apply(p); };
      if (!cfg.contains("expect")) cfg["expect"] = "bounded";
    } else if (map == "stretch") {
      const double f = cfg.value("factor", 2.0);
      cfg["factor"] = f;
      phi = [&S, f](const Vec& p) { return dilate(S.algebra(), p, f); };
      if (!cfg.contains("expect")) cfg["expect"] = "linear";
      if (!cfg.contains("slope")) cfg["slope"] = f - 1.0;
    } else if (map == "identity") {
      phi = [](const Vec& p) { return p; };
      if (!cfg.contains("expect")) cfg["expect"] = "zero";
    } else {
      throw SpecError("rough_isometry_scan: map must be shear, stretch or identity");
    }
    rep = rough_isometry_scan(S, phi, cfg);
  } else {
    throw SpecError("unknown experiment " + n);
  }
  json j = envelope(hash, rep.config);
  j["report"] = rep.to_json();
  emit(o, j);
  if (!o.csv.empty()) write_text(o.csv, rep.to_csv());
  return rep.passed() ? 0 : 3;
}

int cmd_volume(const Options& o) {
  json cfg = {{"kind", o.kind}, {"r", o.radius}};
  json j = envelope("", cfg);
  const double r = o.radius;
  if (!(r > 0.0)) throw SpecError("--r must be positive");
  if (o.kind == "riemannian")
    j["volume"] = heisenberg_ball_volume(r);
  else if (o.kind == "sr")
    j["volume"] = heisenberg_sr_ball_volume(r);
  else if (o.kind == "finsler")
    j["volume"] = heisenberg_sr_ball_volume(r) + 2.0 * kPi * r * r * r;
  else
    throw SpecError("--kind must be riemannian, sr or finsler");
  if (!o.profile_csv.empty()) {
    if (o.kind != "riemannian") throw SpecError("--profile-csv is available for the riemannian ball");
    std::string text = "alpha,x,z\n";
    const double top = std::min(2.0 * kPi, r);
    for (int i = 1; i < 400; ++i) {
      const double a = top * i / 400.0;
      text += std::to_string(a) + "," + std::to_string(heisenberg_profile_x(r, a)) + "," +
              std::to_string(heisenberg_profile_z(r, a)) + "\n";
    }
    write_text(o.profile_csv, text);
  }
  emit(o, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nilgeo: sub-Riemannian metrics on nilpotent groups"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto budgets = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "experiment seed");
    c->add_option("--grid", o.grid, "odd number of control nodes");
    c->add_option("--modes", o.modes, "polynomial degree of the optimizer basis");
    c->add_option("--starts", o.starts, "multistarts");
    c->add_option("--out", o.out, "write JSON here instead of stdout");
  };

  auto* v = app.add_subcommand("validate-algebra", "check a spec file");
  v->add_option("spec", o.spec_path, "spec path or bundled name")->required();
  v->add_option("--out", o.out);

  auto* e = app.add_subcommand("endpoint", "endpoint of a control");
  e->add_option("--algebra", o.algebra)->required();
  e->add_option("--control", o.control, "control JSON; random when absent");
  e->add_flag("--product", o.product, "group-product quadrature instead of the 2-step formula");
  budgets(e);

  auto* d = app.add_subcommand("distance", "distance bracket from the identity");
  d->add_option("--algebra", o.algebra)->required();
  d->add_option("--target", o.target, "comma separated coordinates")->required();
  d->add_flag("--asymptotic", o.asymptotic, "use the asymptotic structure");
  d->add_flag("--shooting", o.shooting, "normal geodesic shooting");
  budgets(d);

  auto* p = app.add_subcommand("perturb", "vertical perturbation certificate");
  p->add_option("--algebra", o.algebra)->required();
  p->add_option("--zeta", o.zeta, "vertical shift, full coordinates")->required();
  p->add_option("--control", o.control, "control JSON; random when absent");
  budgets(p);

  auto* x = app.add_subcommand("experiment", "run an experiment");
  x->add_option("name", o.experiment, "experiment name")
      ->required()
      ->check(CLI::IsMember({"gap_scan", "mismatch_scan", "ballbox_check", "heisenberg_volume", "mc_ball_volume",
                             "finsler_linf_volume", "engel_gap", "rough_isometry_scan"}));
  x->add_option("--algebra", o.algebra);
  x->add_option("--config", o.config, "config JSON");
  x->add_option("--csv", o.csv, "row data");
  x->add_option("--samples", o.samples);
  x->add_option("--seed", o.seed);
  x->add_option("--out", o.out);

  auto* vol = app.add_subcommand("volume", "Heisenberg ball volumes");
  vol->add_option("--r", o.radius)->required();
  vol->add_option("--kind", o.kind, "riemannian, sr or finsler");
  vol->add_option("--profile-csv", o.profile_csv, "sphere profile curve");
  vol->add_option("--out", o.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int rc = app.exit(err);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*v) return cmd_validate(o);
    if (*e) return cmd_endpoint(o);
    if (*d) return cmd_distance(o);
    if (*p) return cmd_perturb(o);
    if (*x) return cmd_experiment(o);
    if (*vol) return cmd_volume(o);
  } catch (const Infeasible& err) {
    std::cerr << "infeasible: " << err.what() << " (best residual " << err.best_residual << ")\n";
    return 2;
  } catch (const SolverDegenerate& err) {
    std::cerr << "solver: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
