// strata: command-line front end for the stratification laboratory.
//
// Exit codes: 0 all verdicts hold, 1 some verdict fails, 2 usage or input
// error, 3 undetermined verdicts present.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strata/driver.hpp"

namespace {

using strata::DriverConfig;
using strata::ReportBuilder;
using strata::Scene;

Eigen::VectorXd parse_point(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad coordinate: " + tok);
    }
    // reject trailing junk like "0,0,oops"
    while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
    if (used != tok.size()) throw std::invalid_argument("bad coordinate: " + tok);
    vals.push_back(v);
  }
  if (vals.empty()) throw std::invalid_argument("empty point");
  Eigen::VectorXd x(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) x(static_cast<int>(i)) = vals[i];
  return x;
}

// --scene accepts a scene JSON path or a corpus example name
Scene load_scene_arg(const std::string& arg) {
  if (!std::filesystem::exists(arg))
    for (const auto& ex : strata::corpus_examples())
      if (ex.name == arg) return strata::load_example(arg).load();
  return strata::load_scene(arg);
}

int emit_output(ReportBuilder& rb, const std::string& out_path) {
  if (out_path.empty())
    std::cout << rb.finish().dump(2) << "\n";
  else
    rb.write(out_path);
  return rb.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strata: numerical laboratory for stratified singular sets"};
  app.require_subcommand(1);
  app.fallthrough(true);  // global flags remain valid after a subcommand

  DriverConfig cfg;
  std::string scene_path, out_path, pair_text, point_text, corpus_action, corpus_name;
  std::vector<int> project_out;
  int clusters = 0;

  app.add_option("--seed", cfg.seed, "base RNG seed");
  app.add_option("--tol-mem", cfg.tol_mem, "membership tolerance")->check(CLI::PositiveNumber);
  app.add_option("--tol-limit", cfg.tol_limit, "plane-limit Cauchy tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--tol-verdict", cfg.tol_verdict, "verdict tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--samples", cfg.samples, "sampling budget")->check(CLI::PositiveNumber);
  app.add_option("--sequences", cfg.sequences, "sequences per Whitney check")
      ->check(CLI::PositiveNumber);
  app.add_option("--words", cfg.words, "random flow words for reach estimates")
      ->check(CLI::PositiveNumber);
  app.add_option("--degree", cfg.degree, "polynomial degree for field bases")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "report output path (default stdout)");
  app.add_option("--csv", cfg.csv_path, "CSV dump path for plotting");

  auto* c_strat = app.add_subcommand("stratify", "decompose a scene into strata");
  c_strat->add_option("--scene", scene_path, "scene JSON path or corpus name")->required();

  auto* c_whit = app.add_subcommand("whitney", "Whitney A/B on a stratum pair at a point");
  c_whit->add_option("--scene", scene_path, "scene JSON path or corpus name")->required();
  c_whit->add_option("--pair", pair_text, "labels M,M'")->required();
  c_whit->add_option("--point", point_text, "base point x1,...,xn")->required();

  auto* c_cone = app.add_subcommand("cone", "tangent cone lines at a point");
  c_cone->add_option("--scene", scene_path, "scene JSON path or corpus name")->required();
  c_cone->add_option("--point", point_text, "base point x1,...,xn")->required();
  c_cone->add_option("--project-out", project_out, "coordinate axes to project out");
  c_cone->add_option("--clusters", clusters, "expected number of lines (verdict if set)");

  auto* c_orbit = app.add_subcommand("orbit", "tangent field basis + reach partition");
  c_orbit->add_option("--scene", scene_path, "scene JSON path or corpus name")->required();

  auto* c_quot = app.add_subcommand("quotient", "orbit-type vs reach comparison in the quotient");
  c_quot->add_option("--scene", scene_path, "scene JSON path or corpus name")->required();

  auto* c_corp = app.add_subcommand("corpus", "bundled examples: list | run <name> | emit <name>");
  c_corp->add_option("action", corpus_action, "list, run, or emit")->required();
  c_corp->add_option("name", corpus_name, "example name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // --help exits 0; any parse failure is a usage error
  }

  try {
    if (c_strat->parsed()) {
      Scene scene = load_scene_arg(scene_path);
      ReportBuilder rb("stratify", scene.name, cfg.to_json());
      strata::run_stratify(scene, cfg, rb);
      return emit_output(rb, out_path);
    }
    if (c_whit->parsed()) {
      Scene scene = load_scene_arg(scene_path);
      auto comma = pair_text.find(',');
      if (comma == std::string::npos)
        throw std::invalid_argument("--pair wants two labels: M,M'");
      Eigen::VectorXd x = parse_point(point_text);
      if (x.size() != scene.set->ambient_dim)
        throw std::invalid_argument("--point has wrong dimension");
      std::string lm = pair_text.substr(0, comma), lmp = pair_text.substr(comma + 1);
      const strata::Stratum* m = scene.find_stratum(lm);
      const strata::Stratum* mp = scene.find_stratum(lmp);
      strata::Decomposition dec;  // keeps looked-up strata alive
      if (!m || !mp) {
        // scene declares no strata (or not these): stratify and look up the
        // decomposition labels instead
        strata::DecomposeOptions dopt;
        dopt.tol_mem = cfg.tol_mem;
        dec = strata::rank_decompose(scene.set, true, cfg.samples, cfg.seed, dopt);
        for (const auto& st : dec.strata) {
          if (st.label == lm) m = &st;
          if (st.label == lmp) mp = &st;
        }
      }
      if (!m || !mp) throw std::invalid_argument("unknown stratum label in --pair");
      ReportBuilder rb("whitney", scene.name, cfg.to_json());
      strata::run_whitney_pair(*m, *mp, x, cfg, rb);
      return emit_output(rb, out_path);
    }
    if (c_cone->parsed()) {
      Scene scene = load_scene_arg(scene_path);
      Eigen::VectorXd x = parse_point(point_text);
      if (x.size() != scene.set->ambient_dim)
        throw std::invalid_argument("--point has wrong dimension");
      ReportBuilder rb("cone", scene.name, cfg.to_json());
      strata::run_cone(scene, x, project_out, clusters, cfg, rb);
      return emit_output(rb, out_path);
    }
    if (c_orbit->parsed()) {
      Scene scene = load_scene_arg(scene_path);
      if (scene.cloud.empty())
        throw std::invalid_argument("orbit analysis needs a \"cloud\" in the scene");
      ReportBuilder rb("orbit", scene.name, cfg.to_json());
      strata::run_orbit(scene, scene.cloud, cfg, rb);
      return emit_output(rb, out_path);
    }
    if (c_quot->parsed()) {
      Scene scene = load_scene_arg(scene_path);
      ReportBuilder rb("quotient", scene.name, cfg.to_json());
      strata::run_quotient(scene, cfg, rb);
      return emit_output(rb, out_path);
    }
    if (c_corp->parsed()) {
      if (corpus_action == "list") {
        for (const auto& ex : strata::corpus_examples()) std::cout << ex.name << "\n";
        return 0;
      }
      if (corpus_action == "emit") {
        const strata::ExampleScene& ex = strata::load_example(corpus_name);
        std::string text = strata::json::parse(ex.scene_json).dump(2);
        if (out_path.empty()) {
          std::cout << text << "\n";
        } else {
          std::ofstream out(out_path);
          if (!out) throw std::runtime_error("cannot write: " + out_path);
          out << text << "\n";
        }
        return 0;
      }
      if (corpus_action == "run") {
        strata::load_example(corpus_name);  // validate the name up front
        ReportBuilder rb("corpus", corpus_name, cfg.to_json());
        strata::run_corpus(corpus_name, cfg, rb);
        return emit_output(rb, out_path);
      }
      throw std::invalid_argument("corpus action must be list, run, or emit");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
