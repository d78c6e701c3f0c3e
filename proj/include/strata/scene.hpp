#pragma once

// Scene files (JSON, schema version 1) bundle a semialgebraic set with
// optional declared strata, vector fields, a group action and Hilbert
// generators. Reports are JSON too, with a stable key order and record
// ordering so identical (scene, config, seed) runs produce identical bytes.

#include <Eigen/Dense>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strata/checks.hpp"
#include "strata/flows.hpp"
#include "strata/quotient.hpp"
#include "strata/set.hpp"
#include "strata/stratum.hpp"

namespace strata {

using json = nlohmann::ordered_json;

struct Scene {
  int schema_version = 1;
  std::string name;
  std::shared_ptr<SemialgebraicSet> set;
  std::vector<Stratum> declared_strata;
  std::vector<VectorField> fields;
  std::optional<GroupAction> action;
  std::optional<HilbertMap> hmap;
  std::vector<Eigen::VectorXd> cloud;

  const Stratum* find_stratum(const std::string& label) const {
    for (const auto& st : declared_strata)
      if (st.label == label) return &st;
    return nullptr;
  }
};

class scene_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Eigen::VectorXd json_vector(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
  return v;
}

inline std::vector<std::string> param_var_names(int k) {
  std::vector<std::string> names;
  for (int i = 1; i <= k; ++i) names.push_back("t" + std::to_string(i));
  return names;
}

inline Rel parse_rel(const std::string& s) {
  if (s == ">") return Rel::GT;
  if (s == ">=") return Rel::GE;
  if (s == "<") return Rel::LT;
  if (s == "<=") return Rel::LE;
  throw scene_error("unknown relation '" + s + "' (expected >, >=, <, <=)");
}

inline Parametrization parse_parametrization(const json& jp, int ambient_dim) {
  Parametrization par;
  const auto& domain = jp.at("domain");
  par.param_dim = static_cast<int>(domain.size());
  for (const auto& iv : domain) par.domain.emplace_back(iv[0].get<double>(), iv[1].get<double>());
  auto names = param_var_names(par.param_dim);
  for (const auto& comp : jp.at("components"))
    par.components.push_back(parse_expr(comp.get<std::string>(), names));
  if (static_cast<int>(par.components.size()) != ambient_dim)
    throw scene_error("parametrization component count != ambient_dim");
  par.period = jp.value("period", 0.0);
  if (jp.contains("limit_point")) par.limit_point = json_vector(jp.at("limit_point"));
  return par;
}

}  // namespace detail

inline Scene parse_scene(const json& j) {
  Scene scene;
  scene.schema_version = j.value("schema_version", 1);
  if (scene.schema_version != 1)
    throw scene_error("unsupported schema_version " + std::to_string(scene.schema_version));
  scene.name = j.value("name", "scene");
  int n = j.at("ambient_dim").get<int>();
  auto set = std::make_shared<SemialgebraicSet>();
  set->ambient_dim = n;
  for (const auto& eq : j.value("equations", json::array()))
    set->equations.push_back(parse_expr(eq.get<std::string>(), n));
  for (const auto& iq : j.value("inequalities", json::array()))
    set->inequalities.push_back(Inequality{parse_expr(iq.at("expr").get<std::string>(), n),
                                           detail::parse_rel(iq.at("rel").get<std::string>())});
  if (j.contains("parametrization"))
    set->parametrization = detail::parse_parametrization(j.at("parametrization"), n);
  scene.set = set;

  for (const auto& js : j.value("declared_strata", json::array())) {
    Stratum st;
    st.label = js.at("label").get<std::string>();
    st.dim = js.at("dim").get<int>();
    st.parent = set;
    if (js.contains("point")) {
      st.point = detail::json_vector(js.at("point"));
      if (st.point->size() != n) throw scene_error("stratum point has wrong dimension");
    }
    if (js.value("use_parametrization", false)) {
      if (!set->parametrization) throw scene_error("stratum references missing parametrization");
      st.param = set->parametrization;
    }
    if (js.contains("equations") || js.contains("inequalities")) {
      SemialgebraicSet mem;
      mem.ambient_dim = n;
      for (const auto& eq : js.value("equations", json::array()))
        mem.equations.push_back(parse_expr(eq.get<std::string>(), n));
      for (const auto& iq : js.value("inequalities", json::array()))
        mem.inequalities.push_back(Inequality{parse_expr(iq.at("expr").get<std::string>(), n),
                                              detail::parse_rel(iq.at("rel").get<std::string>())});
      if (st.param) mem.parametrization = st.param;
      st.membership_set = std::move(mem);
    }
    scene.declared_strata.push_back(std::move(st));
  }

  for (const auto& jf : j.value("vector_fields", json::array())) {
    VectorField x;
    x.name = jf.value("name", "field");
    for (const auto& comp : jf.at("components"))
      x.components.push_back(parse_expr(comp.get<std::string>(), n));
    if (x.ambient_dim() != n) throw scene_error("vector field component count != ambient_dim");
    scene.fields.push_back(std::move(x));
  }

  if (j.contains("group_action")) {
    const auto& ja = j.at("group_action");
    std::string kind = ja.at("kind").get<std::string>();
    if (kind == "finite") {
      std::vector<Eigen::MatrixXd> mats;
      for (const auto& jm : ja.at("matrices")) {
        Eigen::MatrixXd m(jm.size(), jm[0].size());
        for (std::size_t r = 0; r < jm.size(); ++r)
          for (std::size_t c = 0; c < jm[r].size(); ++c) m(static_cast<int>(r), static_cast<int>(c)) = jm[r][c].get<double>();
        mats.push_back(std::move(m));
      }
      scene.action = GroupAction::finite(std::move(mats));
      if (scene.action->ambient_dim != n) throw scene_error("group action dimension mismatch");
    } else if (kind == "circle") {
      std::vector<int> w;
      for (const auto& jw : ja.at("weights")) w.push_back(jw.get<int>());
      scene.action = GroupAction::circle(std::move(w), n);
    } else {
      throw scene_error("unknown group_action kind '" + kind + "'");
    }
  }

  if (j.contains("hilbert_generators")) {
    HilbertMap hm;
    for (const auto& g : j.at("hilbert_generators"))
      hm.generators.push_back(parse_expr(g.get<std::string>(), n));
    scene.hmap = std::move(hm);
  }

  for (const auto& jp : j.value("cloud", json::array()))
    scene.cloud.push_back(detail::json_vector(jp));

  return scene;
}

inline Scene parse_scene_text(const std::string& text) {
  return parse_scene(json::parse(text));
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw scene_error("cannot open scene file: " + path);
  json j;
  in >> j;
  return parse_scene(j);
}

// --- report records ---

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json report_record(const CheckReport& rep, int seeds = 1) {
  json r;
  r["check"] = rep.check;
  r["pair"] = rep.subject;
  r["point"] = vector_to_json(rep.point);
  r["defect"] = rep.defect;
  r["verdict"] = verdict_name(rep.verdict);
  r["seeds"] = seeds;
  r["converged"] = rep.converged;
  r["total"] = rep.total;
  r["witnesses"] = rep.notes;
  return r;
}

struct ReportBuilder {
  json root;
  int holds = 0, fails = 0, undetermined = 0;

  ReportBuilder(const std::string& command, const std::string& scene, const json& config) {
    root["schema_version"] = 1;
    root["command"] = command;
    root["scene"] = scene;
    root["config"] = config;
    root["records"] = json::array();
  }

  void add(json record) {
    if (record.contains("verdict")) {
      std::string v = record["verdict"].get<std::string>();
      if (v == "holds") ++holds;
      else if (v == "fails") ++fails;
      else ++undetermined;
    }
    root["records"].push_back(std::move(record));
  }

  void add(const CheckReport& rep, int seeds = 1) { add(report_record(rep, seeds)); }

  // exit-code contract: 0 all hold, 1 some verdict fails, 3 undetermined
  int exit_code() const {
    if (fails > 0) return 1;
    if (undetermined > 0) return 3;
    return 0;
  }

  json finish() {
    json summary;
    summary["holds"] = holds;
    summary["fails"] = fails;
    summary["undetermined"] = undetermined;
    root["summary"] = summary;
    return root;
  }

  void write(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << finish().dump(2) << "\n";
  }
};

}  // namespace strata
