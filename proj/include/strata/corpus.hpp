#pragma once

// Shipped example scenes with expected-result fixtures. Scenes are embedded
// as schema-v1 JSON so `corpus emit` can write them out for modification.

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "strata/scene.hpp"

namespace strata {

struct Fixture {
  std::string check;        // which record the expectation applies to
  std::string expectation;  // human-readable expected outcome
  std::string provenance;   // "example" (source text) or "derived" (oracle)
};

struct ExampleScene {
  std::string name;
  std::string scene_json;
  std::vector<Fixture> fixtures;

  Scene load() const { return parse_scene_text(scene_json); }
};

inline const std::vector<ExampleScene>& corpus_examples() {
  static const std::vector<ExampleScene> examples = {
      {"cusp",
       R"JSON({
  "schema_version": 1,
  "name": "cusp",
  "ambient_dim": 3,
  "equations": ["y^2 + x^3 - z^2*x^2"],
  "vector_fields": [{"name": "euler", "components": ["2*x", "3*y", "z"]}]
})JSON",
       {{"stratify", "strata of dims {2 (components reported), 1, 1, 0}; half-axes on +-z>0; origin 0-dim",
         "example"},
        {"whitney", "A and B hold (defect <= 1e-3) for pairs incident at (0,0,+-1) and the origin",
         "example"},
        {"orbit", "deg-1 tangent basis contains (2x,3y,z); flow = (e^{2t}x, e^{3t}y, e^{t}z); "
                  "reach classes stay inside strata",
         "example"}}},
      {"spiral",
       R"JSON({
  "schema_version": 1,
  "name": "spiral",
  "ambient_dim": 2,
  "parametrization": {
    "components": ["exp(-t1)*cos(t1)", "exp(-t1)*sin(t1)"],
    "domain": [[0.0, 170.0]],
    "period": 6.283185307179586,
    "limit_point": [0.0, 0.0]
  },
  "declared_strata": [
    {"label": "S1", "dim": 1, "use_parametrization": true,
     "inequalities": [{"expr": "x^2 + y^2", "rel": ">"}]},
    {"label": "S0", "dim": 0, "point": [0.0, 0.0]}
  ]
})JSON",
       {{"whitney", "A holds trivially at the origin (0-plane); B fails with defect 0.7071 +- 1e-3",
         "example"},
        {"limit", "tangent lines along theta = 2*pi*n converge to span{(1,-1)}", "example"}}},
      {"mather",
       R"JSON({
  "schema_version": 1,
  "name": "mather",
  "ambient_dim": 3,
  "equations": ["x*y*(x + y)*(y + (3 + atan(z))*x)"]
})JSON",
       {{"cone", "4 line clusters at (0,0,z0); (x,y)-projections x=0, y=0, x+y=0, y+(3+atan(z0))x=0",
         "example"},
        {"cross_ratio", "cross-ratio injective in z0 (pairwise differences > 0.05)", "derived"},
        {"orbit", "orbit dimension 0 on the z-axis, 2 at smooth samples", "example"}}},
      {"z2_line",
       R"JSON({
  "schema_version": 1,
  "name": "z2_line",
  "ambient_dim": 1,
  "group_action": {"kind": "finite", "matrices": [[[1.0]], [[-1.0]]]},
  "hilbert_generators": ["x^2"],
  "cloud": [[0.0],
            [0.75], [0.85], [0.95], [1.05], [1.15], [1.25], [1.35],
            [-0.75], [-0.85], [-0.95], [-1.05], [-1.15], [-1.25], [-1.35]]
})JSON",
       {{"quotient", "orbit types {0} and (0,inf) match pushed-field reach classes", "derived"}}},
      {"z2_plane",
       R"JSON({
  "schema_version": 1,
  "name": "z2_plane",
  "ambient_dim": 2,
  "group_action": {"kind": "finite", "matrices": [[[1.0, 0.0], [0.0, 1.0]],
                                                   [[1.0, 0.0], [0.0, -1.0]]]},
  "hilbert_generators": ["x", "y^2"],
  "cloud": [[-1.2, 0.0], [-0.9, 0.0], [-0.6, 0.0], [-0.3, 0.0], [0.0, 0.0],
            [0.3, 0.0], [0.6, 0.0], [0.9, 0.0], [1.2, 0.0],
            [-1.2, 0.75], [-0.8, 0.75], [-0.4, 0.75], [0.0, 0.75], [0.4, 0.75], [0.8, 0.75], [1.2, 0.75],
            [-1.2, 1.05], [-0.8, 1.05], [-0.4, 1.05], [0.0, 1.05], [0.4, 1.05], [0.8, 1.05], [1.2, 1.05],
            [-1.2, 1.35], [-0.8, 1.35], [-0.4, 1.35], [0.0, 1.35], [0.4, 1.35], [0.8, 1.35], [1.2, 1.35],
            [-0.6, -0.75], [0.6, -0.75], [-0.6, -1.35], [0.6, -1.35]]
})JSON",
       {{"quotient", "orbit types {y=0} and {y!=0} match pushed-field reach classes on sigma=(x, y^2)",
         "derived"}}},
      {"s1_plane",
       R"JSON({
  "schema_version": 1,
  "name": "s1_plane",
  "ambient_dim": 2,
  "group_action": {"kind": "circle", "weights": [1]},
  "hilbert_generators": ["x^2 + y^2"],
  "cloud": [[0.0, 0.0],
            [0.75, 0.0], [0.375, 0.6495190528383289], [-0.375, 0.6495190528383289],
            [0.95, 0.0], [0.475, 0.8227241335952166], [-0.475, 0.8227241335952166],
            [1.15, 0.0], [0.575, 0.9959292143521043], [-0.575, 0.9959292143521043],
            [1.35, 0.0], [0.675, 1.1691342951089922], [-0.675, 1.1691342951089922]]
})JSON",
       {{"quotient", "orbit types {0} and the punctured plane match pushed-field reach classes on sigma=r^2",
         "derived"}}}};
  return examples;
}

inline const ExampleScene& load_example(const std::string& name) {
  for (const auto& ex : corpus_examples())
    if (ex.name == name) return ex;
  std::string catalog;
  for (const auto& ex : corpus_examples()) catalog += (catalog.empty() ? "" : ", ") + ex.name;
  throw scene_error("unknown example '" + name + "'; available: " + catalog);
}

inline void emit_example(const ExampleScene& ex, const std::string& dir) {
  std::string path = dir + "/" + ex.name + ".json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  // normalize through the JSON parser so emitted files are canonical
  out << json::parse(ex.scene_json).dump(2) << "\n";
}

}  // namespace strata
