#pragma once

// JSON form of a rule base:
//
//   {
//     "inputs": [ {"name": "loc_risk", "lo": 0, "hi": 10, "labels": ["LO", "MED", "HI"]}, ... ],
//     "output": {"name": "downtime", "lo": 0, "hi": 100, "labels": ["LO", "MED", "HI"]},
//     "rules": [
//       {"name": "R1", "connective": "OR", "consequent": "HI",
//        "antecedents": [{"variable": "loc_risk", "label": "HI"},
//                        {"variable": "maintenance", "label": "POOR"}]}
//     ]
//   }
//
// A variable may carry "mfs": [[a, b, c], ...] which pins its membership
// functions (it then has no free parameters). Variables without "mfs" get
// symmetric triangles of half-width "half_width" (default: span / (labels - 1),
// or span / 2 for a single label) until parameters are bound. Rules accept an
// optional "included" flag.

#include <fstream>
#include <sstream>
#include <string>

#include "fbl/error.hpp"
#include "fbl/fuzzy.hpp"
#include "json.hpp"

namespace fbl {

using Json = nlohmann::json;

namespace detail {

inline LinguisticVariable variable_from_json(const Json& j) {
  LinguisticVariable v;
  v.name = j.at("name").get<std::string>();
  v.universe = {j.at("lo").get<double>(), j.at("hi").get<double>()};
  v.labels = j.at("labels").get<std::vector<std::string>>();
  require(v.universe.lo < v.universe.hi, "variable '" + v.name + "': lo must be < hi");
  require(!v.labels.empty(), "variable '" + v.name + "': needs at least one label");
  if (j.contains("mfs")) {
    v.fixed = true;
    for (const auto& m : j.at("mfs")) {
      require(m.is_array() && m.size() == 3, "variable '" + v.name + "': each mf is [a, b, c]");
      v.mfs.push_back({m[0].get<double>(), m[1].get<double>(), m[2].get<double>()});
    }
  } else {
    const double span = v.universe.span();
    const double hw = j.value("half_width", v.labels.size() > 1 ? span / static_cast<double>(v.labels.size() - 1)
                                                                : span / 2.0);
    v.mfs.resize(v.labels.size());
    std::vector<double> phi(v.labels.size(), hw);
    bind_variable(v, phi);
  }
  return v;
}

inline Json variable_to_json(const LinguisticVariable& v) {
  Json j{{"name", v.name}, {"lo", v.universe.lo}, {"hi", v.universe.hi}, {"labels", v.labels}};
  if (v.fixed) {
    Json mfs = Json::array();
    for (const auto& m : v.mfs) mfs.push_back({m.a, m.b, m.c});
    j["mfs"] = mfs;
  }
  return j;
}

inline std::size_t find_label(const LinguisticVariable& v, const std::string& label, const std::string& rule) {
  auto idx = v.label_index(label);
  require(idx.has_value(), "rule '" + rule + "': unknown label '" + label + "' for variable '" + v.name + "'");
  return *idx;
}

}  // namespace detail

inline RuleBase rule_base_from_json(const Json& j) {
  RuleBase base;
  for (const auto& v : j.at("inputs")) base.inputs.push_back(detail::variable_from_json(v));
  base.output = detail::variable_from_json(j.at("output"));
  std::size_t k = 0;
  for (const auto& r : j.at("rules")) {
    Rule rule;
    rule.name = r.value("name", "R" + std::to_string(++k));
    const auto conn = r.value("connective", std::string("AND"));
    detail::require(conn == "AND" || conn == "OR", "rule '" + rule.name + "': connective must be AND or OR");
    rule.connective = conn == "AND" ? Connective::And : Connective::Or;
    for (const auto& a : r.at("antecedents")) {
      const auto var = a.at("variable").get<std::string>();
      std::size_t vi = base.inputs.size();
      for (std::size_t i = 0; i < base.inputs.size(); ++i) {
        if (base.inputs[i].name == var) vi = i;
      }
      detail::require(vi < base.inputs.size(), "rule '" + rule.name + "': unknown input variable '" + var + "'");
      rule.antecedents.push_back({vi, detail::find_label(base.inputs[vi], a.at("label").get<std::string>(), rule.name)});
    }
    rule.consequent = detail::find_label(base.output, r.at("consequent").get<std::string>(), rule.name);
    rule.included = r.value("included", true);
    base.rules.push_back(std::move(rule));
  }
  validate(base);
  return base;
}

inline Json rule_base_to_json(const RuleBase& base) {
  Json j;
  j["inputs"] = Json::array();
  for (const auto& v : base.inputs) j["inputs"].push_back(detail::variable_to_json(v));
  j["output"] = detail::variable_to_json(base.output);
  j["rules"] = Json::array();
  for (const auto& r : base.rules) {
    Json rj{{"name", r.name},
            {"connective", r.connective == Connective::And ? "AND" : "OR"},
            {"consequent", base.output.labels[r.consequent]}};
    rj["antecedents"] = Json::array();
    for (const auto& a : r.antecedents) {
      rj["antecedents"].push_back(
          {{"variable", base.inputs[a.variable].name}, {"label", base.inputs[a.variable].labels[a.label]}});
    }
    if (!r.included) rj["included"] = false;
    j["rules"].push_back(rj);
  }
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error("invalid JSON in '" + path + "': " + e.what());
  }
}

inline RuleBase load_rule_base(const std::string& path) {
  try {
    return rule_base_from_json(read_json_file(path));
  } catch (const Json::exception& e) {
    throw Error("invalid rule base '" + path + "': " + e.what());
  }
}

}  // namespace fbl
