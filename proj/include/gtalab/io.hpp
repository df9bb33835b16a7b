// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtalab/oracle.hpp"
#include "gtalab/presets.hpp"
#include "gtalab/roofline.hpp"

namespace gtalab {

// File formats
// ------------
// presets file: {"presets": [{...}, ...]} where each entry spells out the
// model shape with exactly these fields:
//   name, layers, hidden_dim, intermediate, n_heads, n_q, n_k, n_c,
//   d_h, d_l, mla_d_c, mla_d_rope, vocab
// Every field is required; unknown fields are rejected so a typo cannot
// silently fall back to a default. The mechanism is taken from the name
// prefix up to the first '-'. Gate activation and sequence budget are lab
// defaults (sigmoid, 1024), not part of the shape file.
//
// hardware file: {"profiles": [{...}, ...]} with name, peak_flops,
// mem_bandwidth, and optional offload_bandwidth / bytes_per_element.

namespace detail {

inline void require_fields(const nlohmann::json& obj, const std::set<std::string>& required,
                           const std::set<std::string>& optional, const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!required.count(item.key()) && !optional.count(item.key()))
      throw std::runtime_error(where + ": unknown field '" + item.key() + "'");
  }
  for (const std::string& key : required) {
    if (!obj.contains(key))
      throw std::runtime_error(where + ": missing field '" + key + "'");
  }
}

inline nlohmann::json parse_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + what + " file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(what + " file " + path + ": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json preset_to_json(const ModelPreset& p) {
  const AttentionConfig& a = p.attention;
  nlohmann::json j;
  j["name"] = p.name;
  j["layers"] = p.layers;
  j["hidden_dim"] = a.hidden_dim;
  j["intermediate"] = p.intermediate;
  j["n_heads"] = a.n_heads;
  j["n_q"] = a.n_q;
  j["n_k"] = a.n_k;
  j["n_c"] = a.n_c;
  j["d_h"] = a.head_dim;
  j["d_l"] = a.latent_dim;
  j["mla_d_c"] = a.mla_d_c;
  j["mla_d_rope"] = a.mla_d_rope;
  j["vocab"] = p.vocab;
  return j;
}

inline ModelPreset preset_from_json(const nlohmann::json& j) {
  static const std::set<std::string> required = {
      "name", "layers", "hidden_dim", "intermediate", "n_heads", "n_q", "n_k",
      "n_c",  "d_h",    "d_l",        "mla_d_c",      "mla_d_rope", "vocab"};
  const std::string name = j.contains("name") ? j["name"].get<std::string>() : "<unnamed>";
  detail::require_fields(j, required, {}, "preset '" + name + "'");

  ModelPreset p;
  p.name = name;
  p.layers = j["layers"].get<std::size_t>();
  p.intermediate = j["intermediate"].get<std::size_t>();
  p.vocab = j["vocab"].get<std::size_t>();

  AttentionConfig& a = p.attention;
  const std::string prefix = name.substr(0, name.find('-'));
  a.mechanism = parse_mechanism(prefix);
  a.hidden_dim = j["hidden_dim"].get<std::size_t>();
  a.n_heads = j["n_heads"].get<std::size_t>();
  a.n_q = j["n_q"].get<std::size_t>();
  a.n_k = j["n_k"].get<std::size_t>();
  a.n_c = j["n_c"].get<std::size_t>();
  a.head_dim = j["d_h"].get<std::size_t>();
  a.latent_dim = j["d_l"].get<std::size_t>();
  a.mla_d_c = j["mla_d_c"].get<std::size_t>();
  a.mla_d_rope = j["mla_d_rope"].get<std::size_t>();
  a.mla_d_nope = a.head_dim > a.mla_d_rope ? a.head_dim - a.mla_d_rope : 0;
  a.gate_activation = ActivationKind::sigmoid;
  a.max_seq_len = 1024;
  a.rope.head_dim = a.mechanism == Mechanism::mla ? a.mla_d_rope : a.head_dim;
  a.validate();
  return p;
}

inline std::vector<ModelPreset> load_presets(const std::string& path) {
  const nlohmann::json j = detail::parse_file(path, "presets");
  if (!j.is_object() || !j.contains("presets") || !j["presets"].is_array())
    throw std::runtime_error("presets file " + path + ": expected {\"presets\": [...]}");
  std::vector<ModelPreset> out;
  for (const nlohmann::json& entry : j["presets"]) out.push_back(preset_from_json(entry));
  return out;
}

inline std::string presets_to_string(const std::vector<ModelPreset>& presets) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ModelPreset& p : presets) arr.push_back(preset_to_json(p));
  nlohmann::json j;
  j["presets"] = arr;
  return j.dump(2) + "\n";
}

inline HardwareProfile profile_from_json(const nlohmann::json& j) {
  static const std::set<std::string> required = {"name", "peak_flops", "mem_bandwidth"};
  static const std::set<std::string> optional = {"offload_bandwidth", "bytes_per_element"};
  const std::string name = j.contains("name") ? j["name"].get<std::string>() : "<unnamed>";
  detail::require_fields(j, required, optional, "hardware profile '" + name + "'");

  HardwareProfile hw;
  hw.name = name;
  hw.peak_flops = j["peak_flops"].get<double>();
  hw.mem_bandwidth = j["mem_bandwidth"].get<double>();
  if (j.contains("offload_bandwidth")) hw.offload_bandwidth = j["offload_bandwidth"].get<double>();
  if (j.contains("bytes_per_element")) hw.bytes_per_element = j["bytes_per_element"].get<double>();
  hw.validate();
  return hw;
}

inline std::vector<HardwareProfile> load_hardware_profiles(const std::string& path) {
  const nlohmann::json j = detail::parse_file(path, "hardware");
  if (!j.is_object() || !j.contains("profiles") || !j["profiles"].is_array())
    throw std::runtime_error("hardware file " + path + ": expected {\"profiles\": [...]}");
  std::vector<HardwareProfile> out;
  for (const nlohmann::json& entry : j["profiles"]) out.push_back(profile_from_json(entry));
  return out;
}

inline HardwareProfile find_profile(const std::vector<HardwareProfile>& profiles,
                                    const std::string& name) {
  for (const HardwareProfile& p : profiles)
    if (p.name == name) return p;
  std::ostringstream os;
  os << "unknown hardware profile '" << name << "'; available:";
  for (const HardwareProfile& p : profiles) os << ' ' << p.name;
  throw std::runtime_error(os.str());
}

inline std::string report_json_line(const oracle::OracleReport& r) {
  nlohmann::json j;
  j["case"] = r.case_name;
  j["max_abs_err"] = r.max_abs_err;
  j["max_rel_err"] = r.max_rel_err;
  j["tolerance"] = r.tolerance;
  j["passed"] = r.passed;
  j["seed"] = r.seed;
  return j.dump();
}

}  // namespace gtalab
