#pragma once

#include "nilgeo/controls.hpp"

#include <json.hpp>

#include <string>

namespace nilgeo {

using json = nlohmann::json;

struct LoadedSpec {
  std::shared_ptr<const NilpotentAlgebra> algebra;
  std::shared_ptr<const SubRiemannianStructure> structure;
  std::string name;
  std::string hash;  // FNV-1a 64 of the canonical JSON dump, hex
};

// Parses the algebra spec format. Throws SpecError (with a json-path hint) on malformed input.
LoadedSpec parse_spec(const json& j, const std::string& name = "inline");

// Accepts a file path; bare names such as "heisenberg" resolve against the bundled data directory.
LoadedSpec load_spec(const std::string& path_or_name);

std::string bundled_data_dir();

std::string fnv1a_hex(const std::string& s);

Vec parse_vector(const std::string& csv);

// {"grid": N, "values": [[...], ...]} with optional "pieces": [[first, count, t0, t1], ...]
json control_to_json(const SampledControl& u);
// {"fourier": {"1": [[re, im], ...], ...}}
json fourier_to_json(const FourierControl& v);
FourierControl fourier_from_json(const json& j);
// either form; Fourier controls are sampled on `grid` nodes (or the "grid" key when present)
SampledControl control_from_json(const json& j, Eigen::Index grid = 2049);

}  // namespace nilgeo
