#include "nilgeo/spec_io.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef NILGEO_DATA_DIR
#define NILGEO_DATA_DIR "data"
#endif

namespace nilgeo {

namespace fs = std::filesystem;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string bundled_data_dir() {
  if (const char* env = std::getenv("NILGEO_DATA")) return env;
  return NILGEO_DATA_DIR;
}

namespace {

double num(const json& v, const std::string& where) {
  if (!v.is_number()) throw SpecError("spec: expected number at " + where);
  return v.get<double>();
}

Mat read_matrix(const json& v, int rows, int cols, const std::string& where) {
  Mat M(rows, cols);
  if (!v.is_array()) throw SpecError("spec: expected array at " + where);
  if (static_cast<int>(v.size()) == rows * cols && (v.empty() || v[0].is_number())) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) M(r, c) = num(v[r * cols + c], where);
    return M;
  }
  if (static_cast<int>(v.size()) != rows) throw SpecError("spec: wrong number of rows at " + where);
  for (int r = 0; r < rows; ++r) {
    if (!v[r].is_array() || static_cast<int>(v[r].size()) != cols)
      throw SpecError("spec: wrong row length at " + where + "[" + std::to_string(r) + "]");
    for (int c = 0; c < cols; ++c) M(r, c) = num(v[r][c], where);
  }
  return M;
}

}  // namespace

LoadedSpec parse_spec(const json& j, const std::string& name) {
  if (!j.is_object()) throw SpecError("spec: top level must be an object");
  for (const char* key : {"dim", "step", "basis", "brackets", "horizontal", "metric"})
    if (!j.contains(key)) throw SpecError(std::string("spec: missing field '") + key + "'");
  if (!j["dim"].is_number_integer()) throw SpecError("spec: 'dim' must be an integer");
  const int n = j["dim"].get<int>();
  if (n <= 0) throw SpecError("spec: 'dim' must be positive");
  if (!j["step"].is_number_integer()) throw SpecError("spec: 'step' must be an integer");
  const int step = j["step"].get<int>();
  if (!j["basis"].is_array() || static_cast<int>(j["basis"].size()) != n)
    throw SpecError("spec: 'basis' must list dim names");
  std::vector<std::string> names;
  for (const auto& b : j["basis"]) {
    if (!b.is_string()) throw SpecError("spec: basis names must be strings");
    names.push_back(b.get<std::string>());
  }

  std::vector<BracketTerm> terms;
  if (!j["brackets"].is_array()) throw SpecError("spec: 'brackets' must be an array");
  for (size_t b = 0; b < j["brackets"].size(); ++b) {
    const auto& e = j["brackets"][b];
    const std::string where = "brackets[" + std::to_string(b) + "]";
    if (!e.is_object() || !e.contains("i") || !e.contains("j") || !e.contains("coeffs") || !e["coeffs"].is_object())
      throw SpecError("spec: " + where + " needs i, j, coeffs");
    int i = e["i"].get<int>();
    int jj = e["j"].get<int>();
    for (const auto& [k, c] : e["coeffs"].items()) {
      int kk = 0;
      try {
        kk = std::stoi(k);
      } catch (...) {
        throw SpecError("spec: " + where + " has a non-integer coefficient key");
      }
      terms.push_back({i, jj, kk, num(c, where)});
    }
  }
  auto alg = std::make_shared<const NilpotentAlgebra>(names, step, terms);

  const json& h = j["horizontal"];
  if (!h.is_array() || h.empty()) throw SpecError("spec: 'horizontal' must be a non-empty array");
  Mat H;
  if (h[0].is_number_integer()) {
    H = Mat::Zero(n, h.size());
    for (size_t c = 0; c < h.size(); ++c) {
      int idx = h[c].get<int>();
      if (idx < 0 || idx >= n) throw SpecError("spec: horizontal index out of range");
      H(idx, c) = 1.0;
    }
  } else {
    // list of column vectors
    H = read_matrix(h, static_cast<int>(h.size()), n, "horizontal").transpose();
  }
  const int k = static_cast<int>(H.cols());
  Mat rho = read_matrix(j["metric"], k, k, "metric");

  LoadedSpec out;
  out.algebra = alg;
  out.structure = std::make_shared<const SubRiemannianStructure>(alg, H, rho);
  out.name = name;
  out.hash = fnv1a_hex(j.dump());
  return out;
}

LoadedSpec load_spec(const std::string& path_or_name) {
  fs::path p(path_or_name);
  if (!fs::exists(p)) {
    fs::path alt = fs::path(bundled_data_dir()) / "algebras" / path_or_name;
    if (fs::exists(alt)) {
      p = alt;
    } else if (fs::exists(alt.string() + ".json")) {
      p = alt.string() + ".json";
    } else {
      throw SpecError("spec: file not found: " + path_or_name);
    }
  }
  std::ifstream in(p);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SpecError(std::string("spec: invalid JSON: ") + e.what());
  }
  return parse_spec(j, p.stem().string());
}

Vec parse_vector(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      vals.push_back(std::stod(tok, &used));
    } catch (...) {
      throw SpecError("cannot parse number '" + tok + "'");
    }
  }
  return Eigen::Map<Vec>(vals.data(), vals.size());
}

json control_to_json(const SampledControl& u) {
  json j;
  j["grid"] = u.nodes();
  json vals = json::array();
  for (Eigen::Index r = 0; r < u.nodes(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(u.dim()));
    for (int c = 0; c < u.dim(); ++c) row[static_cast<std::size_t>(c)] = u.values()(r, c);
    vals.push_back(row);
  }
  j["values"] = vals;
  if (u.pieces().size() > 1) {
    json pcs = json::array();
    for (const auto& p : u.pieces()) pcs.push_back({p.first, p.count, p.t0, p.t1});
    j["pieces"] = pcs;
  }
  return j;
}

json fourier_to_json(const FourierControl& v) {
  json f = json::object();
  for (const auto& [n, c] : v.coefficients) {
    json entries = json::array();
    for (Eigen::Index i = 0; i < c.size(); ++i) entries.push_back({c(i).real(), c(i).imag()});
    f[std::to_string(n)] = entries;
  }
  return json{{"fourier", f}};
}

FourierControl fourier_from_json(const json& j) {
  if (!j.contains("fourier") || !j["fourier"].is_object()) throw SpecError("control: missing \"fourier\" object");
  FourierControl v;
  Eigen::Index k = -1;
  for (const auto& [key, entries] : j["fourier"].items()) {
    int n = 0;
    try {
      n = std::stoi(key);
    } catch (const std::exception&) {
      throw SpecError("control: fourier mode \"" + key + "\" is not an integer");
    }
    CVec c(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (!e.is_array() || e.size() != 2) throw SpecError("control: fourier." + key + " entries must be [re, im]");
      c(static_cast<Eigen::Index>(i)) = cplx(e[0].get<double>(), e[1].get<double>());
    }
    if (k >= 0 && c.size() != k) throw SpecError("control: fourier modes disagree in dimension");
    k = c.size();
    v.coefficients[n] = c;
  }
  return v;
}

SampledControl control_from_json(const json& j, Eigen::Index grid) {
  if (j.contains("fourier")) return fourier_to_sampled(fourier_from_json(j), j.value("grid", grid));
  if (!j.contains("values")) throw SpecError("control: expected \"values\" or \"fourier\"");
  const auto& vals = j["values"];
  if (!vals.is_array() || vals.empty()) throw SpecError("control: values must be a non-empty array");
  Mat m(static_cast<Eigen::Index>(vals.size()), static_cast<Eigen::Index>(vals[0].size()));
  for (std::size_t r = 0; r < vals.size(); ++r) {
    if (vals[r].size() != vals[0].size()) throw SpecError("control: ragged values at row " + std::to_string(r));
    for (std::size_t c = 0; c < vals[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = vals[r][c].get<double>();
  }
  if (j.contains("grid") && j["grid"].get<Eigen::Index>() != m.rows())
    throw SpecError("control: grid disagrees with the number of rows");
  if (!j.contains("pieces")) return SampledControl(m);
  std::vector<GridPiece> pieces;
  for (const auto& p : j["pieces"])
    pieces.push_back({p[0].get<Eigen::Index>(), p[1].get<Eigen::Index>(), p[2].get<double>(), p[3].get<double>()});
  return SampledControl(m, pieces);
}

}  // namespace nilgeo
