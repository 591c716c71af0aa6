#pragma once
/// \file io.hpp
/// File formats: sparse fields and traces as JSON, grid fields as "SGF1"
/// binary, coefficient lists as JSON quadruples. Every writer goes through a
/// temporary file and a rename.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "sparsesph/error.hpp"
#include "sparsesph/geom.hpp"
#include "sparsesph/harmonic.hpp"
#include "sparsesph/model.hpp"
#include "sparsesph/reconstruct.hpp"

namespace sparsesph {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Raw file access

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return data;
}

/// Writes `data` to a sibling temporary file, then renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failure on '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path.string() + "'");
  }
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError(what + ": malformed JSON (" + e.what() + ")");
  }
}

/// Pretty-printed with a trailing newline. Doubles use the shortest decimal
/// form that parses back to the same bits.
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Sparse fields

namespace detail {

inline Json direction_json(const UnitVector& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline UnitVector direction_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("sparse field: direction must be an array of 3 numbers");
  for (const auto& c : j)
    if (!c.is_number()) throw IoError("sparse field: direction must be an array of 3 numbers");
  try {
    return UnitVector::from_unit_components(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("sparse field: ") + e.what());
  }
}

template <class F>
auto json_field(const Json& j, const char* key, F&& convert) {
  if (!j.contains(key)) throw IoError(std::string("missing field '") + key + "'");
  try {
    return convert(j.at(key));
  } catch (const Json::exception&) {
    throw IoError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline Json to_json(const SparseField& f) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["lmax"] = f.lmax();
  j["shared_directions"] = f.shared_directions();
  if (f.shared_directions()) {
    j["K"] = f.directions().size();
    Json dirs = Json::array();
    for (const auto& d : f.directions()) dirs.push_back(detail::direction_json(d));
    j["directions"] = std::move(dirs);
  } else {
    Json ks = Json::array();
    Json dirs = Json::array();
    for (const auto& list : f.ragged_directions()) {
      ks.push_back(list.size());
      Json row = Json::array();
      for (const auto& d : list) row.push_back(detail::direction_json(d));
      dirs.push_back(std::move(row));
    }
    j["K_per_ell"] = std::move(ks);
    j["directions"] = std::move(dirs);
  }
  j["weights"] = f.weights();
  j["generator"] = f.provenance().generator;
  j["spectrum_model"] = f.provenance().spectrum_model;
  Json params = Json::object();
  for (const auto& [k, v] : f.provenance().parameters) params[k] = v;
  j["parameters"] = std::move(params);
  j["seed"] = f.provenance().seed;
  return j;
}

inline SparseField sparse_field_from_json(const Json& j) {
  if (!j.is_object()) throw IoError("sparse field: document must be a JSON object");
  const int version = detail::json_field(j, "format_version", [](const Json& v) { return v.get<int>(); });
  if (version != kFormatVersion) throw IoError("sparse field: unsupported format_version " + std::to_string(version));
  const int lmax = detail::json_field(j, "lmax", [](const Json& v) { return v.get<int>(); });
  const bool shared = detail::json_field(j, "shared_directions", [](const Json& v) { return v.get<bool>(); });
  auto weights = detail::json_field(j, "weights", [](const Json& v) { return v.get<std::vector<std::vector<double>>>(); });
  if (lmax < 0 || weights.size() != static_cast<std::size_t>(lmax) + 1)
    throw IoError("sparse field: weights must have lmax+1 rows");
  Provenance p;
  p.generator = detail::json_field(j, "generator", [](const Json& v) { return v.get<std::string>(); });
  p.spectrum_model = detail::json_field(j, "spectrum_model", [](const Json& v) { return v.get<std::string>(); });
  p.parameters = detail::json_field(j, "parameters", [](const Json& v) { return v.get<std::map<std::string, double>>(); });
  p.seed = detail::json_field(j, "seed", [](const Json& v) { return v.get<std::uint64_t>(); });
  const Json& dirs = detail::json_field(j, "directions", [](const Json& v) -> const Json& { return v; });
  if (!dirs.is_array()) throw IoError("sparse field: directions must be an array");
  try {
    if (shared) {
      const auto K = detail::json_field(j, "K", [](const Json& v) { return v.get<std::size_t>(); });
      if (dirs.size() != K) throw IoError("sparse field: K does not match the direction count");
      std::vector<UnitVector> list;
      for (const auto& d : dirs) list.push_back(detail::direction_from_json(d));
      return SparseField::shared(std::move(list), std::move(weights), std::move(p));
    }
    const auto ks = detail::json_field(j, "K_per_ell", [](const Json& v) { return v.get<std::vector<std::size_t>>(); });
    if (ks.size() != weights.size() || dirs.size() != weights.size())
      throw IoError("sparse field: K_per_ell and directions need lmax+1 entries");
    std::vector<std::vector<UnitVector>> lists(dirs.size());
    for (std::size_t l = 0; l < dirs.size(); ++l) {
      if (!dirs[l].is_array() || dirs[l].size() != ks[l])
        throw IoError("sparse field: K_per_ell does not match directions at l = " + std::to_string(l));
      for (const auto& d : dirs[l]) lists[l].push_back(detail::direction_from_json(d));
    }
    return SparseField::ragged(std::move(lists), std::move(weights), std::move(p));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("sparse field: ") + e.what());
  }
}

inline std::string encode_sparse_field(const SparseField& f) { return dump_json(to_json(f)); }

inline SparseField decode_sparse_field(const std::string& text) {
  return sparse_field_from_json(parse_json(text, "sparse field"));
}

inline void write_sparse_field(const std::filesystem::path& path, const SparseField& f) {
  write_file_atomic(path, encode_sparse_field(f));
}

inline SparseField read_sparse_field(const std::filesystem::path& path) { return decode_sparse_field(read_file(path)); }

// ---------------------------------------------------------------------------
// Grid fields: "SGF1" | u32 LE header length | JSON header | f64 LE values

inline constexpr char kGridMagic[4] = {'S', 'G', 'F', '1'};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline void put_f64_le(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace detail

inline std::string encode_grid(const GridField& f) {
  Json header;
  header["format_version"] = kFormatVersion;
  header["lmax"] = f.grid.lgrid();
  header["ntheta"] = f.grid.ntheta();
  header["nphi"] = f.grid.nphi();
  const std::string text = header.dump();
  std::string out(kGridMagic, 4);
  detail::put_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + 8 * f.values.size());
  for (double v : f.values) detail::put_f64_le(out, v);
  return out;
}

inline GridField decode_grid(const std::string& data) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  if (data.size() < 8 || std::memcmp(data.data(), kGridMagic, 4) != 0) throw IoError("grid file: bad magic");
  const std::uint32_t hlen = detail::get_u32_le(bytes + 4);
  if (hlen > data.size() - 8) throw IoError("grid file: header length exceeds file size");
  const Json header = parse_json(data.substr(8, hlen), "grid file header");
  const auto get = [&](const char* key) {
    return detail::json_field(header, key, [](const Json& v) { return v.get<std::int64_t>(); });
  };
  if (get("format_version") != kFormatVersion) throw IoError("grid file: unsupported format_version");
  const std::int64_t lmax = get("lmax"), ntheta = get("ntheta"), nphi = get("nphi");
  if (lmax < 0 || lmax > 100000 || ntheta != lmax + 1 || nphi < 2 * lmax + 1 || nphi > 10'000'000)
    throw IoError("grid file: inconsistent grid dimensions");
  const std::size_t count = static_cast<std::size_t>(ntheta) * static_cast<std::size_t>(nphi);
  const std::size_t body = data.size() - 8 - hlen;
  if (body != 8 * count) throw IoError("grid file: value block has the wrong length");
  std::vector<double> values(count);
  const unsigned char* p = bytes + 8 + hlen;
  for (std::size_t i = 0; i < count; ++i) values[i] = detail::get_f64_le(p + 8 * i);
  try {
    return GridField(SphereGrid(static_cast<int>(lmax), static_cast<std::size_t>(nphi)), std::move(values));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("grid file: ") + e.what());
  }
}

inline void write_grid(const std::filesystem::path& path, const GridField& f) { write_file_atomic(path, encode_grid(f)); }

inline GridField read_grid(const std::filesystem::path& path) { return decode_grid(read_file(path)); }

// ---------------------------------------------------------------------------
// Coefficient lists

inline Json coefficients_json(const HarmonicCoefficients& c) {
  Json rows = Json::array();
  for (int l = 0; l <= c.lmax(); ++l)
    for (int m = -l; m <= l; ++m) rows.push_back(Json::array({l, m, c(l, m).real(), c(l, m).imag()}));
  return rows;
}

inline HarmonicCoefficients coefficients_from_json(const Json& rows, int lmax) {
  if (!rows.is_array()) throw IoError("coefficients: expected an array of [l, m, re, im]");
  HarmonicCoefficients c(lmax);
  for (const auto& r : rows) {
    if (!r.is_array() || r.size() != 4 || !r[0].is_number_integer() || !r[1].is_number_integer() ||
        !r[2].is_number() || !r[3].is_number())
      throw IoError("coefficients: each row must be [l, m, re, im]");
    const int l = r[0].get<int>(), m = r[1].get<int>();
    if (l < 0 || l > lmax || m < -l || m > l) throw IoError("coefficients: index out of range");
    c(l, m) = cplx(r[2].get<double>(), r[3].get<double>());
  }
  return c;
}

inline std::string encode_coefficients(const HarmonicCoefficients& c) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["lmax"] = c.lmax();
  j["coefficients"] = coefficients_json(c);
  return dump_json(j);
}

inline HarmonicCoefficients decode_coefficients(const std::string& text) {
  const Json j = parse_json(text, "coefficients");
  if (!j.is_object()) throw IoError("coefficients: document must be a JSON object");
  if (detail::json_field(j, "format_version", [](const Json& v) { return v.get<int>(); }) != kFormatVersion)
    throw IoError("coefficients: unsupported format_version");
  const int lmax = detail::json_field(j, "lmax", [](const Json& v) { return v.get<int>(); });
  if (lmax < 0) throw IoError("coefficients: negative lmax");
  return coefficients_from_json(detail::json_field(j, "coefficients", [](const Json& v) { return v; }), lmax);
}

inline void write_coefficients(const std::filesystem::path& path, const HarmonicCoefficients& c) {
  write_file_atomic(path, encode_coefficients(c));
}

inline HarmonicCoefficients read_coefficients(const std::filesystem::path& path) {
  return decode_coefficients(read_file(path));
}

/// Sniffs the three input kinds accepted by the command-line tool.
enum class FileKind { sparse_field, grid, coefficients };

inline FileKind detect_file_kind(const std::string& data) {
  if (data.size() >= 4 && std::memcmp(data.data(), kGridMagic, 4) == 0) return FileKind::grid;
  const Json j = parse_json(data, "input");
  if (j.is_object() && j.contains("coefficients")) return FileKind::coefficients;
  if (j.is_object() && j.contains("weights")) return FileKind::sparse_field;
  throw IoError("input: not a sparse field, grid or coefficient file");
}

// ---------------------------------------------------------------------------
// Traces

inline Json to_json(const MonoResult& r) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "mono";
  j["ell"] = r.trace.ell;
  j["requested_steps"] = r.trace.requested_steps;
  j["initial_norm"] = r.trace.initial_norm;
  j["stop_reason"] = r.trace.stop_reason;
  Json steps = Json::array();
  for (std::size_t k = 0; k < r.trace.steps.size(); ++k) {
    const auto& s = r.trace.steps[k];
    Json rec;
    rec["step"] = k + 1;
    rec["direction"] = detail::direction_json(s.direction);
    rec["lattice_index"] = s.lattice_index;
    rec["coefficient"] = s.coefficient;
    rec["residual_norm"] = s.residual_norm;
    rec["defect"] = s.defect;
    steps.push_back(std::move(rec));
  }
  j["steps"] = std::move(steps);
  return j;
}

inline Json to_json(const PolyResult& r) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "poly";
  j["epsilon"] = r.trace.epsilon;
  j["max_steps"] = r.trace.max_steps;
  j["termination"] = r.trace.termination;
  Json steps = Json::array();
  for (std::size_t k = 0; k < r.trace.steps.size(); ++k) {
    const auto& s = r.trace.steps[k];
    Json rec;
    rec["step"] = k + 1;
    rec["direction"] = detail::direction_json(s.direction);
    rec["lattice_index"] = s.lattice_index;
    rec["index"] = s.index;
    rec["committed_factor"] = s.committed_factor;
    rec["residual_spectrum"] = s.residual_spectrum;
    rec["eta"] = s.eta;
    rec["component"] = coefficients_json(s.component);
    steps.push_back(std::move(rec));
  }
  j["steps"] = std::move(steps);
  return j;
}

}  // namespace sparsesph
