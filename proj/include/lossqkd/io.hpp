// File formats: attack-spec JSON, report JSON and the CSV tables.
//
// Needs nlohmann/json on the include path (target lossqkd::io).
#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "lossqkd/analysis.hpp"
#include "lossqkd/attack.hpp"
#include "lossqkd/montecarlo.hpp"
#include "lossqkd/search.hpp"

namespace lossqkd {

using json = nlohmann::json;

/// Malformed or structurally invalid input file.
struct format_error : invalid_input {
  using invalid_input::invalid_input;
};

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal that round-trips to the same double. Non-finite values
/// print as "nan", "inf" or "-inf".
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

/// JSON number, or null for NaN and infinities.
inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Attack specs

inline constexpr std::array<std::string_view, 6> kAttackKetKeys{"phi_0_b0", "phi_1_b0", "phi_nc_b0",
                                                               "phi_0_b1", "phi_1_b1", "phi_nc_b1"};

namespace io_detail {

inline BobOutcome outcome_of_key(std::size_t k) { return static_cast<BobOutcome>(k % 3); }
inline int bit_of_key(std::size_t k) { return static_cast<int>(k / 3); }

inline double require_number(const json& j, std::string_view what) {
  if (!j.is_number()) throw format_error("attack spec: " + std::string(what) + " must be a number");
  return j.get<double>();
}

inline ComplexVec ket_from_json(const json& arr, std::size_t d_e, std::string_view key) {
  const std::string name(key);
  if (!arr.is_array()) throw format_error("attack spec: kets." + name + " must be an array");
  if (arr.size() != d_e)
    throw format_error("attack spec: kets." + name + " has " + std::to_string(arr.size()) + " entries, expected d_e = " +
                       std::to_string(d_e));
  ComplexVec v(d_e);
  for (std::size_t i = 0; i < d_e; ++i) {
    const json& z = arr[i];
    if (!z.is_array() || z.size() != 2)
      throw format_error("attack spec: kets." + name + "[" + std::to_string(i) + "] must be [re, im]");
    v[i] = cplx{require_number(z[0], "amplitude"), require_number(z[1], "amplitude")};
  }
  return v;
}

}  // namespace io_detail

inline json attack_to_json(const ProbeKets& pk) {
  json kets = json::object();
  for (std::size_t k = 0; k < kAttackKetKeys.size(); ++k) {
    json arr = json::array();
    for (const cplx& z : pk.phi(io_detail::outcome_of_key(k), io_detail::bit_of_key(k)))
      arr.push_back(json::array({z.real(), z.imag()}));
    kets[std::string(kAttackKetKeys[k])] = std::move(arr);
  }
  return json{{"eta", pk.eta()}, {"d_e", pk.d_e()}, {"kets", std::move(kets)}};
}

/// Attack spec as text, one ket per line.
inline std::string attack_json_text(const ProbeKets& pk) {
  std::string s = "{\n  \"eta\": " + json(pk.eta()).dump() + ",\n  \"d_e\": " + std::to_string(pk.d_e()) +
                  ",\n  \"kets\": {\n";
  for (std::size_t k = 0; k < kAttackKetKeys.size(); ++k) {
    json arr = json::array();
    for (const cplx& z : pk.phi(io_detail::outcome_of_key(k), io_detail::bit_of_key(k)))
      arr.push_back(json::array({z.real(), z.imag()}));
    s += "    \"" + std::string(kAttackKetKeys[k]) + "\": " + arr.dump() + (k + 1 < kAttackKetKeys.size() ? ",\n" : "\n");
  }
  return s + "  }\n}\n";
}

/// Throws format_error on any structural problem; feasibility is not checked.
inline ProbeKets attack_from_json(const json& j) {
  if (!j.is_object()) throw format_error("attack spec: top level must be an object");
  for (const char* key : {"eta", "d_e", "kets"})
    if (!j.contains(key)) throw format_error(std::string("attack spec: missing key \"") + key + "\"");
  const double eta = io_detail::require_number(j["eta"], "eta");
  if (!j["d_e"].is_number_integer()) throw format_error("attack spec: d_e must be an integer");
  const auto d_e_raw = j["d_e"].get<long long>();
  if (d_e_raw < static_cast<long long>(kMinProbeDim) || d_e_raw > static_cast<long long>(kMaxProbeDim))
    throw format_error("attack spec: d_e must lie in [2,8]");
  const auto d_e = static_cast<std::size_t>(d_e_raw);
  const json& kets = j["kets"];
  if (!kets.is_object()) throw format_error("attack spec: kets must be an object");

  std::array<std::array<ComplexVec, 2>, 3> phi;
  for (std::size_t k = 0; k < kAttackKetKeys.size(); ++k) {
    const std::string key(kAttackKetKeys[k]);
    if (!kets.contains(key)) throw format_error("attack spec: missing kets." + key);
    phi[static_cast<std::size_t>(io_detail::outcome_of_key(k))][static_cast<std::size_t>(io_detail::bit_of_key(k))] =
        io_detail::ket_from_json(kets[key], d_e, kAttackKetKeys[k]);
  }
  try {
    return ProbeKets(eta, d_e, std::move(phi));
  } catch (const format_error&) {
    throw;
  } catch (const invalid_input& e) {
    throw format_error(std::string("attack spec: ") + e.what());
  }
}

/// Parses JSON text; syntax errors become format_error.
inline json parse_json_text(const std::string& text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw format_error(std::string(what) + ": " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw invalid_input("cannot write " + path);
  out << content;
  if (!out) throw invalid_input("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const TradeoffPoint& p) {
  json j{{"qber_z", p.qber_z}, {"qber_x", p.qber_x}};
  if (p.qber_y) j["qber_y"] = *p.qber_y;
  j["d_avg"] = p.d_avg;
  j["i_holevo"] = p.i_holevo;
  j["p_guess"] = p.p_guess;
  j["x"] = p.x;
  return j;
}

inline json to_json(const UniformityResult& u) {
  json z = json::object();
  for (const auto& s : u.scores) z[s.label] = s.excluded ? json(nullptr) : json_number(s.z);
  return json{{"pooled", u.pooled}, {"max_abs_z", json_number(u.max_abs_z)}, {"uniform", u.uniform}, {"z", z}};
}

inline json to_json(const SimReport& r) {
  json states = json::array();
  for (const auto& s : r.states)
    states.push_back(
        {{"label", s.label}, {"sent", s.sent}, {"detected", s.detected}, {"eta_hat", s.eta_hat}, {"eta_se", s.eta_se}});
  json bases = json::array();
  for (const auto& b : r.bases)
    bases.push_back({{"basis", b.basis}, {"sifted", b.sifted}, {"errors", b.errors}, {"qber_hat", b.qber_hat}});
  json j{{"family", r.family},
         {"n_rounds", r.n_rounds},
         {"seed", r.seed},
         {"states", std::move(states)},
         {"bases", std::move(bases)},
         {"detected", r.detected},
         {"detected_fraction", r.detected_fraction},
         {"sifted_count", r.sifted_count},
         {"error_count", r.error_count},
         {"qber_hat", r.qber_hat},
         {"eve_accuracy", r.eve_accuracy ? json_number(*r.eve_accuracy) : json(nullptr)},
         {"eve_correct", r.eve_correct}};
  return j;
}

// ---------------------------------------------------------------------------
// CSV rows

inline std::string csv_row(const RoundRecord& r) {
  std::string s = std::to_string(r.round);
  s += ',';
  s += r.state;
  s += ',';
  s += std::to_string(r.alice_basis);
  s += ',';
  s += std::to_string(r.alice_bit);
  s += ',';
  s += std::to_string(r.bob_basis);
  s += ',';
  s += to_string(r.outcome);
  s += r.sifted ? ",1" : ",0";
  s += r.error ? ",1," : ",0,";
  s += r.eve_tag;
  return s;
}

inline std::string csv_row(const SweepRow& row) {
  const SearchResult& r = row.result;
  const bool have_point = std::isfinite(r.objective) && r.residuals.ok(kFeasibilityTol);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return format_double(row.qber_cap) + ',' + format_double(have_point ? r.point.i_holevo : nan) + ',' +
         format_double(have_point ? r.point.p_guess : nan) + ',' + format_double(have_point ? r.point.x : nan) + ',' +
         (r.feasible ? "1" : "0") + ',' + std::to_string(r.evaluations);
}

}  // namespace lossqkd
