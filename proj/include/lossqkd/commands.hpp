// The qkdloss subcommands as pure functions of a resolved configuration.
//
// Each run_* returns everything the command would emit (exit code, standard
// output, standard error and file contents) without touching the file system.
// Input files are read by the front end and embedded in the configuration, so
// a run manifest holds enough to regenerate every output byte for byte.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lossqkd/io.hpp"
#include "lossqkd/montecarlo.hpp"
#include "lossqkd/search.hpp"

namespace lossqkd {

inline constexpr const char* kToolName = "qkdloss";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitNegative = 1, kExitUsage = 2 };

/// Bad flag values or unusable input; maps to exit code 2.
struct usage_error : invalid_input {
  using invalid_input::invalid_input;
};

struct OutputFile {
  std::string role;
  std::string path;
  std::string content;
};

struct CommandOutput {
  int exit_code = kExitOk;
  std::string out;  ///< standard output
  std::string err;  ///< standard error
  std::vector<OutputFile> files;
};

namespace cmd_detail {

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline CommandOutput usage_failure(const std::string& msg) {
  CommandOutput o;
  o.exit_code = kExitUsage;
  o.err = std::string("error: ") + msg + "\n";
  return o;
}

inline FamilyKind parse_family(const std::string& s) {
  try {
    return family_kind_from_string(s);
  } catch (const invalid_input&) {
    throw usage_error("unknown family \"" + s + "\" (expected bb84-4, bb84-6 or b92)");
  }
}

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw usage_error(std::string("manifest config is missing \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw usage_error(std::string("manifest config field \"") + key + "\" has the wrong type");
  }
}

inline std::optional<std::string> get_optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_field<std::string>(j, key);
}

inline json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

inline void require_unit_interval(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw usage_error(std::string(what) + " must lie in [0,1]");
}

}  // namespace cmd_detail

// ---------------------------------------------------------------------------
// verify

struct VerifyConfig {
  std::string attack_path;
  std::string attack_text;  ///< file contents, embedded so replay needs no input file
};

inline json to_json(const VerifyConfig& c) { return {{"attack_path", c.attack_path}, {"attack_text", c.attack_text}}; }

inline VerifyConfig verify_config_from_json(const json& j) {
  return {cmd_detail::get_field<std::string>(j, "attack_path"), cmd_detail::get_field<std::string>(j, "attack_text")};
}

/// Exit 0 iff the attack is four-state feasible at 1e-8; 1 if not; 2 if the
/// file cannot be parsed.
inline CommandOutput run_verify(const VerifyConfig& cfg) {
  ProbeKets pk(1.0, kMinProbeDim);
  try {
    pk = attack_from_json(parse_json_text(cfg.attack_text, cfg.attack_path));
  } catch (const format_error& e) {
    return cmd_detail::usage_failure(e.what());
  }

  const IsometryResiduals iso = check_isometry(pk);
  const ThroughputResiduals thr = check_equal_throughput(pk, ProtocolFamily::bb84_6());
  const FeasibilityReport four = check_feasibility(pk, ProtocolFamily::bb84_4());
  const FeasibilityReport six = check_feasibility(pk, ProtocolFamily::bb84_6());
  const bool ok4 = four.ok(kFeasibilityTol);
  const bool ok6 = six.ok(kFeasibilityTol);

  json j;
  j["file"] = cfg.attack_path;
  j["eta"] = pk.eta();
  j["d_e"] = pk.d_e();
  j["residuals"] = {{"isometry_norm_b0", iso.r_norm[0]},
                    {"isometry_norm_b1", iso.r_norm[1]},
                    {"isometry_inner_product", iso.r_ip},
                    {"no_count_norm_b0", thr.norm[0]},
                    {"no_count_norm_b1", thr.norm[1]},
                    {"no_count_re_inner_product", thr.re_ip},
                    {"no_count_im_inner_product", thr.im_ip.value_or(0.0)}};
  j["feasible_four_state"] = ok4;
  j["feasible_six_state"] = ok6;

  std::ostringstream err;
  err << "verify " << cfg.attack_path << ": eta=" << pk.eta() << " d_e=" << pk.d_e() << "\n"
      << "  isometry   norm0=" << iso.r_norm[0] << " norm1=" << iso.r_norm[1] << " ip=" << iso.r_ip << "\n"
      << "  no-count   norm0=" << thr.norm[0] << " norm1=" << thr.norm[1] << " re=" << thr.re_ip
      << " im=" << thr.im_ip.value_or(0.0) << "\n";

  if (pk.eta() > 0.0) {
    const cplx deficit = inner_product(pk.no_count(0), pk.no_count(1)) / pk.eta();
    j["deficit"] = json::array({deficit.real(), deficit.imag()});
    j["x"] = deficit.imag();
    err << "  deficit    " << deficit.real() << (deficit.imag() < 0 ? " - " : " + ") << std::abs(deficit.imag())
        << "i  (x=" << deficit.imag() << ")\n";
  }
  if (ok4 && pk.eta() > 0.0) {
    const FilteredAttack fa = filter_no_count(pk);
    const ProtocolFamily fam = ok6 ? ProtocolFamily::bb84_6() : ProtocolFamily::bb84_4();
    const TradeoffPoint pt = tradeoff_point(fa, fam);
    j["qber"] = {{"z", pt.qber_z}, {"x", pt.qber_x}};
    if (pt.qber_y) j["qber"]["y"] = *pt.qber_y;
    j["tradeoff"] = to_json(pt);
    err << "  qber       z=" << pt.qber_z << " x=" << pt.qber_x;
    if (pt.qber_y) err << " y=" << *pt.qber_y;
    err << "\n  i_holevo   " << pt.i_holevo << "  p_guess " << pt.p_guess << "\n";
  } else if (ok4) {
    err << "  zero throughput: nothing to filter\n";
  }
  err << "  verdict    " << (ok4 ? "feasible" : "INFEASIBLE") << " (four-state)"
      << (ok6 ? ", feasible (six-state)" : "") << "\n";

  CommandOutput o;
  o.exit_code = ok4 ? kExitOk : kExitNegative;
  o.out = cmd_detail::dump(j);
  o.err = err.str();
  return o;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateConfig {
  std::string family = "bb84-4";
  double eta = 1.0;
  std::uint64_t rounds = 100000;
  std::string attack = "none";  ///< "none", "usd" or "file"
  std::optional<std::string> attack_path;
  std::optional<std::string> attack_text;
  std::uint64_t seed = 0;
  double p_det = 1.0;
  bool line_replacement = false;
  std::optional<std::string> csv;
};

inline json to_json(const SimulateConfig& c) {
  return {{"family", c.family},
          {"eta", c.eta},
          {"rounds", c.rounds},
          {"attack", c.attack},
          {"attack_path", cmd_detail::optional_string(c.attack_path)},
          {"attack_text", cmd_detail::optional_string(c.attack_text)},
          {"seed", c.seed},
          {"p_det", c.p_det},
          {"line_replacement", c.line_replacement},
          {"csv", cmd_detail::optional_string(c.csv)}};
}

inline SimulateConfig simulate_config_from_json(const json& j) {
  using cmd_detail::get_field;
  SimulateConfig c;
  c.family = get_field<std::string>(j, "family");
  c.eta = get_field<double>(j, "eta");
  c.rounds = get_field<std::uint64_t>(j, "rounds");
  c.attack = get_field<std::string>(j, "attack");
  c.attack_path = cmd_detail::get_optional_string(j, "attack_path");
  c.attack_text = cmd_detail::get_optional_string(j, "attack_text");
  c.seed = get_field<std::uint64_t>(j, "seed");
  c.p_det = get_field<double>(j, "p_det");
  c.line_replacement = get_field<bool>(j, "line_replacement");
  c.csv = cmd_detail::get_optional_string(j, "csv");
  return c;
}

inline CommandOutput run_simulate(const SimulateConfig& cfg) {
  SimConfig sc;
  std::optional<UsdReport> usd;
  try {
    if (cfg.rounds < 1) throw usage_error("--rounds must be at least 1");
    cmd_detail::require_unit_interval(cfg.eta, "--eta");
    cmd_detail::require_unit_interval(cfg.p_det, "--p-det");
    sc.family = ProtocolFamily::from_kind(cmd_detail::parse_family(cfg.family));
    sc.n_rounds = cfg.rounds;
    sc.eta = cfg.eta;
    sc.p_det = cfg.p_det;
    sc.line_replacement = cfg.line_replacement;
    sc.seed = cfg.seed;
    if (cfg.attack == "none") {
      sc.attack = NoAttack{};
    } else if (cfg.attack == "usd") {
      if (sc.family.kind() != FamilyKind::B92)
        throw usage_error("--attack usd targets the two-state family; use --family b92");
      const auto& sig = sc.family.signals();
      UsdAttack ua = usd_intercept_resend(sig[0], sig[1], cfg.eta);
      usd = ua.report;
      sc.attack = std::move(ua.attack);
    } else if (cfg.attack == "file") {
      if (!cfg.attack_text) throw usage_error("attack file contents missing");
      if (sc.family.kind() == FamilyKind::B92)
        throw usage_error("probe-ket attack files apply to the bb84-4 and bb84-6 families");
      ProbeKets pk = attack_from_json(parse_json_text(*cfg.attack_text, cfg.attack_path.value_or("attack")));
      if (std::abs(pk.eta() - cfg.eta) > 1e-12)
        throw usage_error("--eta " + format_double(cfg.eta) + " does not match the attack file's eta " +
                          format_double(pk.eta()));
      if (!check_isometry(pk).ok(kFeasibilityTol))
        throw usage_error("attack file does not describe an isometry: " +
                          check_feasibility(pk, sc.family).describe());
      sc.attack = std::move(pk);
    } else {
      throw usage_error("unknown --attack value \"" + cfg.attack + "\"");
    }
    sc.validate();
  } catch (const invalid_input& e) {
    return cmd_detail::usage_failure(e.what());
  }

  std::string csv;
  RoundSink sink;
  if (cfg.csv) {
    csv = std::string(kRoundCsvHeader) + "\n";
    sink = [&csv](const RoundRecord& r) {
      csv += csv_row(r);
      csv += '\n';
    };
  }
  const SimReport rep = run_protocol(sc, sink);
  const UniformityResult uni = uniformity_check(rep);

  json j = to_json(rep);
  j["eta"] = cfg.eta;
  j["p_det"] = cfg.p_det;
  j["attack"] = cfg.attack;
  j["line_replacement"] = cfg.line_replacement;
  j["uniformity"] = to_json(uni);
  if (usd) {
    j["usd"] = {{"overlap", usd->overlap},
                {"threshold", usd->threshold},
                {"resend_probability", usd->resend_probability},
                {"expected_delivered_fraction", usd->delivered_fraction},
                {"shortfall", usd->shortfall},
                {"full_break", usd->full_break}};
  }

  std::ostringstream err;
  err << "simulate " << rep.family << " attack=" << cfg.attack << " rounds=" << rep.n_rounds << " seed=" << rep.seed
      << "\n  detected fraction " << rep.detected_fraction << ", sifted " << rep.sifted_count << ", qber "
      << rep.qber_hat << "\n";
  if (rep.eve_accuracy) err << "  eve accuracy " << *rep.eve_accuracy << "\n";
  err << "  throughput " << (uni.uniform ? "uniform" : "NOT uniform") << " across states (max |z| = " << uni.max_abs_z
      << ")\n";
  if (usd && usd->shortfall > 0.0)
    err << "  usd cannot match the line above eta* = " << usd->threshold << ": shortfall " << usd->shortfall << "\n";

  CommandOutput o;
  o.out = cmd_detail::dump(j);
  o.err = err.str();
  if (cfg.csv) o.files.push_back({"rounds_csv", *cfg.csv, std::move(csv)});
  return o;
}

// ---------------------------------------------------------------------------
// tradeoff

struct TradeoffConfig {
  std::string family = "bb84-4";
  double eta = 0.5;
  std::size_t d_e = 6;
  std::vector<double> grid;
  std::string x_mode = "free";
  std::uint64_t budget = 20000;
  std::uint64_t seed = 0;
  std::string out;
  std::string objective = "holevo";
  std::size_t restarts = 16;
};

inline json to_json(const TradeoffConfig& c) {
  return {{"family", c.family}, {"eta", c.eta},   {"d_e", c.d_e},   {"grid", c.grid},
          {"x_mode", c.x_mode}, {"budget", c.budget}, {"seed", c.seed}, {"out", c.out},
          {"objective", c.objective}, {"restarts", c.restarts}};
}

inline TradeoffConfig tradeoff_config_from_json(const json& j) {
  using cmd_detail::get_field;
  TradeoffConfig c;
  c.family = get_field<std::string>(j, "family");
  c.eta = get_field<double>(j, "eta");
  c.d_e = get_field<std::size_t>(j, "d_e");
  c.grid = get_field<std::vector<double>>(j, "grid");
  c.x_mode = get_field<std::string>(j, "x_mode");
  c.budget = get_field<std::uint64_t>(j, "budget");
  c.seed = get_field<std::uint64_t>(j, "seed");
  c.out = get_field<std::string>(j, "out");
  c.objective = get_field<std::string>(j, "objective");
  c.restarts = get_field<std::size_t>(j, "restarts");
  return c;
}

inline SearchSpec search_spec_of(const TradeoffConfig& cfg) {
  SearchSpec s;
  s.family = ProtocolFamily::from_kind(cmd_detail::parse_family(cfg.family));
  if (s.family.kind() == FamilyKind::B92) throw usage_error("tradeoff supports bb84-4 and bb84-6");
  s.eta = cfg.eta;
  s.d_e = cfg.d_e;
  if (cfg.x_mode == "zero") {
    s.x_mode = XMode::Zero;
  } else if (cfg.x_mode == "free") {
    s.x_mode = XMode::Free;
  } else {
    throw usage_error("--x-mode must be zero or free");
  }
  if (cfg.objective == "holevo") {
    s.objective = Objective::Holevo;
  } else if (cfg.objective == "helstrom") {
    s.objective = Objective::Helstrom;
  } else {
    throw usage_error("objective must be holevo or helstrom");
  }
  s.seed = cfg.seed;
  s.budget = cfg.budget;
  s.restarts = cfg.restarts;
  if (cfg.grid.empty()) throw usage_error("--grid needs at least one value");
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    if (!(cfg.grid[i] >= 0.0 && cfg.grid[i] <= 0.5)) throw usage_error("--grid values must lie in [0,0.5]");
    if (i > 0 && cfg.grid[i] < cfg.grid[i - 1]) throw usage_error("--grid must be ascending");
  }
  if (cfg.out.empty()) throw usage_error("--out is required");
  s.qber_cap = cfg.grid.front();
  s.validate();
  return s;
}

/// Exit 1 when some grid point found no feasible attack.
inline CommandOutput run_tradeoff(const TradeoffConfig& cfg) {
  SearchSpec spec;
  try {
    spec = search_spec_of(cfg);
  } catch (const invalid_input& e) {
    return cmd_detail::usage_failure(e.what());
  }
  const auto rows = sweep_tradeoff(spec, cfg.grid);

  std::string csv = std::string(kSweepCsvHeader) + "\n";
  json jrows = json::array();
  bool all_feasible = true;
  std::ostringstream err;
  err << "tradeoff " << cfg.family << " eta=" << cfg.eta << " d_e=" << cfg.d_e << " x-mode=" << cfg.x_mode
      << " budget=" << cfg.budget << " seed=" << cfg.seed << "\n";
  for (const auto& row : rows) {
    csv += csv_row(row);
    csv += '\n';
    const SearchResult& r = row.result;
    all_feasible = all_feasible && r.feasible;
    json jr{{"qber_cap", row.qber_cap}, {"feasible", r.feasible}, {"evaluations", r.evaluations}};
    if (r.feasible) {
      jr["point"] = to_json(r.point);
      err << "  D<=" << row.qber_cap << "  i_holevo=" << r.point.i_holevo << "  p_guess=" << r.point.p_guess
          << "  x=" << r.point.x << "\n";
    } else {
      jr["residual"] = json_number(r.residuals.max());
      err << "  D<=" << row.qber_cap << "  no feasible attack found\n";
    }
    jrows.push_back(std::move(jr));
  }

  CommandOutput o;
  o.exit_code = all_feasible ? kExitOk : kExitNegative;
  o.out = cmd_detail::dump(json{{"out", cfg.out}, {"x_mode", cfg.x_mode}, {"rows", std::move(jrows)}});
  o.err = err.str();
  o.files.push_back({"sweep_csv", cfg.out, std::move(csv)});
  return o;
}

// ---------------------------------------------------------------------------
// usd

inline constexpr const char* kUsdCsvHeader = "eta,full_break,eve_fraction_known,blocking_shortfall,at_threshold";

struct UsdConfig {
  std::optional<double> overlap;  ///< absent: the default pair {Z0, Xp}
  std::vector<double> eta_grid;
  std::optional<std::string> out;
};

inline json to_json(const UsdConfig& c) {
  return {{"overlap", c.overlap ? json(*c.overlap) : json(nullptr)},
          {"pair", c.overlap ? json(nullptr) : json("default")},
          {"eta_grid", c.eta_grid},
          {"out", cmd_detail::optional_string(c.out)}};
}

inline UsdConfig usd_config_from_json(const json& j) {
  UsdConfig c;
  if (j.contains("overlap") && !j.at("overlap").is_null()) c.overlap = cmd_detail::get_field<double>(j, "overlap");
  c.eta_grid = cmd_detail::get_field<std::vector<double>>(j, "eta_grid");
  c.out = cmd_detail::get_optional_string(j, "out");
  return c;
}

inline std::vector<double> default_usd_eta_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 20; ++k) g.push_back(0.05 * k);
  return g;
}

/// Threshold table for the USD intercept-resend. eve_fraction_known is the
/// share of Bob's detections Eve identified while matching the line's
/// throughput (padding with the pair mixture above the threshold);
/// blocking_shortfall is the missing throughput if she refuses to pad.
inline CommandOutput run_usd(const UsdConfig& cfg) {
  double c = 0.0;
  try {
    if (cfg.overlap) {
      c = *cfg.overlap;
      if (!(c > 0.0 && c < 1.0)) throw usage_error("--overlap must lie strictly between 0 and 1");
    } else {
      const ProtocolFamily fam = ProtocolFamily::b92();
      c = std::abs(overlap(fam.signals()[0], fam.signals()[1]));
    }
    if (cfg.eta_grid.empty()) throw usage_error("--eta-grid needs at least one value");
    for (double e : cfg.eta_grid) cmd_detail::require_unit_interval(e, "--eta-grid values");
  } catch (const invalid_input& e) {
    return cmd_detail::usage_failure(e.what());
  }

  const double threshold = 1.0 - c;
  std::vector<double> etas = cfg.eta_grid;
  etas.push_back(threshold);
  std::sort(etas.begin(), etas.end());
  etas.erase(std::unique(etas.begin(), etas.end()), etas.end());

  std::string csv = std::string(kUsdCsvHeader) + "\n";
  json jrows = json::array();
  for (double eta : etas) {
    const UsdReport matched = usd_report(c, eta, UsdFill::GuessOnInconclusive);
    const UsdReport blocking = usd_report(c, eta, UsdFill::Block);
    const bool at = eta == threshold;
    csv += format_double(eta) + ',' + (matched.full_break ? "1" : "0") + ',' + format_double(matched.known_fraction) +
           ',' + format_double(blocking.shortfall) + ',' + (at ? "1" : "0") + '\n';
    jrows.push_back({{"eta", eta},
                     {"full_break", matched.full_break},
                     {"eve_fraction_known", matched.known_fraction},
                     {"blocking_shortfall", blocking.shortfall},
                     {"at_threshold", at}});
  }

  std::ostringstream err;
  err << "usd overlap c=" << c << "  threshold eta*=" << threshold << " (full break for eta <= eta*)\n";

  CommandOutput o;
  if (cfg.out) {
    o.out = cmd_detail::dump(json{{"overlap", c}, {"threshold", threshold}, {"rows", std::move(jrows)}});
    o.files.push_back({"usd_csv", *cfg.out, std::move(csv)});
  } else {
    o.out = std::move(csv);
  }
  o.err = err.str();
  return o;
}

// ---------------------------------------------------------------------------
// Dispatch from a manifest

/// Re-runs a command from its recorded configuration.
inline CommandOutput run_recorded(const std::string& command, const json& config) {
  try {
    if (command == "verify") return run_verify(verify_config_from_json(config));
    if (command == "simulate") return run_simulate(simulate_config_from_json(config));
    if (command == "tradeoff") return run_tradeoff(tradeoff_config_from_json(config));
    if (command == "usd") return run_usd(usd_config_from_json(config));
  } catch (const invalid_input& e) {
    return cmd_detail::usage_failure(e.what());
  }
  return cmd_detail::usage_failure("unknown command \"" + command + "\" in manifest");
}

}  // namespace lossqkd
