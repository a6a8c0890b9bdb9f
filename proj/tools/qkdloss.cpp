// qkdloss: verify attack specs, simulate the protocols, sweep the
// information/disturbance tradeoff and tabulate the USD threshold.
//
// Exit codes: 0 success, 1 negative verdict, 2 usage or parse error.

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lossqkd/commands.hpp"

namespace {

using namespace lossqkd;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 0xf];
  }
  return s;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    std::string item = text.substr(start, end - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double x = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), x);
    if (item.empty() || res.ec != std::errc{} || res.ptr != item.data() + item.size())
      throw usage_error(std::string(flag) + ": cannot parse \"" + item + "\" as a number");
    v.push_back(x);
    start = end + 1;
  }
  return v;
}

json output_entries(const CommandOutput& o) {
  json outs = json::array();
  outs.push_back({{"role", "stdout"}, {"path", nullptr}, {"sha256", sha256_hex(o.out)}});
  for (const auto& f : o.files) outs.push_back({{"role", f.role}, {"path", f.path}, {"sha256", sha256_hex(f.content)}});
  return outs;
}

/// Writes outputs, prints streams and records the manifest.
int finish(const std::string& command, const json& config, std::optional<std::uint64_t> seed, const CommandOutput& o,
           const std::string& manifest_path) {
  try {
    for (const auto& f : o.files) write_text_file(f.path, f.content);
  } catch (const invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::cout << o.out << std::flush;
  std::cerr << o.err;

  const json manifest{{"tool", kToolName},
                      {"version", kToolVersion},
                      {"command", command},
                      {"seed", seed ? json(*seed) : json(nullptr)},
                      {"config", config},
                      {"exit_code", o.exit_code},
                      {"outputs", output_entries(o)}};
  try {
    write_text_file(manifest_path, manifest.dump(2) + "\n");
  } catch (const invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return o.exit_code;
}

std::string default_manifest(const std::string& command, const std::optional<std::string>& primary) {
  if (primary) return *primary + ".manifest.json";
  return std::string(kToolName) + "-" + command + ".manifest.json";
}

int replay(const std::string& manifest_path, const std::optional<std::string>& out_dir) {
  json manifest;
  try {
    manifest = parse_json_text(read_text_file(manifest_path), manifest_path);
    if (!manifest.is_object() || !manifest.contains("command") || !manifest.contains("config") ||
        !manifest.contains("outputs") || !manifest["outputs"].is_array())
      throw format_error(manifest_path + ": not a run manifest");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string command = manifest["command"].get<std::string>();
  const CommandOutput o = run_recorded(command, manifest["config"]);
  const json actual = output_entries(o);

  bool all_match = manifest.value("exit_code", -1) == o.exit_code;
  json checks = json::array();
  for (const auto& expected : manifest["outputs"]) {
    std::string got;
    for (const auto& a : actual)
      if (a["role"] == expected["role"] && a["path"] == expected["path"]) got = a["sha256"].get<std::string>();
    const bool match = !got.empty() && got == expected.value("sha256", "");
    all_match = all_match && match;
    checks.push_back({{"role", expected["role"]},
                      {"path", expected["path"]},
                      {"expected", expected.value("sha256", "")},
                      {"actual", got.empty() ? json(nullptr) : json(got)},
                      {"match", match}});
  }
  if (actual.size() != manifest["outputs"].size()) all_match = false;

  if (out_dir) {
    try {
      std::filesystem::create_directories(*out_dir);
      const std::filesystem::path dir(*out_dir);
      write_text_file((dir / "stdout").string(), o.out);
      for (const auto& f : o.files)
        write_text_file((dir / std::filesystem::path(f.path).filename()).string(), f.content);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  std::cout << json{{"manifest", manifest_path}, {"command", command}, {"identical", all_match}, {"outputs", checks}}
                   .dump(2)
            << "\n";
  std::cerr << "replay " << command << ": " << (all_match ? "all outputs identical" : "OUTPUTS DIFFER") << "\n";
  return all_match ? kExitOk : kExitNegative;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-tolerant QKD attack toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // verify
  auto* verify = app.add_subcommand("verify", "Check an attack-spec file against the feasibility constraints");
  std::string verify_file;
  std::optional<std::string> verify_manifest;
  verify->add_option("attack_file", verify_file, "Attack-spec JSON")->required();
  verify->add_option("--manifest", verify_manifest, "Run manifest path");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of a protocol, report JSON on stdout");
  SimulateConfig sim;
  std::string sim_attack = "none";
  std::optional<std::string> sim_manifest;
  simulate->add_option("--family", sim.family, "bb84-4, bb84-6 or b92")->required();
  simulate->add_option("--eta", sim.eta, "Line transmittance")->required();
  simulate->add_option("--rounds", sim.rounds, "Signals sent")->capture_default_str();
  simulate->add_option("--attack", sim_attack, "none, usd, or an attack-spec file")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->required();
  simulate->add_option("--p-det", sim.p_det, "Detector efficiency")->capture_default_str();
  simulate->add_flag("--line-replacement", sim.line_replacement,
                     "Re-sent states bypass the lossy line instead of crossing it");
  simulate->add_option("--csv", sim.csv, "Per-round CSV output");
  simulate->add_option("--manifest", sim_manifest, "Run manifest path");

  // tradeoff
  auto* tradeoff = app.add_subcommand("tradeoff", "Search the strongest attacks along a disturbance grid");
  TradeoffConfig tc;
  std::string grid_text;
  std::optional<std::string> tc_manifest;
  tradeoff->add_option("--family", tc.family, "bb84-4 or bb84-6")->capture_default_str();
  tradeoff->add_option("--eta", tc.eta, "Throughput")->capture_default_str();
  tradeoff->add_option("--d-e", tc.d_e, "Probe dimension")->capture_default_str();
  tradeoff->add_option("--grid", grid_text, "Ascending disturbance caps, comma separated")->required();
  tradeoff->add_option("--x-mode", tc.x_mode, "zero or free")->capture_default_str();
  tradeoff->add_option("--budget", tc.budget, "Objective evaluations per grid point")->capture_default_str();
  tradeoff->add_option("--seed", tc.seed, "Random seed")->required();
  tradeoff->add_option("--out", tc.out, "Sweep CSV output")->required();
  tradeoff->add_option("--manifest", tc_manifest, "Run manifest path");

  // usd
  auto* usd = app.add_subcommand("usd", "USD intercept-resend threshold table");
  std::optional<double> usd_overlap;
  std::string usd_pair;
  std::string usd_grid;
  std::optional<std::string> usd_out;
  std::optional<std::string> usd_manifest;
  auto* ov = usd->add_option("--overlap", usd_overlap, "|<psi0|psi1>| of the signal pair");
  auto* pair = usd->add_option("--pair", usd_pair, "\"default\" for the pair {Z0, Xp}");
  ov->excludes(pair);
  usd->add_option("--eta-grid", usd_grid, "Transmittances, comma separated (default 0.05..1 step 0.05)");
  usd->add_option("--out", usd_out, "Write the CSV here (JSON summary on stdout); default CSV on stdout");
  usd->add_option("--manifest", usd_manifest, "Run manifest path");

  // replay
  auto* rep = app.add_subcommand("replay", "Re-run a command from its manifest and compare output digests");
  std::string replay_manifest;
  std::optional<std::string> replay_dir;
  rep->add_option("manifest", replay_manifest, "Run manifest")->required();
  rep->add_option("--out-dir", replay_dir, "Also write the regenerated outputs here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*verify) {
      VerifyConfig vc{verify_file, {}};
      try {
        vc.attack_text = read_text_file(verify_file);
      } catch (const format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
      }
      return finish("verify", to_json(vc), std::nullopt, run_verify(vc),
                    verify_manifest.value_or(default_manifest("verify", std::nullopt)));
    }
    if (*simulate) {
      if (sim_attack == "none" || sim_attack == "usd") {
        sim.attack = sim_attack;
      } else {
        sim.attack = "file";
        sim.attack_path = sim_attack;
        try {
          sim.attack_text = read_text_file(sim_attack);
        } catch (const format_error& e) {
          std::cerr << "error: " << e.what() << "\n";
          return kExitUsage;
        }
      }
      return finish("simulate", to_json(sim), sim.seed, run_simulate(sim),
                    sim_manifest.value_or(default_manifest("simulate", sim.csv)));
    }
    if (*tradeoff) {
      tc.grid = parse_list(grid_text, "--grid");
      return finish("tradeoff", to_json(tc), tc.seed, run_tradeoff(tc),
                    tc_manifest.value_or(default_manifest("tradeoff", tc.out)));
    }
    if (*usd) {
      UsdConfig uc;
      if (!usd_pair.empty() && usd_pair != "default") throw usage_error("--pair accepts only \"default\"");
      uc.overlap = usd_overlap;
      uc.eta_grid = usd_grid.empty() ? default_usd_eta_grid() : parse_list(usd_grid, "--eta-grid");
      uc.out = usd_out;
      return finish("usd", to_json(uc), std::nullopt, run_usd(uc),
                    usd_manifest.value_or(default_manifest("usd", usd_out)));
    }
    if (*rep) return replay(replay_manifest, replay_dir);
  } catch (const invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
