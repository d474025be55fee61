// Command-line front end: run pipeline stages, list scenarios, or run the
// acceptance suite against a config.  Exit codes: 0 ok, 1 check failure,
// 2 usage or config error.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dhom/acceptance.hpp"
#include "dhom/io.hpp"
#include "dhom/runner.hpp"
#include "dhom/scenario.hpp"
#include "dhom/version.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t c = s.find(',', pos);
    const std::string tok =
        s.substr(pos, c == std::string::npos ? std::string::npos : c - pos);
    if (!tok.empty()) out.push_back(tok);
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  return out;
}

// Config problems are usage errors (exit 2), unlike run-time check failures.
std::optional<dhom::ScenarioConfig> load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    std::fprintf(stderr, "error: config file not found: %s\n", path.c_str());
    return std::nullopt;
  }
  try {
    return dhom::config_from_json(dhom::read_json(path));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: bad config: %s\n", e.what());
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion pipeline with a growing incompressible drift"};
  app.set_version_flag("--version", dhom::kVersion);
  app.require_subcommand(1);

  std::string run_config, stages_csv, verify_config;
  CLI::App* cmd_run = app.add_subcommand("run", "execute pipeline stages for a config");
  cmd_run->add_option("--config", run_config, "JSON config file")->required();
  CLI::Option* stages_opt =
      cmd_run->add_option("--stages", stages_csv, "comma-separated stages (default: all)");

  app.add_subcommand("list-scenarios", "print the scenario registry");

  CLI::App* cmd_verify =
      app.add_subcommand("verify", "run the acceptance suite with this config's knobs");
  cmd_verify->add_option("--config", verify_config, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("list-scenarios")) {
      std::fputs(dhom::list_scenarios_text().c_str(), stdout);
      return 0;
    }

    if (app.got_subcommand(cmd_run)) {
      const auto cfg = load_config(run_config);
      if (!cfg) return 2;
      std::vector<std::string> stages;
      if (stages_opt->count() > 0) {
        stages = split_csv(stages_csv);
        if (stages.empty()) {
          std::fprintf(stderr, "error: --stages given but empty\n");
          return 2;
        }
      }
      dhom::RunReport rep;
      try {
        rep = dhom::run_experiment(*cfg, stages);
      } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
      }
      for (const auto& st : rep.stages) {
        std::printf("%-10s %s (%.1fs, %zu artifacts)\n", st.name.c_str(),
                    st.ok ? "ok" : "FAILED", st.seconds, st.artifacts.size());
        for (const auto& f : st.failures) std::printf("           %s\n", f.c_str());
      }
      std::printf("report: %s\n", rep.report_path.c_str());
      return rep.all_ok ? 0 : 1;
    }

    const auto cfg = load_config(verify_config);
    if (!cfg) return 2;
    dhom::AcceptanceOptions opts;
    opts.tau_null = cfg->tau_null;
    opts.seed = cfg->mc.seed;
    opts.scratch_dir = cfg->output_dir;
    const dhom::AcceptanceReport rep = dhom::run_acceptance(opts);
    std::fputs(dhom::format_acceptance(rep).c_str(), stdout);
    return rep.all_pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
