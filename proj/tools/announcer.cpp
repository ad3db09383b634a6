// Command-line front end: headless runs, live serving, sweeps, threshold
// verification, storyboard export and golden projection vectors.
#include "announcer/config.hpp"
#include "announcer/engine.hpp"
#include "announcer/errors.hpp"
#include "announcer/gateway.hpp"
#include "announcer/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>

namespace {

constexpr int kBadInput = 2;

announcer::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

announcer::EngineConfig load(const std::optional<std::string>& scenario, const std::optional<std::string>& config,
                             std::optional<std::uint64_t> seed, std::optional<double> duration) {
  auto c = announcer::load_engine_config(scenario, config);
  if (seed) c.world.seed = *seed;
  if (duration) c.duration_s = *duration;
  announcer::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("announcer");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=info, debug, ...

  CLI::App app{"Virtual-world announcer engine"};
  app.require_subcommand(1);

  std::optional<std::string> scenario, config;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;

  auto* run = app.add_subcommand("run", "Run the pipeline headlessly and write a shot log");
  std::string out = "shots.jsonl";
  run->add_option("--scenario", scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  run->add_option("--config", config, "Engine config JSON file")->check(CLI::ExistingFile);
  run->add_option("--duration", duration, "Simulated seconds (default: scenario duration_s)");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out, "Shot log path (JSON lines)");

  auto* serve = app.add_subcommand("serve", "Stream the live announcer to viewers");
  announcer::ServiceOptions service_options;
  std::optional<double> serve_duration;
  serve->add_option("--scenario", scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  serve->add_option("--config", config, "Engine config JSON file")->check(CLI::ExistingFile);
  serve->add_option("--seed", seed, "Override the scenario seed");
  serve->add_option("--host", service_options.host, "Listen address");
  serve->add_option("--port", service_options.port, "Listen port (0 = ephemeral)");
  serve->add_option("--wait-clients", service_options.wait_clients, "Start once this many viewers are connected");
  serve->add_option("--time-scale", service_options.time_scale, "Simulated seconds per wall second; 0 = unthrottled");
  serve->add_option("--duration", serve_duration, "Stop after this many simulated seconds");

  auto* sweep = app.add_subcommand("sweep", "One run per parameter value plus summary.csv");
  std::string param;
  std::vector<double> values;
  std::string sweep_out = "sweep";
  sweep->add_option("--param", param, "transition | frequency")->required();
  sweep->add_option("--values", values, "Values to sweep")->required();
  sweep->add_option("--out", sweep_out, "Output directory");
  sweep->add_option("--scenario", scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  sweep->add_option("--config", config, "Engine config JSON file")->check(CLI::ExistingFile);
  sweep->add_option("--seed", seed, "Override the scenario seed");
  sweep->add_option("--duration", duration, "Simulated seconds per run");

  auto* verify = app.add_subcommand("verify-threshold", "Monte Carlo hit rate of the dynamic threshold");
  int n = 10;
  double f = 0.5;
  std::int64_t trials = 100000;
  std::uint64_t mc_seed = 1;
  verify->add_option("--n", n, "Online avatars")->check(CLI::PositiveNumber);
  verify->add_option("--f", f, "Target hit ratio per fetch")->check(CLI::Range(0.0, 1.0));
  verify->add_option("--trials", trials, "Fetch cycles to simulate")->check(CLI::PositiveNumber);
  verify->add_option("--seed", mc_seed, "Random seed");

  auto* story = app.add_subcommand("storyboard", "Export one SVG per hold in a shot log");
  std::string log_path, story_out = "storyboard";
  story->add_option("--log", log_path, "Shot log (JSON lines)")->required()->check(CLI::ExistingFile);
  story->add_option("--out", story_out, "Output directory");
  story->add_option("--config", config, "Engine config JSON (camera settings)")->check(CLI::ExistingFile);

  auto* golden = app.add_subcommand("golden", "Export reference projection vectors for viewer tests");
  std::string golden_out = "projection.json";
  std::uint64_t golden_seed = 7;
  int golden_cases = 48;
  golden->add_option("--out", golden_out, "Output JSON path");
  golden->add_option("--seed", golden_seed, "Random seed for poses and points");
  golden->add_option("--cases", golden_cases, "Number of camera poses")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (*run) {
      const auto c = load(scenario, config, seed, duration);
      std::ofstream log(out);
      if (!log) {
        std::cerr << "error: cannot write " << out << "\n";
        return kBadInput;
      }
      const auto summary = announcer::run_headless(c, log);
      std::cout << "wrote " << summary.ticks << " records to " << out << " (" << summary.announcements
                << " announcements, " << summary.hits << "/" << summary.fetches << " fetches elected)\n";
    } else if (*serve) {
      auto c = load(scenario, config, seed, std::nullopt);
      service_options.duration = serve_duration;
      announcer::Service service(std::move(c), service_options);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const int port = service.start();
      std::cout << "listening on " << service_options.host << ":" << port << std::endl;
      service.run();
      g_service = nullptr;
    } else if (*sweep) {
      const auto kind = announcer::sweep_param_from_string(param);
      if (!kind) {
        std::cerr << "error: --param must be 'transition' or 'frequency'\n";
        return kBadInput;
      }
      announcer::SweepSpec spec{*kind, values, load(scenario, config, seed, duration), sweep_out};
      const auto rows = announcer::sweep(spec);
      std::cout << "value,announcements,ratio,maue\n";
      for (const auto& r : rows) {
        std::cout << r.value << "," << r.announcements << "," << r.ratio << "," << r.maue << "\n";
      }
    } else if (*verify) {
      const double rate = announcer::verify_threshold(n, f, trials, mc_seed);
      std::cout << "N=" << n << " f=" << f << " i=" << announcer::dynamic_threshold(n, f) << " trials=" << trials
                << " hit_rate=" << rate << "\n";
    } else if (*story) {
      announcer::StoryboardOptions options;
      if (config) {
        const auto c = load(std::nullopt, config, std::nullopt, std::nullopt);
        options.maps = c.psl;
        options.width = c.director.viewport_width;
        options.height = c.director.viewport_height;
      }
      const auto records = announcer::read_shot_log_file(log_path);
      const auto files = announcer::export_storyboard(records, story_out, options);
      std::cout << "wrote " << files.size() << " storyboard frames to " << story_out << "\n";
    } else if (*golden) {
      std::ofstream file(golden_out);
      if (!file) {
        std::cerr << "error: cannot write " << golden_out << "\n";
        return kBadInput;
      }
      file << announcer::projection_golden(golden_seed, golden_cases);
      std::cout << "wrote " << golden_cases << " projection cases to " << golden_out << "\n";
    }
  } catch (const announcer::ConfigError& e) {
    std::cerr << "error: invalid " << e.what() << "\n";
    return kBadInput;
  } catch (const announcer::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
