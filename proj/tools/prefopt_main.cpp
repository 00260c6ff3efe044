#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "prefopt/bench.hpp"
#include "prefopt/fractal.hpp"
#include "prefopt/service.hpp"

// After the Eigen-based headers: resolv.h defines a _res macro.
#include <CLI11.hpp>
#include <httplib.h>

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  return values;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : fallback;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based Bayesian optimization with ties"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // bench
  auto* bench = app.add_subcommand("bench", "Synthetic-oracle experiments");
  bench->require_subcommand(1);
  auto* bench_run = bench->add_subcommand("run", "Run an experiment grid");
  prefopt::bench::ExperimentSpec spec;
  std::string tolerances = "1e-5,1e-3,0.1,1";
  std::string strategy = "both";
  std::string output = "results";
  bench_run->add_option("--oracle", spec.oracle, "Registered test function")
      ->check(CLI::IsMember(prefopt::oracles::registered_names()));
  bench_run->add_option("--tolerances", tolerances, "Comma-separated tie tolerances");
  bench_run->add_option("--trials", spec.trials, "Trials per strategy and tolerance");
  bench_run->add_option("--budget", spec.budget, "Optimization iterations after the ladder");
  bench_run->add_option("--strategy", strategy, "preference, random or both")
      ->check(CLI::IsMember({"preference", "random", "both"}));
  bench_run->add_option("--seed", spec.seed, "Base seed; trial k uses seed + k");
  bench_run->add_option("--out", output, "Output directory");
  bench_run->add_option("--jobs", spec.jobs, "Concurrent sessions")->check(CLI::PositiveNumber);
  bench_run->add_flag("--transcripts", spec.write_transcripts, "Write per-trial transcripts");
  bench_run->add_option("--fit-steps", spec.optimizer.fit.steps, "VI steps for cold fits");
  bench_run->add_option("--warm-fit-steps", spec.optimizer.warm_fit_steps,
                        "VI steps for warm-started refits");
  bench_run->add_flag("--quiet", "Suppress per-trial progress");

  auto* bench_aggregate = bench->add_subcommand("aggregate", "Recompute summary.csv from trials.csv");
  std::string trials_in;
  std::string summary_out;
  bench_aggregate->add_option("trials", trials_in, "trials.csv")->required()->check(CLI::ExistingFile);
  bench_aggregate->add_option("--out", summary_out, "Output summary.csv (default: alongside input)");

  // render
  auto* render = app.add_subcommand("render", "Render a Newton fractal coloring to PNG");
  std::vector<double> params;
  std::string image_out;
  prefopt::fractal::RenderSpec render_spec;
  render->add_option("--params", params, "h0 h1 h2 s0 s1 s2 speed r g b")->required()->expected(10);
  render->add_option("--out", image_out, "Output PNG")->required();
  render->add_option("--size", render_spec.width, "Image width and height in pixels");
  render->add_option("--threads", render_spec.threads, "Render threads");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  std::string listen = env_or("PREFOPT_LISTEN", "127.0.0.1");
  int port = std::stoi(env_or("PREFOPT_PORT", "8080"));
  std::string data_dir = env_or("PREFOPT_DATA_DIR", "data");
  int render_size = std::stoi(env_or("PREFOPT_RENDER_SIZE", "384"));
  std::uint64_t service_seed = std::stoull(env_or("PREFOPT_SEED", "0"));
  std::string static_dir;
  std::size_t serve_warm_steps = prefopt::OptimizerConfig{}.warm_fit_steps;
  serve->add_option("--listen", listen, "Listen address");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--data-dir", data_dir, "Session storage directory");
  serve->add_option("--render-size", render_size, "Image width and height in pixels")
      ->check(CLI::PositiveNumber);
  serve->add_option("--seed", service_seed, "Service seed");
  serve->add_option("--static", static_dir, "Directory of static browser files to serve at /");
  serve->add_option("--warm-fit-steps", serve_warm_steps, "VI steps for warm-started refits");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench_run) {
      spec.tolerances = parse_list(tolerances);
      spec.strategy = prefopt::bench::selection_from_string(strategy);
      spec.output = output;
      spec.validate();
      const bool quiet = bench_run->count("--quiet") > 0;
      const auto result = prefopt::bench::run_experiment(spec, [quiet](const auto& trial) {
        if (quiet) return;
        std::fprintf(stderr, "%s eps=%g seed=%llu %s (%.1fs)\n",
                     prefopt::to_string(trial.strategy).c_str(), trial.tolerance,
                     static_cast<unsigned long long>(trial.seed),
                     trial.ok() ? ("final=" + std::to_string(trial.final_value())).c_str()
                                : ("error: " + trial.error).c_str(),
                     trial.wall_seconds);
      });
      prefopt::bench::write_outputs(spec, result);
      std::printf("%zu sessions, %zu failed; results in %s\n", result.trials.size(),
                  result.failures, output.c_str());
      return prefopt::bench::acceptable_failure_rate(result) ? 0 : 1;
    }
    if (*bench_aggregate) {
      const auto trials = prefopt::bench::read_trials_csv(trials_in);
      const std::filesystem::path out =
          summary_out.empty() ? std::filesystem::path(trials_in).parent_path() / "summary.csv"
                              : std::filesystem::path(summary_out);
      prefopt::bench::write_summary_csv(out, prefopt::bench::aggregate(trials));
      std::printf("wrote %s\n", out.string().c_str());
      return 0;
    }
    if (*render) {
      render_spec.height = render_spec.width;
      const auto coloring = prefopt::fractal::ColoringParams::from_vector(params);
      prefopt::fractal::write_png(image_out, prefopt::fractal::render(coloring, render_spec));
      return 0;
    }
    if (*serve) {
      prefopt::service::ServiceConfig config;
      config.data_dir = data_dir;
      config.render.width = config.render.height = render_size;
      config.seed = service_seed;
      config.static_dir = static_dir;
      config.optimizer.warm_fit_steps = serve_warm_steps;
      prefopt::service::SessionService service(config);
      httplib::Server server;
      service.mount(server);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::printf("listening on http://%s:%d (data in %s)\n", listen.c_str(), port,
                  data_dir.c_str());
      std::fflush(stdout);
      if (!server.listen(listen, port)) {
        std::fprintf(stderr, "cannot listen on %s:%d\n", listen.c_str(), port);
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
