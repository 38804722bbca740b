// nilcorr: experiment runner CLI.
//
//   nilcorr <experiment> [--config PATH] [--out DIR] [--seed U64] [--threads N] [--no-cache]
//
// Exit codes: 0 success, 2 config error, 3 budget error, 1 anything else.

#include <iostream>

#include <CLI11.hpp>

#include "nilcorr/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Experiments on correlation sequences, uniformity seminorms and nilsequences"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool no_cache = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"gowers", "Gowers-Host-Kra seminorm of a signal"},
      {"correlate", "Multiple correlation sequence of an affine toral system"},
      {"decompose", "Structured/error decomposition against a nilsequence dictionary"},
      {"vdc-check", "Van der Corput inequality defect"},
      {"anti-uniformity", "Correlation against the uniformity-seminorm bound"},
      {"interpolate-check", "Torus interpolation and circle reconstruction identities"},
      {"class-distance", "Distance from a signal to a sequence class"},
      {"subseq-avg", "Partial averages along a subsequence"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    auto* o = sub->add_option("--out", out_dir, "Output directory");
    auto* s = sub->add_option("--seed", seed, "Seed (overrides the config)");
    sub->add_option("--threads", threads, "Worker threads (0 = hardware)");
    sub->add_flag("--no-cache", no_cache, "Recompute and do not touch the cache");
    sub->callback([&, o, s] {
      out_opt = o;
      seed_opt = s;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    nilcorr::set_thread_count(threads);
    std::string text;
    if (!config_path.empty()) text = nilcorr::io::read_file(config_path);
    nilcorr::ConfigOverrides ov;
    ov.kind = app.get_subcommands().front()->get_name();
    if (seed_opt && seed_opt->count()) ov.seed = seed;
    if (out_opt && out_opt->count()) ov.output = out_dir;
    ov.no_cache = no_cache;
    auto cfg = nilcorr::parse_config(text, ov);
    auto res = nilcorr::run_experiment(cfg);
    std::cout << (res.cache_hit ? "cache hit " : "computed ") << res.hash << "\n";
    for (const auto& f : res.files) std::cout << (res.output / f).string() << "\n";
    return 0;
  } catch (const nilcorr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nilcorr::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
