#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "nilcorr/runner.hpp"

using namespace nilcorr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("nilcorr-test-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string config_error(const std::string& text, const ConfigOverrides& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "no error for " << text;
  return {};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = io::read_file(e.path());
  return out;
}

ExperimentConfig config_in(const std::string& text, const fs::path& out) {
  ConfigOverrides ov;
  ov.output = out.string();
  return parse_config(text, ov);
}

}  // namespace

TEST(Fields, Conversions) {
  json j = json::parse(R"({"b": true, "s": "x", "c": [1, 2], "r": 0.5, "i": -3, "u": 7, "v": [[1, 2], [3]]})");
  Fields f(j, "params");
  EXPECT_TRUE(f.req<bool>("b"));
  EXPECT_EQ(f.req<std::string>("s"), "x");
  EXPECT_EQ(f.req<cplx>("c"), cplx(1, 2));
  EXPECT_EQ(f.req<cplx>("r"), cplx(0.5, 0));
  EXPECT_EQ(f.req<std::int64_t>("i"), -3);
  EXPECT_EQ(f.req<std::uint64_t>("u"), 7u);
  EXPECT_EQ(f.req<std::vector<std::vector<int>>>("v"), (std::vector<std::vector<int>>{{1, 2}, {3}}));
  EXPECT_EQ(f.get<int>("missing", 4), 4);
  EXPECT_FALSE(f.opt<double>("absent").has_value());
  EXPECT_NO_THROW(f.finish());

  json k = json::parse(R"({"i": 1.5, "u": -1, "extra": 0})");
  Fields g(k, "params");
  EXPECT_THROW(g.req<int>("i"), Error);
  EXPECT_THROW(g.req<std::uint64_t>("u"), Error);
  try {
    g.finish();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unknown field 'params.extra'"), std::string::npos);
  }
}

TEST(ParseConfig, Defaults) {
  auto c = parse_config(R"({"experiment": "gowers"})");
  EXPECT_EQ(c.kind, "gowers");
  EXPECT_EQ(c.window, Window(0, 4096));
  EXPECT_EQ(c.seed, 0u);
  EXPECT_TRUE(c.cache);
  EXPECT_EQ(c.gowers.order, 2);
  EXPECT_EQ(c.gowers.shifts, 64);
  EXPECT_EQ(c.signal.kind, "quadratic_phase");

  auto s = parse_config(R"({"window": {"end": 800}})", ConfigOverrides{"subseq-avg", 5, std::nullopt, true});
  EXPECT_EQ(s.kind, "subsequence-average");
  EXPECT_EQ(s.checkpoints, (std::vector<std::int64_t>{100, 200, 400}));
  EXPECT_EQ(s.seed, 5u);
  EXPECT_FALSE(s.cache);

  auto q = parse_config(R"({"experiment": "correlate"})");
  ASSERT_TRUE(q.query.has_value());
  EXPECT_EQ(q.query->system.maps.size(), 2u);
}

TEST(ParseConfig, Errors) {
  auto syntax = config_error("{\n  \"experiment\": \"gowers\",\n  \"seed\": ]\n}");
  EXPECT_NE(syntax.find("line 3"), std::string::npos) << syntax;
  EXPECT_NE(syntax.find("column"), std::string::npos);

  auto unknown = config_error(R"({"experiment": "decompose", "params": {"dictionary": {"step": 1, "resolutoin": 8}}})");
  EXPECT_NE(unknown.find("params.dictionary.resolutoin"), std::string::npos) << unknown;

  auto type = config_error(R"({"experiment": "gowers", "params": {"order": "two"}})");
  EXPECT_NE(type.find("params.order"), std::string::npos) << type;

  EXPECT_NE(config_error(R"({"experiment": "fourier"})").find("unknown experiment"), std::string::npos);
  EXPECT_NE(config_error(R"({"experiment": "gowers", "colour": 1})").find("colour"), std::string::npos);
  EXPECT_NE(config_error(R"({"experiment": "gowers", "window": {"start": 5, "end": 5}})").find("window.end"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"experiment": "gowers", "signal": {"kind": "sawtooth"}})").find("signal.kind"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"experiment": "gowers"})", ConfigOverrides{"decompose", {}, {}, false}).find("subcommand"),
            std::string::npos);
  config_error("[1, 2]");
  config_error(R"({"seed": 1})");
  config_error(R"({"experiment": "correlate", "query": {"system": {"dim": 1, "maps": [{"matrix": [[2]], "shift": [0.1]}]},
                  "observables": [{"terms": [{"freq": [1], "coeff": 1}]}]}})");
}

TEST(Io, Sha256KnownVectors) {
  EXPECT_EQ(io::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, CsvFieldQuoting) {
  EXPECT_EQ(io::csv_field("plain"), "plain");
  EXPECT_EQ(io::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(io::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(io::csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Io, WriteAtomicReplacesAndLeavesNoTemp) {
  TempDir t;
  auto p = t.path / "sub" / "f.txt";
  io::write_atomic(p, "first");
  io::write_atomic(p, "second");
  EXPECT_EQ(io::read_file(p), "second");
  EXPECT_EQ(std::distance(fs::directory_iterator(p.parent_path()), fs::directory_iterator{}), 1);
  EXPECT_THROW(io::read_file(t.path / "missing"), Error);
}

TEST(Io, CacheRootFromEnvironment) {
  const char* old = std::getenv("NILCORR_CACHE_DIR");
  std::string saved = old ? old : "";
  ::setenv("NILCORR_CACHE_DIR", "/tmp/somewhere", 1);
  EXPECT_EQ(io::cache_root(), fs::path("/tmp/somewhere"));
  if (old) ::setenv("NILCORR_CACHE_DIR", saved.c_str(), 1);
  else ::unsetenv("NILCORR_CACHE_DIR");
}

TEST(ConfigHash, IgnoresOutputAndCachePolicy) {
  auto a = parse_config(R"({"experiment": "gowers", "output": "x", "cache": false})");
  auto b = parse_config(R"({"cache": true, "experiment": "gowers"})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  auto c = parse_config(R"({"experiment": "gowers", "seed": 1})");
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_NE(canonical_config(a).find("nilcorr_version"), std::string::npos);
}

TEST(RunExperiment, CacheHitIsByteIdentical) {
  TempDir t;
  const std::string text = R"({"experiment": "decompose", "seed": 7, "window": {"end": 1024},
                               "params": {"dictionary": {"resolution": 16}}})";
  auto first = run_experiment(config_in(text, t.path / "one"), t.path / "cache");
  EXPECT_FALSE(first.cache_hit);
  EXPECT_EQ(first.files, (std::vector<std::string>{"a_er.csv", "a_st.csv", "report.json", "manifest.json"}));
  auto second = run_experiment(config_in(text, t.path / "two"), t.path / "cache");
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(first.hash, second.hash);
  EXPECT_EQ(read_dir(t.path / "one"), read_dir(t.path / "two"));

  auto manifest = json::parse(io::read_file(t.path / "one" / "manifest.json"));
  EXPECT_EQ(manifest["config_sha256"], first.hash);
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_TRUE(manifest.contains("wall_time_ms"));
  EXPECT_TRUE(manifest["versions"].contains("eigen"));
  for (const auto& f : manifest["files"])
    EXPECT_EQ(f["sha256"], io::sha256_hex(io::read_file(t.path / "one" / f["name"].get<std::string>())));
}

TEST(RunExperiment, RecomputationIsDeterministic) {
  TempDir t;
  for (const std::string kind : {"gowers", "correlate", "vdc-check", "subseq-avg"}) {
    std::string text = R"({"window": {"end": 512}})";
    ConfigOverrides ov{kind, {}, (t.path / kind / "a").string(), true};
    auto a = run_experiment(parse_config(text, ov), t.path / "cache");
    ov.output = (t.path / kind / "b").string();
    set_thread_count(3);
    auto b = run_experiment(parse_config(text, ov), t.path / "cache");
    set_thread_count(0);
    EXPECT_FALSE(b.cache_hit);
    auto fa = read_dir(t.path / kind / "a"), fb = read_dir(t.path / kind / "b");
    fa.erase("manifest.json");
    fb.erase("manifest.json");
    EXPECT_EQ(fa, fb) << kind;
  }
  EXPECT_FALSE(fs::exists(t.path / "cache"));
}

TEST(RunExperiment, ReportContents) {
  TempDir t;
  auto r = run_experiment(config_in(R"({"experiment": "subsequence-average", "window": {"end": 200},
                                        "params": {"subsequence": {"kind": "arithmetic", "q": 2}, "checkpoints": [10, 50]}})",
                                    t.path / "out"),
                          t.path / "cache");
  auto report = json::parse(io::read_file(r.output / "report.json"));
  EXPECT_EQ(report["subsequence"], "r_n = 2n + 0");
  EXPECT_NE(report["note"].get<std::string>().find("Cauchy"), std::string::npos);
  EXPECT_EQ(io::read_file(r.output / "averages.csv"), "N,re,im\n10,1,0\n50,1,0\n");

  auto e = parse_config(R"({"experiment": "subsequence-average", "window": {"end": 200},
                            "params": {"checkpoints": [100, 300]}})");
  e.output = (t.path / "bad").string();
  EXPECT_THROW(run_experiment(e, t.path / "cache"), Error);
}

#ifdef NILCORR_CLI_PATH
TEST(Cli, ExitCodes) {
  TempDir t;
  auto run = [&](const std::string& args) {
    std::string cmd = std::string(NILCORR_CLI_PATH) + " " + args + " > " + (t.path / "log").string() + " 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  auto write = [&](const std::string& name, const std::string& text) {
    io::write_atomic(t.path / name, text);
    return (t.path / name).string();
  };
  const std::string out = " --out " + (t.path / "o").string();
  EXPECT_EQ(run("gowers --no-cache --config " + write("ok.json", R"({"window": {"end": 256}})") + out), 0);
  EXPECT_EQ(run("gowers --no-cache --config " + write("bad.json", R"({"window": {"end": 256}, "oops": 1})") + out), 2);
  EXPECT_NE(io::read_file(t.path / "log").find("oops"), std::string::npos);
  EXPECT_EQ(run("decompose --no-cache --config " +
                write("big.json", R"({"window": {"end": 256}, "params": {"dictionary": {"step": 2, "resolution": 128}}})") +
                out),
            3);
  EXPECT_EQ(run("fourier"), 2);
  EXPECT_EQ(run("gowers --threads nope"), 2);
  EXPECT_EQ(run("--help"), 0);
}
#endif
