#pragma once

// Config-driven experiment runner. A config is parsed into typed parameters
// up front (so every field error surfaces before any computation), executed,
// and its files are written atomically next to a manifest. Results are cached
// under the SHA-256 of the canonical config.

#include <chrono>
#include <filesystem>
#include <fstream>

#include <Eigen/Core>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include "nilcorr/serialize.hpp"
#include "nilcorr/signal_io.hpp"

namespace nilcorr {

inline constexpr std::string_view version = "1.0.0";

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"gowers",          "correlate",         "decompose",
                                              "vdc-check",       "anti-uniformity",   "interpolate-check",
                                              "class-distance",  "subsequence-average"};
  return kinds;
}

/// Accepts the CLI spelling "subseq-avg" as well.
inline std::string normalize_kind(const std::string& k) { return k == "subseq-avg" ? "subsequence-average" : k; }

struct SignalSource {
  std::string kind = "constant";
  cplx value = 1.0;
  double theta = 0, phi = 0, gamma = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> positions;
  SequenceClass cls = SequenceClass::C;
  int order = 2;
  std::size_t index = 0;
  Family family = Family::mixed;
  std::optional<CorrelationQuery> query;
  std::optional<NilAtom> atom;
  std::string path;
};

struct ExperimentConfig {
  std::string kind;
  Window window{0, 4096};
  std::uint64_t seed = 0;
  std::optional<std::string> output;
  bool cache = true;
  SignalSource signal;
  json raw;  // as given (after CLI overrides), used for the cache key

  // gowers, anti-uniformity
  GowersParams gowers;
  // correlate
  std::optional<CorrelationQuery> query;
  std::string engine = "exact";
  std::optional<int> grid;
  bool allow_aliasing = false;
  // decompose
  DecomposeOptions decompose;
  // vdc-check
  std::int64_t vdc_shifts = 64;
  // anti-uniformity
  SignalSource against;
  // interpolate-check
  std::size_t instances = 1000;
  std::vector<int> interp_orders{2, 3, 4, 5};
  std::vector<int> interp_dims{1, 2, 3};
  std::vector<std::int64_t> reconstruct_M{1, 10, 100};
  std::size_t reconstruct_count = 10;
  // class-distance
  SequenceClass target_class = SequenceClass::A;
  int class_order = 2;
  std::int64_t budget = 20000;
  std::optional<SubwindowScale> scale;
  ClassDistanceOptions class_options;
  // subsequence-average
  SubsequenceSpec subsequence;
  std::vector<std::int64_t> checkpoints;
};

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline SignalSource parse_source(const json& j, const std::string& path, std::uint64_t seed) {
  Fields f(j, path);
  SignalSource s;
  s.seed = seed;
  s.kind = f.req<std::string>("kind");
  if (s.kind == "constant") {
    s.value = f.get<cplx>("value", 1.0);
  } else if (s.kind == "alternating") {
  } else if (s.kind == "linear_phase") {
    s.theta = f.req<double>("theta");
    s.phi = f.get("phi", 0.0);
  } else if (s.kind == "quadratic_phase") {
    s.gamma = f.req<double>("gamma");
    s.theta = f.get("theta", 0.0);
  } else if (s.kind == "noise") {
    s.seed = f.get<std::uint64_t>("seed", seed);
  } else if (s.kind == "spike") {
    s.positions = f.req<std::vector<std::int64_t>>("positions");
  } else if (s.kind == "corpus") {
    s.cls = parse_class(f.req<std::string>("class"));
    s.order = f.get("order", 2);
    s.index = f.get<std::size_t>("index", 0);
    s.family = parse_family(f.get<std::string>("family", "mixed"));
    s.seed = f.get<std::uint64_t>("seed", seed);
    int cap = s.cls == SequenceClass::A ? 3 : 4;
    if (s.order < 1 || s.order > cap)
      fail(ErrorKind::config, "field '" + f.child("order") + "': must be in [1, " + std::to_string(cap) + "]");
  } else if (s.kind == "query") {
    s.query = query_from_json(f.raw("query"), f.child("query"));
  } else if (s.kind == "atom") {
    s.atom = atom_from_json(f.raw("atom"), f.child("atom"));
  } else if (s.kind == "file") {
    s.path = f.req<std::string>("path");
  } else {
    fail(ErrorKind::config, "field '" + f.child("kind") + "': unknown signal kind '" + s.kind + "'");
  }
  f.finish();
  return s;
}

inline GowersParams parse_gowers(Fields& f, std::int64_t N) {
  int order = f.get("order", 2);
  if (order < 1 || order > GowersParams::max_order)
    fail(ErrorKind::config, "field '" + f.child("order") + "': must be in [1, " +
                                std::to_string(GowersParams::max_order) + "]");
  auto p = GowersParams::with_default_shifts(order, N);
  p.shifts = f.get("shifts", p.shifts);
  if (p.shifts < 1) fail(ErrorKind::config, "field '" + f.child("shifts") + "': must be >= 1");
  if (auto L = f.opt<std::int64_t>("scale")) {
    if (*L < 1) fail(ErrorKind::config, "field '" + f.child("scale") + "': must be >= 1");
    p.scale = SubwindowScale(*L);
  }
  return p;
}

inline SubsequenceSpec parse_subsequence(const json& j, const std::string& path, std::uint64_t seed) {
  Fields f(j, path);
  auto kind = f.req<std::string>("kind");
  SubsequenceSpec s;
  if (kind == "identity") {
    s = SubsequenceSpec::identity();
  } else if (kind == "arithmetic") {
    s = SubsequenceSpec::arithmetic(f.req<std::int64_t>("q"), f.get<std::int64_t>("r", 0));
    if (s.q < 1) fail(ErrorKind::config, "field '" + f.child("q") + "': must be >= 1");
    if (s.r < 0) fail(ErrorKind::config, "field '" + f.child("r") + "': must be >= 0");
  } else if (kind == "sqrt_shift") {
    s = SubsequenceSpec::sqrt_shift();
  } else if (kind == "random") {
    s = SubsequenceSpec::random_set(f.req<double>("density"), f.get<std::uint64_t>("seed", seed));
    if (!(s.density > 0 && s.density <= 1))
      fail(ErrorKind::config, "field '" + f.child("density") + "': must lie in (0, 1]");
  } else {
    fail(ErrorKind::config, "field '" + f.child("kind") + "': unknown subsequence kind '" + kind + "'");
  }
  f.finish();
  return s;
}

inline void parse_params(ExperimentConfig& c, const json& j) {
  Fields f(j, "params");
  const std::int64_t N = c.window.length();
  const auto& k = c.kind;
  if (k == "gowers") {
    c.gowers = parse_gowers(f, N);
  } else if (k == "correlate") {
    c.engine = f.get<std::string>("engine", "exact");
    if (c.engine != "exact" && c.engine != "numeric" && c.engine != "both")
      fail(ErrorKind::config, "field '" + f.child("engine") + "': expected exact, numeric or both");
    c.grid = f.opt<int>("grid");
    if (c.grid && *c.grid < 1) fail(ErrorKind::config, "field '" + f.child("grid") + "': must be >= 1");
    c.allow_aliasing = f.get("allow_aliasing", false);
  } else if (k == "decompose") {
    auto& d = c.decompose;
    d.order = f.get("order", 2);
    d.epsilon = f.get("epsilon", 0.1);
    if (d.order < 1 || d.order > GowersParams::max_order)
      fail(ErrorKind::config, "field '" + f.child("order") + "': out of range");
    if (!(d.epsilon > 0)) fail(ErrorKind::config, "field '" + f.child("epsilon") + "': must be positive");
    d.dictionary = DictionarySpec::defaults_for_step(1);
    if (f.has("dictionary")) {
      Fields g(f.raw("dictionary"), f.child("dictionary"));
      int step = g.get("step", 1);
      if (step < 0 || step > 3) fail(ErrorKind::config, "field '" + g.child("step") + "': must be in [0, 3]");
      d.dictionary = DictionarySpec::defaults_for_step(step);
      d.dictionary.max_degree = g.get("max_degree", d.dictionary.max_degree);
      d.dictionary.resolution = g.get("resolution", d.dictionary.resolution);
      d.dictionary.brackets = g.get("brackets", false);
      d.dictionary.ridge = g.opt<double>("ridge");
      d.dictionary.budget = g.get("budget", d.dictionary.budget);
      if (d.dictionary.max_degree < 0 || d.dictionary.max_degree > step)
        fail(ErrorKind::config, "field '" + g.child("max_degree") + "': must be in [0, step]");
      if (d.dictionary.resolution < 1) fail(ErrorKind::config, "field '" + g.child("resolution") + "': must be >= 1");
      if (d.dictionary.brackets && step < 2)
        fail(ErrorKind::config, "field '" + g.child("brackets") + "': bracket atoms need step >= 2");
      if (d.dictionary.ridge && *d.dictionary.ridge < 0)
        fail(ErrorKind::config, "field '" + g.child("ridge") + "': must be >= 0");
      g.finish();
    }
    d.gowers = GowersParams::with_default_shifts(d.order, N);
    d.gowers->shifts = f.get("shifts", d.gowers->shifts);
    if (d.gowers->shifts < 1) fail(ErrorKind::config, "field '" + f.child("shifts") + "': must be >= 1");
    d.clip_iterations = f.get("clip_iterations", 0);
    if (d.clip_iterations < 0) fail(ErrorKind::config, "field '" + f.child("clip_iterations") + "': must be >= 0");
    if (auto L = f.opt<std::int64_t>("scale")) {
      if (*L < 1) fail(ErrorKind::config, "field '" + f.child("scale") + "': must be >= 1");
      d.scale = SubwindowScale(*L);
    }
    d.delta = f.opt<double>("delta");
    d.anti_uniformity_constant = f.get("anti_uniformity_constant", 4.0);
  } else if (k == "vdc-check") {
    c.vdc_shifts = f.get<std::int64_t>("shifts", 64);
    if (c.vdc_shifts < 1 || c.vdc_shifts >= N)
      fail(ErrorKind::config, "field '" + f.child("shifts") + "': must be in [1, N)");
  } else if (k == "anti-uniformity") {
    c.gowers = parse_gowers(f, N);
    c.against = parse_source(f.raw("against"), f.child("against"), c.seed);
  } else if (k == "interpolate-check") {
    c.instances = f.get<std::size_t>("instances", 1000);
    c.interp_orders = f.get("orders", c.interp_orders);
    c.interp_dims = f.get("dims", c.interp_dims);
    c.reconstruct_M = f.get("reconstruct_M", c.reconstruct_M);
    c.reconstruct_count = f.get<std::size_t>("reconstruct_count", 10);
    for (int l : c.interp_orders)
      if (l < 2 || l > 8) fail(ErrorKind::config, "field '" + f.child("orders") + "': entries must be in [2, 8]");
    for (int d : c.interp_dims)
      if (d < 1 || d > 8) fail(ErrorKind::config, "field '" + f.child("dims") + "': entries must be in [1, 8]");
    for (auto M : c.reconstruct_M)
      if (M < 1) fail(ErrorKind::config, "field '" + f.child("reconstruct_M") + "': entries must be >= 1");
  } else if (k == "class-distance") {
    c.target_class = parse_class(f.req<std::string>("class"));
    c.class_order = f.get("order", 2);
    int cap = c.target_class == SequenceClass::A ? 3 : 4;
    if (c.class_order < 1 || c.class_order > cap)
      fail(ErrorKind::config, "field '" + f.child("order") + "': must be in [1, " + std::to_string(cap) + "]");
    c.budget = f.get<std::int64_t>("budget", 20000);
    if (c.budget < 1) fail(ErrorKind::config, "field '" + f.child("budget") + "': must be >= 1");
    if (auto L = f.opt<std::int64_t>("scale")) {
      if (*L < 1 || *L > N) fail(ErrorKind::config, "field '" + f.child("scale") + "': must be in [1, N]");
      c.scale = SubwindowScale(*L);
    }
    c.class_options.resolution = f.get<std::int64_t>("resolution", 64);
    c.class_options.scan_resolution = f.get<std::int64_t>("scan_resolution", 0);
    c.class_options.family = parse_family(f.get<std::string>("family", "mixed"));
    if (c.class_options.resolution < 1)
      fail(ErrorKind::config, "field '" + f.child("resolution") + "': must be >= 1");
  } else if (k == "subsequence-average") {
    c.subsequence = f.has("subsequence") ? parse_subsequence(f.raw("subsequence"), f.child("subsequence"), c.seed)
                                         : SubsequenceSpec::identity();
    if (f.has("checkpoints")) {
      c.checkpoints = f.req<std::vector<std::int64_t>>("checkpoints");
    } else {
      // Geometric checkpoints N0, 2 N0, 4 N0.
      auto base = f.get<std::int64_t>("base", 0);
      if (base == 0) base = std::max<std::int64_t>(1, N / 8);
      c.checkpoints = {base, 2 * base, 4 * base};
    }
    if (c.checkpoints.empty()) fail(ErrorKind::config, "field '" + f.child("checkpoints") + "': must not be empty");
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i)
      if (c.checkpoints[i] < 1 || (i && c.checkpoints[i] <= c.checkpoints[i - 1]))
        fail(ErrorKind::config, "field '" + f.child("checkpoints") + "': must be positive and increasing");
  }
  f.finish();
}

inline json default_signal_json(const std::string& kind) {
  if (kind == "decompose") return {{"kind", "corpus"}, {"class", "C"}, {"order", 2}};
  if (kind == "class-distance") return {{"kind", "corpus"}, {"class", "C"}, {"order", 2}};
  if (kind == "subsequence-average") return {{"kind", "alternating"}};
  if (kind == "vdc-check") return {{"kind", "quadratic_phase"}, {"gamma", std::sqrt(2.0)}};
  return {{"kind", "quadratic_phase"}, {"gamma", std::sqrt(2.0)}};
}

inline json default_query_json() {
  // Two commuting rotations, f_1 = e(x), f_2 = e(-x): e(n (alpha_1 - alpha_2)).
  return {{"system",
           {{"dim", 1},
            {"maps",
             {{{"matrix", {{1}}}, {"shift", {0.6180339887498949}}},
              {{"matrix", {{1}}}, {"shift", {0.41421356237309515}}}}}}},
          {"observables",
           {{{"terms", {{{"freq", {1}}, {"coeff", 1.0}}}}}, {{"terms", {{{"freq", {-1}}, {"coeff", 1.0}}}}}}}};
}

}  // namespace detail

/// Overrides applied on top of the config file (CLI flags).
struct ConfigOverrides {
  std::optional<std::string> kind;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  bool no_cache = false;
};

/// Parses and validates a JSON config. All failures are ErrorKind::config
/// with a line/column (syntax) or dotted field path (schema).
inline ExperimentConfig parse_config(const std::string& text, const ConfigOverrides& ov = {}) {
  json j;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    j = json::object();
  } else {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::config, "config is not valid JSON at " + detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                                  ": " + e.what());
    }
  }
  if (!j.is_object()) fail(ErrorKind::config, "config must be a JSON object");
  if (ov.kind) {
    auto k = normalize_kind(*ov.kind);
    if (j.contains("experiment") && j["experiment"].is_string() && normalize_kind(j["experiment"]) != k)
      fail(ErrorKind::config, "field 'experiment': config says '" + j["experiment"].get<std::string>() +
                                  "' but the subcommand is '" + *ov.kind + "'");
    j["experiment"] = k;
  }
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.output) j["output"] = *ov.output;
  if (ov.no_cache) j["cache"] = false;

  ExperimentConfig c;
  Fields f(j, "");
  c.kind = normalize_kind(f.req<std::string>("experiment"));
  if (std::find(experiment_kinds().begin(), experiment_kinds().end(), c.kind) == experiment_kinds().end())
    fail(ErrorKind::config, "field 'experiment': unknown experiment kind '" + c.kind + "'");
  c.seed = f.get<std::uint64_t>("seed", 0);
  c.output = f.opt<std::string>("output");
  c.cache = f.get("cache", true);
  if (f.has("window")) {
    Fields w(f.raw("window"), "window");
    auto start = w.get<std::int64_t>("start", 0);
    auto end = w.req<std::int64_t>("end");
    if (end <= start) fail(ErrorKind::config, "field 'window.end': must exceed window.start");
    if (end - start > (std::int64_t{1} << 26)) fail(ErrorKind::config, "field 'window': longer than 2^26");
    w.finish();
    c.window = Window(start, end);
  }
  if (c.kind == "correlate") {
    c.query = query_from_json(f.has("query") ? f.raw("query") : detail::default_query_json(), "query");
  } else {
    c.signal = detail::parse_source(f.has("signal") ? f.raw("signal") : detail::default_signal_json(c.kind), "signal",
                                    c.seed);
  }
  static const json empty = json::object();
  detail::parse_params(c, f.has("params") ? f.raw("params") : empty);
  f.finish();

  c.raw = j;
  c.raw.erase("output");
  c.raw.erase("cache");
  return c;
}

inline Signal make_signal(const SignalSource& s, const Window& w) {
  if (s.kind == "constant") return Signal::generate(w, [&](std::int64_t) { return s.value; }, std::abs(s.value));
  if (s.kind == "alternating")
    return Signal::generate(w, [](std::int64_t n) { return cplx(n % 2 == 0 ? 1.0 : -1.0, 0.0); }, 1.0);
  if (s.kind == "linear_phase")
    return Signal::generate(w, [&](std::int64_t n) { return unit_phase(frac_mul(s.theta, n) + s.phi); }, 1.0);
  if (s.kind == "quadratic_phase") return eval_nilsequence(PolynomialPhase{{0.0, s.theta, s.gamma}}, w);
  if (s.kind == "noise") {
    Rng rng(s.seed);
    return Signal::generate(w, [&](std::int64_t) { return rng.unimodular(); }, 1.0);
  }
  if (s.kind == "spike") {
    std::vector<cplx> v(static_cast<std::size_t>(w.length()));
    for (auto p : s.positions)
      if (w.contains(p)) v[static_cast<std::size_t>(p - w.start)] = 1.0;
    return Signal(w, std::move(v), 1.0);
  }
  if (s.kind == "corpus") return corpus_generate(s.cls, s.order, s.seed, w, s.index + 1, s.family).back().signal;
  if (s.kind == "query") return correlate_exact(*s.query, w);
  if (s.kind == "atom") return eval_nilsequence(*s.atom, w);
  if (s.kind == "file") {
    Signal f;
    try {
      f = io::load_signal(s.path);
    } catch (const Error& e) {
      fail(ErrorKind::config, "field 'signal.path': " + std::string(e.what()));
    }
    if (!intersect(f.window(), w) || intersect(f.window(), w) != w)
      fail(ErrorKind::config, "field 'signal.path': file window does not cover the configured window");
    return f.restrict(w);
  }
  fail(ErrorKind::config, "unknown signal kind '" + s.kind + "'");
}

// ----------------------------------------------------------------------
// Files, hashing, cache
// ----------------------------------------------------------------------

namespace io {

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::io, "SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

/// Writes to a temporary sibling, then renames over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& data) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::io, "cannot write " + tmp.string());
    os.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!os) fail(ErrorKind::io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

/// RFC-4180 field quoting.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

/// NILCORR_CACHE_DIR, else $XDG_CACHE_HOME/nilcorr, else $HOME/.cache/nilcorr,
/// else ./.nilcorr-cache.
inline std::filesystem::path cache_root() {
  if (const char* p = std::getenv("NILCORR_CACHE_DIR"); p && *p) return p;
  if (const char* p = std::getenv("XDG_CACHE_HOME"); p && *p) return std::filesystem::path(p) / "nilcorr";
  if (const char* p = std::getenv("HOME"); p && *p) return std::filesystem::path(p) / ".cache" / "nilcorr";
  return ".nilcorr-cache";
}

}  // namespace io

/// Canonical form hashed for the cache key: sorted keys, shortest round-trip
/// numbers, output location and cache policy removed, version included.
inline std::string canonical_config(const ExperimentConfig& c) {
  json j = c.raw;
  j["nilcorr_version"] = std::string(version);
  return j.dump();
}

inline std::string config_hash(const ExperimentConfig& c) { return io::sha256_hex(canonical_config(c)); }

using FileMap = std::map<std::string, std::string>;

// ----------------------------------------------------------------------
// Execution
// ----------------------------------------------------------------------

namespace detail {

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline FileMap execute(const ExperimentConfig& c) {
  FileMap files;
  const Window w = c.window;
  json report = {{"experiment", c.kind}, {"seed", c.seed}, {"window", {{"start", w.start}, {"end", w.end}}}};

  if (c.kind == "gowers") {
    Signal a = make_signal(c.signal, w);
    report["gowers"] = to_json(ghk_seminorm(a, c.gowers));
  } else if (c.kind == "correlate") {
    const auto& q = *c.query;
    report["bound"] = q.bound();
    report["required_grid"] = required_grid(q, w);
    std::optional<Signal> exact, numeric;
    if (c.engine != "numeric") exact = correlate_exact(q, w);
    if (c.engine != "exact") {
      QuadratureSpec quad;
      quad.grid = c.grid.value_or(static_cast<int>(required_grid(q, w)));
      quad.allow_aliasing = c.allow_aliasing;
      report["grid"] = quad.grid;
      numeric = correlate_numeric(q, w, quad);
    }
    if (exact && numeric) {
      double diff = 0;
      for (std::int64_t n = w.start; n < w.end; ++n) diff = std::max(diff, std::abs(exact->at(n) - numeric->at(n)));
      report["max_engine_difference"] = diff;
    }
    report["engine"] = c.engine;
    files["sequence.csv"] = io::to_csv_string(exact ? *exact : *numeric);
    if (exact && numeric) files["sequence_numeric.csv"] = io::to_csv_string(*numeric);
  } else if (c.kind == "decompose") {
    Signal a = make_signal(c.signal, w);
    auto r = decompose(a, c.decompose);
    report["decomposition"] = to_json(r);
    files["a_st.csv"] = io::to_csv_string(r.a_st);
    files["a_er.csv"] = io::to_csv_string(r.a_er);
  } else if (c.kind == "vdc-check") {
    Signal a = make_signal(c.signal, w);
    report["shifts"] = c.vdc_shifts;
    report["vdc"] = to_json(vdc_defect(a, c.vdc_shifts));
  } else if (c.kind == "anti-uniformity") {
    Signal a = make_signal(c.signal, w);
    Signal b = make_signal(c.against, w);
    report["anti_uniformity"] = to_json(anti_uniformity_ratio(a, b, c.gowers));
  } else if (c.kind == "interpolate-check") {
    Rng rng(c.seed);
    std::string csv = "check,order,dim,M,max_error\n";
    json checks = json::array();
    double worst = 0;
    for (int l : c.interp_orders) {
      for (int d : c.interp_dims) {
        double err = 0;
        for (std::size_t t = 0; t < c.instances; ++t) {
          std::vector<double> g(static_cast<std::size_t>(d)), h(static_cast<std::size_t>(d));
          for (auto& x : g) x = rng.uniform();
          for (auto& x : h) x = rng.uniform();
          std::vector<std::vector<double>> pts;
          for (int i = 1; i <= l; ++i) {
            std::vector<double> v(static_cast<std::size_t>(d));
            for (std::size_t k = 0; k < v.size(); ++k) v[k] = mod1(g[k] + static_cast<double>(i) * h[k]);
            pts.push_back(std::move(v));
          }
          auto x = torus_interpolate(pts);
          for (std::size_t k = 0; k < x.size(); ++k) err = std::max(err, circle_dist(x[k] - g[k]));
        }
        worst = std::max(worst, err);
        checks.push_back({{"check", "interpolation"}, {"order", l}, {"dim", d}, {"max_error", err}});
        csv += "interpolation," + std::to_string(l) + "," + std::to_string(d) + ",," + io::format_double(err) + "\n";
      }
    }
    const Window rw(w.start, std::min(w.end, w.start + 256));
    for (auto M : c.reconstruct_M) {
      double err = 0;
      for (std::size_t t = 0; t < c.reconstruct_count; ++t) {
        CircleNilsequence psi{corpus::random_observable(rng, 1, 3), rng.uniform(), 2};
        Signal ref = eval_circle(psi, rw);
        Signal rec = nilkey_reconstruct(psi, M, rw);
        for (std::int64_t n = rw.start; n < rw.end; ++n) err = std::max(err, std::abs(ref.at(n) - rec.at(n)));
      }
      worst = std::max(worst, err);
      checks.push_back({{"check", "reconstruction"}, {"order", 2}, {"M", M}, {"max_error", err}});
      csv += "reconstruction,2,1," + std::to_string(M) + "," + io::format_double(err) + "\n";
    }
    report["checks"] = checks;
    report["max_error"] = worst;
    files["checks.csv"] = csv;
  } else if (c.kind == "class-distance") {
    Signal a = make_signal(c.signal, w);
    SubwindowScale L = c.scale.value_or(SubwindowScale(w.length()));
    auto r = class_distance(a, c.target_class, c.class_order, c.budget, L, c.seed, c.class_options);
    report["class"] = to_string(c.target_class);
    report["order"] = c.class_order;
    report["budget"] = c.budget;
    report["L"] = L.length;
    report["target_norm"] = density_seminorm(a, L);
    report["class_distance"] = to_json(r);
    std::string csv = "evaluated,best_distance\n";
    for (std::size_t i = 0; i < r.trace.size(); ++i)
      csv += std::to_string(i + 1) + "," + io::format_double(r.trace[i]) + "\n";
    files["trace.csv"] = csv;
  } else if (c.kind == "subsequence-average") {
    Signal a = make_signal(c.signal, w);
    auto t = subsequence_average(a, c.subsequence, c.checkpoints);
    report["subsequence"] = c.subsequence.describe();
    report["averages"] = to_json(t);
    report["note"] =
        "Finite checkpoints cannot decide whether the limit exists; the successive differences are a Cauchy "
        "diagnostic only.";
    std::string csv = "N,re,im\n";
    for (std::size_t i = 0; i < t.checkpoints.size(); ++i)
      csv += std::to_string(t.checkpoints[i]) + "," + io::format_double(t.averages[i].real()) + "," +
             io::format_double(t.averages[i].imag()) + "\n";
    files["averages.csv"] = csv;
  }
  files["report.json"] = dump(report);
  return files;
}

inline json versions() {
  return {{"nilcorr", std::string(version)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

}  // namespace detail

struct RunResult {
  std::filesystem::path output;
  std::vector<std::string> files;  // names written, manifest last
  bool cache_hit = false;
  std::string hash;
};

/// Runs the experiment and writes its files plus manifest.json into the output
/// directory (config "output", else "nilcorr-out/<kind>"). On a cache hit the
/// cached files, manifest included, are copied byte for byte.
inline RunResult run_experiment(const ExperimentConfig& c, std::optional<std::filesystem::path> cache_dir = {}) {
  namespace fs = std::filesystem;
  RunResult res;
  res.hash = config_hash(c);
  res.output = c.output ? fs::path(*c.output) : fs::path("nilcorr-out") / c.kind;
  const fs::path entry = cache_dir.value_or(io::cache_root()) / res.hash;

  FileMap files;
  if (c.cache && fs::exists(entry / "manifest.json")) {
    for (const auto& e : fs::directory_iterator(entry))
      if (e.is_regular_file()) files[e.path().filename().string()] = io::read_file(e.path());
    res.cache_hit = true;
  } else {
    auto t0 = std::chrono::steady_clock::now();
    files = detail::execute(c);
    auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    json listing = json::array();
    for (const auto& [name, data] : files) listing.push_back({{"name", name}, {"sha256", io::sha256_hex(data)}});
    json manifest = {{"experiment", c.kind},         {"config_sha256", res.hash},
                     {"canonical_config", c.raw},     {"seed", c.seed},
                     {"versions", detail::versions()}, {"wall_time_ms", ms},
                     {"files", listing}};
    files["manifest.json"] = detail::dump(manifest);
    if (c.cache) {
      // Populate a private directory, then publish it with one rename.
      fs::path tmp = entry;
      tmp += ".tmp-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count());
      for (const auto& [name, data] : files) io::write_atomic(tmp / name, data);
      std::error_code ec;
      fs::rename(tmp, entry, ec);
      if (ec) fs::remove_all(tmp);
    }
  }
  for (const auto& [name, data] : files) {
    if (name == "manifest.json") continue;
    io::write_atomic(res.output / name, data);
    res.files.push_back(name);
  }
  io::write_atomic(res.output / "manifest.json", files.at("manifest.json"));
  res.files.push_back("manifest.json");
  return res;
}

/// Process exit code for an error: 2 config, 3 budget, 1 otherwise.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config:
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::budget: return 3;
    default: return 1;
  }
}

}  // namespace nilcorr
