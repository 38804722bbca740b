// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria (0 when all pass).

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>

#include "nilcorr/runner.hpp"
#include "../oracles.hpp"

using namespace nilcorr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED " + what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Signal phase(Window w, double theta) {
  return Signal::generate(w, [&](std::int64_t n) { return unit_phase(frac_mul(theta, n)); });
}

Signal noise(Window w, std::uint64_t seed) {
  Rng rng(seed);
  return Signal::generate(w, [&](std::int64_t) { return rng.unimodular(); });
}

double max_diff(const Signal& a, const Signal& b) {
  double m = 0;
  for (std::int64_t n = a.window().start; n < a.window().end; ++n) m = std::max(m, std::abs(a.at(n) - b.at(n)));
  return m;
}

CorrelationQuery rotation_pair(double a, double b) {
  AffineToralSystem sys{1, {AffineToralSystem::rotation({a}), AffineToralSystem::rotation({b})}};
  return CorrelationQuery::linear(sys, {TrigObservable::character({1}), TrigObservable::character({-1})});
}

// 1 -------------------------------------------------------------------
Outcome heisenberg_closed_form() {
  Outcome o;
  o.check(heis_pow({1, 1, 0}, 3) == HeisenbergElement{3, 3, 3}, "g = (1,1,0), n = 3");
  Rng rng(1);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    // Integer-over-1024 coordinates: the matrix oracle is then exact.
    HeisenbergElement g{static_cast<double>(rng.integer(-1024, 1024)) / 1024.0,
                        static_cast<double>(rng.integer(-1024, 1024)) / 1024.0,
                        static_cast<double>(rng.integer(-1024, 1024)) / 1024.0};
    auto n = rng.integer(0, 1000);
    auto p = heis_pow(g, n);
    auto m = oracle::mat_pow(oracle::heis_matrix(g.x, g.y, g.z), n);
    worst = std::max({worst, std::fabs(p.x - static_cast<double>(m[0][1])), std::fabs(p.y - static_cast<double>(m[1][2])),
                      std::fabs(p.z - static_cast<double>(m[0][2]))});
  }
  o.check(worst <= 1e-12, "matrix oracle");
  o.note("max entry error " + fmt(worst) + " over 1000 cases");
  return o;
}

// 2 -------------------------------------------------------------------
Outcome interpolation_identity() {
  Outcome o;
  double wrap = std::fabs(circle_dist(torus_interpolate({{0.5}, {0.8}, {0.1}})[0] - 0.2));
  o.check(wrap <= 1e-12, "wraparound case l = 3, g = 0.2, h = 0.3");
  Rng rng(2);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const int l = 2 + t % 4;
    const std::size_t d = 1 + static_cast<std::size_t>((t / 4) % 3);
    std::vector<double> g(d), h(d);
    for (std::size_t k = 0; k < d; ++k) {
      g[k] = rng.uniform();
      h[k] = rng.uniform();
    }
    std::vector<std::vector<double>> pts;
    for (int i = 1; i <= l; ++i) {
      std::vector<double> v(d);
      for (std::size_t k = 0; k < d; ++k) v[k] = mod1(static_cast<double>(i) * h[k] + g[k]);
      pts.push_back(v);
    }
    auto r = torus_interpolate(pts);
    for (std::size_t k = 0; k < d; ++k) worst = std::max(worst, std::fabs(circle_dist(r[k] - g[k])));
  }
  o.check(worst <= 1e-12, "random instances");
  o.note("max error " + fmt(worst) + " over 1000 instances, wraparound " + fmt(wrap));
  return o;
}

// 3 -------------------------------------------------------------------
Outcome circle_reconstruction() {
  Outcome o;
  o.check(nilkey_exponents(2) == std::vector<std::int64_t>{2, 1}, "exponents (2, 1)");
  Rng rng(3);
  const Window w(0, 256);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    CircleNilsequence psi{corpus::random_observable(rng, 1, 3), rng.uniform(), 2};
    auto target = eval_circle(psi, w);
    for (std::int64_t M : {1, 10, 100}) worst = std::max(worst, max_diff(nilkey_reconstruct(psi, M, w), target));
  }
  o.check(worst <= 1e-9, "pointwise reconstruction");
  o.note("max pointwise error " + fmt(worst) + " over 100 (F, g0) x M in {1, 10, 100}");
  return o;
}

// 4 -------------------------------------------------------------------
Outcome engine_agreement() {
  Outcome o;
  Rng rng(4);
  std::vector<std::pair<std::string, CorrelationQuery>> corpus;
  for (int i = 0; i < 5; ++i) corpus.emplace_back("rotations", corpus::random_rotation_family(rng, 2 + i % 2));
  for (int i = 0; i < 5; ++i) corpus.emplace_back("skew", corpus::random_class_b(rng, 2 + i % 2));
  for (int i = 0; i < 5; ++i) corpus.emplace_back("commuting", corpus::random_skew_family(rng, 2));
  for (int i = 0; i < 5; ++i) {
    // Skew product and fibre rotation with quadratic iterates.
    AffineToralSystem sys{2, {corpus::skew_map(1, rng.uniform()), AffineToralSystem::rotation({0.0, rng.uniform()})}};
    CorrelationQuery q{sys, {corpus::random_observable(rng, 2, 2), corpus::random_observable(rng, 2, 2)}, {}};
    q.iterates = {{IntPolynomial{{0, 1, 1}}, IntPolynomial{{1}}}, {IntPolynomial{{0, 2}}, IntPolynomial{{0, 0, 1}}}};
    corpus.emplace_back("polynomial", q);
  }
  const Window w(0, 16);
  double worst = 0;
  std::int64_t largest_grid = 0;
  for (const auto& [kind, q] : corpus) {
    QuadratureSpec quad;
    quad.grid = static_cast<int>(required_grid(q, w));
    largest_grid = std::max<std::int64_t>(largest_grid, quad.grid);
    double d = max_diff(correlate_numeric(q, w, quad), correlate_exact(q, w));
    o.check(d <= 1e-10, kind + " query differs by " + fmt(d));
    worst = std::max(worst, d);
  }
  bool refused = false;
  QuadratureSpec low;
  low.grid = static_cast<int>(required_grid(corpus.back().second, w)) - 1;
  try {
    correlate_numeric(corpus.back().second, w, low);
  } catch (const Error& e) {
    refused = e.kind() == ErrorKind::numeric;
  }
  o.check(refused, "aliased query refused");
  o.note("20 queries, max difference " + fmt(worst) + ", largest grid " + std::to_string(largest_grid) +
         ", aliased run refused");
  return o;
}

// 5 -------------------------------------------------------------------
Outcome seminorm_identities() {
  Outcome o;
  const Window w(0, 1024);
  const cplx c(0.3, -0.4);
  auto constant = Signal::generate(w, [&](std::int64_t) { return c; });
  double worst_const = 0;
  for (int l = 1; l <= 4; ++l)
    worst_const = std::max(worst_const, std::fabs(ghk_seminorm(constant, GowersParams::with_default_shifts(l, 1024)).value - 0.5));
  o.check(worst_const <= 1e-12, "constant fixed point");

  auto p2 = GowersParams::with_default_shifts(2, 1024);
  double lin = std::fabs(ghk_seminorm(phase(w, std::sqrt(2.0) - 1.0), p2).value - 1.0);
  o.check(lin <= 1e-9, "linear phase");

  auto a = Signal::generate(w, [](std::int64_t n) {
    return 0.5 * unit_phase(frac_mul(std::sqrt(2.0), static_cast<i128>(n) * n)) + 0.3 * unit_phase(frac_mul(0.1, n));
  });
  double inv = 0;
  for (int l = 2; l <= 3; ++l) {
    auto p = GowersParams::with_default_shifts(l, 1024);
    double base = ghk_seminorm(a, p).value;
    auto modulated = (a * phase(w, 0.377)).unbounded();
    inv = std::max(inv, std::fabs(ghk_seminorm(modulated, p).value - base));
    inv = std::max(inv, std::fabs(ghk_seminorm(a.scaled(cplx(0, -0.7)), p).value - 0.7 * base));
  }
  o.check(inv <= 1e-9, "modulation/scaling invariance");

  const std::size_t N = 32;
  std::vector<cplx> two(N);
  for (std::size_t n = 0; n < N; ++n)
    two[n] = (unit_phase(static_cast<double>(n) / N) + unit_phase(static_cast<double>(5 * n % N) / N)) / std::sqrt(2.0);
  double four = std::fabs(cyclic_gowers_oracle(two, 2, CyclicMethod::fourier) - std::pow(2.0, -0.25));
  double brute = std::fabs(cyclic_gowers_oracle(two, 2, CyclicMethod::brute_force) - std::pow(2.0, -0.25));
  o.check(four <= 1e-9 && brute <= 1e-9, "cyclic two-frequency value");
  o.note("constant " + fmt(worst_const) + ", linear " + fmt(lin) + ", invariance " + fmt(inv) + ", cyclic 2^-1/4 " +
         fmt(std::max(four, brute)));
  return o;
}

// 6 -------------------------------------------------------------------
Outcome quadratic_decay() {
  Outcome o;
  const std::vector<double> pinned{0.050514767143767486, 0.04315652815802835, 0.04333367263647706,
                                   0.021481546620743832, 0.015932570318449423};
  std::vector<double> v;
  std::string values;
  for (int e = 10; e <= 14; ++e) {
    const std::int64_t N = std::int64_t{1} << e;
    auto a = eval_nilsequence(PolynomialPhase{{0.0, 0.0, std::sqrt(2.0)}}, Window(0, N));
    auto p = GowersParams::with_default_shifts(2, N);
    double got = ghk_seminorm(a, p).value;
    double ref = pinned[static_cast<std::size_t>(e - 10)];
    double orc = oracle::ghk2_quadratic_phase(std::sqrt(2.0L), p.shifts, N - p.shifts);
    o.check(std::fabs(got - ref) <= 0.01 * ref, "pinned value at N = 2^" + std::to_string(e));
    o.check(std::fabs(got - orc) <= 1e-9, "oracle at N = 2^" + std::to_string(e));
    if (!v.empty()) {
      double ratio = got / v.back();
      o.check(got < v.back() && ratio <= 0.95, "ratio " + fmt(ratio) + " at N = 2^" + std::to_string(e));
    }
    values += (values.empty() ? "" : ", ") + fmt(got);
    v.push_back(got);
  }
  o.note("values " + values);
  return o;
}

// 7 -------------------------------------------------------------------
Outcome van_der_corput() {
  Outcome o;
  const Window w(0, 4096);
  const std::int64_t H = 64;
  std::vector<std::pair<std::string, Signal>> sigs;
  sigs.emplace_back("constant", Signal::generate(w, [](std::int64_t) { return cplx(0.6, 0.8); }));
  sigs.emplace_back("alternating", Signal::generate(w, [](std::int64_t n) { return cplx(n % 2 ? -1.0 : 1.0); }));
  sigs.emplace_back("linear", phase(w, std::sqrt(2.0) - 1.0));
  sigs.emplace_back("quadratic", eval_nilsequence(PolynomialPhase{{0.0, 0.0, std::sqrt(2.0)}}, w));
  for (std::uint64_t s = 0; s < 3; ++s) sigs.emplace_back("noise", noise(w, 42 + s));
  for (auto cls : {SequenceClass::B, SequenceClass::C})
    for (auto& ls : corpus_generate(cls, 2, 7, w, 5)) sigs.emplace_back(to_string(cls), ls.signal);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [name, s] : sigs) {
    double d = vdc_defect(s, H).defect;
    o.check(d >= -0.05, name + " defect " + fmt(d));
    worst = std::min(worst, d);
  }
  std::vector<std::vector<cplx>> vecs(4096, {cplx(1.0), cplx(0.0, 0.5)});
  auto cv = vdc_defect(vecs, H);
  o.check(cv.defect == 3.0 * cv.lhs, "constant vectors defect = 3 lhs");
  o.note(std::to_string(sigs.size()) + " signals, min defect " + fmt(worst) + ", constant-vector defect/lhs " +
         fmt(cv.defect / cv.lhs));
  return o;
}

// 8 -------------------------------------------------------------------
Outcome anti_uniformity() {
  Outcome o;
  const Window w(0, 4096);
  auto p = GowersParams::with_default_shifts(2, 4096);
  p.shifts = 64;
  std::vector<Signal> bs;
  for (double f : {0.0, 1.0 / 64, 5.0 / 64, 17.0 / 64, 40.0 / 64}) bs.push_back(phase(w, f));
  bs.push_back(noise(w, 8));
  bs.push_back(noise(w, 9));
  double worst = 0;
  int pairs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = corpus_generate(SequenceClass::C, 2, 1000 + seed, w, 1).front().signal;
    std::vector<Signal> against = bs;
    against.push_back(a.conj());
    for (const auto& b : against) {
      auto r = anti_uniformity_ratio(a, b, p);
      if (r.infinite) continue;
      o.check(r.ratio <= 1.05, "ratio " + fmt(r.ratio) + " for seed " + std::to_string(seed));
      worst = std::max(worst, r.ratio);
      ++pairs;
    }
  }
  o.note(std::to_string(pairs) + " pairs, max ratio " + fmt(worst));
  return o;
}

// 9 -------------------------------------------------------------------
Outcome decomposition() {
  Outcome o;
  const Window w(0, 4096);
  const SubwindowScale full(4096);
  Rng rng(9);
  double worst_contraction = 0;
  auto contraction = [&](const Signal& a, const DecomposeOptions& opt) {
    auto dict = build_dictionary(opt.dictionary, w);
    auto pr = project_and_clip(a, dict, opt.dictionary.ridge.value_or(default_ridge(dict.atoms.size())));
    for (std::int64_t n = w.start; n < w.end; ++n)
      worst_contraction = std::max(worst_contraction, std::abs(a.at(n) - pr.structured.at(n)) - std::abs(a.at(n) - pr.unclipped.at(n)));
  };

  DecomposeOptions opt;
  double on_grid = 0, off_margin = -1;
  for (int t = 0; t < 5; ++t) {
    double alpha = rng.uniform();
    double beta = mod1(alpha - static_cast<double>(rng.integer(0, 63)) / 64.0);
    // alpha - beta is j/64 up to one rounding in beta.
    auto a = correlate_exact(rotation_pair(alpha, beta), w);
    auto r = decompose(a, opt);
    on_grid = std::max(on_grid, r.err2);
    contraction(a, opt);

    double a2 = rng.uniform(), b2 = rng.uniform();
    auto off = correlate_exact(rotation_pair(a2, b2), w);
    auto ro = decompose(off, opt);
    double bound = oracle::off_grid_bound(static_cast<long double>(a2) - b2, 64, 4096);
    o.check(ro.err2 <= bound + 1e-12, "off-grid err2 " + fmt(ro.err2) + " above bound " + fmt(bound));
    off_margin = std::max(off_margin, ro.err2 - bound);
    contraction(off, opt);
  }
  o.check(on_grid <= 1e-6, "on-grid err2 " + fmt(on_grid));

  // Skew-pair correlations: e(...) at n = k1 + k1', zero elsewhere.
  double spike_ratio = 0;
  for (std::int64_t k1p : {1, 2, 5}) {
    auto q = CorrelationQuery::single_map(corpus::skew_map(1, rng.uniform()), 2,
                                          {TrigObservable::character({1, 1}), TrigObservable::character({k1p, -1})}, {1, 2});
    auto a = correlate_exact(q, w);
    std::size_t spikes = 0;
    for (auto v : a.values()) spikes += std::abs(v) > 0.5;
    auto r = decompose(a, opt);
    double limit = 2.0 * static_cast<double>(spikes) / static_cast<double>(full.length);
    o.check(spikes == 1 && r.err2 <= limit, "spike err2 " + fmt(r.err2));
    spike_ratio = std::max(spike_ratio, r.err2 / limit);
    contraction(a, opt);
  }

  DecomposeOptions exact = opt;
  exact.dictionary.ridge = 0.0;
  double orth = 0;
  for (int t = 0; t < 3; ++t) {
    auto a = correlate_exact(corpus::random_skew_family(rng, 2), w);
    auto r = decompose(a, exact);
    orth = std::max(orth, r.residual_orthogonality);
    contraction(a, exact);
  }
  o.check(orth <= 1e-8, "orthogonality " + fmt(orth));
  o.check(worst_contraction <= 1e-15, "clipping contraction");
  o.note("on-grid err2 " + fmt(on_grid) + ", off-grid err2 - bound <= " + fmt(off_margin) + ", spike err2/limit " +
         fmt(spike_ratio) + ", orthogonality " + fmt(orth));
  return o;
}

// 10 ------------------------------------------------------------------
Outcome class_distances() {
  Outcome o;
  const Window w(0, 4096);
  const SubwindowScale full(4096);
  ClassDistanceOptions opt;
  opt.resolution = 64;
  double worst = 0;
  for (const auto& s : corpus_generate(SequenceClass::C, 2, 10, w, 10, Family::rotations)) {
    auto d = class_distance(s.signal, SequenceClass::A, 2, 20000, full, 10, opt);
    worst = std::max(worst, d.distance);
  }
  o.check(worst <= 1e-3, "class C to A distance " + fmt(worst));
  auto target = noise(w, 10);
  std::string ctrl;
  for (auto cls : {SequenceClass::A, SequenceClass::B, SequenceClass::C}) {
    auto d = class_distance(target, cls, 2, cls == SequenceClass::A ? 20000 : 500, full, 10, opt);
    o.check(std::fabs(d.distance - 1.0) <= 0.05, "noise control " + to_string(cls) + " " + fmt(d.distance));
    ctrl += (ctrl.empty() ? "" : ", ") + to_string(cls) + " " + fmt(d.distance);
  }
  o.note("max C->A distance " + fmt(worst) + ", noise control " + ctrl);
  return o;
}

// 11 ------------------------------------------------------------------
Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("nilcorr-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto read_dir = [](const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = io::read_file(e.path());
    return out;
  };
  const std::vector<std::pair<std::string, std::string>> configs{
      {"gowers", R"({"window": {"end": 2048}, "params": {"order": 3}})"},
      {"correlate", R"({"window": {"end": 64}, "params": {"engine": "both"}})"},
      {"decompose", R"({"window": {"end": 1024}, "seed": 7})"},
      {"vdc-check", R"({"window": {"end": 1024}})"},
      {"anti-uniformity", R"({"window": {"end": 1024}, "params": {"against": {"kind": "noise"}}})"},
      {"interpolate-check", R"({"params": {"instances": 100}})"},
      {"class-distance", R"({"window": {"end": 512}, "params": {"class": "A", "budget": 300}})"},
      {"subseq-avg", R"({"params": {"subsequence": {"kind": "random", "density": 0.5}}})"},
  };
  int identical = 0;
  for (const auto& [kind, text] : configs) {
    ConfigOverrides ov{kind, 3, (root / kind / "first").string(), false};
    auto first = run_experiment(parse_config(text, ov), root / "cache");
    ov.output = (root / kind / "hit").string();
    auto hit = run_experiment(parse_config(text, ov), root / "cache");
    ov.output = (root / kind / "fresh").string();
    ov.no_cache = true;
    auto fresh = run_experiment(parse_config(text, ov), root / "cache");
    auto a = read_dir(first.output), b = read_dir(hit.output), c = read_dir(fresh.output);
    o.check(hit.cache_hit && a == b, kind + " cache hit not byte-identical");
    a.erase("manifest.json");
    c.erase("manifest.json");
    o.check(!fresh.cache_hit && a == c, kind + " recomputation differs");
    if (hit.cache_hit && read_dir(first.output) == b && a == c) ++identical;
  }
  fs::remove_all(root);
  o.note(std::to_string(identical) + "/8 experiment kinds byte-identical on rerun (cache hit and recomputation)");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Heisenberg closed form", heisenberg_closed_form},
      {"interpolation identity", interpolation_identity},
      {"circle reconstruction", circle_reconstruction},
      {"engine agreement", engine_agreement},
      {"seminorm identities", seminorm_identities},
      {"quadratic-phase decay", quadratic_decay},
      {"van der Corput defect", van_der_corput},
      {"anti-uniformity", anti_uniformity},
      {"decomposition", decomposition},
      {"class distances", class_distances},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << "criterion " << (i + 1) << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << "  ["
              << o.detail << "] " << fmt(secs) << "s" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed;
}
