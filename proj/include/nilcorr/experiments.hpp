#pragma once

// Subsequence averages along r_n = O(n) and class-distance searches.

#include "nilcorr/corpus.hpp"
#include "nilcorr/decomposition.hpp"

namespace nilcorr {

// ----------------------------------------------------------------------
// Subsequence averages
// ----------------------------------------------------------------------

struct SubsequenceSpec {
  enum class Kind { identity, arithmetic, sqrt_shift, random_set };
  Kind kind = Kind::identity;
  std::int64_t q = 1;  // arithmetic: r_n = q n + r
  std::int64_t r = 0;
  double density = 1.0;  // random_set: each m >= 1 kept with this probability
  std::uint64_t seed = 0;

  static SubsequenceSpec identity() { return {}; }
  static SubsequenceSpec arithmetic(std::int64_t q, std::int64_t r) {
    SubsequenceSpec s;
    s.kind = Kind::arithmetic;
    s.q = q;
    s.r = r;
    return s;
  }
  static SubsequenceSpec sqrt_shift() {
    SubsequenceSpec s;
    s.kind = Kind::sqrt_shift;
    return s;
  }
  static SubsequenceSpec random_set(double density, std::uint64_t seed) {
    SubsequenceSpec s;
    s.kind = Kind::random_set;
    s.density = density;
    s.seed = seed;
    return s;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::identity: return "r_n = n";
      case Kind::arithmetic: return "r_n = " + std::to_string(q) + "n + " + std::to_string(r);
      case Kind::sqrt_shift: return "r_n = n + floor(sqrt(n))";
      case Kind::random_set: return "random set of density " + std::to_string(density);
    }
    return "?";
  }
};

/// r_1..r_count. Validates strict monotonicity and the growth bound
/// r_n <= c n, returning c.
inline std::vector<std::int64_t> subsequence_terms(const SubsequenceSpec& s, std::int64_t count, double* growth = nullptr) {
  require(count >= 1, "need at least one term");
  std::vector<std::int64_t> r;
  r.reserve(static_cast<std::size_t>(count));
  switch (s.kind) {
    case SubsequenceSpec::Kind::identity:
      for (std::int64_t n = 1; n <= count; ++n) r.push_back(n);
      break;
    case SubsequenceSpec::Kind::arithmetic:
      require(s.q >= 1, "arithmetic subsequence needs q >= 1");
      require(s.r >= 0, "arithmetic subsequence needs r >= 0");
      for (std::int64_t n = 1; n <= count; ++n) r.push_back(s.q * n + s.r);
      break;
    case SubsequenceSpec::Kind::sqrt_shift:
      for (std::int64_t n = 1; n <= count; ++n) {
        auto root = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
        while (root * root > n) --root;
        while ((root + 1) * (root + 1) <= n) ++root;
        r.push_back(n + root);
      }
      break;
    case SubsequenceSpec::Kind::random_set: {
      require(s.density > 0 && s.density <= 1, "density must lie in (0, 1]");
      Rng rng(s.seed);
      for (std::int64_t m = 1; static_cast<std::int64_t>(r.size()) < count; ++m) {
        if (rng.uniform() < s.density) r.push_back(m);
      }
      break;
    }
  }
  double c = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i > 0) require(r[i] > r[i - 1], "subsequence must be strictly increasing");
    c = std::max(c, static_cast<double>(r[i]) / static_cast<double>(i + 1));
  }
  if (s.kind == SubsequenceSpec::Kind::random_set && c > 10.0 / s.density)
    fail(ErrorKind::invalid_argument, "random set violates the linear growth bound");
  if (growth) *growth = c;
  return r;
}

struct SubsequenceTable {
  std::vector<std::int64_t> checkpoints;
  std::vector<cplx> averages;
  /// max |avg_{k+1} - avg_k| over successive checkpoints (Cauchy diagnostic).
  double max_successive_difference = 0;
  double growth_constant = 0;
};

/// (1/N) sum_{n=1..N} a(r_n) at each checkpoint N.
inline SubsequenceTable subsequence_average(const Signal& a, const SubsequenceSpec& spec,
                                            std::vector<std::int64_t> checkpoints) {
  require(!checkpoints.empty(), "need at least one checkpoint");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    require(checkpoints[i] >= 1, "checkpoints must be positive");
    if (i) require(checkpoints[i] > checkpoints[i - 1], "checkpoints must be increasing");
  }
  SubsequenceTable t;
  auto r = subsequence_terms(spec, checkpoints.back(), &t.growth_constant);
  std::int64_t usable = 0;
  for (std::size_t i = 0; i < r.size() && a.window().contains(r[i]); ++i) usable = static_cast<std::int64_t>(i) + 1;
  if (usable < checkpoints.back()) {
    std::int64_t largest = 0;
    for (auto c : checkpoints)
      if (c <= usable) largest = c;
    fail(ErrorKind::invalid_argument, "window exhausted: largest usable checkpoint is " + std::to_string(largest) +
                                          " (terms available: " + std::to_string(usable) + ")");
  }
  t.checkpoints = checkpoints;
  for (auto N : checkpoints) {
    std::vector<cplx> vals(static_cast<std::size_t>(N));
    for (std::int64_t n = 0; n < N; ++n) vals[static_cast<std::size_t>(n)] = a.at(r[static_cast<std::size_t>(n)]);
    t.averages.push_back(pairwise_mean(std::span<const cplx>(vals)));
  }
  for (std::size_t i = 1; i < t.averages.size(); ++i)
    t.max_successive_difference = std::max(t.max_successive_difference, std::abs(t.averages[i] - t.averages[i - 1]));
  return t;
}

// ----------------------------------------------------------------------
// Class distances
// ----------------------------------------------------------------------

struct ClassDistanceOptions {
  /// Coarse frequency grid for class A.
  std::int64_t resolution = 64;
  /// Points per unit frequency of the fine scan for class A (0 selects 2N).
  std::int64_t scan_resolution = 0;
  Family family = Family::mixed;
};

struct ClassDistance {
  double distance = 0;
  std::string witness;
  std::int64_t evaluated = 0;
  /// Best distance after each evaluated candidate.
  std::vector<double> trace;
};

namespace detail {

/// Distance from target to the best multiple of candidate.
inline double scaled_distance(const Signal& target, const Signal& candidate, SubwindowScale scale) {
  double energy = std::real(inner_product(candidate, candidate));
  if (energy <= 0) return density_seminorm(target, scale);
  cplx c = inner_product(target, candidate) / energy;
  return density_seminorm(target - candidate.scaled(c), scale);
}

class CandidateSearch {
 public:
  CandidateSearch(const Signal& target, SubwindowScale scale, std::int64_t budget)
      : target_(target), scale_(scale), budget_(budget) {}

  bool exhausted() const { return result_.evaluated >= budget_; }
  std::int64_t remaining() const { return budget_ - result_.evaluated; }
  const ClassDistance& result() const { return result_; }

  /// Scores up to remaining() candidates produced by make(i) in parallel and
  /// folds them in index order. Returns the scores.
  template <typename Make>
  std::vector<double> evaluate(std::size_t count, Make&& make) {
    count = std::min<std::size_t>(count, static_cast<std::size_t>(std::max<std::int64_t>(0, remaining())));
    std::vector<double> scores(count);
    std::vector<std::string> labels(count);
    parallel_for(count, [&](std::size_t i) {
      auto [label, sig] = make(i);
      scores[i] = scaled_distance(target_, sig, scale_);
      labels[i] = std::move(label);
    });
    for (std::size_t i = 0; i < count; ++i) record(scores[i], labels[i]);
    return scores;
  }

  void record(double d, const std::string& label) {
    if (result_.evaluated == 0 || d < result_.distance) {
      result_.distance = d;
      result_.witness = label;
    }
    ++result_.evaluated;
    result_.trace.push_back(result_.distance);
  }

 private:
  const Signal& target_;
  SubwindowScale scale_;
  std::int64_t budget_;
  ClassDistance result_;
};

inline std::pair<std::string, Signal> phase_candidate(const std::vector<double>& coeffs, const Window& w) {
  NilAtom atom = PolynomialPhase{coeffs};
  return {describe(atom), eval_nilsequence(atom, w)};
}

}  // namespace detail

/// Searches the class for the candidate closest to target in the density
/// seminorm, allowing an optimal complex multiple of each candidate (the
/// classes are linear spaces). The zero candidate is always scored first, so
/// the result never exceeds density_seminorm(target).
///
/// Class A, l = 1: the constant atom. Class A, l = 2: the coarse grid j/Q,
/// a fine scan j/(2N) over all frequencies, then golden-section refinement
/// inside the main lobe. Class A, l = 3: seeded random atoms, the quadratic
/// grid, then a coordinate pattern search. Classes B and C: the seeded corpus
/// stream of random systems.
inline ClassDistance class_distance(const Signal& target, SequenceClass cls, int l, std::int64_t budget,
                                    SubwindowScale scale, std::uint64_t seed,
                                    const ClassDistanceOptions& opt = {}) {
  require(budget >= 1, "budget must be >= 1");
  require(l >= 1, "order must be >= 1");
  const Window w = target.window();
  detail::CandidateSearch search(target, scale, budget);
  search.record(density_seminorm(target, scale), "zero");

  if (cls == SequenceClass::B || cls == SequenceClass::C) {
    require(l <= 4, "classes B and C support l <= 4");
    Rng rng(seed);
    std::size_t index = 0;
    while (!search.exhausted()) {
      // Queries are drawn sequentially (the stream must not depend on the
      // thread count); evaluation is batched.
      std::vector<CorrelationQuery> batch;
      auto n = static_cast<std::size_t>(std::min<std::int64_t>(search.remaining(), 64));
      for (std::size_t i = 0; i < n; ++i, ++index)
        batch.push_back(cls == SequenceClass::B ? corpus::random_class_b(rng, l)
                                                : corpus::random_class_c(rng, l, opt.family, index));
      std::size_t base = index - n;
      search.evaluate(n, [&](std::size_t i) {
        return std::pair{to_string(cls) + "/seed=" + std::to_string(seed) + "/#" + std::to_string(base + i) + ": " +
                             corpus::describe_query(batch[i]),
                         correlate_exact(batch[i], w)};
      });
    }
    return search.result();
  }

  require(l <= 3, "class A supports l <= 3");
  if (l == 1) {
    search.evaluate(1, [&](std::size_t) { return detail::phase_candidate({0.0}, w); });
    return search.result();
  }
  const auto Q = opt.resolution;
  require(Q >= 1, "resolution must be >= 1");

  if (l == 2) {
    std::vector<double> freqs;
    auto grid = search.evaluate(static_cast<std::size_t>(Q), [&](std::size_t j) {
      return detail::phase_candidate({0.0, static_cast<double>(j) / static_cast<double>(Q)}, w);
    });
    double best_freq = 0, best_score = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid.size(); ++j)
      if (grid[j] < best_score) {
        best_score = grid[j];
        best_freq = static_cast<double>(j) / static_cast<double>(Q);
      }
    const std::int64_t S = opt.scan_resolution > 0 ? opt.scan_resolution : 2 * w.length();
    auto scan = search.evaluate(static_cast<std::size_t>(S), [&](std::size_t j) {
      return detail::phase_candidate({0.0, static_cast<double>(j) / static_cast<double>(S)}, w);
    });
    for (std::size_t j = 0; j < scan.size(); ++j)
      if (scan[j] < best_score) {
        best_score = scan[j];
        best_freq = static_cast<double>(j) / static_cast<double>(S);
      }
    // Golden-section search on [best - 1/S, best + 1/S].
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = best_freq - 1.0 / static_cast<double>(S), hi = best_freq + 1.0 / static_cast<double>(S);
    auto score_at = [&](double f) {
      auto s = search.evaluate(1, [&](std::size_t) { return detail::phase_candidate({0.0, mod1(f)}, w); });
      return s.empty() ? std::numeric_limits<double>::infinity() : s.front();
    };
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = score_at(x1), f2 = score_at(x2);
    while (!search.exhausted() && hi - lo > 1e-15) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - invphi * (hi - lo);
        f1 = score_at(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + invphi * (hi - lo);
        f2 = score_at(x2);
      }
    }
    return search.result();
  }

  // l == 3: quadratic phases.
  auto atoms = corpus_generate(SequenceClass::A, 3, seed, w, static_cast<std::size_t>(std::min<std::int64_t>(8, search.remaining())));
  search.evaluate(atoms.size(), [&](std::size_t i) { return std::pair{atoms[i].label, atoms[i].signal}; });
  const auto grid_size = static_cast<std::size_t>(Q * Q);
  auto grid = search.evaluate(grid_size, [&](std::size_t idx) {
    double c1 = static_cast<double>(idx % static_cast<std::size_t>(Q)) / static_cast<double>(Q);
    double c2 = static_cast<double>(idx / static_cast<std::size_t>(Q)) / static_cast<double>(Q);
    return detail::phase_candidate({0.0, c1, c2}, w);
  });
  std::vector<double> best{0.0, 0.0, 0.0};
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < grid.size(); ++idx)
    if (grid[idx] < best_score) {
      best_score = grid[idx];
      best = {0.0, static_cast<double>(idx % static_cast<std::size_t>(Q)) / static_cast<double>(Q),
              static_cast<double>(idx / static_cast<std::size_t>(Q)) / static_cast<double>(Q)};
    }
  std::vector<double> step{0.0, 0.5 / static_cast<double>(Q), 0.5 / static_cast<double>(Q)};
  while (!search.exhausted() && std::max(step[1], step[2]) > 1e-15) {
    bool improved = false;
    for (std::size_t c = 1; c <= 2 && !search.exhausted(); ++c) {
      for (double sign : {1.0, -1.0}) {
        auto trial = best;
        trial[c] = mod1(trial[c] + sign * step[c]);
        auto s = search.evaluate(1, [&](std::size_t) { return detail::phase_candidate(trial, w); });
        if (!s.empty() && s.front() < best_score) {
          best_score = s.front();
          best = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      step[1] *= 0.5;
      step[2] *= 0.5;
    }
  }
  return search.result();
}

}  // namespace nilcorr
