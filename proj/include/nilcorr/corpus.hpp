#pragma once

// Seeded generators for the three sequence classes compared in the
// class-distance experiments:
//   A - (l-1)-step nilsequences,
//   B - single-transformation correlations with exponents k_i = l!/i,
//   C - correlations of l commuting transformations.

#include "nilcorr/nilmanifolds.hpp"
#include "nilcorr/systems.hpp"

namespace nilcorr {

enum class SequenceClass { A, B, C };

inline SequenceClass parse_class(const std::string& s) {
  if (s == "A" || s == "a") return SequenceClass::A;
  if (s == "B" || s == "b") return SequenceClass::B;
  if (s == "C" || s == "c") return SequenceClass::C;
  fail(ErrorKind::config, "unknown sequence class '" + s + "' (expected A, B or C)");
}

inline std::string to_string(SequenceClass c) {
  switch (c) {
    case SequenceClass::A: return "A";
    case SequenceClass::B: return "B";
    case SequenceClass::C: return "C";
  }
  return "?";
}

/// Commuting families used for class C.
enum class Family { rotations, skew, mixed };

inline Family parse_family(const std::string& s) {
  if (s == "rotations") return Family::rotations;
  if (s == "skew") return Family::skew;
  if (s == "mixed") return Family::mixed;
  fail(ErrorKind::config, "unknown family '" + s + "' (expected rotations, skew or mixed)");
}

struct LabeledSignal {
  std::string label;
  Signal signal;
};

namespace corpus {

/// Trigonometric polynomial with `terms` random frequencies in [-2, 2]^d and
/// sum |c| = 1.
inline TrigObservable random_observable(Rng& rng, int dim, int terms) {
  TrigObservable f;
  std::vector<double> mags;
  for (int t = 0; t < terms; ++t) {
    TrigTerm term;
    for (int k = 0; k < dim; ++k) term.freq.push_back(rng.integer(-2, 2));
    mags.push_back(rng.uniform(0.2, 1.0));
    term.coeff = rng.unimodular();
    f.terms.push_back(std::move(term));
  }
  double total = 0;
  for (double m : mags) total += m;
  for (std::size_t t = 0; t < f.terms.size(); ++t) f.terms[t].coeff *= mags[t] / total;
  return f;
}

/// Skew product S(x, y) = (x + alpha, y + s x) on T^2.
inline AffineMap skew_map(std::int64_t s, double alpha) {
  return AffineMap{IntMatrix(2, {1, 0, s, 1}), {alpha, 0.0}};
}

/// R o S^e where R rotates the fibre by beta: A = [[1,0],[e s,1]] and shift
/// (e alpha, C(e,2) s alpha + beta) mod 1.
inline AffineMap skew_power_with_fibre_rotation(std::int64_t s, double alpha, std::int64_t e, double beta) {
  double c2 = static_cast<double>(e * (e - 1) / 2 * s);
  return AffineMap{IntMatrix(2, {1, 0, e * s, 1}), {frac_mul(alpha, e), mod1(frac_mul(alpha, static_cast<i128>(c2)) + beta)}};
}

/// Class-B query: one random affine map, exponents l!/i.
inline CorrelationQuery random_class_b(Rng& rng, int l) {
  auto k = nilkey_exponents(l);
  bool skew = rng.integer(0, 1) == 1;
  int dim = skew ? 2 : 1;
  AffineMap T = skew ? skew_map(rng.integer(1, 2), rng.uniform()) : AffineToralSystem::rotation({rng.uniform()});
  std::vector<TrigObservable> obs;
  for (int i = 0; i < l; ++i) obs.push_back(random_observable(rng, dim, 2));
  return CorrelationQuery::single_map(std::move(T), dim, std::move(obs), k);
}

/// Class-C query from commuting rotations on the circle with single-character
/// observables k_1 = 1, k_l = -(k_1 + ... + k_{l-1}); the sequence is the
/// linear phase e(n sum_i k_i alpha_i).
inline CorrelationQuery random_rotation_family(Rng& rng, int l) {
  AffineToralSystem sys{1, {}};
  std::vector<TrigObservable> obs;
  std::int64_t total = 0;
  for (int i = 0; i < l; ++i) {
    sys.maps.push_back(AffineToralSystem::rotation({rng.uniform()}));
    std::int64_t k = (i == 0) ? 1 : (i == l - 1 ? -total : rng.integer(-2, 2));
    if (l == 1) k = 0;
    total += k;
    obs.push_back(TrigObservable::character({k}));
  }
  return CorrelationQuery::linear(std::move(sys), std::move(obs));
}

/// Class-C query from powers of one skew product composed with fibre
/// rotations; all such maps commute.
inline CorrelationQuery random_skew_family(Rng& rng, int l) {
  const std::int64_t s = rng.integer(1, 2);
  const double alpha = rng.uniform();
  AffineToralSystem sys{2, {}};
  std::vector<TrigObservable> obs;
  for (int i = 0; i < l; ++i) {
    std::int64_t e = rng.integer(0, 2);
    if (i == 0 && e == 0) e = 1;
    sys.maps.push_back(skew_power_with_fibre_rotation(s, alpha, e, rng.uniform()));
    obs.push_back(random_observable(rng, 2, 2));
  }
  return CorrelationQuery::linear(std::move(sys), std::move(obs));
}

inline CorrelationQuery random_class_c(Rng& rng, int l, Family family, std::size_t index) {
  bool rot = family == Family::rotations || (family == Family::mixed && index % 2 == 0);
  return rot ? random_rotation_family(rng, l) : random_skew_family(rng, l);
}

/// Random (l-1)-step atom: constants (l = 1), linear phases (l = 2), or for
/// l = 3 quadratic phases, bracket phases and Heisenberg orbits in turn.
inline NilAtom random_atom(Rng& rng, int l, std::size_t index) {
  if (l == 1) return PolynomialPhase{{rng.uniform()}};
  if (l == 2) return PolynomialPhase{{rng.uniform(), rng.uniform()}};
  switch (index % 3) {
    case 0: return PolynomialPhase{{rng.uniform(), rng.uniform(), rng.uniform()}};
    case 1: return BracketPhase{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    default: {
      HeisenbergElement g{rng.uniform(), rng.uniform(), rng.uniform()};
      HeisObservable F{rng.integer(-2, 2), rng.integer(1, 2), 0, false};
      return HeisenbergOrbit{g, F};
    }
  }
}

inline std::string describe_query(const CorrelationQuery& q) {
  std::ostringstream os;
  os.precision(17);
  os << "d=" << q.system.dim << " maps=[";
  for (std::size_t i = 0; i < q.system.maps.size(); ++i) {
    const auto& m = q.system.maps[i];
    os << (i ? ";" : "") << "A=(";
    for (std::size_t e = 0; e < m.matrix.entries().size(); ++e) os << (e ? "," : "") << m.matrix.entries()[e];
    os << ") a=(";
    for (std::size_t e = 0; e < m.shift.size(); ++e) os << (e ? "," : "") << m.shift[e];
    os << ")";
  }
  os << "]";
  return os.str();
}

}  // namespace corpus

/// Deterministic per seed. Class A needs l <= 3, classes B and C l <= 4.
inline std::vector<LabeledSignal> corpus_generate(SequenceClass cls, int l, std::uint64_t seed, const Window& w,
                                                  std::size_t count = 8, Family family = Family::mixed) {
  require(l >= 1, "order l must be >= 1");
  if (cls == SequenceClass::A && l > 3) fail(ErrorKind::invalid_argument, "class A supports l <= 3");
  if (cls != SequenceClass::A && l > 4) fail(ErrorKind::invalid_argument, "classes B and C support l <= 4");
  Rng rng(seed);
  std::vector<LabeledSignal> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string prefix = to_string(cls) + "/l=" + std::to_string(l) + "/seed=" + std::to_string(seed) + "/#" +
                         std::to_string(i) + ": ";
    switch (cls) {
      case SequenceClass::A: {
        NilAtom atom = corpus::random_atom(rng, l, i);
        out.push_back({prefix + describe(atom), eval_nilsequence(atom, w)});
        break;
      }
      case SequenceClass::B: {
        auto q = corpus::random_class_b(rng, l);
        out.push_back({prefix + corpus::describe_query(q), correlate_exact(q, w)});
        break;
      }
      case SequenceClass::C: {
        auto q = corpus::random_class_c(rng, l, family, i);
        out.push_back({prefix + corpus::describe_query(q), correlate_exact(q, w)});
        break;
      }
    }
  }
  return out;
}

}  // namespace nilcorr
