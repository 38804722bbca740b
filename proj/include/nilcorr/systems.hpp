#pragma once

// Commuting unipotent affine maps x -> A x + alpha on the torus T^d, their
// trigonometric-polynomial observables, and two engines for multiple
// correlation sequences
//
//   a(n) = integral of prod_j (prod_i T_i^{p_ij(n)}) f_j  dmu.
//
// The exact engine works entirely with frequencies: e(k.x) composed with
// x -> Bx + beta is e((B^T k).x) times e(k.beta), and a product of characters
// integrates to its constant iff the total frequency vanishes. Translation
// parts are tracked as integer combinations of the base shifts so the
// constants are exact up to a final rounding.

#include <sstream>
#include <string>
#include <vector>

#include "nilcorr/seq_core.hpp"

namespace nilcorr {

/// Square integer matrix, row-major.
class IntMatrix {
 public:
  IntMatrix() = default;
  explicit IntMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim * dim), 0) {
    require(dim >= 1, "matrix dimension must be >= 1");
  }
  IntMatrix(int dim, std::vector<std::int64_t> entries) : dim_(dim), a_(std::move(entries)) {
    require(dim >= 1 && a_.size() == static_cast<std::size_t>(dim * dim), "matrix entries do not match dimension");
  }

  static IntMatrix identity(int dim) {
    IntMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1;
    return m;
  }

  int dim() const { return dim_; }
  std::int64_t& operator()(int r, int c) { return a_[static_cast<std::size_t>(r * dim_ + c)]; }
  std::int64_t operator()(int r, int c) const { return a_[static_cast<std::size_t>(r * dim_ + c)]; }
  const std::vector<std::int64_t>& entries() const { return a_; }
  bool operator==(const IntMatrix&) const = default;

  friend IntMatrix operator*(const IntMatrix& x, const IntMatrix& y) {
    require(x.dim_ == y.dim_, "matrix dimension mismatch");
    IntMatrix r(x.dim_);
    for (int i = 0; i < x.dim_; ++i)
      for (int j = 0; j < x.dim_; ++j) {
        i128 acc = 0;
        for (int k = 0; k < x.dim_; ++k) acc = detail::checked_add(acc, detail::checked_mul(x(i, k), y(k, j)));
        r(i, j) = detail::narrow_i64(acc);
      }
    return r;
  }

  friend IntMatrix operator-(const IntMatrix& x, const IntMatrix& y) {
    require(x.dim_ == y.dim_, "matrix dimension mismatch");
    IntMatrix r(x.dim_);
    for (std::size_t i = 0; i < r.a_.size(); ++i) r.a_[i] = detail::narrow_i64(i128(x.a_[i]) - y.a_[i]);
    return r;
  }

  bool is_zero() const {
    return std::all_of(a_.begin(), a_.end(), [](std::int64_t v) { return v == 0; });
  }

 private:
  int dim_ = 0;
  std::vector<std::int64_t> a_;
};

/// x -> A x + shift (mod 1).
struct AffineMap {
  IntMatrix matrix;
  std::vector<double> shift;
};

struct AffineToralSystem {
  int dim = 1;
  std::vector<AffineMap> maps;

  /// Rotation x -> x + alpha.
  static AffineMap rotation(std::vector<double> alpha) {
    auto d = static_cast<int>(alpha.size());
    return AffineMap{IntMatrix::identity(d), std::move(alpha)};
  }
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;

  void add(std::string msg) {
    ok = false;
    violations.push_back(std::move(msg));
  }
};

/// Checks dimensions, unipotence ((A - I)^d = 0), pairwise commutation of the
/// matrices and the translation condition A_i a_j + a_i = A_j a_i + a_j (mod 1).
/// Never throws; every violation is listed.
inline ValidationReport validate_system(const AffineToralSystem& s) {
  ValidationReport rep;
  const int d = s.dim;
  if (d < 1) {
    rep.add("dimension must be >= 1");
    return rep;
  }
  if (s.maps.empty()) rep.add("system has no transformations");
  bool shapes_ok = true;
  for (std::size_t i = 0; i < s.maps.size(); ++i) {
    const auto& m = s.maps[i];
    if (m.matrix.dim() != d) {
      rep.add("map " + std::to_string(i) + ": matrix is not " + std::to_string(d) + "x" + std::to_string(d));
      shapes_ok = false;
    }
    if (m.shift.size() != static_cast<std::size_t>(d)) {
      rep.add("map " + std::to_string(i) + ": shift has wrong length");
      shapes_ok = false;
      continue;
    }
    for (double v : m.shift) {
      if (!std::isfinite(v) || v < 0.0 || v >= 1.0) {
        rep.add("map " + std::to_string(i) + ": shift component outside [0,1)");
        break;
      }
    }
  }
  if (!shapes_ok) return rep;
  const auto I = IntMatrix::identity(d);
  for (std::size_t i = 0; i < s.maps.size(); ++i) {
    try {
      IntMatrix nil = s.maps[i].matrix - I;
      IntMatrix p = nil;
      for (int k = 1; k < d; ++k) p = p * nil;
      if (!p.is_zero()) rep.add("map " + std::to_string(i) + ": matrix is not unipotent");
    } catch (const Error&) {
      rep.add("map " + std::to_string(i) + ": overflow while checking unipotence");
    }
  }
  for (std::size_t i = 0; i < s.maps.size(); ++i) {
    for (std::size_t j = i + 1; j < s.maps.size(); ++j) {
      const auto& A = s.maps[i];
      const auto& B = s.maps[j];
      std::string pair = "maps " + std::to_string(i) + "," + std::to_string(j);
      try {
        if (!(A.matrix * B.matrix == B.matrix * A.matrix)) rep.add(pair + ": matrices do not commute");
      } catch (const Error&) {
        rep.add(pair + ": overflow while checking commutation");
      }
      for (int r = 0; r < d; ++r) {
        long double lhs = A.shift[static_cast<std::size_t>(r)], rhs = B.shift[static_cast<std::size_t>(r)];
        for (int c = 0; c < d; ++c) {
          lhs += static_cast<long double>(A.matrix(r, c)) * B.shift[static_cast<std::size_t>(c)];
          rhs += static_cast<long double>(B.matrix(r, c)) * A.shift[static_cast<std::size_t>(c)];
        }
        long double diff = lhs - rhs;
        double dist = std::fabs(circle_dist(static_cast<double>(diff - std::floor(diff))));
        if (dist > 1e-12) {
          rep.add(pair + ": translation parts do not commute (component " + std::to_string(r) + ")");
          break;
        }
      }
    }
  }
  return rep;
}

struct TrigTerm {
  std::vector<std::int64_t> freq;
  cplx coeff;
};

/// f(x) = sum_t c_t e(k_t . x).
struct TrigObservable {
  std::vector<TrigTerm> terms;

  /// sum |c_t|, the sup-norm bound used throughout.
  double bound() const {
    double b = 0;
    for (const auto& t : terms) b += std::abs(t.coeff);
    return b;
  }

  cplx operator()(std::span<const double> x) const {
    cplx acc{};
    for (const auto& t : terms) {
      long double phase = 0;
      for (std::size_t i = 0; i < x.size(); ++i) phase += static_cast<long double>(t.freq[i]) * x[i];
      acc += t.coeff * unit_phase(static_cast<double>(phase - std::floor(phase)));
    }
    return acc;
  }

  static TrigObservable character(std::vector<std::int64_t> k, cplx c = 1.0) {
    return TrigObservable{{TrigTerm{std::move(k), c}}};
  }
};

/// Integer polynomial, coefficients in ascending degree.
struct IntPolynomial {
  std::vector<std::int64_t> coeffs;

  static IntPolynomial linear(std::int64_t slope) { return IntPolynomial{{0, slope}}; }
  static IntPolynomial zero() { return IntPolynomial{{}}; }

  int degree() const {
    for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i)
      if (coeffs[static_cast<std::size_t>(i)] != 0) return i;
    return 0;
  }

  i128 operator()(std::int64_t n) const {
    i128 acc = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
      acc = detail::checked_add(detail::checked_mul(acc, n), *it);
    return acc;
  }
};

/// iterates[j][i] is the exponent polynomial of T_i in observable slot j.
struct CorrelationQuery {
  AffineToralSystem system;
  std::vector<TrigObservable> observables;
  std::vector<std::vector<IntPolynomial>> iterates;

  static constexpr int max_degree = 4;

  /// p_ij(n) = n [i = j]; requires one observable per transformation.
  static CorrelationQuery linear(AffineToralSystem sys, std::vector<TrigObservable> obs) {
    require(obs.size() == sys.maps.size(), "linear query needs one observable per transformation");
    CorrelationQuery q{std::move(sys), std::move(obs), {}};
    const auto l = q.system.maps.size();
    q.iterates.assign(l, std::vector<IntPolynomial>(l, IntPolynomial::zero()));
    for (std::size_t j = 0; j < l; ++j) q.iterates[j][j] = IntPolynomial::linear(1);
    return q;
  }

  /// Single transformation T with slot j iterated T^{k_j n}.
  static CorrelationQuery single_map(AffineMap map, int dim, std::vector<TrigObservable> obs,
                                     const std::vector<std::int64_t>& exponents) {
    require(obs.size() == exponents.size(), "one exponent per observable required");
    CorrelationQuery q{AffineToralSystem{dim, {std::move(map)}}, std::move(obs), {}};
    for (auto k : exponents) q.iterates.push_back({IntPolynomial::linear(k)});
    return q;
  }

  double bound() const {
    double b = 1;
    for (const auto& f : observables) b *= f.bound();
    return b;
  }
};

/// Uniform mixture of queries: the disjoint-union system with the averaged
/// measure.
struct MixtureQuery {
  std::vector<CorrelationQuery> parts;
};

inline MixtureQuery disjoint_union(CorrelationQuery a, CorrelationQuery b) {
  return MixtureQuery{{std::move(a), std::move(b)}};
}

struct QuadratureSpec {
  int grid = 2;
  bool allow_aliasing = false;
  double budget = static_cast<double>(1ull << 28);
};

inline ValidationReport validate_query(const CorrelationQuery& q) {
  ValidationReport rep = validate_system(q.system);
  const auto l = q.system.maps.size();
  if (q.observables.empty()) rep.add("query needs at least one observable");
  if (q.iterates.size() != q.observables.size()) rep.add("iterates must have one row per observable");
  for (std::size_t j = 0; j < q.iterates.size(); ++j) {
    if (q.iterates[j].size() != l) rep.add("iterates row " + std::to_string(j) + " must list one polynomial per map");
    for (const auto& p : q.iterates[j])
      if (p.degree() > CorrelationQuery::max_degree) rep.add("iterate polynomial degree exceeds 4");
  }
  for (std::size_t j = 0; j < q.observables.size(); ++j) {
    if (q.observables[j].terms.empty()) rep.add("observable " + std::to_string(j) + " has no terms");
    for (const auto& t : q.observables[j].terms)
      if (t.freq.size() != static_cast<std::size_t>(q.system.dim)) {
        rep.add("observable " + std::to_string(j) + ": frequency length differs from dimension");
        break;
      }
  }
  return rep;
}

namespace detail {

/// Affine map with symbolic translation: x -> B x + W alpha, where alpha is
/// the concatenation of all base shifts.
struct SymbolicAffine {
  int dim = 1;
  std::size_t nshift = 0;
  std::vector<i128> B;  // dim x dim
  std::vector<i128> W;  // dim x nshift

  static SymbolicAffine identity(int d, std::size_t nshift) {
    SymbolicAffine s{d, nshift, std::vector<i128>(static_cast<std::size_t>(d * d), 0),
                     std::vector<i128>(static_cast<std::size_t>(d) * nshift, 0)};
    for (int i = 0; i < d; ++i) s.B[static_cast<std::size_t>(i * d + i)] = 1;
    return s;
  }

  i128 b(int r, int c) const { return B[static_cast<std::size_t>(r * dim + c)]; }
  i128 w(int r, std::size_t c) const { return W[static_cast<std::size_t>(r) * nshift + c]; }
};

/// this o other : x -> B1 (B2 x + W2 a) + W1 a.
inline SymbolicAffine compose(const SymbolicAffine& x, const SymbolicAffine& y) {
  SymbolicAffine r{x.dim, x.nshift, std::vector<i128>(x.B.size(), 0), std::vector<i128>(x.W.size(), 0)};
  const int d = x.dim;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      i128 acc = 0;
      for (int k = 0; k < d; ++k) acc = checked_add(acc, checked_mul(x.b(i, k), y.b(k, j)));
      r.B[static_cast<std::size_t>(i * d + j)] = acc;
    }
    for (std::size_t s = 0; s < x.nshift; ++s) {
      i128 acc = x.w(i, s);
      for (int k = 0; k < d; ++k) acc = checked_add(acc, checked_mul(x.b(i, k), y.w(k, s)));
      r.W[static_cast<std::size_t>(i) * x.nshift + s] = acc;
    }
  }
  return r;
}

/// Precomputed powers of N_i = A_i - I for every map.
struct NilpotentParts {
  std::vector<std::vector<std::vector<i128>>> powers;  // [map][k] -> dim x dim

  explicit NilpotentParts(const AffineToralSystem& s) {
    const int d = s.dim;
    for (const auto& m : s.maps) {
      std::vector<std::vector<i128>> pw;
      std::vector<i128> cur(static_cast<std::size_t>(d * d), 0);
      for (int i = 0; i < d; ++i) cur[static_cast<std::size_t>(i * d + i)] = 1;
      std::vector<i128> nil(static_cast<std::size_t>(d * d));
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) nil[static_cast<std::size_t>(r * d + c)] = m.matrix(r, c) - (r == c ? 1 : 0);
      for (int k = 0; k < d; ++k) {
        pw.push_back(cur);
        std::vector<i128> next(cur.size(), 0);
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) {
            i128 acc = 0;
            for (int t = 0; t < d; ++t)
              acc = checked_add(acc, checked_mul(cur[static_cast<std::size_t>(r * d + t)], nil[static_cast<std::size_t>(t * d + c)]));
            next[static_cast<std::size_t>(r * d + c)] = acc;
          }
        cur = std::move(next);
      }
      powers.push_back(std::move(pw));
    }
  }
};

/// T_i^p = (A^p, sum_{j<p} A^j alpha). With A = I + N unipotent,
/// A^p = sum_k C(p,k) N^k and sum_{j<p} A^j = sum_k C(p,k+1) N^k, valid for
/// every integer p.
inline SymbolicAffine map_power(const NilpotentParts& nil, std::size_t map, int d, std::size_t nshift, i128 p) {
  SymbolicAffine r{d, nshift, std::vector<i128>(static_cast<std::size_t>(d * d), 0),
                   std::vector<i128>(static_cast<std::size_t>(d) * nshift, 0)};
  const auto& pw = nil.powers[map];
  for (int k = 0; k < d; ++k) {
    i128 cA = binomial(p, k);
    i128 cW = binomial(p, k + 1);
    const auto& Nk = pw[static_cast<std::size_t>(k)];
    for (int r0 = 0; r0 < d; ++r0)
      for (int c = 0; c < d; ++c) {
        i128 e = Nk[static_cast<std::size_t>(r0 * d + c)];
        if (e == 0) continue;
        auto& bref = r.B[static_cast<std::size_t>(r0 * d + c)];
        bref = checked_add(bref, checked_mul(cA, e));
        auto& wref = r.W[static_cast<std::size_t>(r0) * nshift + map * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
        wref = checked_add(wref, checked_mul(cW, e));
      }
  }
  return r;
}

inline std::vector<double> concat_shifts(const AffineToralSystem& s) {
  std::vector<double> a;
  for (const auto& m : s.maps) a.insert(a.end(), m.shift.begin(), m.shift.end());
  return a;
}

/// The map prod_i T_i^{p_ij(n)} of slot j.
inline SymbolicAffine slot_map(const CorrelationQuery& q, const NilpotentParts& nil, std::size_t j, std::int64_t n) {
  const int d = q.system.dim;
  const std::size_t nshift = q.system.maps.size() * static_cast<std::size_t>(d);
  auto acc = SymbolicAffine::identity(d, nshift);
  for (std::size_t i = 0; i < q.system.maps.size(); ++i) {
    i128 p = q.iterates[j][i](n);
    if (p == 0) continue;
    acc = compose(acc, map_power(nil, i, d, nshift, p));
  }
  return acc;
}

/// frac(sum_s coef_s * alpha_s).
inline double symbolic_phase(std::span<const i128> coef, std::span<const double> alpha) {
  double t = 0;
  for (std::size_t s = 0; s < coef.size(); ++s) t += frac_mul(alpha[s], coef[s]);
  return mod1(t);
}

inline void require_valid(const CorrelationQuery& q) {
  auto rep = validate_query(q);
  if (!rep.ok) {
    std::string msg = "invalid correlation query:";
    for (const auto& v : rep.violations) msg += " " + v + ";";
    fail(ErrorKind::invalid_argument, msg);
  }
}

}  // namespace detail

/// Exact correlation sequence on w by character calculus.
inline Signal correlate_exact(const CorrelationQuery& q, const Window& w) {
  detail::require_valid(q);
  const int d = q.system.dim;
  const detail::NilpotentParts nil(q.system);
  const auto alpha = detail::concat_shifts(q.system);
  const std::size_t nshift = alpha.size();
  const std::size_t m = q.observables.size();
  std::vector<cplx> out(static_cast<std::size_t>(w.length()));

  parallel_for(out.size(), [&](std::size_t idx) {
    const std::int64_t n = w.start + static_cast<std::int64_t>(idx);
    // Pulled-back frequency and translation coefficients per slot and term.
    std::vector<std::vector<std::vector<i128>>> freq(m), coef(m);
    for (std::size_t j = 0; j < m; ++j) {
      auto U = detail::slot_map(q, nil, j, n);
      for (const auto& t : q.observables[j].terms) {
        std::vector<i128> f(static_cast<std::size_t>(d), 0), c(nshift, 0);
        for (int col = 0; col < d; ++col) {
          i128 acc = 0;
          for (int r = 0; r < d; ++r) acc = detail::checked_add(acc, detail::checked_mul(U.b(r, col), t.freq[static_cast<std::size_t>(r)]));
          f[static_cast<std::size_t>(col)] = detail::narrow_i64(acc);
        }
        for (std::size_t s = 0; s < nshift; ++s) {
          i128 acc = 0;
          for (int r = 0; r < d; ++r) acc = detail::checked_add(acc, detail::checked_mul(U.w(r, s), t.freq[static_cast<std::size_t>(r)]));
          c[s] = acc;
        }
        freq[j].push_back(std::move(f));
        coef[j].push_back(std::move(c));
      }
    }
    // Odometer over one term per slot.
    std::vector<std::size_t> pick(m, 0);
    std::vector<i128> ftot(static_cast<std::size_t>(d)), ctot(nshift);
    cplx total{};
    while (true) {
      std::fill(ftot.begin(), ftot.end(), 0);
      for (std::size_t j = 0; j < m; ++j)
        for (int k = 0; k < d; ++k)
          ftot[static_cast<std::size_t>(k)] = detail::checked_add(ftot[static_cast<std::size_t>(k)], freq[j][pick[j]][static_cast<std::size_t>(k)]);
      bool zero = std::all_of(ftot.begin(), ftot.end(), [](i128 v) { return v == 0; });
      if (zero) {
        std::fill(ctot.begin(), ctot.end(), 0);
        cplx c{1.0, 0.0};
        for (std::size_t j = 0; j < m; ++j) {
          c *= q.observables[j].terms[pick[j]].coeff;
          for (std::size_t s = 0; s < nshift; ++s) ctot[s] = detail::checked_add(ctot[s], coef[j][pick[j]][s]);
        }
        total += c * unit_phase(detail::symbolic_phase(ctot, alpha));
      }
      std::size_t j = 0;
      while (j < m && ++pick[j] == q.observables[j].terms.size()) {
        pick[j] = 0;
        ++j;
      }
      if (j == m) break;
    }
    out[idx] = total;
  });
  return Signal(w, std::move(out), q.bound());
}

/// Smallest grid size G for which the equispaced product rule integrates
/// every character arising over w exactly: G must exceed, per coordinate,
/// the largest possible |total frequency|.
inline std::int64_t required_grid(const CorrelationQuery& q, const Window& w) {
  detail::require_valid(q);
  const int d = q.system.dim;
  const detail::NilpotentParts nil(q.system);
  i128 worst = 0;
  for (std::int64_t n = w.start; n < w.end; ++n) {
    std::vector<i128> per_coord(static_cast<std::size_t>(d), 0);
    for (std::size_t j = 0; j < q.observables.size(); ++j) {
      auto U = detail::slot_map(q, nil, j, n);
      std::vector<i128> best(static_cast<std::size_t>(d), 0);
      for (const auto& t : q.observables[j].terms) {
        for (int col = 0; col < d; ++col) {
          i128 acc = 0;
          for (int r = 0; r < d; ++r) acc = detail::checked_add(acc, detail::checked_mul(U.b(r, col), t.freq[static_cast<std::size_t>(r)]));
          if (acc < 0) acc = -acc;
          best[static_cast<std::size_t>(col)] = std::max(best[static_cast<std::size_t>(col)], acc);
        }
      }
      for (int k = 0; k < d; ++k) per_coord[static_cast<std::size_t>(k)] = detail::checked_add(per_coord[static_cast<std::size_t>(k)], best[static_cast<std::size_t>(k)]);
    }
    for (auto v : per_coord) worst = std::max(worst, v);
  }
  return std::max<std::int64_t>(2, detail::narrow_i64(worst + 1));
}

/// Grid quadrature of the same integrand: points are pushed through each
/// slot map and the observables evaluated pointwise. Refuses runs whose grid
/// would alias unless allow_aliasing is set.
inline Signal correlate_numeric(const CorrelationQuery& q, const Window& w, const QuadratureSpec& quad) {
  detail::require_valid(q);
  require(quad.grid >= 2, "quadrature grid must be >= 2");
  const int d = q.system.dim;
  const std::int64_t G = quad.grid;
  double points = std::pow(static_cast<double>(G), d);
  std::size_t term_count = 0;
  for (const auto& f : q.observables) term_count += f.terms.size();
  double cost = points * static_cast<double>(w.length()) * static_cast<double>(term_count);
  if (cost > quad.budget)
    fail(ErrorKind::budget, "quadrature cost " + std::to_string(cost) + " exceeds budget " + std::to_string(quad.budget));
  std::int64_t needed = required_grid(q, w);
  if (G < needed && !quad.allow_aliasing)
    fail(ErrorKind::numeric, "aliasing: grid " + std::to_string(G) + " below required " + std::to_string(needed));

  const detail::NilpotentParts nil(q.system);
  const auto alpha = detail::concat_shifts(q.system);
  const std::size_t m = q.observables.size();
  const auto npoints = static_cast<std::size_t>(points);
  std::vector<cplx> out(static_cast<std::size_t>(w.length()));

  parallel_for(out.size(), [&](std::size_t idx) {
    const std::int64_t n = w.start + static_cast<std::int64_t>(idx);
    std::vector<detail::SymbolicAffine> maps;
    std::vector<std::vector<double>> beta(m, std::vector<double>(static_cast<std::size_t>(d)));
    for (std::size_t j = 0; j < m; ++j) {
      maps.push_back(detail::slot_map(q, nil, j, n));
      for (int r = 0; r < d; ++r) {
        std::vector<i128> row(alpha.size());
        for (std::size_t s = 0; s < alpha.size(); ++s) row[s] = maps[j].w(r, s);
        beta[j][static_cast<std::size_t>(r)] = detail::symbolic_phase(row, alpha);
      }
    }
    std::vector<cplx> samples(npoints);
    std::vector<std::int64_t> g(static_cast<std::size_t>(d));
    std::vector<double> y(static_cast<std::size_t>(d));
    for (std::size_t p = 0; p < npoints; ++p) {
      std::size_t rest = p;
      for (int k = 0; k < d; ++k) {
        g[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(rest % static_cast<std::size_t>(G));
        rest /= static_cast<std::size_t>(G);
      }
      cplx prod{1.0, 0.0};
      for (std::size_t j = 0; j < m; ++j) {
        for (int r = 0; r < d; ++r) {
          i128 acc = 0;
          for (int c = 0; c < d; ++c) acc += (maps[j].b(r, c) % G) * g[static_cast<std::size_t>(c)];
          acc %= G;
          if (acc < 0) acc += G;
          y[static_cast<std::size_t>(r)] = mod1(static_cast<double>(acc) / static_cast<double>(G) + beta[j][static_cast<std::size_t>(r)]);
        }
        prod *= q.observables[j](y);
      }
      samples[p] = prod;
    }
    out[idx] = pairwise_mean(std::span<const cplx>(samples));
  });
  return Signal(w, std::move(out));
}

inline Signal correlate_exact(const MixtureQuery& q, const Window& w) {
  require(!q.parts.empty(), "mixture has no components");
  std::vector<Signal> parts;
  double bound = 0;
  for (const auto& p : q.parts) {
    parts.push_back(correlate_exact(p, w));
    bound = std::max(bound, p.bound());
  }
  std::vector<cplx> out(static_cast<std::size_t>(w.length()));
  const double weight = 1.0 / static_cast<double>(parts.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    cplx acc{};
    for (const auto& s : parts) acc += s.values()[i];
    out[i] = acc * weight;
  }
  return Signal(w, std::move(out), bound);
}

}  // namespace nilcorr
