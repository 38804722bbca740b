#pragma once

// Explicit nilsequences: polynomial and bracket phases, orbits on the
// Heisenberg nilmanifold, the abelian interpolation map and the circle-case
// reconstruction of a nilsequence as an average of correlation-type products.

#include <array>
#include <variant>

#include "nilcorr/seq_core.hpp"
#include "nilcorr/systems.hpp"

namespace nilcorr {

/// Upper unitriangular 3x3 matrix [[1, x, z], [0, 1, y], [0, 0, 1]].
struct HeisenbergElement {
  double x = 0, y = 0, z = 0;

  friend HeisenbergElement operator*(const HeisenbergElement& a, const HeisenbergElement& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z + a.x * b.y};
  }

  HeisenbergElement inverse() const { return {-x, -y, -z + x * y}; }

  bool operator==(const HeisenbergElement&) const = default;
};

/// g^n = (n x, n y, n z + C(n,2) x y).
inline HeisenbergElement heis_pow(const HeisenbergElement& g, std::int64_t n) {
  require(n <= (std::int64_t{1} << 62) && n >= -(std::int64_t{1} << 62), "|n| must be <= 2^62");
  auto nd = static_cast<double>(n);
  auto c2 = static_cast<double>(static_cast<i128>(n) * (n - 1) / 2);
  return {nd * g.x, nd * g.y, nd * g.z + c2 * g.x * g.y};
}

struct HeisReduction {
  HeisenbergElement representative;
  /// Integer-coordinate gamma with input * gamma = representative.
  HeisenbergElement lattice;
};

/// Right-multiplies by an integer-coordinate element so that every coordinate
/// lands in [0,1): first y, then x, then z.
inline HeisReduction heis_reduce(const HeisenbergElement& p) {
  auto shift_into_unit = [](double v, double& out) {
    double k = -std::floor(v);
    double r = v + k;
    // v + k rounded up to 1: v is within an ulp below an integer.
    if (r >= 1.0) {
      k -= 1.0;
      r = 0.0;
    }
    out = r;
    return k;
  };
  HeisenbergElement rep;
  double b = shift_into_unit(p.y, rep.y);
  double a = shift_into_unit(p.x, rep.x);
  double c = shift_into_unit(p.z + p.x * b, rep.z);
  return {rep, {a, b, c}};
}

/// F(x, y, z) = e(k1 x + k2 y + k3 z) on the fundamental domain. Only
/// horizontal characters (k3 = 0) are continuous on the quotient; any other
/// choice must carry the continuity caveat flag.
struct HeisObservable {
  std::int64_t k1 = 0, k2 = 0, k3 = 0;
  bool continuity_caveat = false;

  cplx operator()(const HeisenbergElement& p) const {
    require(k3 == 0 || continuity_caveat,
            "vertical frequency makes F discontinuous on the quotient; set the continuity caveat flag");
    return unit_phase(static_cast<double>(k1) * p.x + static_cast<double>(k2) * p.y + static_cast<double>(k3) * p.z);
  }
  bool operator==(const HeisObservable&) const = default;
};

/// e(sum_j c_j n^j), degree <= 3.
struct PolynomialPhase {
  std::vector<double> coeffs;
  bool operator==(const PolynomialPhase&) const = default;
};

/// e(gamma n^2 + beta n floor(n alpha) + theta n).
struct BracketPhase {
  double gamma = 0, beta = 0, alpha = 0, theta = 0;
  bool operator==(const BracketPhase&) const = default;
};

/// n -> F(g^n Gamma).
struct HeisenbergOrbit {
  HeisenbergElement g;
  HeisObservable F;
  bool operator==(const HeisenbergOrbit&) const = default;
};

using NilAtom = std::variant<PolynomialPhase, BracketPhase, HeisenbergOrbit>;

/// Nilpotency step of the atom (constants are 0-step).
inline int atom_step(const NilAtom& atom) {
  if (const auto* p = std::get_if<PolynomialPhase>(&atom)) {
    int deg = 0;
    for (std::size_t j = 0; j < p->coeffs.size(); ++j)
      if (p->coeffs[j] != 0.0) deg = static_cast<int>(j);
    return deg;
  }
  return 2;
}

inline std::string describe(const NilAtom& atom) {
  std::ostringstream os;
  os.precision(17);
  if (const auto* p = std::get_if<PolynomialPhase>(&atom)) {
    os << "poly(";
    for (std::size_t j = 0; j < p->coeffs.size(); ++j) os << (j ? "," : "") << p->coeffs[j];
    os << ")";
  } else if (const auto* b = std::get_if<BracketPhase>(&atom)) {
    os << "bracket(gamma=" << b->gamma << ",beta=" << b->beta << ",alpha=" << b->alpha << ",theta=" << b->theta << ")";
  } else {
    const auto& h = std::get<HeisenbergOrbit>(atom);
    os << "heisenberg(g=(" << h.g.x << "," << h.g.y << "," << h.g.z << "),k=(" << h.F.k1 << "," << h.F.k2 << ","
       << h.F.k3 << "))";
  }
  return os.str();
}

namespace detail {

inline double poly_phase(const PolynomialPhase& p, std::int64_t n) {
  require(p.coeffs.size() <= 4, "polynomial phase degree must be <= 3");
  double t = 0;
  i128 power = 1;
  for (std::size_t j = 0; j < p.coeffs.size(); ++j) {
    t += frac_mul(p.coeffs[j], power);
    power = checked_mul(power, n);
  }
  return mod1(t);
}

inline double bracket_phase(const BracketPhase& b, std::int64_t n) {
  i128 fl = floor_mul(b.alpha, n);
  double t = frac_mul(b.gamma, checked_mul(n, n)) + frac_mul(b.beta, checked_mul(n, fl)) + frac_mul(b.theta, n);
  return mod1(t);
}

}  // namespace detail

inline cplx eval_atom(const NilAtom& atom, std::int64_t n) {
  if (const auto* p = std::get_if<PolynomialPhase>(&atom)) return unit_phase(detail::poly_phase(*p, n));
  if (const auto* b = std::get_if<BracketPhase>(&atom)) return unit_phase(detail::bracket_phase(*b, n));
  const auto& h = std::get<HeisenbergOrbit>(atom);
  return h.F(heis_reduce(heis_pow(h.g, n)).representative);
}

inline Signal eval_nilsequence(const NilAtom& atom, const Window& w) {
  std::vector<cplx> v(static_cast<std::size_t>(w.length()));
  parallel_for(v.size(), [&](std::size_t i) { v[i] = eval_atom(atom, w.start + static_cast<std::int64_t>(i)); }, 256);
  return Signal(w, std::move(v), 1.0);
}

struct Dictionary {
  std::vector<NilAtom> atoms;
  int step = 1;
};

/// P(v_1..v_l) = sum_i (-1)^(i-1) C(l,i) v_i (mod 1). For v_i = g + i h the
/// result is g: the coefficients sum to 1 and have vanishing first moment.
inline std::vector<double> torus_interpolate(const std::vector<std::vector<double>>& points) {
  const auto l = static_cast<int>(points.size());
  require(l >= 2 && l <= 8, "interpolation needs between 2 and 8 points");
  const std::size_t d = points.front().size();
  require(d >= 1, "points must have dimension >= 1");
  std::vector<long double> acc(d, 0.0L);
  for (int i = 1; i <= l; ++i) {
    const auto& v = points[static_cast<std::size_t>(i - 1)];
    require(v.size() == d, "points must share one dimension");
    auto c = static_cast<long double>(binomial(l, i)) * ((i % 2 == 1) ? 1.0L : -1.0L);
    for (std::size_t k = 0; k < d; ++k) acc[k] += c * static_cast<long double>(mod1(v[k]));
  }
  std::vector<double> out(d);
  for (std::size_t k = 0; k < d; ++k) out[k] = mod1(static_cast<double>(acc[k] - std::floor(acc[k])));
  return out;
}

/// k_i = l!/i for i = 1..l.
inline std::vector<std::int64_t> nilkey_exponents(int l) {
  require(l >= 1 && l <= 8, "order must be in [1, 8]");
  std::int64_t fact = 1;
  for (int i = 2; i <= l; ++i) fact *= i;
  std::vector<std::int64_t> k;
  for (int i = 1; i <= l; ++i) k.push_back(fact / i);
  return k;
}

/// psi(n) = F(g0^(l! n)) on the circle, i.e. F(l! n g0 mod 1).
struct CircleNilsequence {
  TrigObservable F;
  double g0 = 0;
  int order = 2;

  cplx operator()(std::int64_t n) const {
    std::int64_t fact = nilkey_exponents(order).front();
    double x = frac_mul(g0, static_cast<i128>(fact) * n);
    return F(std::span<const double>(&x, 1));
  }

  /// A linear phase e(theta n + phi) realised with l = 2 and g0 = theta / 2.
  static CircleNilsequence from_linear_phase(double theta, double phi) {
    return CircleNilsequence{TrigObservable::character({1}, unit_phase(phi)), theta / 2.0, 2};
  }
};

inline Signal eval_circle(const CircleNilsequence& psi, const Window& w) {
  return Signal::generate(w, [&](std::int64_t n) { return psi(n); });
}

/// Rebuilds psi from the products of F along g_i^(m + k_i n) with g_i = g0^i
/// and k_i = l!/i, averaged over m = 1..M. The points
/// v_i = i (m + k_i n) g0 = l! n g0 + i (m g0) are fed to torus_interpolate,
/// which returns l! n g0 for every m.
inline Signal nilkey_reconstruct(const CircleNilsequence& psi, std::int64_t M, const Window& w) {
  require(M >= 1, "average length M must be >= 1");
  require(psi.F.terms.empty() || psi.F.terms.front().freq.size() == 1, "F must live on the circle");
  const int l = psi.order;
  const auto k = nilkey_exponents(l);
  std::vector<cplx> out(static_cast<std::size_t>(w.length()));
  parallel_for(out.size(), [&](std::size_t idx) {
    const std::int64_t n = w.start + static_cast<std::int64_t>(idx);
    std::vector<cplx> terms(static_cast<std::size_t>(M));
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(l), std::vector<double>(1));
    for (std::int64_t m = 1; m <= M; ++m) {
      for (int i = 1; i <= l; ++i) {
        i128 mult = detail::checked_mul(i, detail::checked_add(m, detail::checked_mul(k[static_cast<std::size_t>(i - 1)], n)));
        pts[static_cast<std::size_t>(i - 1)][0] = frac_mul(psi.g0, mult);
      }
      auto x = torus_interpolate(pts);
      terms[static_cast<std::size_t>(m - 1)] = psi.F(x);
    }
    out[idx] = pairwise_mean(std::span<const cplx>(terms));
  });
  return Signal(w, std::move(out));
}

}  // namespace nilcorr
