#pragma once

// Finite-scale uniformity seminorms and the checks built on them.

#include <optional>
#include <vector>

#include "nilcorr/seq_core.hpp"

namespace nilcorr {

/// Parameters of the finite seminorm: order l, number of shifts H and the
/// base-case subwindow length L. When the scale is left unset the largest
/// admissible length N - (l-1)*H is used.
struct GowersParams {
  int order = 2;
  std::int64_t shifts = 1;
  std::optional<SubwindowScale> scale;

  static constexpr int max_order = 6;

  /// H = floor(sqrt(N)).
  static GowersParams with_default_shifts(int order, std::int64_t window_length) {
    GowersParams p;
    p.order = order;
    p.shifts = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::sqrt(static_cast<double>(window_length))));
    return p;
  }
};

struct GowersReport {
  double value = 0;
  int order = 1;
  std::int64_t shifts = 0;
  std::int64_t scale = 0;
  /// per_level[0] holds the top value; per_level[k] holds every sub-value at
  /// order (order - k), enumerated in lexicographic shift order.
  std::vector<std::vector<double>> per_level;
};

namespace detail {

inline std::int64_t resolve_scale(const GowersParams& p, std::int64_t N) {
  require(p.order >= 1 && p.order <= GowersParams::max_order, "order must be in [1, 6]");
  require(p.shifts >= 1, "shift count H must be >= 1");
  std::int64_t shrink = static_cast<std::int64_t>(p.order - 1) * p.shifts;
  if (p.order >= 2 && p.shifts >= N) fail(ErrorKind::invalid_argument, "insufficient window");
  std::int64_t base_len = N - shrink;
  if (base_len < 1) fail(ErrorKind::invalid_argument, "insufficient window");
  std::int64_t L = p.scale ? p.scale->length : base_len;
  if (L > base_len)
    fail(ErrorKind::invalid_argument,
         "insufficient window: scale " + std::to_string(L) + " exceeds the shortest derivative window " +
             std::to_string(base_len));
  return L;
}

/// Returns the value at `order`; appends sub-values to levels[depth+1...].
inline double ghk_recursive(const Signal& a, int order, std::int64_t H, std::int64_t L,
                            std::vector<std::vector<double>>& levels, std::size_t depth) {
  if (order == 1) return uniform_cesaro_mean(a, SubwindowScale(L));
  std::vector<double> sub(static_cast<std::size_t>(H));
  std::vector<std::vector<std::vector<double>>> sublevels(static_cast<std::size_t>(H));
  auto one = [&](std::size_t i) {
    auto h = static_cast<std::int64_t>(i) + 1;
    std::vector<std::vector<double>> local(levels.size());
    sub[i] = ghk_recursive(multiplicative_derivative(a, h), order - 1, H, L, local, depth + 1);
    sublevels[i] = std::move(local);
  };
  if (depth == 0) {
    parallel_for(sub.size(), one);
  } else {
    for (std::size_t i = 0; i < sub.size(); ++i) one(i);
  }
  auto inner_power = static_cast<double>(1u << (order - 1));
  std::vector<double> powered(sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) {
    levels[depth + 1].push_back(sub[i]);
    powered[i] = std::pow(sub[i], inner_power);
    for (std::size_t k = depth + 2; k < levels.size(); ++k) {
      auto& src = sublevels[i][k];
      levels[k].insert(levels[k].end(), src.begin(), src.end());
    }
  }
  double avg = pairwise_mean(std::span<const double>(powered));
  return std::pow(avg, 1.0 / (2.0 * inner_power));
}

}  // namespace detail

/// Finite uniformity seminorm. Level 1 is the uniform Cesaro mean at scale L;
/// level l satisfies value^(2^l) = (1/H) sum_{h=1..H} value_{l-1}(D_h a)^(2^(l-1))
/// with D_h the multiplicative derivative.
inline GowersReport ghk_seminorm(const Signal& a, const GowersParams& p) {
  std::int64_t L = detail::resolve_scale(p, a.size());
  GowersReport r;
  r.order = p.order;
  r.shifts = p.shifts;
  r.scale = L;
  r.per_level.resize(static_cast<std::size_t>(p.order));
  r.value = detail::ghk_recursive(a, p.order, p.shifts, L, r.per_level, 0);
  r.per_level[0] = {r.value};
  return r;
}

enum class CyclicMethod { automatic, brute_force, fourier };

/// Largest N^(l+1) the brute-force cube enumeration will attempt.
inline constexpr double cyclic_brute_force_budget = 1 << 27;

/// Standard U^l norm of f viewed as a function on Z_N (normalized counting
/// measure). Brute force enumerates all (x, h_1..h_l) for N <= 64; order 2
/// may instead use sum_k |f^(k)|^4.
inline double cyclic_gowers_oracle(std::span<const cplx> f, int order,
                                   CyclicMethod method = CyclicMethod::automatic) {
  require(order >= 1, "order must be >= 1");
  const std::size_t N = f.size();
  require(N >= 1, "empty function");
  if (order == 1) return std::abs(pairwise_mean(f));
  if (method == CyclicMethod::fourier || (method == CyclicMethod::automatic && order == 2)) {
    require(order == 2, "Fourier identity applies to order 2 only");
    std::vector<double> fourth(N);
    for (std::size_t k = 0; k < N; ++k) {
      std::vector<cplx> terms(N);
      for (std::size_t n = 0; n < N; ++n) {
        auto idx = static_cast<i128>(k) * static_cast<i128>(n) % static_cast<i128>(N);
        terms[n] = f[n] * unit_phase(-static_cast<double>(idx) / static_cast<double>(N));
      }
      double mag = std::abs(pairwise_mean(std::span<const cplx>(terms)));
      fourth[k] = mag * mag * mag * mag;
    }
    return std::pow(pairwise_sum(std::span<const double>(fourth)), 0.25);
  }
  if (N > 64 || std::pow(static_cast<double>(N), order + 1) > cyclic_brute_force_budget)
    fail(ErrorKind::budget, "cyclic brute force is limited to N <= 64 and N^(l+1) <= 2^27");
  const std::size_t corners = std::size_t{1} << order;
  std::vector<std::size_t> h(static_cast<std::size_t>(order), 0);
  cplx total{};
  // Outer loop over shift tuples, inner over x; partial sums per tuple.
  while (true) {
    cplx tuple_sum{};
    for (std::size_t x = 0; x < N; ++x) {
      cplx prod{1.0, 0.0};
      for (std::size_t w = 0; w < corners; ++w) {
        std::size_t pos = x;
        int weight = 0;
        for (int j = 0; j < order; ++j) {
          if (w & (std::size_t{1} << j)) {
            pos += h[static_cast<std::size_t>(j)];
            ++weight;
          }
        }
        cplx v = f[pos % N];
        prod *= (weight % 2 == 1) ? std::conj(v) : v;
      }
      tuple_sum += prod;
    }
    total += tuple_sum;
    int j = 0;
    while (j < order && ++h[static_cast<std::size_t>(j)] == N) {
      h[static_cast<std::size_t>(j)] = 0;
      ++j;
    }
    if (j == order) break;
  }
  double mean = total.real() / std::pow(static_cast<double>(N), order + 1);
  return std::pow(std::max(0.0, mean), 1.0 / static_cast<double>(corners));
}

struct VdcDefect {
  double lhs = 0;
  double rhs = 0;
  double defect = 0;
};

/// Finite van der Corput comparison for vectors v_0..v_{N-1}:
/// lhs = |mean v|^2, rhs = 4 (1/H) sum_h |(1/(N-h)) sum_n <v_{n+h}, v_n>|.
inline VdcDefect vdc_defect(const std::vector<std::vector<cplx>>& vectors, std::int64_t H) {
  const auto N = static_cast<std::int64_t>(vectors.size());
  require(N >= 2, "need at least two vectors");
  require(H >= 1 && H < N, "H must satisfy 1 <= H < N");
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) fail(ErrorKind::invalid_argument, "dimension mismatch");
  }
  VdcDefect r;
  std::vector<cplx> coord(static_cast<std::size_t>(N));
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t n = 0; n < coord.size(); ++n) coord[n] = vectors[n][d];
    r.lhs += std::norm(pairwise_mean(std::span<const cplx>(coord)));
  }
  std::vector<double> corr(static_cast<std::size_t>(H));
  parallel_for(corr.size(), [&](std::size_t i) {
    auto h = static_cast<std::size_t>(i + 1);
    std::vector<cplx> ips(static_cast<std::size_t>(N) - h);
    for (std::size_t n = 0; n < ips.size(); ++n) {
      cplx ip{};
      for (std::size_t d = 0; d < dim; ++d) ip += vectors[n + h][d] * std::conj(vectors[n][d]);
      ips[n] = ip;
    }
    corr[i] = std::abs(pairwise_mean(std::span<const cplx>(ips)));
  });
  r.rhs = 4.0 * pairwise_mean(std::span<const double>(corr));
  r.defect = r.rhs - r.lhs;
  return r;
}

/// Scalar sequences as one-dimensional vectors.
inline VdcDefect vdc_defect(const Signal& a, std::int64_t H) {
  std::vector<std::vector<cplx>> vs;
  vs.reserve(a.values().size());
  for (const auto& z : a.values()) vs.push_back({z});
  return vdc_defect(vs, H);
}

struct AntiUniformity {
  double correlation = 0;
  double bound = 0;
  double ratio = 0;
  bool infinite = false;
};

/// correlation = |mean a(n) b(n)| over the shared window (no conjugation, as in
/// the anti-uniformity estimate); bound = 4 * ghk_seminorm(b).
inline AntiUniformity anti_uniformity_ratio(const Signal& a, const Signal& b, const GowersParams& p) {
  auto w = intersect(a.window(), b.window());
  if (!w) fail(ErrorKind::invalid_argument, "signals share no window");
  Signal ar = a.restrict(*w), br = b.restrict(*w);
  AntiUniformity r;
  r.correlation = std::abs(inner_product(ar, br.conj()));
  r.bound = 4.0 * ghk_seminorm(br, p).value;
  if (r.bound == 0.0) {
    r.infinite = true;
    r.ratio = std::numeric_limits<double>::infinity();
  } else {
    r.ratio = r.correlation / r.bound;
  }
  return r;
}

}  // namespace nilcorr
