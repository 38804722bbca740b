#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace nilcorr {

using cplx = std::complex<double>;
using i128 = __int128;
using u128 = unsigned __int128;

enum class ErrorKind {
  invalid_argument,
  config,
  budget,
  overflow,
  numeric,
  io,
};

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what,
                    ErrorKind kind = ErrorKind::invalid_argument) {
  if (!cond) fail(kind, what);
}

// ----------------------------------------------------------------------
// Checked 128-bit integer arithmetic
// ----------------------------------------------------------------------

namespace detail {

inline i128 checked_mul(i128 a, i128 b) {
  i128 r;
  if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::overflow, "frequency overflow");
  return r;
}

inline i128 checked_add(i128 a, i128 b) {
  i128 r;
  if (__builtin_add_overflow(a, b, &r)) fail(ErrorKind::overflow, "frequency overflow");
  return r;
}

inline std::int64_t narrow_i64(i128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() ||
      v < std::numeric_limits<std::int64_t>::min())
    fail(ErrorKind::overflow, "frequency overflow");
  return static_cast<std::int64_t>(v);
}

}  // namespace detail

/// Generalized binomial coefficient C(p, k) for any integer p (negative p
/// included), exact in 128-bit arithmetic.
inline i128 binomial(i128 p, int k) {
  if (k < 0) return 0;
  i128 c = 1;
  for (int j = 0; j < k; ++j) {
    // C(p, j+1) = C(p, j) * (p - j) / (j + 1) is integral at every step.
    c = detail::checked_mul(c, p - j) / (j + 1);
  }
  return c;
}

// ----------------------------------------------------------------------
// Phases on the circle
// ----------------------------------------------------------------------

/// Reduce t to [0, 1).
inline double mod1(double t) {
  double r = t - std::floor(t);
  return r >= 1.0 ? 0.0 : r;
}

/// Signed distance from t to the nearest integer, in [-1/2, 1/2].
inline double circle_dist(double t) {
  double r = mod1(t);
  return r > 0.5 ? r - 1.0 : r;
}

/// frac(k * alpha), exact for the binary value of alpha whenever alpha has at
/// most 128 fractional bits (all doubles with |alpha| >= 2^-75). The final
/// rounding to double is the only error.
inline double frac_mul(double alpha, i128 k) {
  if (k == 0 || alpha == 0.0) return 0.0;
  if (!std::isfinite(alpha)) fail(ErrorKind::numeric, "non-finite phase coefficient");
  bool negative = alpha < 0;
  int exp = 0;
  double mant = std::frexp(std::fabs(alpha), &exp);  // |alpha| = mant * 2^exp
  auto m = static_cast<std::uint64_t>(std::ldexp(mant, 53));
  int s = 53 - exp;  // |alpha| = m * 2^-s
  if (s <= 0) return 0.0;
  u128 ku = static_cast<u128>(negative ? -k : k);
  double r;
  if (s <= 128) {
    u128 lo = ku & ((u128(1) << 64) - 1);
    u128 hi = ku >> 64;
    u128 prod = lo * m;
    if (s > 64) {
      u128 hi_mask = (s - 64 >= 128) ? ~u128(0) : ((u128(1) << (s - 64)) - 1);
      prod += ((hi * m) & hi_mask) << 64;
    }
    if (s < 128) prod &= (u128(1) << s) - 1;
    r = static_cast<double>(std::ldexp(static_cast<long double>(prod), -s));
  } else {
    long double p = static_cast<long double>(k) * static_cast<long double>(alpha);
    return mod1(static_cast<double>(p - std::floor(p)));
  }
  if (r >= 1.0) r = 0.0;
  return r;
}

/// floor(k * alpha); exact whenever frac_mul is.
inline i128 floor_mul(double alpha, std::int64_t k) {
  long double p = static_cast<long double>(alpha) * static_cast<long double>(k);
  long double fr = frac_mul(alpha, k);
  return static_cast<i128>(std::llround(p - fr));
}

/// e^{2 pi i t}.
inline cplx unit_phase(double t) {
  double r = mod1(t);
  return std::polar(1.0, 2.0 * std::numbers::pi * r);
}

// ----------------------------------------------------------------------
// Seeded randomness
// ----------------------------------------------------------------------

/// mt19937_64 with explicit, library-independent mappings to reals and
/// integers so seeded streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on the closed range [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  cplx unimodular() { return unit_phase(uniform()); }

 private:
  std::mt19937_64 engine_;
};

// ----------------------------------------------------------------------
// Deterministic summation
// ----------------------------------------------------------------------

template <typename T>
T pairwise_sum(std::span<const T> xs) {
  constexpr std::size_t block = 16;
  if (xs.size() <= block) {
    T acc{};
    for (const auto& x : xs) acc += x;
    return acc;
  }
  std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

template <typename T>
T pairwise_mean(std::span<const T> xs) {
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

// ----------------------------------------------------------------------
// Data-parallel loops
// ----------------------------------------------------------------------

inline unsigned& thread_count_setting() {
  static unsigned n = 0;
  return n;
}

/// 0 selects the hardware concurrency.
inline void set_thread_count(unsigned n) { thread_count_setting() = n; }

inline unsigned thread_count() {
  unsigned n = thread_count_setting();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot; the result is then independent of the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         std::size_t min_chunk = 1) {
  unsigned workers = thread_count();
  if (workers <= 1 || n <= min_chunk) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, (n + min_chunk - 1) / min_chunk));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace nilcorr
