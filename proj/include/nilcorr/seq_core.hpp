#pragma once

// Finite sequence windows and the uniform averaging primitives shared by the
// rest of the library.
//
// The infinitary uniform average "N - M -> infinity" is replaced throughout by
// a maximum over all subwindows of one explicit length L (SubwindowScale).

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nilcorr/common.hpp"

namespace nilcorr {

/// Half-open integer range [start, end).
struct Window {
  std::int64_t start = 0;
  std::int64_t end = 1;

  Window() = default;
  Window(std::int64_t s, std::int64_t e) : start(s), end(e) {
    require(e > s, "window must satisfy end > start (got [" + std::to_string(s) + ", " +
                       std::to_string(e) + "))");
  }

  std::int64_t length() const { return end - start; }
  bool contains(std::int64_t n) const { return n >= start && n < end; }
  bool operator==(const Window&) const = default;
};

/// Intersection of two windows, or nullopt when they are disjoint.
inline std::optional<Window> intersect(const Window& a, const Window& b) {
  std::int64_t s = std::max(a.start, b.start);
  std::int64_t e = std::min(a.end, b.end);
  if (e <= s) return std::nullopt;
  return Window(s, e);
}

/// Length of the subwindows used as the finite stand-in for N - M -> infinity.
struct SubwindowScale {
  std::int64_t length = 1;

  SubwindowScale() = default;
  explicit SubwindowScale(std::int64_t L) : length(L) {
    require(L >= 1, "subwindow scale must be >= 1");
  }
};

/// A finite complex sequence on a window, with an optional declared bound on
/// its sup-norm.
class Signal {
 public:
  static constexpr double bound_slack = 1e-12;

  Signal() : window_(0, 1), values_(1, cplx{}) {}

  Signal(Window w, std::vector<cplx> values, std::optional<double> bound = std::nullopt)
      : window_(w), values_(std::move(values)), bound_(bound) {
    require(static_cast<std::int64_t>(values_.size()) == w.length(),
            "signal length " + std::to_string(values_.size()) + " does not match window length " +
                std::to_string(w.length()));
    if (bound_) {
      require(*bound_ >= 0, "declared sup-bound must be nonnegative");
      for (std::size_t i = 0; i < values_.size(); ++i) {
        if (std::abs(values_[i]) > *bound_ + bound_slack)
          fail(ErrorKind::invalid_argument,
               "value at n=" + std::to_string(w.start + static_cast<std::int64_t>(i)) +
                   " exceeds declared bound " + std::to_string(*bound_));
      }
    }
  }

  template <typename Fn>
  static Signal generate(Window w, Fn&& fn, std::optional<double> bound = std::nullopt) {
    std::vector<cplx> v(static_cast<std::size_t>(w.length()));
    for (std::int64_t n = w.start; n < w.end; ++n) v[static_cast<std::size_t>(n - w.start)] = fn(n);
    return Signal(w, std::move(v), bound);
  }

  const Window& window() const { return window_; }
  std::int64_t size() const { return window_.length(); }
  const std::vector<cplx>& values() const { return values_; }
  std::span<const cplx> span() const { return values_; }
  const std::optional<double>& bound() const { return bound_; }

  /// Value at absolute index n.
  cplx at(std::int64_t n) const {
    require(window_.contains(n), "index " + std::to_string(n) + " outside signal window");
    return values_[static_cast<std::size_t>(n - window_.start)];
  }

  double sup_norm() const {
    double m = 0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Restriction to a subwindow.
  Signal restrict(const Window& w) const {
    require(w.start >= window_.start && w.end <= window_.end, "restriction outside signal window");
    auto first = values_.begin() + (w.start - window_.start);
    return Signal(w, std::vector<cplx>(first, first + w.length()), bound_);
  }

  Signal conj() const {
    std::vector<cplx> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [](cplx z) { return std::conj(z); });
    return Signal(window_, std::move(v), bound_);
  }

  Signal scaled(cplx c) const {
    std::vector<cplx> v(values_.size());
    std::transform(values_.begin(), values_.end(), v.begin(), [c](cplx z) { return c * z; });
    std::optional<double> b;
    if (bound_) b = *bound_ * std::abs(c);
    return Signal(window_, std::move(v), b);
  }

  /// Drops the declared bound.
  Signal unbounded() const { return Signal(window_, values_); }

  friend Signal operator+(const Signal& a, const Signal& b) { return combine(a, b, std::plus<>{}); }
  friend Signal operator-(const Signal& a, const Signal& b) { return combine(a, b, std::minus<>{}); }
  friend Signal operator*(const Signal& a, const Signal& b) {
    return combine(a, b, std::multiplies<>{});
  }

 private:
  template <typename Op>
  static Signal combine(const Signal& a, const Signal& b, Op op) {
    require(a.window_ == b.window_, "pointwise operation requires identical windows");
    std::vector<cplx> v(a.values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(a.values_[i], b.values_[i]);
    return Signal(a.window_, std::move(v));
  }

  Window window_;
  std::vector<cplx> values_;
  std::optional<double> bound_;
};

/// (1/|window|) * sum of the values.
inline cplx window_mean(const Signal& a) { return pairwise_mean(a.span()); }

namespace detail {

/// max over length-L subwindows of |mean|, for real or complex data.
template <typename T>
double max_subwindow_mean_abs(std::span<const T> xs, std::int64_t L) {
  const auto n = static_cast<std::int64_t>(xs.size());
  if (L > n) fail(ErrorKind::invalid_argument, "scale too large");
  if (L == n) return std::abs(pairwise_mean(xs));
  using Acc = std::conditional_t<std::is_same_v<T, double>, long double, std::complex<long double>>;
  std::vector<Acc> prefix(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i < n; ++i) {
    prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + Acc(xs[static_cast<std::size_t>(i)]);
  }
  long double best = 0;
  for (std::int64_t s = 0; s + L <= n; ++s) {
    Acc diff = prefix[static_cast<std::size_t>(s + L)] - prefix[static_cast<std::size_t>(s)];
    best = std::max<long double>(best, std::abs(diff));
  }
  return static_cast<double>(best / static_cast<long double>(L));
}

}  // namespace detail

/// Max over all length-L subwindows of |subwindow mean|.
inline double uniform_cesaro_mean(const Signal& a, SubwindowScale scale) {
  return detail::max_subwindow_mean_abs(a.span(), scale.length);
}

/// sqrt of the max over length-L subwindows of the mean of |a|^2.
inline double density_seminorm(const Signal& a, SubwindowScale scale) {
  std::vector<double> sq(a.values().size());
  std::transform(a.values().begin(), a.values().end(), sq.begin(), [](cplx z) { return std::norm(z); });
  return std::sqrt(detail::max_subwindow_mean_abs(std::span<const double>(sq), scale.length));
}

/// Mean of a(n) * conj(b(n)) over the intersection of the two windows. The
/// scale only sets the minimum overlap.
inline cplx inner_product(const Signal& a, const Signal& b, SubwindowScale scale = SubwindowScale{}) {
  auto w = intersect(a.window(), b.window());
  if (!w) fail(ErrorKind::invalid_argument, "inner product of signals with disjoint windows");
  require(w->length() >= scale.length, "window intersection shorter than the subwindow scale");
  std::vector<cplx> prod(static_cast<std::size_t>(w->length()));
  for (std::int64_t n = w->start; n < w->end; ++n) {
    prod[static_cast<std::size_t>(n - w->start)] = a.at(n) * std::conj(b.at(n));
  }
  return pairwise_mean(std::span<const cplx>(prod));
}

/// n -> a(n+h) * conj(a(n)) on [M, N-h).
inline Signal multiplicative_derivative(const Signal& a, std::int64_t h) {
  require(h >= 1, "shift must be positive");
  if (h >= a.size()) fail(ErrorKind::invalid_argument, "shift " + std::to_string(h) + " >= window length");
  Window w(a.window().start, a.window().end - h);
  const auto& v = a.values();
  std::vector<cplx> out(static_cast<std::size_t>(w.length()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i + static_cast<std::size_t>(h)] * std::conj(v[i]);
  std::optional<double> b;
  if (a.bound()) b = *a.bound() * *a.bound();
  return Signal(w, std::move(out), b);
}

}  // namespace nilcorr
