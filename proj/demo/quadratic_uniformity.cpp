// Finite uniformity seminorms of e(sqrt(2) n^2) across window lengths, next
// to a linear phase and seeded noise for comparison.

#include <cstdio>

#include "nilcorr/uniformity.hpp"
#include "nilcorr/nilmanifolds.hpp"

using namespace nilcorr;

int main() {
  std::printf("N,order,quadratic,linear,noise\n");
  for (int e = 8; e <= 14; ++e) {
    const std::int64_t N = std::int64_t{1} << e;
    const Window w(0, N);
    auto quad = eval_nilsequence(PolynomialPhase{{0.0, 0.0, std::sqrt(2.0)}}, w);
    auto lin = eval_nilsequence(PolynomialPhase{{0.0, std::sqrt(2.0)}}, w);
    Rng rng(1);
    auto noise = Signal::generate(w, [&](std::int64_t) { return rng.unimodular(); });
    for (int l = 2; l <= 3; ++l) {
      auto p = GowersParams::with_default_shifts(l, N);
      std::printf("%lld,%d,%.6f,%.6f,%.6f\n", static_cast<long long>(N), l, ghk_seminorm(quad, p).value,
                  ghk_seminorm(lin, p).value, ghk_seminorm(noise, p).value);
    }
  }
}
