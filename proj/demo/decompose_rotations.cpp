// Structured/error split of a commuting-rotations correlation sequence plus
// noise, against linear-phase dictionaries of growing resolution.

#include <cstdio>

#include "nilcorr/decomposition.hpp"

using namespace nilcorr;

int main() {
  const Window w(0, 4096);
  const double alpha = std::sqrt(2.0) - 1.0, beta = std::sqrt(3.0) - 1.0;
  AffineToralSystem sys{1, {AffineToralSystem::rotation({alpha}), AffineToralSystem::rotation({beta})}};
  auto q = CorrelationQuery::linear(sys, {TrigObservable::character({1}), TrigObservable::character({-1})});
  auto corr = correlate_exact(q, w);
  Rng rng(5);
  auto a = Signal::generate(w, [&](std::int64_t n) { return 0.8 * corr.at(n) + 0.2 * rng.unimodular(); });

  std::printf("Q,err2,err2_preclip,errU,max_atom_correlation,clipped\n");
  for (std::int64_t Q : {4, 16, 64, 256}) {
    DecomposeOptions opt;
    opt.dictionary.resolution = Q;
    auto r = decompose(a, opt);
    std::printf("%lld,%.6f,%.6f,%.6f,%.3e,%zu\n", static_cast<long long>(Q), r.err2, r.err2_preclip, r.errU,
                r.max_atom_correlation, r.clipped_points);
  }
}
