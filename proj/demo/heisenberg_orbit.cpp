// Orbit of a Heisenberg element on the quotient: prints the reduced points
// and the horizontal/vertical character values along the first few steps,
// then the empirical mean of a vertical character over a long orbit.

#include <cstdio>

#include "nilcorr/nilmanifolds.hpp"

using namespace nilcorr;

int main() {
  const HeisenbergElement g{std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0, 0.1};
  std::printf("n,x,y,z,lattice_x,lattice_y,lattice_z\n");
  for (std::int64_t n = 0; n < 12; ++n) {
    auto r = heis_reduce(heis_pow(g, n));
    std::printf("%lld,%.12f,%.12f,%.12f,%g,%g,%g\n", static_cast<long long>(n), r.representative.x,
                r.representative.y, r.representative.z, r.lattice.x, r.lattice.y, r.lattice.z);
  }

  const Window w(0, 1 << 16);
  HeisenbergOrbit horizontal{g, HeisObservable{1, 0, 0, false}};
  HeisenbergOrbit vertical{g, HeisObservable{0, 0, 1, true}};
  std::printf("\nmean of e(x) along the orbit:  %.3e\n", std::abs(window_mean(eval_nilsequence(horizontal, w))));
  std::printf("mean of e(z) along the orbit:  %.3e  (fundamental-domain function, caveat flag set)\n",
              std::abs(window_mean(eval_nilsequence(vertical, w))));
}
