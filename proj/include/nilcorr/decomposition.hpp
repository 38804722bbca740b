#pragma once

// Structured/error split of a bounded sequence: least-squares projection onto
// the span of a finite nilsequence dictionary in the empirical inner product,
// followed by pointwise clipping to the closed unit disk.

#include <Eigen/Dense>

#include "nilcorr/nilmanifolds.hpp"
#include "nilcorr/uniformity.hpp"

namespace nilcorr {

struct DictionarySpec {
  int step = 1;
  int max_degree = 1;
  /// Grid resolution: coefficients j/Q, 0 <= j < Q.
  std::int64_t resolution = 64;
  bool brackets = false;
  /// Ridge parameter; unset selects 1e-8 * atom count.
  std::optional<double> ridge;
  std::size_t budget = 4096;

  static DictionarySpec defaults_for_step(int step) {
    DictionarySpec s;
    s.step = step;
    s.max_degree = step;
    s.resolution = step <= 1 ? 64 : 16;
    return s;
  }
};

inline std::size_t dictionary_size(const DictionarySpec& spec) {
  double count = std::pow(static_cast<double>(spec.resolution), spec.max_degree);
  if (spec.brackets) count += std::pow(static_cast<double>(spec.resolution - 1), 2);
  return count > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(count);
}

/// All phases e(sum_{j=1..deg} (c_j/Q) n^j) with c_j in [0, Q), enumerated
/// with c_1 varying fastest, then the bracket atoms e((b/Q) n floor(n a/Q))
/// for 1 <= a, b < Q when requested.
inline Dictionary build_dictionary(const DictionarySpec& spec, const Window& /*w*/) {
  require(spec.resolution >= 1, "resolution Q must be >= 1");
  require(spec.step >= 0 && spec.step <= 3, "step must be in [0, 3]");
  require(spec.max_degree >= 0 && spec.max_degree <= spec.step, "polynomial degree must not exceed the step");
  require(!spec.brackets || spec.step >= 2, "bracket atoms need step >= 2");
  std::size_t count = dictionary_size(spec);
  if (count > spec.budget)
    fail(ErrorKind::budget,
         "dictionary has " + std::to_string(count) + " atoms, budget is " + std::to_string(spec.budget));
  Dictionary dict;
  dict.step = spec.step;
  const auto Q = spec.resolution;
  const auto deg = static_cast<std::size_t>(spec.max_degree);
  std::vector<std::int64_t> c(deg, 0);
  while (true) {
    PolynomialPhase p;
    p.coeffs.assign(deg + 1, 0.0);
    for (std::size_t j = 0; j < deg; ++j) p.coeffs[j + 1] = static_cast<double>(c[j]) / static_cast<double>(Q);
    dict.atoms.emplace_back(std::move(p));
    std::size_t j = 0;
    while (j < deg && ++c[j] == Q) {
      c[j] = 0;
      ++j;
    }
    if (j == deg) break;
  }
  if (spec.brackets) {
    for (std::int64_t b = 1; b < Q; ++b)
      for (std::int64_t a = 1; a < Q; ++a)
        dict.atoms.emplace_back(BracketPhase{0.0, static_cast<double>(b) / static_cast<double>(Q),
                                             static_cast<double>(a) / static_cast<double>(Q), 0.0});
  }
  return dict;
}

inline double default_ridge(std::size_t atom_count) { return 1e-8 * static_cast<double>(atom_count); }

/// v if |v| <= 1, else v/|v|.
inline cplx clip_to_unit_disk(cplx v) {
  double r = std::abs(v);
  return r <= 1.0 ? v : v / r;
}

struct Projection {
  Signal structured;  // clipped
  Signal unclipped;
  std::vector<cplx> coefficients;
  std::size_t clipped_points = 0;
};

/// Minimizes mean|a - sum c_j psi_j|^2 + lambda |c|^2 over the window of a,
/// then clips the fit pointwise to the unit disk.
inline Projection project_and_clip(const Signal& a, const Dictionary& dict, double lambda,
                                   bool enforce_bound = true) {
  require(!dict.atoms.empty(), "dictionary is empty");
  require(lambda >= 0, "ridge parameter must be >= 0");
  if (enforce_bound && a.sup_norm() > 1.0 + Signal::bound_slack)
    fail(ErrorKind::invalid_argument, "projection requires |a(n)| <= 1");
  const auto K = dict.atoms.size();
  const Window w = a.window();
  std::vector<Signal> atoms(K);
  parallel_for(K, [&](std::size_t k) { atoms[k] = eval_nilsequence(dict.atoms[k], w); });

  // gram(j, k) = <psi_k, psi_j>, rhs(j) = <a, psi_j>.
  Eigen::MatrixXcd gram(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  Eigen::VectorXcd rhs(static_cast<Eigen::Index>(K));
  parallel_for(K, [&](std::size_t j) {
    for (std::size_t k = j; k < K; ++k) {
      cplx g = inner_product(atoms[k], atoms[j]);
      gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = g;
      gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = std::conj(g);
    }
    rhs(static_cast<Eigen::Index>(j)) = inner_product(a, atoms[j]);
  });
  for (std::size_t j = 0; j < K; ++j) {
    auto jj = static_cast<Eigen::Index>(j);
    gram(jj, jj) = cplx(gram(jj, jj).real() + lambda, 0.0);
  }
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
  const auto& D = ldlt.vectorD();
  double dmax = D.cwiseAbs().maxCoeff();
  double dmin = D.cwiseAbs().minCoeff();
  if (ldlt.info() != Eigen::Success || dmax <= 0 || dmin <= 1e-12 * dmax) {
    if (lambda == 0.0) fail(ErrorKind::numeric, "singular Gram matrix; use a ridge parameter lambda > 0");
    fail(ErrorKind::numeric, "Gram matrix is numerically singular even with ridge " + std::to_string(lambda));
  }
  Eigen::VectorXcd coef = ldlt.solve(rhs);

  Projection out;
  out.coefficients.assign(coef.data(), coef.data() + coef.size());
  std::vector<cplx> fit(static_cast<std::size_t>(w.length()));
  std::vector<cplx> clipped(fit.size());
  std::vector<cplx> terms(K);
  for (std::size_t i = 0; i < fit.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) terms[k] = out.coefficients[k] * atoms[k].values()[i];
    fit[i] = pairwise_sum(std::span<const cplx>(terms));
    clipped[i] = clip_to_unit_disk(fit[i]);
    if (clipped[i] != fit[i]) ++out.clipped_points;
  }
  out.unclipped = Signal(w, std::move(fit));
  out.structured = Signal(w, std::move(clipped), 1.0);
  return out;
}

struct DecomposeOptions {
  int order = 2;
  double epsilon = 0.1;
  DictionarySpec dictionary = DictionarySpec::defaults_for_step(1);
  /// Unset selects the given order with H = floor(sqrt(N)).
  std::optional<GowersParams> gowers;
  /// Scale for the density seminorm; unset selects the full window.
  std::optional<SubwindowScale> scale;
  /// Anti-uniformity constant C in delta = (eps / (4C))^(2^l).
  double anti_uniformity_constant = 4.0;
  /// Overrides the derived delta (needed for polynomial iterates, where C is
  /// unknown).
  std::optional<double> delta;
  /// Extra project-then-clip passes on the clipped residual (0 = single pass).
  int clip_iterations = 0;
};

struct DecompositionReport {
  std::vector<std::string> atoms;
  std::vector<cplx> coefficients;
  Signal a_st;
  Signal a_er;
  double err2 = 0;
  double err2_preclip = 0;
  double errU = 0;
  /// errU of a and of a_st, logged for the triangle-inequality diagnostic.
  double errU_input = 0;
  double errU_structured = 0;
  double max_atom_correlation = 0;
  /// max_k |<a - sum c_j psi_j, psi_k>| for the unclipped fit.
  double residual_orthogonality = 0;
  double delta = 0;
  bool orthogonality_within_2delta = false;
  bool err2_within_epsilon = false;
  std::size_t clipped_points = 0;
  int clip_iterations = 0;
  double ridge = 0;
  std::int64_t scale = 0;
  int order = 2;
  double epsilon = 0;
};

inline DecompositionReport decompose(const Signal& a, const DecomposeOptions& opt) {
  require(opt.order >= 1, "order must be >= 1");
  require(opt.epsilon > 0, "epsilon must be positive");
  if (a.sup_norm() > 1.0 + Signal::bound_slack) fail(ErrorKind::invalid_argument, "decompose requires |a(n)| <= 1");
  const Window w = a.window();
  Dictionary dict = build_dictionary(opt.dictionary, w);
  double lambda = opt.dictionary.ridge.value_or(default_ridge(dict.atoms.size()));
  require(opt.clip_iterations >= 0, "clip_iterations must be >= 0");
  Projection proj = project_and_clip(a, dict, lambda);
  SubwindowScale scale = opt.scale.value_or(SubwindowScale(w.length()));
  Signal residual = a - proj.unclipped;

  // Optional refinement: project the clipped residual and re-clip, keeping a
  // pass only if it lowers the clipped error.
  double best = density_seminorm(a - proj.structured, scale);
  for (int it = 0; it < opt.clip_iterations; ++it) {
    Projection step = project_and_clip((a - proj.structured).unbounded(), dict, lambda, false);
    std::vector<cplx> fit(static_cast<std::size_t>(w.length())), clipped(fit.size());
    std::size_t count = 0;
    for (std::size_t i = 0; i < fit.size(); ++i) {
      fit[i] = proj.structured.values()[i] + step.unclipped.values()[i];
      clipped[i] = clip_to_unit_disk(fit[i]);
      if (clipped[i] != fit[i]) ++count;
    }
    Signal candidate(w, std::move(clipped), 1.0);
    double e = density_seminorm(a - candidate, scale);
    if (!(e < best)) break;
    best = e;
    for (std::size_t k = 0; k < proj.coefficients.size(); ++k) proj.coefficients[k] += step.coefficients[k];
    proj.structured = std::move(candidate);
    proj.unclipped = Signal(w, std::move(fit));
    proj.clipped_points = count;
  }

  DecompositionReport r;
  r.order = opt.order;
  r.epsilon = opt.epsilon;
  r.ridge = lambda;
  r.scale = scale.length;
  for (const auto& atom : dict.atoms) r.atoms.push_back(describe(atom));
  r.coefficients = proj.coefficients;
  r.clipped_points = proj.clipped_points;
  r.a_st = proj.structured;
  r.a_er = (a - r.a_st).unbounded();
  r.clip_iterations = opt.clip_iterations;
  double e = density_seminorm(r.a_er, scale);
  r.err2 = e * e;
  double ep = density_seminorm(residual, scale);
  r.err2_preclip = ep * ep;
  const GowersParams gp = opt.gowers.value_or(GowersParams::with_default_shifts(opt.order, w.length()));
  r.errU = ghk_seminorm(r.a_er, gp).value;
  r.errU_input = ghk_seminorm(a, gp).value;
  r.errU_structured = ghk_seminorm(r.a_st, gp).value;

  std::vector<double> corr(dict.atoms.size()), orth(dict.atoms.size());
  parallel_for(dict.atoms.size(), [&](std::size_t k) {
    Signal psi = eval_nilsequence(dict.atoms[k], w);
    corr[k] = std::abs(inner_product(r.a_er, psi)) / std::max(1.0, density_seminorm(psi, scale));
    orth[k] = std::abs(inner_product(residual, psi));
  });
  r.max_atom_correlation = *std::max_element(corr.begin(), corr.end());
  r.residual_orthogonality = *std::max_element(orth.begin(), orth.end());
  r.delta = opt.delta.value_or(std::pow(opt.epsilon / (4.0 * opt.anti_uniformity_constant), std::ldexp(1.0, opt.order)));
  r.orthogonality_within_2delta = r.max_atom_correlation <= 2.0 * r.delta;
  r.err2_within_epsilon = r.err2 <= opt.epsilon;
  return r;
}

}  // namespace nilcorr
