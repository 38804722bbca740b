#pragma once

// JSON forms of systems, observables, queries, atoms and reports. Readers go
// through Fields, which reports the dotted path of the offending field and
// rejects keys it was not asked about.

#include <set>

#include <nlohmann/json.hpp>

#include "nilcorr/decomposition.hpp"
#include "nilcorr/experiments.hpp"

namespace nilcorr {

using json = nlohmann::json;

class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorKind::config, where() + ": expected an object");
  }

  std::string where() const { return path_.empty() ? "config" : "field '" + path_ + "'"; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    if (!has(key)) fail(ErrorKind::config, "missing field '" + child(key) + "'");
    return j_.at(key);
  }

  template <typename T>
  T req(const std::string& key) {
    return convert<T>(raw(key), child(key));
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    return has(key) ? req<T>(key) : fallback;
  }

  template <typename T>
  std::optional<T> opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return req<T>(key);
  }

  /// Fails on any key not queried so far.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(ErrorKind::config, "unknown field '" + child(it.key()) + "'");
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    auto bad = [&](const char* what) -> T { fail(ErrorKind::config, "field '" + path + "': expected " + what); };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return bad("a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return bad("a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, cplx>) {
      if (v.is_number()) return cplx(v.get<double>(), 0.0);
      if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return cplx(v[0].get<double>(), v[1].get<double>());
      return bad("a number or [re, im]");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return bad("an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<std::int64_t>() < 0) return bad("a nonnegative integer");
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return bad("a number");
      return v.get<T>();
    } else {
      // std::vector<U>
      using U = typename T::value_type;
      if (!v.is_array()) return bad("an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<U>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

// ----------------------------------------------------------------------
// Systems, observables, queries
// ----------------------------------------------------------------------

inline json to_json(const TrigObservable& f) {
  json terms = json::array();
  for (const auto& t : f.terms) terms.push_back({{"freq", t.freq}, {"coeff", complex_json(t.coeff)}});
  return {{"terms", terms}};
}

inline TrigObservable observable_from_json(const json& j, const std::string& path) {
  Fields f(j, path);
  TrigObservable obs;
  const json& terms = f.raw("terms");
  if (!terms.is_array()) fail(ErrorKind::config, "field '" + f.child("terms") + "': expected an array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    Fields t(terms[i], f.child("terms") + "[" + std::to_string(i) + "]");
    obs.terms.push_back(TrigTerm{t.req<std::vector<std::int64_t>>("freq"), t.get<cplx>("coeff", 1.0)});
    t.finish();
  }
  f.finish();
  return obs;
}

inline json to_json(const AffineToralSystem& s) {
  json maps = json::array();
  for (const auto& m : s.maps) {
    json rows = json::array();
    for (int r = 0; r < m.matrix.dim(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.matrix.dim(); ++c) row.push_back(m.matrix(r, c));
      rows.push_back(row);
    }
    maps.push_back({{"matrix", rows}, {"shift", m.shift}});
  }
  return {{"dim", s.dim}, {"maps", maps}};
}

inline AffineToralSystem system_from_json(const json& j, const std::string& path) {
  Fields f(j, path);
  AffineToralSystem s{f.req<int>("dim"), {}};
  if (s.dim < 1 || s.dim > 8) fail(ErrorKind::config, "field '" + f.child("dim") + "': must be in [1, 8]");
  const json& maps = f.raw("maps");
  if (!maps.is_array()) fail(ErrorKind::config, "field '" + f.child("maps") + "': expected an array");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    std::string mp = f.child("maps") + "[" + std::to_string(i) + "]";
    Fields m(maps[i], mp);
    auto rows = m.req<std::vector<std::vector<std::int64_t>>>("matrix");
    std::vector<std::int64_t> entries;
    if (rows.size() != static_cast<std::size_t>(s.dim))
      fail(ErrorKind::config, "field '" + mp + ".matrix': expected " + std::to_string(s.dim) + " rows");
    for (const auto& row : rows) {
      if (row.size() != static_cast<std::size_t>(s.dim))
        fail(ErrorKind::config, "field '" + mp + ".matrix': expected " + std::to_string(s.dim) + " columns");
      entries.insert(entries.end(), row.begin(), row.end());
    }
    s.maps.push_back(AffineMap{IntMatrix(s.dim, entries), m.req<std::vector<double>>("shift")});
    m.finish();
  }
  f.finish();
  auto rep = validate_system(s);
  if (!rep.ok) {
    std::string msg = "field '" + path + "': invalid system:";
    for (const auto& v : rep.violations) msg += " " + v + ";";
    fail(ErrorKind::config, msg);
  }
  return s;
}

inline json to_json(const CorrelationQuery& q) {
  json obs = json::array();
  for (const auto& o : q.observables) obs.push_back(to_json(o));
  json it = json::array();
  for (const auto& slot : q.iterates) {
    json row = json::array();
    for (const auto& p : slot) row.push_back(p.coeffs);
    it.push_back(row);
  }
  return {{"system", to_json(q.system)}, {"observables", obs}, {"iterates", it}};
}

/// "iterates" may be omitted, giving T_1^n f_1 ... T_l^n f_l.
inline CorrelationQuery query_from_json(const json& j, const std::string& path) {
  Fields f(j, path);
  auto sys = system_from_json(f.raw("system"), f.child("system"));
  std::vector<TrigObservable> obs;
  const json& oj = f.raw("observables");
  if (!oj.is_array()) fail(ErrorKind::config, "field '" + f.child("observables") + "': expected an array");
  for (std::size_t i = 0; i < oj.size(); ++i)
    obs.push_back(observable_from_json(oj[i], f.child("observables") + "[" + std::to_string(i) + "]"));
  CorrelationQuery q;
  if (f.has("iterates")) {
    q.system = std::move(sys);
    q.observables = std::move(obs);
    auto rows = f.req<std::vector<std::vector<std::vector<std::int64_t>>>>("iterates");
    for (auto& row : rows) {
      std::vector<IntPolynomial> slot;
      for (auto& c : row) slot.push_back(IntPolynomial{std::move(c)});
      q.iterates.push_back(std::move(slot));
    }
  } else {
    if (obs.size() != sys.maps.size())
      fail(ErrorKind::config, "field '" + f.child("observables") + "': need one observable per map");
    q = CorrelationQuery::linear(std::move(sys), std::move(obs));
  }
  f.finish();
  auto rep = validate_query(q);
  if (!rep.ok) {
    std::string msg = "field '" + path + "': invalid query:";
    for (const auto& v : rep.violations) msg += " " + v + ";";
    fail(ErrorKind::config, msg);
  }
  return q;
}

// ----------------------------------------------------------------------
// Atoms
// ----------------------------------------------------------------------

inline json to_json(const NilAtom& atom) {
  if (const auto* p = std::get_if<PolynomialPhase>(&atom)) return {{"kind", "polynomial"}, {"coeffs", p->coeffs}};
  if (const auto* b = std::get_if<BracketPhase>(&atom))
    return {{"kind", "bracket"}, {"gamma", b->gamma}, {"beta", b->beta}, {"alpha", b->alpha}, {"theta", b->theta}};
  const auto& h = std::get<HeisenbergOrbit>(atom);
  json out = {{"kind", "heisenberg"},
              {"g", {h.g.x, h.g.y, h.g.z}},
              {"k", {h.F.k1, h.F.k2, h.F.k3}}};
  if (h.F.continuity_caveat) out["continuity_caveat"] = true;
  return out;
}

inline NilAtom atom_from_json(const json& j, const std::string& path) {
  Fields f(j, path);
  auto kind = f.req<std::string>("kind");
  NilAtom atom;
  if (kind == "polynomial") {
    auto c = f.req<std::vector<double>>("coeffs");
    if (c.empty() || c.size() > 4) fail(ErrorKind::config, "field '" + f.child("coeffs") + "': need 1 to 4 coefficients");
    atom = PolynomialPhase{c};
  } else if (kind == "bracket") {
    atom = BracketPhase{f.get("gamma", 0.0), f.get("beta", 0.0), f.get("alpha", 0.0), f.get("theta", 0.0)};
  } else if (kind == "heisenberg") {
    auto g = f.req<std::vector<double>>("g");
    auto k = f.req<std::vector<std::int64_t>>("k");
    if (g.size() != 3) fail(ErrorKind::config, "field '" + f.child("g") + "': expected 3 coordinates");
    if (k.size() != 3) fail(ErrorKind::config, "field '" + f.child("k") + "': expected 3 frequencies");
    bool caveat = f.get("continuity_caveat", false);
    if (k[2] != 0 && !caveat)
      fail(ErrorKind::config, "field '" + f.child("k") + "': vertical frequency needs continuity_caveat = true");
    atom = HeisenbergOrbit{{g[0], g[1], g[2]}, {k[0], k[1], k[2], caveat}};
  } else {
    fail(ErrorKind::config, "field '" + f.child("kind") + "': unknown atom kind '" + kind + "'");
  }
  f.finish();
  return atom;
}

// ----------------------------------------------------------------------
// Reports
// ----------------------------------------------------------------------

inline json to_json(const GowersReport& r) {
  return {{"value", r.value}, {"order", r.order}, {"H", r.shifts}, {"L", r.scale}, {"per_level", r.per_level}};
}

inline json to_json(const VdcDefect& v) { return {{"lhs", v.lhs}, {"rhs", v.rhs}, {"defect", v.defect}}; }

inline json to_json(const AntiUniformity& a) {
  json j = {{"correlation", a.correlation}, {"bound", a.bound}, {"infinite", a.infinite}};
  j["ratio"] = a.infinite ? json(nullptr) : json(a.ratio);
  return j;
}

inline json to_json(const DecompositionReport& r) {
  json coeffs = json::array();
  for (auto c : r.coefficients) coeffs.push_back(complex_json(c));
  return {{"order", r.order},
          {"epsilon", r.epsilon},
          {"delta", r.delta},
          {"ridge", r.ridge},
          {"L", r.scale},
          {"atoms", r.atoms},
          {"coefficients", coeffs},
          {"err2", r.err2},
          {"err2_preclip", r.err2_preclip},
          {"errU", r.errU},
          {"errU_input", r.errU_input},
          {"errU_structured", r.errU_structured},
          {"clip_iterations", r.clip_iterations},
          {"max_atom_correlation", r.max_atom_correlation},
          {"residual_orthogonality", r.residual_orthogonality},
          {"orthogonality_within_2delta", r.orthogonality_within_2delta},
          {"err2_within_epsilon", r.err2_within_epsilon},
          {"clipped_points", r.clipped_points}};
}

inline json to_json(const ClassDistance& c) {
  return {{"distance", c.distance}, {"witness", c.witness}, {"evaluated", c.evaluated}};
}

inline json to_json(const SubsequenceTable& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.checkpoints.size(); ++i)
    rows.push_back({{"N", t.checkpoints[i]}, {"average", complex_json(t.averages[i])}});
  return {{"checkpoints", rows},
          {"max_successive_difference", t.max_successive_difference},
          {"growth_constant", t.growth_constant}};
}

}  // namespace nilcorr
