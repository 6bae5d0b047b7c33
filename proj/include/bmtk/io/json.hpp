#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmtk/bm.hpp"
#include "bmtk/density.hpp"
#include "bmtk/error.hpp"
#include "bmtk/grid.hpp"
#include "bmtk/inner.hpp"
#include "bmtk/multiplier.hpp"
#include "bmtk/verify.hpp"

namespace bmtk::io {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

// ---------------------------------------------------------------- input

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, path + ": " + e.what());
  }
}

struct Columns {
  std::vector<double> x, y;
};

/// Two numeric columns separated by a comma or whitespace; blank lines, '#' comments and a header line are skipped.
inline Columns read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path);
  Columns c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t' || ch == '\r') ch = ' ';
    auto first = line.find_first_not_of(' ');
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string a, b;
    ss >> a >> b;
    char* end = nullptr;
    double x = std::strtod(a.c_str(), &end);
    bool ok = end && *end == '\0';
    double y = std::strtod(b.c_str(), &end);
    ok = ok && !b.empty() && end && *end == '\0';
    if (!ok) {
      if (c.x.empty() && lineno == 1) continue;  // header
      fail(ErrorKind::InvalidInput, path + ":" + std::to_string(lineno) + ": expected two numbers");
    }
    c.x.push_back(x);
    c.y.push_back(y);
  }
  if (c.x.size() < 2) fail(ErrorKind::InvalidInput, path + ": need at least two rows");
  return c;
}

inline PhaseFunction read_phase(const std::string& path, double kappa) {
  auto c = read_csv(path);
  return PhaseFunction::from_samples(std::move(c.x), std::move(c.y), kappa);
}

/// Without tail exponents the function is compactly supported on the sampled span.
inline SampledFunction read_sampled(const std::string& path, std::optional<double> p_plus = {}, std::optional<double> p_minus = {}) {
  auto c = read_csv(path);
  if (!p_plus && !p_minus) return SampledFunction::compact(std::move(c.x), std::move(c.y));
  return SampledFunction::with_tails(std::move(c.x), std::move(c.y), p_plus.value_or(-2.0), p_minus.value_or(-2.0));
}

/// {"points": [x | [re, im], ...], "multiplicity": [...], "window": W, "tail_density": d}
/// or {"arithmetic": {"step": s, "count": n}}.
inline PointSequence sequence_from_json(const json& j) {
  try {
    if (j.contains("arithmetic")) return arithmetic_sequence(j["arithmetic"].at("step").get<double>(), j["arithmetic"].at("count").get<std::size_t>());
    std::vector<cplx> pts;
    for (const auto& p : j.at("points")) {
      if (p.is_number()) pts.emplace_back(p.get<double>(), 0.0);
      else if (p.is_array() && p.size() == 2) pts.emplace_back(p[0].get<double>(), p[1].get<double>());
      else fail(ErrorKind::InvalidInput, "a point is a number or a [re, im] pair");
    }
    std::vector<std::size_t> mult;
    if (j.contains("multiplicity")) mult = j["multiplicity"].get<std::vector<std::size_t>>();
    double window = j.at("window").get<double>();
    std::optional<double> tail;
    if (j.contains("tail_density") && !j["tail_density"].is_null()) tail = j["tail_density"].get<double>();
    return PointSequence(std::move(pts), std::move(mult), window, tail);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("point sequence: ") + e.what());
  }
}

inline ProbeThresholds probe_thresholds_from_json(const json& j) {
  ProbeThresholds t;
  t.decay_floor = j.value("decay_floor", t.decay_floor);
  t.stall_floor = j.value("stall_floor", t.stall_floor);
  t.condition_limit = j.value("condition_limit", t.condition_limit);
  if (!(t.decay_floor > 0.0) || !(t.stall_floor > t.decay_floor) || !(t.condition_limit > 1.0))
    fail(ErrorKind::InvalidInput, "inconsistent probe thresholds");
  return t;
}

inline ProbeThresholds load_probe_thresholds(const std::string& path) { return probe_thresholds_from_json(read_json_file(path)); }

// ---------------------------------------------------------------- output

/// Non-finite numbers become null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline json to_json(const IntervalFamily& f) {
  json a = json::array();
  for (const auto& l : f) a.push_back(json::array({num(l.a), num(l.b)}));
  return a;
}

inline json to_json(const DivergenceVerdict& v) {
  return {{"verdict", to_string(v.kind)}, {"sum", num(v.sum)},         {"fitted_growth", num(v.fitted_growth)},
          {"tails_ok", v.tails_ok},        {"windows", nums(v.windows)}, {"partial_sums", nums(v.partial_sums)}};
}

inline json to_json(const CriticalValue& c) {
  json j = {{"c", num(c.value)},
            {"bracket", json::array({num(c.divergent_edge), num(c.convergent_edge)})},
            {"undetermined", c.undetermined},
            {"evaluations", c.evaluations}};
  if (c.undetermined) j["undetermined_range"] = json::array({num(c.undetermined_lo), num(c.undetermined_hi)});
  return j;
}

inline json to_json(const WindowedDensity& d) {
  return {{"value", num(d.value)},   {"window", num(d.window)},     {"radii", nums(d.radii)},
          {"ratios", nums(d.ratios)}, {"scales", nums(d.scales)}, {"uniform", nums(d.uniform)},
          {"from_tail_model", d.from_tail_model}};
}

inline json to_json(const EffectiveDensity& e) {
  return {{"value", num(e.value)},
          {"bracket", json::array({num(e.lower), num(e.upper)})},
          {"window", num(e.window)},
          {"critical", to_json(e.critical)},
          {"certificate",
           {{"density", num(e.certificate.density)}, {"sum", num(e.certificate.sum)}, {"intervals", to_json(e.certificate.family)}}}};
}

inline json to_json(const RadiusReport& r) {
  return {{"radius", num(r.radius)},
          {"radius_infinite", std::isinf(r.radius)},
          {"effective_density", num(r.effective_density)},
          {"blaschke", {{"sum", num(r.blaschke.sum)}, {"convergent", r.blaschke.convergent}, {"series", to_json(r.blaschke.verdict)}}}};
}

inline json to_json(const KreinShift& k) {
  return {{"a", nums(k.A)}, {"b", nums(k.B)}, {"c", num(k.c)}, {"log_scale", num(k.log_scale)}};
}

inline json to_json(const ClarkMasses& m) {
  return {{"alphas", nums(m.alphas)},
          {"betas", nums(m.betas)},
          {"deltas", nums(m.deltas)},
          {"alpha_ratio", json::array({num(m.alpha_ratio_min), num(m.alpha_ratio_max)})},
          {"beta_ratio", json::array({num(m.beta_ratio_min), num(m.beta_ratio_max)})}};
}

inline json to_json(const PhaseInner& p) {
  return {{"model", to_json(p.model)},
          {"levels", p.model.A.size()},
          {"max_phase_gap", num(p.max_phase_gap)},
          {"ratio", json::array({num(p.ratio_min), num(p.ratio_max)})},
          {"window", num(p.window)},
          {"first_index", p.first_index}};
}

inline json to_json(const ObstacleSolution& s) {
  return {{"objective", num(s.objective)},   {"kkt_max_violation", num(s.kkt_max_violation)},
          {"active_set", to_json(s.active_set)}, {"iterations", s.iterations},
          {"converged", s.converged}};
}

inline json to_json(const MultiplierWitness& w) {
  return {{"solution", to_json(w.solution)},
          {"pi_norm", num(w.pi_norm)},
          {"min_excess", num(w.min_excess)},
          {"lipschitz_margin", num(w.lipschitz_margin)},
          {"window", num(w.window)}};
}

inline json to_json(const DirichletMembership& m) {
  return {{"norm", num(m.norm)}, {"half_norm", num(m.half_norm)}, {"finite", m.finite}};
}

inline json to_json(const ProbeReport& r) {
  json j;
  j["parameter"] = num(r.parameter);
  j["sizes"] = r.sizes;
  j["values"] = nums(r.values);
  j["verdict"] = std::string(to_string(r.verdict));
  j["fitted_slope"] = num(r.fitted_slope);
  if (!r.conditions.empty()) {
    j["conditions"] = nums(r.conditions);
    j["ill_conditioned"] = r.ill_conditioned;
  }
  return j;
}

inline json to_json(const DecayReport& r) {
  return {{"verdict", std::string(to_string(r.verdict))},
          {"X", nums(r.X)},
          {"profile", nums(r.profile)},
          {"shells", nums(r.shells)},
          {"hypothesis_max", num(r.hypothesis_max)}};
}

inline json to_json(const SubexpReport& r) {
  return {{"points", r.points}, {"max_mismatch", num(r.max_mismatch)}, {"at_plus_one", num(r.at_plus_one)}, {"at_minus_one", num(r.at_minus_one)}};
}

}  // namespace bmtk::io
