#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bmtk/bm.hpp"
#include "bmtk/density.hpp"
#include "bmtk/hilbert.hpp"
#include "bmtk/inner.hpp"
#include "bmtk/io/json.hpp"
#include "bmtk/multiplier.hpp"
#include "bmtk/verify.hpp"

using namespace bmtk;
using io::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_numerical = 3;

enum class OutputMode { json, csv, both };

struct RunConfig {
  std::string command;
  double tol = 1e-6;
  double kkt_tol = 1e-4;
  double residual_floor = 1e-3;  // decay floor of the probes
  double stall_floor = 5e-2;
  double condition_limit = 1e14;
  double window = 0.0;  // 0: module default
  double kappa = 0.0;
  double eps = 1.0;
  OutputMode mode = OutputMode::json;
  std::string out;
  std::size_t downsample = 0;

  void validate() const {
    if (!(tol > 0.0) || !(kkt_tol > 0.0) || !(residual_floor > 0.0) || !(stall_floor > residual_floor))
      fail(ErrorKind::InvalidInput, "tolerances must be positive and the stall floor above the residual floor");
    if (window != 0.0 && !(window > 1.0)) fail(ErrorKind::InvalidInput, "window must exceed 1");
    if (mode != OutputMode::json && out.empty()) fail(ErrorKind::InvalidInput, "CSV output needs --out");
  }
  ProbeThresholds thresholds() const { return {residual_floor, stall_floor, condition_limit}; }
};

/// Defaults from a JSON file: keys tol, kkt_tol, residual_floor, stall_floor, condition_limit, window.
void apply_config_file(RunConfig& c, const std::string& path) {
  auto j = io::read_json_file(path);
  c.tol = j.value("tol", c.tol);
  c.kkt_tol = j.value("kkt_tol", c.kkt_tol);
  c.residual_floor = j.value("residual_floor", j.value("decay_floor", c.residual_floor));
  c.stall_floor = j.value("stall_floor", c.stall_floor);
  c.condition_limit = j.value("condition_limit", c.condition_limit);
  c.window = j.value("window", c.window);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct Outcome {
  json result;
  std::optional<Table> table;
  bool numerical_failure = false;  // report is complete but a certificate did not close
  std::string failure;
};

void write_csv(const Table& t, const std::string& path, std::size_t downsample) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write " + path);
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  std::size_t stride = 1;
  if (downsample > 0 && t.rows.size() > downsample) stride = (t.rows.size() + downsample - 1) / downsample;
  char buf[32];
  for (std::size_t r = 0; r < t.rows.size(); r += stride) {
    for (std::size_t i = 0; i < t.rows[r].size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t.rows[r][i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

std::vector<std::size_t> parse_sizes(const std::vector<std::size_t>& v) {
  if (v.empty()) fail(ErrorKind::InvalidInput, "--sizes is required");
  return v;
}

Table interval_table(const IntervalFamily& f) {
  Table t{{"a", "b"}, {}};
  for (const auto& l : f) t.rows.push_back({l.a, l.b});
  return t;
}

Table report_table(const ProbeReport& r) {
  Table t{{"N", "value"}, {}};
  for (std::size_t i = 0; i < r.sizes.size(); ++i) t.rows.push_back({static_cast<double>(r.sizes[i]), r.values[i]});
  return t;
}

int emit(const json& envelope, int code) {
  std::cout << envelope.dump(2) << '\n';
  return code;
}

json envelope(const std::string& command) { return {{"schema_version", io::schema_version}, {"command", command}}; }

int error_exit(const RunConfig& cfg, ErrorKind kind, const std::string& message, const json& partial = nullptr) {
  auto e = envelope(cfg.command);
  e["error"] = std::string(to_string(kind));
  e["message"] = message;
  if (!partial.is_null()) e["result"] = partial;
  bool numerical = kind == ErrorKind::NonConvergence || kind == ErrorKind::NoBracket || kind == ErrorKind::IllConditioned;
  return emit(e, numerical ? exit_numerical : exit_input);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bmtk: Beurling-Malliavin toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  std::string config_path;
  std::string mode = "json";
  if (const char* env = std::getenv("BMTK_CONFIG")) config_path = env;
  app.add_option("--config", config_path, "JSON file with default tolerances (also BMTK_CONFIG)");
  app.add_option("--output", mode, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
  app.add_option("--out", cfg.out, "CSV path for plot data");
  app.add_option("--downsample", cfg.downsample, "keep at most this many CSV rows");

  // options shared by subcommands; explicit flags override the config file
  std::optional<double> tol, kkt_tol, floor_opt, stall_opt, window_opt, tail_plus, tail_minus;
  std::string gamma_path, sigma_path, lambda_path, h_path, w0_path, intervals_path, target_path, thresholds_path;
  std::vector<std::size_t> sizes;
  double a_param = 0.0, harness_a = 0.0, harness_constant = 1.0, x_min = 2.0;
  std::string variant = "kolmogorov";
  std::size_t max_iterations = 200, diagnostics = 400, resolution = 2000, rows_factor = 4, grid_n = 0;
  std::vector<double> grid_range;
  std::function<Outcome()> action;

  auto add_kappa = [&](CLI::App* s) { s->add_option("--kappa", cfg.kappa, "growth exponent"); };
  auto add_tol = [&](CLI::App* s) { s->add_option("--tol", tol, "tolerance"); };
  auto add_window = [&](CLI::App* s) { s->add_option("--window", window_opt, "window half-width"); };
  auto add_tails = [&](CLI::App* s) {
    s->add_option("--tail-plus", tail_plus, "power-law tail exponent at +infinity");
    s->add_option("--tail-minus", tail_minus, "power-law tail exponent at -infinity");
  };
  auto add_probe_floors = [&](CLI::App* s) {
    s->add_option("--sizes", sizes, "truncation sizes")->delimiter(',');
    s->add_option("--residual-floor", floor_opt, "decay floor");
    s->add_option("--stall-floor", stall_opt, "stall floor");
    s->add_option("--thresholds", thresholds_path, "JSON threshold file");
  };

  auto* intervals = app.add_subcommand("intervals", "BM intervals of a phase");
  intervals->add_option("--gamma", gamma_path, "phase CSV")->required();
  add_kappa(intervals);
  intervals->callback([&] {
    action = [&] {
      auto f = bm_intervals(io::read_phase(gamma_path, cfg.kappa));
      return Outcome{{{"intervals", io::to_json(f)}, {"count", f.size()}}, interval_table(f)};
    };
  });

  auto* test = app.add_subcommand("test", "(kappa)-almost-decreasing test");
  test->add_option("--gamma", gamma_path, "phase CSV")->required();
  add_kappa(test);
  test->callback([&] {
    action = [&] {
      auto v = almost_decreasing_test(io::read_phase(gamma_path, cfg.kappa), cfg.kappa);
      Table t{{"window", "partial_sum"}, {}};
      for (std::size_t i = 0; i < v.windows.size(); ++i) t.rows.push_back({v.windows[i], v.partial_sums[i]});
      return Outcome{io::to_json(v), t};
    };
  });

  auto* critical = app.add_subcommand("critical", "critical value c(gamma, sigma; kappa)");
  critical->add_option("--gamma", gamma_path, "phase CSV")->required();
  critical->add_option("--sigma", sigma_path, "phase CSV")->required();
  add_kappa(critical);
  add_tol(critical);
  critical->callback([&] {
    action = [&] {
      auto c = critical_value(io::read_phase(gamma_path, cfg.kappa), io::read_phase(sigma_path, cfg.kappa), cfg.kappa, cfg.tol);
      return Outcome{io::to_json(c), std::nullopt};
    };
  });

  auto* density = app.add_subcommand("density", "upper and effective density of a real sequence");
  density->add_option("--lambda", lambda_path, "sequence JSON")->required();
  add_tol(density);
  density->callback([&] {
    action = [&] {
      auto s = io::sequence_from_json(io::read_json_file(lambda_path));
      auto e = effective_density(s, cfg.tol);
      json r = {{"upper_density", io::to_json(upper_density(s))}, {"effective_density", io::to_json(e)}};
      return Outcome{r, interval_table(e.certificate.family)};
    };
  });

  auto* radius = app.add_subcommand("radius", "completeness radius");
  radius->add_option("--lambda", lambda_path, "sequence JSON")->required();
  add_tol(radius);
  radius->callback([&] {
    action = [&] {
      auto r = completeness_radius(io::sequence_from_json(io::read_json_file(lambda_path)), cfg.tol);
      return Outcome{io::to_json(r), std::nullopt};
    };
  });

  auto* hilbert = app.add_subcommand("hilbert", "conjugate function on the sample grid");
  hilbert->add_option("--function", h_path, "function CSV")->required();
  add_tails(hilbert);
  hilbert->callback([&] {
    action = [&] {
      auto h = io::read_sampled(h_path, tail_plus, tail_minus);
      auto r = hilbert_transform(h);
      const auto& v = r.values;
      Table t{{"x", "h", "conjugate"}, {}};
      for (std::size_t i = 0; i < v.size(); ++i) t.rows.push_back({v.xs()[i], h.ys()[i], v.ys()[i]});
      json j = {{"x", io::nums(v.xs())}, {"conjugate", io::nums(v.ys())}, {"low_confidence", r.low_confidence}};
      return Outcome{j, t};
    };
  });

  auto* inner = app.add_subcommand("inner", "inner-function constructors");
  inner->require_subcommand(1);
  inner->fallthrough();
  auto* krein = inner->add_subcommand("krein", "Krein shift from intertwining level sets");
  krein->add_option("--intervals", intervals_path, "JSON {\"a\": [...], \"b\": [...], \"c\": 0}")->required();
  krein->add_option("--grid", grid_range, "lo hi: argument table range")->expected(2);
  krein->add_option("--points", grid_n, "argument table size");
  krein->callback([&] {
    cfg.command = "inner krein";
    action = [&] {
      auto j = io::read_json_file(intervals_path);
      std::vector<double> A, B;
      double c = 0.0;
      try {
        A = j.at("a").get<std::vector<double>>();
        B = j.at("b").get<std::vector<double>>();
        c = j.value("c", 0.0);
      } catch (const json::exception& e) {
        fail(ErrorKind::InvalidInput, std::string("intervals: ") + e.what());
      }
      auto k = krein_shift(A, B, c);
      auto masses = clark_masses(k, A, B);
      InnerFunctionModel m = k;
      json limits = json::array();
      for (std::size_t n = 0; n < A.size(); ++n) {
        auto la = boundary_limit(m, A[n], 1e-4), lb = boundary_limit(m, B[n], 1e-4, false);
        limits.push_back(json::array({io::num(std::abs(la - 1.0)), io::num(std::abs(lb + 1.0))}));
      }
      json r = {{"model", io::to_json(k)}, {"clark", io::to_json(masses)}, {"boundary_error", limits}};
      std::optional<Table> t;
      if (!grid_range.empty()) {
        t = Table{{"x", "argument", "derivative"}, {}};
        for (double x : linspace(grid_range[0], grid_range[1], grid_n ? grid_n : 1001))
          if (!detail::is_level_point(k, x)) t->rows.push_back({x, krein_argument(k, x), krein_argument_derivative(k, x)});
      }
      return Outcome{r, t};
    };
  });
  auto* phase = inner->add_subcommand("phase", "meromorphic inner function with argument close to sigma");
  phase->add_option("--sigma", sigma_path, "phase CSV")->required();
  phase->add_option("--diagnostics", diagnostics, "diagnostic points");
  add_kappa(phase);
  phase->callback([&] {
    cfg.command = "inner phase";
    action = [&] {
      auto sigma = io::read_phase(sigma_path, cfg.kappa);
      auto p = phase_to_inner(sigma, diagnostics);
      Table t{{"a", "b"}, {}};
      for (std::size_t n = 0; n < p.model.A.size(); ++n) t.rows.push_back({p.model.A[n], p.model.B[n]});
      return Outcome{io::to_json(p), t};
    };
  });

  auto* multiplier = app.add_subcommand("multiplier", "Dirichlet-norm obstacle problem and multiplier witness");
  multiplier->add_option("--w0", w0_path, "obstacle CSV (compactly supported)")->required();
  multiplier->add_option("--eps", cfg.eps, "penalty weight");
  multiplier->add_option("--kkt-tol", kkt_tol, "KKT tolerance");
  multiplier->add_option("--max-iterations", max_iterations, "active-set iteration cap");
  add_kappa(multiplier);
  add_window(multiplier);
  multiplier->callback([&] {
    action = [&] {
      auto w0 = io::read_sampled(w0_path);
      auto w = multiplier_witness(w0, cfg.kappa, cfg.eps, {}, cfg.window, max_iterations);
      double kkt = kkt_check(w.solution, cfg.eps, cfg.kappa);
      auto dm = dirichlet_membership(w.w, cfg.kappa);
      json r = io::to_json(w);
      r["kkt_check"] = io::num(kkt);
      r["dirichlet"] = io::to_json(dm);
      Table t{{"x", "w0", "w"}, {}};
      for (std::size_t i = 0; i < w.w.size(); ++i) t.rows.push_back({w.w.xs()[i], w0(w.w.xs()[i]), w.w.ys()[i]});
      Outcome o{r, t};
      if (!w.solution.converged || !(kkt <= cfg.kkt_tol)) {
        o.numerical_failure = true;
        o.failure = "obstacle solution not certified within the KKT tolerance";
      }
      return o;
    };
  });

  auto* probe = app.add_subcommand("probe", "completeness and Toeplitz-kernel probes");
  probe->require_subcommand(1);
  probe->fallthrough();
  auto* gram = probe->add_subcommand("gram", "residual of a target against exponentials on (-a, a)");
  gram->add_option("--lambda", lambda_path, "sequence JSON")->required();
  gram->add_option("--a", a_param, "half-length")->required();
  gram->add_option("--target", target_path, "target CSV (default: triangle 1 - |x|/a)");
  add_probe_floors(gram);
  gram->callback([&] {
    cfg.command = "probe gram";
    action = [&] {
      auto s = io::sequence_from_json(io::read_json_file(lambda_path));
      auto target = target_path.empty() ? triangle_target(a_param) : io::read_sampled(target_path);
      auto r = gram_completeness_probe(s, a_param, parse_sizes(sizes), target, cfg.thresholds());
      return Outcome{io::to_json(r), report_table(r)};
    };
  });
  auto* toeplitz = probe->add_subcommand("toeplitz", "minimal singular values of truncated Toeplitz matrices");
  toeplitz->add_option("--gamma", gamma_path, "phase CSV")->required();
  toeplitz->add_option("--rows", rows_factor, "row factor of the tall truncation");
  add_kappa(toeplitz);
  add_probe_floors(toeplitz);
  toeplitz->callback([&] {
    cfg.command = "probe toeplitz";
    action = [&] {
      auto r = toeplitz_kernel_probe(io::read_phase(gamma_path, cfg.kappa), parse_sizes(sizes), cfg.thresholds(), rows_factor);
      return Outcome{io::to_json(r), report_table(r)};
    };
  });

  auto* harness = app.add_subcommand("harness", "decay harness and the sub-exponential example");
  harness->require_subcommand(1);
  harness->fallthrough();
  auto* lemma = harness->add_subcommand("lemma", "profile of |h~|/x^(kappa+1) over doubling X");
  lemma->add_option("--function", h_path, "function CSV")->required();
  lemma->add_option("--variant", variant, "kolmogorov, ko1 or weighted")->check(CLI::IsMember({"kolmogorov", "ko1", "weighted"}));
  lemma->add_option("--a", harness_a, "coefficient of x^-1 h~ (ko1)");
  lemma->add_option("--constant", harness_constant, "hypothesis constant");
  lemma->add_option("--x-min", x_min, "start of the profile");
  add_kappa(lemma);
  add_window(lemma);
  add_tails(lemma);
  lemma->callback([&] {
    cfg.command = "harness lemma";
    action = [&] {
      DecayOptions o;
      o.variant = variant == "ko1" ? DecayVariant::Ko1 : variant == "weighted" ? DecayVariant::Weighted : DecayVariant::Kolmogorov;
      o.a = harness_a;
      o.constant = harness_constant;
      o.x_min = x_min;
      o.window = cfg.window;
      auto r = lemma_decay_harness(io::read_sampled(h_path, tail_plus, tail_minus), cfg.kappa, o);
      Table t{{"X", "profile", "shell"}, {}};
      for (std::size_t i = 0; i < r.X.size(); ++i) t.rows.push_back({r.X[i], r.profile[i], r.shells[i]});
      return Outcome{io::to_json(r), t};
    };
  });
  auto* subexp = harness->add_subcommand("subexp", "arg(US) against -2 arg f for f = exp{-(1 + i) z^(1/4)}");
  subexp->add_option("--resolution", resolution, "points per side");
  subexp->callback([&] {
    cfg.command = "harness subexp";
    action = [&] { return Outcome{io::to_json(subexp_counterexample_check(resolution)), std::nullopt}; };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    cfg.command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    return error_exit(cfg, ErrorKind::InvalidInput, e.what());
  }
  if (cfg.command.empty()) cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    if (!thresholds_path.empty()) {
      auto t = io::load_probe_thresholds(thresholds_path);
      cfg.residual_floor = t.decay_floor;
      cfg.stall_floor = t.stall_floor;
      cfg.condition_limit = t.condition_limit;
    }
    if (tol) cfg.tol = *tol;
    if (kkt_tol) cfg.kkt_tol = *kkt_tol;
    if (floor_opt) cfg.residual_floor = *floor_opt;
    if (stall_opt) cfg.stall_floor = *stall_opt;
    if (window_opt) cfg.window = *window_opt;
    cfg.mode = mode == "csv" ? OutputMode::csv : mode == "both" ? OutputMode::both : OutputMode::json;
    cfg.validate();

    Outcome o = action();
    if (cfg.mode != OutputMode::json) {
      if (!o.table) fail(ErrorKind::InvalidInput, "no plot data for " + cfg.command);
      write_csv(*o.table, cfg.out, cfg.downsample);
    }
    if (o.numerical_failure) return error_exit(cfg, ErrorKind::NonConvergence, o.failure, o.result);
    if (cfg.mode == OutputMode::csv) return exit_ok;
    auto e = envelope(cfg.command);
    e["result"] = o.result;
    return emit(e, exit_ok);
  } catch (const Error& e) {
    return error_exit(cfg, e.kind(), e.what());
  } catch (const std::exception& e) {
    return error_exit(cfg, ErrorKind::InvalidInput, e.what());
  }
}
