#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spm.hpp"
#include "spm/scenario_io.hpp"

namespace spm::cli {

enum ExitCode : int { ok = 0, invalid_input = 1, verdict_failed = 2, io_failure = 3 };

/// 17 significant digits, so that equal doubles print identically.
inline std::string num17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  const std::size_t n = traj.stages();
  os << "t,S";
  for (std::size_t j = 1; j <= n; ++j) os << ",I" << j;
  os << ",R,Z,phi\n";
  for (std::size_t t = 0; t < traj.size(); ++t) {
    os << t << ',' << num17(traj.S(t));
    for (std::size_t j = 0; j < n; ++j) os << ',' << num17(traj.I(t, j));
    os << ',' << num17(traj.R(t)) << ',' << num17(traj.Z(t)) << ',' << num17(traj.incidence().value(traj.I(t)))
       << '\n';
  }
}

/// Two-column "t Z" text for external plotting.
inline void write_plot_data(const Trajectory& traj, std::ostream& os) {
  os << "# t Z\n";
  for (std::size_t t = 0; t < traj.size(); ++t) os << t << ' ' << num17(traj.Z(t)) << '\n';
}

inline std::string simulation_summary(const Trajectory& traj) {
  std::ostringstream os;
  os << "S_inf = " << num17(traj.final_susceptibles()) << '\n'
     << "stop = " << to_string(traj.stop_reason()) << '\n'
     << "steps = " << traj.horizon() << '\n';
  return os.str();
}

using nlohmann::json;

namespace detail {

inline json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

inline json optional_json(const std::optional<std::size_t>& x) { return x ? json(*x) : json(nullptr); }

/// Runs one analysis; a thrown error marks it inapplicable instead of failing the report.
template <class F>
json guarded(F&& f) {
  try {
    json j = f();
    if (!j.contains("applicable")) j["applicable"] = true;
    return j;
  } catch (const std::exception& e) {
    return json{{"applicable", false}, {"reason", e.what()}};
  }
}

inline json validation_json(const ValidationReport& rep) {
  json conditions = json::array();
  for (const auto& c : rep.conditions) conditions.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"family", rep.family},
          {"analytic", rep.analytic},
          {"points_sampled", rep.points_sampled},
          {"passed", rep.passed()},
          {"conditions", conditions}};
}

}  // namespace detail

inline json validate_report(const Scenario& s, std::size_t grid_density = 20) {
  json out = detail::validation_json(validate_hypothesis_H(s.incidence, grid_density));
  out["label"] = s.label;
  return out;
}

inline json analyze(const Scenario& s) {
  const std::size_t n = s.params.stages();
  const double N = s.params.population();
  json report;
  report["label"] = s.label;
  report["family"] = s.incidence.family_name();
  report["n"] = n;
  report["N"] = N;
  const double delta = transmission_delta(s.params, s.incidence);
  report["delta"] = delta;
  report["R0"] = N * delta;
  report["nrv"] = detail::guarded([&] {
    return json{{"value", nrv(build_B(N, s.params, s.incidence.r()))}, {"matrix", "B(N)"}};
  });
  report["hypothesis"] = detail::validation_json(validate_hypothesis_H(s.incidence, 20));

  const auto bounds = final_size_bounds(s);
  report["bounds"] = {{"lower", {{"value", detail::optional_json(bounds.lower)}, {"reason", bounds.lower_reason}}},
                      {"upper", {{"value", detail::optional_json(bounds.upper)}, {"reason", bounds.upper_reason}}}};

  const Trajectory traj = s.run();
  const double S_inf = traj.final_susceptibles();
  report["simulation"] = {{"S_inf", S_inf}, {"stop", to_string(traj.stop_reason())}, {"steps", traj.horizon()}};
  report["final_size_equation"] = detail::guarded([&] {
    const auto root = final_size_equation_solve(s);
    return json{{"S_inf", root.S_inf}, {"iterations", root.iterations}, {"difference_from_simulation", root.S_inf - S_inf}};
  });
  report["perron"] = detail::guarded([&] {
    const auto p = perron(build_B(S_inf, s.params, s.incidence.r()));
    return json{{"matrix", "B(S_inf)"}, {"rho", p.rho}, {"v", p.v}, {"iterations", p.iterations}};
  });
  report["limit_direction"] = detail::guarded([&] {
    const auto deep = s.run(underflow_stopping(N));
    const auto ld = limit_direction(deep);
    return json{{"time", ld.time},
                {"direction", ld.direction},
                {"perron_distance", ld.perron_distance},
                {"max_ratio_error", ld.max_ratio_error}};
  });
  report["tail_sum"] = detail::guarded([&] {
    if (traj.stop_reason() != StopReason::converged) throw std::runtime_error("trajectory did not converge");
    json rows = json::array();
    double worst = 0.0;
    for (std::size_t t0 : {std::size_t{0}, n, 2 * n}) {
      if (t0 > traj.horizon()) continue;
      const auto rep = tail_sum_check(traj, t0);
      worst = std::max(worst, rep.max_relative_error);
      rows.push_back({{"t0", t0}, {"max_relative_error", rep.max_relative_error}});
    }
    return json{{"checks", rows}, {"max_relative_error", worst}};
  });
  const auto onset = monotonicity_onset(traj);
  report["monotonicity"] = {{"onset", detail::optional_json(onset.onset)},
                            {"violations", onset.violations},
                            {"persistent", onset.persistent()}};

  const auto Z = prevalence_series(traj);
  const auto shape = classify_shape(Z);
  report["prevalence"] = {{"shape", to_string(shape.classification)},
                          {"peak_times", shape.peak_times},
                          {"initial_rise", shape.initial_rise},
                          {"rise_then_fall", shape.rise_then_fall()},
                          {"balance_residual", prevalence_balance_residual(traj)}};

  json predicates;
  predicates["initial_rise_general"] = detail::guarded([&] {
    const auto p = initial_rise_predicate_general(s);
    json j{{"applicable", p.predicted.has_value()}, {"observed", p.observed}, {"reason", p.reason}};
    if (p.predicted) {
      j["predicted"] = *p.predicted;
      j["threshold"] = p.threshold;
    }
    return j;
  });
  predicates["threshold_decay"] = detail::guarded([&] {
    const auto d = threshold_decay_predicate(traj);
    return json{{"holds_from", detail::optional_json(d.holds_from)}, {"violations", d.violations}};
  });
  predicates["outbreak"] = detail::guarded([&] {
    const auto o = outbreak_predicate_lastclass(s);
    return json{{"applicable", o.applicable},
                {"rise", o.rise},
                {"eta_witness", detail::optional_json(o.eta_witness)},
                {"halvings", o.halvings},
                {"reason", o.reason}};
  });
  predicates["saturation_condition"] = detail::guarded([&] {
    const auto c = saturation_condition_check(s.incidence);
    json j{{"holds", c.holds}, {"analytic", c.analytic}, {"counterexample", detail::optional_json(c.counterexample)}};
    if (c.holds) {
      const auto p = decrease_persistence(traj);
      j["first_decrease"] = detail::optional_json(p.first_decrease);
      j["later_rises"] = p.violations;
    }
    return j;
  });
  report["predicates"] = predicates;
  return report;
}

/// "linspace:a:b:k" or a comma-separated list of values.
inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.rfind("linspace:", 0) == 0) {
    const auto parts = spm::detail::parse_vector(
        [&] {
          std::string t = text.substr(9);
          std::replace(t.begin(), t.end(), ':', ',');
          return t;
        }(),
        "grid");
    if (parts.size() != 3) throw ScenarioError("grid: linspace needs start:stop:count");
    const double count = parts[2];
    if (!(count >= 1.0) || count != std::floor(count)) throw ScenarioError("grid: count must be a positive integer");
    const auto k = static_cast<std::size_t>(count);
    for (std::size_t i = 0; i < k; ++i) {
      grid.push_back(k == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * static_cast<double>(i) / static_cast<double>(k - 1));
    }
  } else if (!spm::detail::trim(text).empty()) {
    grid = spm::detail::parse_vector(text, "grid");
  }
  if (grid.empty()) throw ScenarioError("grid: no values given");
  return grid;
}

struct SweepRow {
  double value = 0.0;
  double R0 = 0.0;
  double S_inf = 0.0;
  double peak_Z = 0.0;
  std::size_t peak_time = 0;
  std::optional<std::size_t> onset;
  StopReason stop = StopReason::max_steps;
};

inline SweepRow sweep_point(const ScenarioDocument& base, const std::string& path, double value,
                            const std::optional<StoppingRule>& stopping) {
  ScenarioDocument doc = base;
  set_parameter(doc, path, value);
  Scenario s = from_document(doc);
  if (stopping) s.stopping = *stopping;
  const Trajectory traj = s.run();
  SweepRow row;
  row.value = value;
  row.R0 = r0(s.params, s.incidence);
  row.S_inf = traj.final_susceptibles();
  for (std::size_t t = 0; t < traj.size(); ++t) {
    if (traj.Z(t) > row.peak_Z) {
      row.peak_Z = traj.Z(t);
      row.peak_time = t;
    }
  }
  row.onset = monotonicity_onset(traj).onset;
  row.stop = traj.stop_reason();
  return row;
}

/// Evaluates every grid point, possibly on several threads; rows come back in
/// grid order and do not depend on the thread count.
inline std::vector<SweepRow> sweep(const Scenario& base, const std::string& path, const std::vector<double>& grid,
                                   unsigned threads = 0, std::optional<StoppingRule> stopping = std::nullopt) {
  if (grid.empty()) throw ScenarioError("grid: no values given");
  const ScenarioDocument doc = to_document(base);
  {
    ScenarioDocument probe = doc;
    set_parameter(probe, path, grid.front());  // rejects unknown paths before any work
  }
  if (!stopping) stopping = base.stopping;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, grid.size()));

  std::vector<SweepRow> rows(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        rows[i] = sweep_point(doc, path, grid[i], stopping);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw ScenarioError("grid point " + std::to_string(i + 1) + " (" + path + " = " + num17(grid[i]) + "): " + e.what());
    }
  }
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "value,R0,S_inf,peak_Z,peak_time,onset,stop\n";
  for (const auto& r : rows) {
    os << num17(r.value) << ',' << num17(r.R0) << ',' << num17(r.S_inf) << ',' << num17(r.peak_Z) << ',' << r.peak_time
       << ',' << (r.onset ? std::to_string(*r.onset) : std::string()) << ',' << to_string(r.stop) << '\n';
  }
}

struct FigureVerdict {
  std::string label;
  bool pass = false;
  std::string reason;
};

/// Qualitative claim of each figure: Fig. 2 panels have R0 < 1 with a
/// prevalence that is not monotonically decreasing; Fig. 3 panels have
/// R0 > 1 with a prevalence that does not simply rise and then fall.
inline FigureVerdict figure_verdict(const Scenario& s, const Trajectory& traj) {
  FigureVerdict v;
  v.label = s.label;
  const double R0 = r0(s.params, s.incidence);
  const auto Z = prevalence_series(traj);
  const auto shape = classify_shape(Z);
  bool rises = false;
  for (std::size_t t = 0; t + 1 < Z.size(); ++t) rises = rises || Z[t + 1] > Z[t];
  std::ostringstream why;
  why << "R0=" << num17(R0) << " shape=" << to_string(shape.classification) << " initial_rise=" << shape.initial_rise
      << " peaks=" << shape.peak_times.size();
  if (s.label.rfind("fig2", 0) == 0) {
    v.pass = R0 < 1.0 && rises;
    why << (v.pass ? "; R0 < 1 and Z not monotone" : "; expected R0 < 1 and Z not monotone");
  } else {
    v.pass = R0 > 1.0 && !shape.rise_then_fall();
    why << (v.pass ? "; R0 > 1 and Z is not rise-then-fall" : "; expected R0 > 1 and Z not rise-then-fall");
  }
  if (traj.stop_reason() != StopReason::converged) {
    v.pass = false;
    why << "; trajectory did not converge";
  }
  v.reason = why.str();
  return v;
}

/// Writes <label>.csv, <label>.dat and verdicts.txt into `dir`. Returns the
/// verdicts; I/O problems throw IoError.
inline std::vector<FigureVerdict> reproduce_figures(const std::filesystem::path& dir,
                                                    std::optional<StoppingRule> stopping = std::nullopt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": " + ec.message());
  const auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError(p.string() + ": cannot open for writing");
    return f;
  };
  std::vector<FigureVerdict> verdicts;
  for (auto& s : figure_scenarios()) {
    if (stopping) s.stopping = *stopping;
    const Trajectory traj = s.run();
    {
      auto f = open(dir / (s.label + ".csv"));
      write_trajectory_csv(traj, f);
      if (!f) throw IoError((dir / (s.label + ".csv")).string() + ": write failed");
    }
    {
      auto f = open(dir / (s.label + ".dat"));
      write_plot_data(traj, f);
      if (!f) throw IoError((dir / (s.label + ".dat")).string() + ": write failed");
    }
    verdicts.push_back(figure_verdict(s, traj));
  }
  auto f = open(dir / "verdicts.txt");
  for (const auto& v : verdicts) f << v.label << ' ' << (v.pass ? "PASS" : "FAIL") << ' ' << v.reason << '\n';
  if (!f) throw IoError((dir / "verdicts.txt").string() + ": write failed");
  return verdicts;
}

}  // namespace spm::cli
