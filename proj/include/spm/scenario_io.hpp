#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "spm/contacts.hpp"
#include "spm/hypothesis.hpp"
#include "spm/incidence.hpp"
#include "spm/model.hpp"
#include "spm/params.hpp"

// Scenario file format: line-oriented key = value pairs grouped in
// [sections]. '#' starts a comment. Vectors are comma separated.
//
//   label = fig2-left
//   [params]            N, gamma (n optional, must match gamma)
//   [incidence]         family = exponential | linear | split-exponential |
//                       last-class | contact | poisson, plus its parameters
//   [incidence.kernel]  per-contact probability for contact / poisson
//   [initial]           S, I, R
//   [stopping]          max_steps, eps_z, eps_s (absolute; optional)

namespace spm {

/// Malformed or invalid scenario; the message starts with the field path.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_vector(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_number(v[i]);
  }
  return out;
}

struct ScenarioSection {
  std::string name;  // "" for the top level
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  void set(const std::string& key, std::string value) {
    for (auto& [k, v] : entries) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    entries.emplace_back(key, std::move(value));
  }
};

/// Parsed but not yet interpreted scenario text. Order is preserved so that
/// formatting a parsed document reproduces it.
struct ScenarioDocument {
  std::vector<ScenarioSection> sections;

  const ScenarioSection* find(std::string_view name) const {
    for (const auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  ScenarioSection& section(const std::string& name) {
    for (auto& s : sections) {
      if (s.name == name) return s;
    }
    sections.push_back({name, {}});
    return sections.back();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::string join_path(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

inline double parse_number(std::string_view text, const std::string& path) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw ScenarioError(path + ": expected a number, got '" + std::string(text) + "'");
  }
  if (!std::isfinite(x)) throw ScenarioError(path + ": value must be finite");
  return x;
}

inline std::vector<double> parse_vector(std::string_view text, const std::string& path) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(parse_number(piece, path + "[" + std::to_string(out.size() + 1) + "]"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Reads keys from one section and complains about anything left unread.
class SectionReader {
 public:
  SectionReader(const ScenarioSection* section, std::string name) : section_(section), name_(std::move(name)) {
    if (section_) used_.assign(section_->entries.size(), false);
  }

  std::string path(const std::string& key) const { return join_path(name_, key); }

  std::optional<std::string> text(const std::string& key) {
    if (!section_) return std::nullopt;
    for (std::size_t i = 0; i < section_->entries.size(); ++i) {
      if (section_->entries[i].first == key) {
        used_[i] = true;
        return section_->entries[i].second;
      }
    }
    return std::nullopt;
  }

  std::string required_text(const std::string& key) {
    auto v = text(key);
    if (!v) throw ScenarioError(path(key) + ": missing");
    return *v;
  }

  double number(const std::string& key) { return parse_number(required_text(key), path(key)); }

  std::optional<double> optional_number(const std::string& key) {
    auto v = text(key);
    if (!v) return std::nullopt;
    return parse_number(*v, path(key));
  }

  std::vector<double> vector(const std::string& key) { return parse_vector(required_text(key), path(key)); }

  void finish() const {
    if (!section_) return;
    for (std::size_t i = 0; i < used_.size(); ++i) {
      if (!used_[i]) throw ScenarioError(path(section_->entries[i].first) + ": unknown key");
    }
  }

 private:
  const ScenarioSection* section_;
  std::string name_;
  std::vector<bool> used_;
};

inline void check_length(const std::vector<double>& v, std::size_t n, const std::string& path) {
  if (v.size() != n) {
    throw ScenarioError(path + ": expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  }
}

inline IncidenceModel read_incidence(const ScenarioDocument& doc, const std::string& name, std::size_t n, double N) {
  const ScenarioSection* section = doc.find(name);
  if (!section) throw ScenarioError(name + ": section missing");
  SectionReader in(section, name);
  const std::string family = std::string(trim(in.required_text("family")));
  try {
    std::optional<IncidenceModel> model;
    if (family == "exponential" || family == "linear") {
      auto beta = in.vector("beta");
      check_length(beta, n, in.path("beta"));
      model = family == "exponential" ? IncidenceModel::exponential(std::move(beta), N)
                                      : IncidenceModel::linear(std::move(beta), N);
    } else if (family == "split-exponential") {
      auto theta = in.vector("theta");
      auto beta = in.vector("beta");
      check_length(theta, n, in.path("theta"));
      check_length(beta, n, in.path("beta"));
      model = IncidenceModel::split_exponential(std::move(theta), std::move(beta), N);
    } else if (family == "last-class") {
      const std::string scalar = std::string(trim(in.required_text("scalar")));
      const double beta = in.number("beta");
      if (scalar == "linear") {
        model = IncidenceModel::last_class(n, ScalarIncidence::linear(beta), N);
      } else if (scalar == "exponential") {
        model = IncidenceModel::last_class(n, ScalarIncidence::exponential(beta), N);
      } else {
        throw ScenarioError(in.path("scalar") + ": expected linear or exponential, got '" + scalar + "'");
      }
    } else if (family == "contact") {
      auto p = in.vector("contacts");
      auto kernel = read_incidence(doc, name + ".kernel", n, N);
      ContactDistribution dist = [&] {
        try {
          return ContactDistribution::explicit_counts(std::move(p));
        } catch (const std::invalid_argument& e) {
          throw ScenarioError(in.path("contacts") + ": " + e.what());
        }
      }();
      model = IncidenceModel::contact_composed(std::move(kernel), std::move(dist));
    } else if (family == "poisson") {
      const double lambda = in.number("lambda");
      auto kernel = read_incidence(doc, name + ".kernel", n, N);
      if (!(lambda > 0.0)) throw ScenarioError(in.path("lambda") + ": must be positive");
      model = IncidenceModel::poisson_composed(lambda, std::move(kernel));
    } else {
      throw ScenarioError(in.path("family") + ": unknown family '" + family + "'");
    }
    in.finish();
    return *model;
  } catch (const std::invalid_argument& e) {
    // constructor messages already name the field relative to "incidence"
    std::string msg = e.what();
    if (msg.rfind("incidence", 0) == 0) msg = name + msg.substr(9);
    throw ScenarioError(msg);
  }
}

inline void write_incidence(ScenarioDocument& doc, const IncidenceModel& inc, const std::string& name) {
  ScenarioSection& out = doc.section(name);
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, family::Exponential>) {
          out.set("family", "exponential");
          out.set("beta", format_vector(f.beta));
        } else if constexpr (std::is_same_v<F, family::Linear>) {
          out.set("family", "linear");
          out.set("beta", format_vector(f.beta));
        } else if constexpr (std::is_same_v<F, family::SplitExponential>) {
          out.set("family", "split-exponential");
          out.set("theta", format_vector(f.theta));
          out.set("beta", format_vector(f.beta));
        } else if constexpr (std::is_same_v<F, family::LastClassOnly>) {
          if (f.phi.kind == ScalarIncidence::Kind::custom) {
            throw ScenarioError(name + ": custom scalar incidence cannot be written to a scenario file");
          }
          out.set("family", "last-class");
          out.set("scalar", f.phi.kind == ScalarIncidence::Kind::linear ? "linear" : "exponential");
          out.set("beta", format_number(f.phi.beta));
        } else if constexpr (std::is_same_v<F, family::ContactComposed>) {
          out.set("family", "contact");
          out.set("contacts", format_vector(f.contacts.probabilities()));
          write_incidence(doc, *f.kernel, name + ".kernel");
        } else if constexpr (std::is_same_v<F, family::PoissonComposed>) {
          out.set("family", "poisson");
          out.set("lambda", format_number(f.lambda));
          write_incidence(doc, *f.kernel, name + ".kernel");
        } else {
          throw ScenarioError(name + ": custom incidence cannot be written to a scenario file");
        }
      },
      inc.family());
}

}  // namespace detail

inline ScenarioDocument parse_document(std::string_view text) {
  ScenarioDocument doc;
  doc.sections.push_back({"", {}});
  std::size_t line_no = 0;
  std::size_t current = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ScenarioError(where + ": unterminated section header");
      const std::string name(detail::trim(line.substr(1, line.size() - 2)));
      if (name.empty()) throw ScenarioError(where + ": empty section name");
      if (doc.find(name)) throw ScenarioError(name + ": section appears twice");
      doc.sections.push_back({name, {}});
      current = doc.sections.size() - 1;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ScenarioError(where + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ScenarioError(where + ": missing key");
    auto& section = doc.sections[current];
    if (section.find(key)) throw ScenarioError(detail::join_path(section.name, key) + ": duplicate key");
    section.entries.emplace_back(key, value);
  }
  return doc;
}

inline std::string format_document(const ScenarioDocument& doc, const std::string& comment = "") {
  std::ostringstream os;
  if (!comment.empty()) {
    std::istringstream lines(comment);
    for (std::string l; std::getline(lines, l);) os << "# " << l << '\n';
  }
  bool first = true;
  for (const auto& s : doc.sections) {
    if (s.name.empty() && s.entries.empty()) continue;
    if (!first || !comment.empty()) os << '\n';
    first = false;
    if (!s.name.empty()) os << '[' << s.name << "]\n";
    for (const auto& [k, v] : s.entries) os << k << " = " << v << '\n';
  }
  return os.str();
}

inline ScenarioDocument to_document(const Scenario& s) {
  ScenarioDocument doc;
  doc.section("").set("label", s.label);
  auto& params = doc.section("params");
  params.set("n", std::to_string(s.params.stages()));
  params.set("N", format_number(s.params.population()));
  params.set("gamma", format_vector(s.params.gamma()));
  detail::write_incidence(doc, s.incidence, "incidence");
  auto& initial = doc.section("initial");
  initial.set("S", format_number(s.initial.S));
  initial.set("I", format_vector(s.initial.I));
  initial.set("R", format_number(s.initial.R));
  auto& stop = doc.section("stopping");
  stop.set("max_steps", std::to_string(s.stopping.max_steps));
  stop.set("eps_z", format_number(s.stopping.eps_z));
  stop.set("eps_s", format_number(s.stopping.eps_s));
  return doc;
}

/// Builds and validates a scenario. Beyond the constructor checks, linear
/// incidence must keep phi below 1 on U (sum(beta) <= 1/N).
inline Scenario from_document(const ScenarioDocument& doc) {
  for (const auto& s : doc.sections) {
    const bool known = s.name.empty() || s.name == "params" || s.name == "initial" || s.name == "stopping" ||
                       s.name.rfind("incidence", 0) == 0;
    if (!known) throw ScenarioError(s.name + ": unknown section");
  }
  detail::SectionReader top(doc.find(""), "");
  std::string label = top.text("label").value_or("");
  top.finish();

  detail::SectionReader p(doc.find("params"), "params");
  if (!doc.find("params")) throw ScenarioError("params: section missing");
  const double N = p.number("N");
  auto gamma = p.vector("gamma");
  if (const auto n = p.optional_number("n")) {
    if (*n != static_cast<double>(gamma.size())) {
      throw ScenarioError("params.n: " + format_number(*n) + " does not match the " + std::to_string(gamma.size()) +
                          " values of params.gamma");
    }
  }
  p.finish();
  std::optional<StageParams> params;
  try {
    params.emplace(std::move(gamma), N);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("params.") + e.what());
  }
  const std::size_t n = params->stages();

  IncidenceModel incidence = detail::read_incidence(doc, "incidence", n, N);
  const auto report = validate_hypothesis_H(incidence, 2);
  for (const auto& c : report.conditions) {
    if (!c.passed) throw ScenarioError("incidence: " + c.name + " condition fails (" + c.detail + ")");
  }

  detail::SectionReader in(doc.find("initial"), "initial");
  if (!doc.find("initial")) throw ScenarioError("initial: section missing");
  EpidemicState initial;
  initial.S = in.number("S");
  initial.I = in.vector("I");
  initial.R = in.optional_number("R").value_or(0.0);
  in.finish();
  detail::check_length(initial.I, n, "initial.I");
  try {
    check_state(initial, *params, 1e-9);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }

  StoppingRule stopping = StoppingRule::defaults(N);
  detail::SectionReader st(doc.find("stopping"), "stopping");
  if (const auto m = st.optional_number("max_steps")) {
    if (!(*m >= 1.0) || *m != std::floor(*m) || *m > 1e15) {
      throw ScenarioError("stopping.max_steps: must be a positive integer");
    }
    stopping.max_steps = static_cast<std::uint64_t>(*m);
  }
  if (const auto z = st.optional_number("eps_z")) {
    if (!(*z > 0.0)) throw ScenarioError("stopping.eps_z: must be positive");
    stopping.eps_z = *z;
  }
  if (const auto s = st.optional_number("eps_s")) {
    if (!(*s > 0.0)) throw ScenarioError("stopping.eps_s: must be positive");
    stopping.eps_s = *s;
  }
  st.finish();

  return Scenario{std::move(label), std::move(*params), std::move(incidence), std::move(initial), stopping};
}

inline Scenario parse_scenario(std::string_view text) { return from_document(parse_document(text)); }

inline std::string format_scenario(const Scenario& s, const std::string& comment = "") {
  return format_document(to_document(s), comment);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path + ": cannot open scenario file");
  std::ostringstream buf;
  buf << f.rdbuf();
  if (f.bad()) throw IoError(path + ": read failed");
  return parse_scenario(buf.str());
}

inline void save_scenario(const Scenario& s, const std::string& path, const std::string& comment = "") {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(path + ": cannot open for writing");
  f << format_scenario(s, comment);
  if (!f) throw IoError(path + ": write failed");
}

/// Sets one numeric field addressed as section.key or section.key[j]
/// (j counted from 1), e.g. incidence.beta[3], params.N, incidence.lambda.
inline void set_parameter(ScenarioDocument& doc, const std::string& path, double value) {
  std::string base = path;
  std::optional<std::size_t> index;
  if (const auto open = path.find('['); open != std::string::npos) {
    if (path.back() != ']') throw ScenarioError(path + ": malformed index");
    const std::string digits = path.substr(open + 1, path.size() - open - 2);
    std::size_t k = 0;
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (res.ec != std::errc() || res.ptr != digits.data() + digits.size() || k == 0) {
      throw ScenarioError(path + ": index must be a positive integer");
    }
    index = k;
    base = path.substr(0, open);
  }
  const auto dot = base.rfind('.');
  const std::string section_name = dot == std::string::npos ? "" : base.substr(0, dot);
  const std::string key = dot == std::string::npos ? base : base.substr(dot + 1);
  const ScenarioSection* existing = doc.find(section_name);
  const std::string* current = existing ? existing->find(key) : nullptr;
  if (!current) throw ScenarioError(path + ": no such parameter in the scenario");
  if (!index) {
    detail::parse_number(*current, path);
    doc.section(section_name).set(key, format_number(value));
    return;
  }
  auto values = detail::parse_vector(*current, base);
  if (*index > values.size()) {
    throw ScenarioError(path + ": index out of range (" + std::to_string(values.size()) + " values)");
  }
  values[*index - 1] = value;
  doc.section(section_name).set(key, format_vector(values));
}

/// The five figure scenarios (three stages, exponential incidence, N = 1).
/// Both fig3-top scenarios use gamma_2 = gamma_3 = 0.9.
inline std::vector<Scenario> figure_scenarios() {
  const auto make = [](std::string label, std::vector<double> beta, std::vector<double> gamma,
                       std::vector<double> I0) {
    StageParams params(std::move(gamma), 1.0);
    double z = 0.0;
    for (double x : I0) z += x;
    EpidemicState initial{1.0 - z, std::move(I0), 0.0};
    return Scenario{std::move(label), params, IncidenceModel::exponential(std::move(beta), 1.0), std::move(initial),
                    StoppingRule::defaults(1.0)};
  };
  return {
      make("fig2-left", {0.2, 0.2, 0.1}, {0.6, 0.7, 0.3}, {0.01, 0.0, 0.0}),
      make("fig2-right", {0.4, 0.2, 0.1}, {0.95, 0.9, 0.95}, {0.0, 0.0, 0.01}),
      make("fig3-top-left", {0.8, 0.1, 0.1}, {0.6, 0.9, 0.9}, {0.0, 0.0, 0.01}),
      make("fig3-top-right", {0.8, 0.1, 0.1}, {0.6, 0.9, 0.9}, {0.01, 0.0, 0.0}),
      make("fig3-bottom", {0.4, 0.01, 0.5}, {0.9, 0.9, 0.9}, {0.0, 0.0, 0.01}),
  };
}

inline std::optional<Scenario> figure_scenario(const std::string& label) {
  for (auto& s : figure_scenarios()) {
    if (s.label == label) return s;
  }
  return std::nullopt;
}

}  // namespace spm
