#include "optrec/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "optrec/errors.hpp"

namespace optrec {
namespace {

using nlohmann::json;

/// Strict reader for one JSON object; remembers which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InputError(label() + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const std::string& key, double fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) fail(key, "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) fail(key, "expected a finite number");
    return d;
  }

  std::optional<double> optional_number(const std::string& key, std::optional<double> fallback) {
    if (!j_.contains(key)) return fallback;
    if (j_.at(key).is_null()) {
      seen_.insert(key);
      return std::nullopt;
    }
    return number(key, 0.0);
  }

  int integer(const std::string& key, int fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) fail(key, "expected an integer");
    const auto i = v->get<long long>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) fail(key, "out of range");
    return static_cast<int>(i);
  }

  std::optional<int> optional_integer(const std::string& key, std::optional<int> fallback) {
    if (!j_.contains(key)) return fallback;
    if (j_.at(key).is_null()) {
      seen_.insert(key);
      return std::nullopt;
    }
    return integer(key, 0);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_unsigned()) fail(key, "expected a nonnegative integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) fail(key, "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = take(key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) fail(key, "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = take(key);
    if (v == nullptr) return {};
    if (!v->is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  const json* array(const std::string& key) {
    const json* v = take(key);
    if (v != nullptr && !v->is_array()) fail(key, "expected an array");
    return v;
  }

  const json* object(const std::string& key) {
    const json* v = take(key);
    if (v != nullptr && !v->is_object()) fail(key, "expected an object");
    return v;
  }

  /// Converts a parse failure of a string enum into a field-named diagnostic.
  template <class F>
  auto parse_enum(const std::string& key, const std::string& value, F&& parse) {
    try {
      return parse(value);
    } catch (const InputError& e) {
      fail(key, e.what());
    }
    throw InputError("unreachable");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw InputError(field(key) + ": " + what);
  }

  [[nodiscard]] std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw InputError(field(key) + ": unknown key");
    }
  }

 private:
  const json* take(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return nullptr;
    return &j_.at(key);
  }
  [[nodiscard]] std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

TestFamily test_family_from_string(std::string_view s) {
  for (auto f : {TestFamily::FourierSine, TestFamily::HatFunction, TestFamily::DiracPoint}) {
    if (s == to_string(f)) return f;
  }
  throw InputError("unknown test family '" + std::string(s) + "' (expected dirac, fourier_sine or hat)");
}

PointLayout layout_from_string(std::string_view s) {
  if (s == "uniform") return PointLayout::Uniform;
  if (s == "random") return PointLayout::Random;
  throw InputError("unknown layout '" + std::string(s) + "' (expected uniform or random)");
}

std::string_view to_string(PointLayout l) { return l == PointLayout::Uniform ? "uniform" : "random"; }

TestFamily default_family(Formulation f) {
  switch (f) {
    case Formulation::Relaxed: return TestFamily::FourierSine;
    case Formulation::Decomposed:
    case Formulation::MultiDomain: return TestFamily::HatFunction;
    default: return TestFamily::DiracPoint;
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json optional_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

StudySpec base_spec(const RunConfig& cfg) {
  StudySpec s;
  s.problem_case = battery_case(cfg.case_name);
  s.formulation = cfg.formulation;
  s.plan = cfg.measurements;
  s.kernel = make_kernel_spec(cfg);
  s.nugget = cfg.kernel.nugget;
  s.solver = cfg.solver;
  s.eval_grid = cfg.eval_grid;
  s.record_timing = cfg.output.timing;
  s.exec = Execution::Parallel;
  return s;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  Section root(doc, "");
  RunConfig cfg;
  cfg.case_name = root.string("case", cfg.case_name);
  const ManufacturedCase mc = root.parse_enum("case", cfg.case_name, [](const std::string& n) { return battery_case(n); });

  cfg.formulation = mc.default_formulation;
  if (root.has("formulation")) {
    cfg.formulation = root.parse_enum("formulation", root.string("formulation", ""),
                                      [](const std::string& v) { return formulation_from_string(v); });
  } else {
    root.string("formulation", "");
  }

  cfg.kernel.lengthscale = mc.default_lengthscale;
  if (const json* k = root.object("kernel")) {
    Section ks(*k, "kernel");
    if (ks.has("family")) {
      cfg.kernel.family = ks.parse_enum("family", ks.string("family", ""),
                                        [](const std::string& v) { return kernel_family_from_string(v); });
    }
    cfg.kernel.lengthscale = ks.number("lengthscale", cfg.kernel.lengthscale);
    cfg.kernel.amplitude = ks.number("amplitude", cfg.kernel.amplitude);
    cfg.kernel.nugget = ks.optional_number("nugget", cfg.kernel.nugget);
    const int dim = ks.integer("dim", mc.dim);
    if (dim != mc.dim) ks.fail("dim", "must match the case dimension " + std::to_string(mc.dim));
    ks.finish();
  }
  if (!(cfg.kernel.lengthscale > 0.0)) throw InputError("kernel.lengthscale: must be positive");
  if (!(cfg.kernel.amplitude > 0.0)) throw InputError("kernel.amplitude: must be positive");
  if (cfg.kernel.nugget && !(*cfg.kernel.nugget >= 0.0)) throw InputError("kernel.nugget: must be nonnegative");

  if (const json* s = root.object("solver")) {
    Section ss(*s, "solver");
    SolverConfig& sc = cfg.solver;
    sc.max_iters = ss.integer("max_iters", sc.max_iters);
    sc.tol_constraint = ss.number("tol_constraint", sc.tol_constraint);
    sc.tol_stationarity = ss.number("tol_stationarity", sc.tol_stationarity);
    sc.penalty_init = ss.number("penalty_init", sc.penalty_init);
    sc.penalty_growth = ss.number("penalty_growth", sc.penalty_growth);
    sc.linesearch_shrink = ss.number("linesearch_shrink", sc.linesearch_shrink);
    sc.mu = ss.number("mu", sc.mu);
    sc.seed = ss.unsigned_integer("seed", sc.seed);
    sc.warm_start = ss.boolean("warm_start", sc.warm_start);
    ss.finish();
  }
  cfg.solver.validate();

  MeasurementPlan& plan = cfg.measurements;
  plan.family = default_family(cfg.formulation);
  if (const json* m = root.object("measurements")) {
    Section ms(*m, "measurements");
    if (ms.has("family")) {
      plan.family = ms.parse_enum("family", ms.string("family", ""),
                                  [](const std::string& v) { return test_family_from_string(v); });
    }
    plan.count = ms.integer("count", plan.count);
    plan.approx_points = ms.integer("approx_points", plan.approx_points);
    if (ms.has("layout")) {
      plan.layout = ms.parse_enum("layout", ms.string("layout", ""),
                                  [](const std::string& v) { return layout_from_string(v); });
    }
    plan.c_hat = ms.optional_number("c_hat", plan.c_hat);
    plan.boundary_points = ms.integer("boundary_points", plan.boundary_points);
    plan.pairing_cells = ms.integer("pairing_cells", plan.pairing_cells);
    if (const json* extra = ms.array("extra")) {
      for (std::size_t i = 0; i < extra->size(); ++i) {
        Section es((*extra)[i], "measurements.extra[" + std::to_string(i) + "]");
        const auto coords = es.numbers("point");
        if (coords.size() != static_cast<std::size_t>(mc.dim)) {
          es.fail("point", "expected " + std::to_string(mc.dim) + " coordinates");
        }
        ExtraMeasurement e;
        e.point = Point::from(coords);
        e.target = es.number("target", 0.0);
        e.tolerance = es.number("tolerance", 0.0);
        es.finish();
        plan.extra.push_back(e);
      }
    }
    ms.finish();
  }

  if (const json* s = root.object("sweep")) {
    Section ss(*s, "sweep");
    SweepConfig sw;
    if (!ss.has("parameter")) ss.fail("parameter", "is required");
    sw.parameter = ss.parse_enum("parameter", ss.string("parameter", ""),
                                 [](const std::string& v) { return sweep_parameter_from_string(v); });
    sw.values = ss.numbers("values");
    sw.reference_approx_points = ss.optional_integer("reference_approx_points", std::nullopt);
    ss.finish();
    cfg.sweep = sw;
  } else {
    root.object("sweep");
  }

  cfg.eval_grid = root.integer("eval_grid", mc.dim == 1 ? 1000 : 100);
  cfg.threads = root.optional_integer("threads", std::nullopt);
  if (cfg.threads && *cfg.threads < 1) throw InputError("threads: must be positive");

  if (const json* o = root.object("output")) {
    Section os(*o, "output");
    cfg.output.solution = os.string("solution", cfg.output.solution);
    cfg.output.csv = os.string("csv", cfg.output.csv);
    cfg.output.json = os.string("json", cfg.output.json);
    cfg.output.timing = os.boolean("timing", cfg.output.timing);
    os.finish();
  }
  if (const json* v = root.object("validation")) {
    Section vs(*v, "validation");
    cfg.validation.trials = vs.integer("trials", cfg.validation.trials);
    cfg.validation.tolerance = vs.number("tolerance", cfg.validation.tolerance);
    vs.finish();
  }
  if (cfg.validation.trials < 1) throw InputError("validation.trials: must be positive");
  if (!(cfg.validation.tolerance > 0.0)) throw InputError("validation.tolerance: must be positive");
  root.finish();

  // Semantic checks shared with the library entry points.
  make_solve_spec(cfg).validate();
  if (cfg.sweep) make_study_spec(cfg).validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& cfg) {
  const SolverConfig& sc = cfg.solver;
  const MeasurementPlan& plan = cfg.measurements;
  json extra = json::array();
  for (const auto& e : plan.extra) {
    extra.push_back({{"point", std::vector<double>(e.point.coords().begin(), e.point.coords().end())},
                     {"target", e.target},
                     {"tolerance", e.tolerance}});
  }
  json j{
      {"case", cfg.case_name},
      {"formulation", std::string(to_string(cfg.formulation))},
      {"kernel",
       {{"family", std::string(to_string(cfg.kernel.family))},
        {"lengthscale", cfg.kernel.lengthscale},
        {"amplitude", cfg.kernel.amplitude},
        {"nugget", optional_json(cfg.kernel.nugget)}}},
      {"solver",
       {{"max_iters", sc.max_iters},
        {"tol_constraint", sc.tol_constraint},
        {"tol_stationarity", sc.tol_stationarity},
        {"penalty_init", sc.penalty_init},
        {"penalty_growth", sc.penalty_growth},
        {"linesearch_shrink", sc.linesearch_shrink},
        {"mu", sc.mu},
        {"seed", sc.seed},
        {"warm_start", sc.warm_start}}},
      {"measurements",
       {{"family", std::string(to_string(plan.family))},
        {"count", plan.count},
        {"approx_points", plan.approx_points},
        {"layout", std::string(to_string(plan.layout))},
        {"c_hat", optional_json(plan.c_hat)},
        {"boundary_points", plan.boundary_points},
        {"pairing_cells", plan.pairing_cells},
        {"extra", extra}}},
      {"eval_grid", cfg.eval_grid},
      {"threads", optional_json(cfg.threads)},
      {"output",
       {{"solution", cfg.output.solution},
        {"csv", cfg.output.csv},
        {"json", cfg.output.json},
        {"timing", cfg.output.timing}}},
      {"validation", {{"trials", cfg.validation.trials}, {"tolerance", cfg.validation.tolerance}}},
  };
  if (cfg.sweep) {
    j["sweep"] = {{"parameter", std::string(to_string(cfg.sweep->parameter))},
                  {"values", cfg.sweep->values},
                  {"reference_approx_points", optional_json(cfg.sweep->reference_approx_points)}};
  } else {
    j["sweep"] = nullptr;
  }
  return j;
}

KernelSpec make_kernel_spec(const RunConfig& cfg) {
  KernelSpec k;
  k.family = cfg.kernel.family;
  k.lengthscale = cfg.kernel.lengthscale;
  k.amplitude = cfg.kernel.amplitude;
  k.dim = battery_case(cfg.case_name).dim;
  return k;
}

StudySpec make_study_spec(const RunConfig& cfg) {
  if (!cfg.sweep) throw InputError("sweep: a study needs a sweep section");
  StudySpec s = base_spec(cfg);
  s.parameter = cfg.sweep->parameter;
  s.sweep = cfg.sweep->values;
  s.reference_approx_points = cfg.sweep->reference_approx_points;
  return s;
}

StudySpec make_solve_spec(const RunConfig& cfg) {
  StudySpec s = base_spec(cfg);
  s.parameter = SweepParameter::N;
  s.sweep = {static_cast<double>(cfg.measurements.count)};
  return s;
}

json to_json(const Functional& f) {
  json terms = json::array();
  for (const auto& t : f.terms) {
    json term{{"op", std::string(to_string(t.atom.op.kind()))},
              {"point", std::vector<double>(t.atom.point.coords().begin(), t.atom.point.coords().end())},
              {"domain_tag", t.atom.domain_tag},
              {"weight", t.weight}};
    if (t.atom.op.is_directional()) {
      term["direction"] = std::vector<double>(t.atom.op.direction().begin(),
                                              t.atom.op.direction().begin() + t.atom.point.dim());
    }
    terms.push_back(std::move(term));
  }
  return json{{"terms", terms}};
}

json to_json(const SolveReport& report) {
  json history = json::array();
  for (const auto& h : report.history) history.push_back({{"objective", h.objective}, {"violation", h.violation}});
  return json{{"converged", report.converged},
              {"iters", report.iters},
              {"final_constraint_violation", report.final_constraint_violation},
              {"final_stationarity", report.final_stationarity},
              {"objective", report.objective},
              {"history", history}};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("failed to write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at " + path.string());
  }
}

}  // namespace optrec
