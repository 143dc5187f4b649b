#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "probmax/errors.hpp"
#include "probmax/harness.hpp"

namespace probmax {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("config " + where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!keys.contains(key)) fail(where, "unknown field '" + key + "'");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) fail(where, "missing field '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(where + "." + key, "must be finite");
  return d;
}

double get_number_or(const json& obj, const std::string& key, const std::string& where, double fallback) {
  return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

std::uint64_t get_count(const json& obj, const std::string& key, const std::string& where, std::uint64_t fallback,
                        std::uint64_t minimum = 1) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  std::uint64_t out = 0;
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
  } else if (v.is_number_integer()) {
    fail(where + "." + key, "must be >= " + std::to_string(minimum));
  } else if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19) fail(where + "." + key, "expected a non-negative integer");
    out = static_cast<std::uint64_t>(d);
  } else {
    fail(where + "." + key, "expected an integer");
  }
  if (out < minimum) fail(where + "." + key, "must be >= " + std::to_string(minimum));
  return out;
}

Vector get_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(where + "[" + std::to_string(i) + "]", "expected a number");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

Matrix get_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of rows");
  const std::size_t rows = v.size();
  if (!v[0].is_array()) fail(where + "[0]", "expected an array");
  const std::size_t cols = v[0].size();
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string row_where = where + "[" + std::to_string(i) + "]";
    const Vector row = get_vector(v[i], row_where);
    if (static_cast<std::size_t>(row.size()) != cols) fail(row_where, "row length differs from the first row");
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

ConvexBody body_from_json(const json& doc, const std::string& where, std::optional<Eigen::Index> dimension) {
  if (!doc.is_object()) fail(where, "expected an object");
  if (!doc.contains("type") || !doc.at("type").is_string()) fail(where, "missing string field 'type'");
  const std::string type = doc.at("type").get<std::string>();
  if (type == "ball") {
    reject_unknown(doc, where, {"type", "dimension", "radius"});
    std::uint64_t n = get_count(doc, "dimension", where, dimension.value_or(0), 0);
    if (n == 0) fail(where, "ball body needs 'dimension'");
    return ConvexBody::ball(static_cast<Eigen::Index>(n), get_number_or(doc, "radius", where, 1.0));
  }
  if (type == "box") {
    reject_unknown(doc, where, {"type", "half_widths"});
    if (!doc.contains("half_widths")) fail(where, "missing field 'half_widths'");
    return ConvexBody::box(get_vector(doc.at("half_widths"), where + ".half_widths"));
  }
  if (type == "ellipsoid") {
    reject_unknown(doc, where, {"type", "shape"});
    if (!doc.contains("shape")) fail(where, "missing field 'shape'");
    return ConvexBody::ellipsoid(get_matrix(doc.at("shape"), where + ".shape"));
  }
  if (type == "sym_polytope") {
    reject_unknown(doc, where, {"type", "rows", "volume"});
    if (!doc.contains("rows")) fail(where, "missing field 'rows'");
    std::optional<double> vol;
    if (doc.contains("volume")) vol = get_number(doc, "volume", where);
    return ConvexBody::sym_polytope(get_matrix(doc.at("rows"), where + ".rows"), vol);
  }
  fail(where + ".type", "unknown body type '" + type + "' (ball, box, ellipsoid, sym_polytope)");
}

FeasibleSet feasible_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected an object");
  if (!doc.contains("type") || !doc.at("type").is_string()) fail(where, "missing string field 'type'");
  const std::string type = doc.at("type").get<std::string>();
  if (type == "polytope") {
    reject_unknown(doc, where, {"type", "A", "b"});
    if (!doc.contains("A") || !doc.contains("b")) fail(where, "polytope needs 'A' and 'b'");
    return FeasibleSet::polytope(get_matrix(doc.at("A"), where + ".A"), get_vector(doc.at("b"), where + ".b"));
  }
  if (type == "ball") {
    reject_unknown(doc, where, {"type", "center", "radius"});
    if (!doc.contains("center")) fail(where, "missing field 'center'");
    return FeasibleSet::ball(get_vector(doc.at("center"), where + ".center"), get_number_or(doc, "radius", where, 1.0));
  }
  fail(where + ".type", "unknown feasible set type '" + type + "' (polytope, ball)");
}

ProblemConfig problem_config_from_json(const json& doc, const std::string& where) {
  if (doc.is_string()) return builtin_problem(doc.get<std::string>());
  if (!doc.is_object()) fail(where, "expected a built-in name or an object");
  const double m = get_number_or(doc, "m", where, 2.0);
  const double s = get_number_or(doc, "s", where, 0.1);
  const double eps = get_number_or(doc, "eps", where, 0.1);
  if (!(eps > 0.0 && eps < 1.0)) fail(where + ".eps", "must lie in (0, 1)");
  if (!(m >= 2.0)) fail(where + ".m", "must be >= 2");
  if (!(s > 0.0)) fail(where + ".s", "must be > 0");
  if (doc.contains("builtin")) {
    reject_unknown(doc, where, {"builtin", "n", "m", "s", "eps"});
    if (!doc.at("builtin").is_string()) fail(where + ".builtin", "expected a string");
    const std::string name = doc.at("builtin").get<std::string>();
    if (name == "example1") {
      if (doc.contains("n") && get_count(doc, "n", where, 3) != 3) fail(where + ".n", "example1 is 3-dimensional");
      return {"example1", example1(m, s, eps)};
    }
    if (name == "example2") {
      const std::uint64_t n = get_count(doc, "n", where, 0);
      if (n == 0) fail(where, "example2 needs 'n'");
      return {"example2_n" + std::to_string(n), example2(static_cast<Eigen::Index>(n), m, s, eps)};
    }
    ProblemConfig base = builtin_problem(name);
    return {base.name, ProblemSpec::create(base.spec.body(), base.spec.feasible(), m, s, eps)};
  }
  return {doc.value("name", std::string("custom")), problem_from_json(doc, where)};
}

ScheduleConfig schedule_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected an object");
  reject_unknown(doc, where, {"scheme", "gamma0", "beta", "eta", "a", "budget"});
  if (!doc.contains("scheme") || !doc.at("scheme").is_string()) fail(where, "missing string field 'scheme'");
  ScheduleConfig s;
  try {
    s.scheme = parse_scheme(doc.at("scheme").get<std::string>());
  } catch (const ValidationError& e) {
    fail(where + ".scheme", e.what());
  }
  s.gamma0 = get_number_or(doc, "gamma0", where, 0.5);
  if (!(s.gamma0 > 0.0)) fail(where + ".gamma0", "must be > 0");
  if (doc.contains("beta")) {
    s.beta = get_number(doc, "beta", where);
    if (!(*s.beta > 0.0)) fail(where + ".beta", "must be > 0");
  }
  if (doc.contains("eta")) {
    s.eta = get_number(doc, "eta", where);
    if (!(*s.eta > 0.0)) fail(where + ".eta", "must be > 0");
  }
  s.a = get_number_or(doc, "a", where, 7.0);
  if (s.scheme == Scheme::kAcVSSA && !(s.a > 3.0)) fail(where + ".a", "ac-VSSA requires a > 3");
  s.budget = get_count(doc, "budget", where, 10'000);
  return s;
}

}  // namespace

ProblemSpec example1(double degree, double smoothing, double eps) {
  Matrix A(6, 3);
  A << 1, 1, 1,
      -1, 0, 0,
      -1, 1, 0,
       0, -1, 0,
       0, -1, 1,
       0, 0, -1;
  Vector b(6);
  b << 3, -0.1, 2, -0.2, 1, -0.1;
  return ProblemSpec::create(ConvexBody::ball(3), FeasibleSet::polytope(A, b), degree, smoothing, eps);
}

ProblemSpec example2(Eigen::Index n, double degree, double smoothing, double eps) {
  return ProblemSpec::create(ConvexBody::ball(n), FeasibleSet::ball(Vector::Constant(n, 1.2), 1.0), degree, smoothing,
                             eps);
}

std::vector<ProblemConfig> builtin_examples() {
  std::vector<ProblemConfig> out;
  out.push_back({"example1", example1()});
  for (Eigen::Index n = 4; n <= 8; ++n) out.push_back({"example2_n" + std::to_string(n), example2(n)});
  return out;
}

ProblemConfig builtin_problem(const std::string& name) {
  if (name == "example1") return {name, example1()};
  const std::string prefix = "example2_n";
  if (name.rfind(prefix, 0) == 0) {
    const std::string digits = name.substr(prefix.size());
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos && digits.size() < 4) {
      const int n = std::stoi(digits);
      if (n >= 1) return {name, example2(n)};
    }
  }
  throw ValidationError("config problem: unknown built-in problem '" + name + "' (example1, example2_n<k>)");
}

json problem_to_json(const ProblemSpec& spec) {
  json body;
  const ConvexBody& k = spec.body();
  body["type"] = k.kind();
  std::visit(
      [&](const auto& shape) {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, BallShape>) {
          body["dimension"] = k.dimension();
          body["radius"] = shape.radius;
        } else if constexpr (std::is_same_v<T, BoxShape>) {
          body["half_widths"] = vector_json(shape.half_widths);
        } else if constexpr (std::is_same_v<T, EllipsoidShape>) {
          body["shape"] = matrix_json(shape.shape);
        } else {
          body["rows"] = matrix_json(shape.rows);
          if (k.volume_override()) body["volume"] = *k.volume_override();
        }
      },
      k.shape());

  json feasible;
  feasible["type"] = spec.feasible().kind();
  std::visit(
      [&](const auto& shape) {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, PolytopeSet>) {
          feasible["A"] = matrix_json(shape.A);
          feasible["b"] = vector_json(shape.b);
        } else {
          feasible["center"] = vector_json(shape.center);
          feasible["radius"] = shape.radius;
        }
      },
      spec.feasible().shape());

  return json{{"body", body}, {"feasible", feasible}, {"m", spec.degree()}, {"s", spec.smoothing().value()},
              {"eps", spec.eps()}};
}

ProblemSpec problem_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected an object");
  reject_unknown(doc, where, {"name", "dimension", "body", "feasible", "m", "s", "eps"});
  if (!doc.contains("body")) fail(where, "missing field 'body'");
  if (!doc.contains("feasible")) fail(where, "missing field 'feasible'");
  std::optional<Eigen::Index> n;
  if (doc.contains("dimension")) n = static_cast<Eigen::Index>(get_count(doc, "dimension", where, 1));
  ConvexBody body = body_from_json(doc.at("body"), where + ".body", n);
  FeasibleSet feasible = feasible_from_json(doc.at("feasible"), where + ".feasible");
  if (n && body.dimension() != *n) fail(where + ".body", "dimension does not match 'dimension'");
  if (feasible.dimension() != body.dimension()) fail(where + ".feasible", "dimension does not match the body");
  const double m = get_number_or(doc, "m", where, 2.0);
  const double eps = get_number_or(doc, "eps", where, 0.1);
  if (!(eps > 0.0 && eps < 1.0)) fail(where + ".eps", "must lie in (0, 1)");
  if (!(m >= 2.0)) fail(where + ".m", "must be >= 2");
  return ProblemSpec::create(std::move(body), std::move(feasible), m, get_number_or(doc, "s", where, 0.1), eps);
}

std::string spec_hash(const ProblemSpec& spec) {
  const std::string text = problem_to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail("", "top level must be an object");
  reject_unknown(doc, "", {"problem", "problems", "schedules", "replications", "base_seed", "reference", "lipschitz",
                           "metric", "random_start", "cross_check", "output"});
  ExperimentConfig cfg;
  cfg.source = doc;

  if (doc.contains("problem") == doc.contains("problems")) fail("", "exactly one of 'problem' or 'problems' is required");
  if (doc.contains("problem")) {
    cfg.problems.push_back(problem_config_from_json(doc.at("problem"), "problem"));
  } else {
    const json& list = doc.at("problems");
    if (!list.is_array() || list.empty()) fail("problems", "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.problems.push_back(problem_config_from_json(list[i], "problems[" + std::to_string(i) + "]"));
    }
  }

  if (!doc.contains("schedules") || !doc.at("schedules").is_array() || doc.at("schedules").empty()) {
    fail("schedules", "expected a non-empty array");
  }
  const json& schedules = doc.at("schedules");
  for (std::size_t i = 0; i < schedules.size(); ++i) {
    cfg.schedules.push_back(schedule_from_json(schedules[i], "schedules[" + std::to_string(i) + "]"));
  }

  if (doc.contains("replications")) {
    const json& r = doc.at("replications");
    if (!r.is_number() || !(r.get<double>() >= 1.0)) fail("replications", "must be an integer >= 1");
  }
  cfg.replications = get_count(doc, "replications", "", 20);
  cfg.base_seed = get_count(doc, "base_seed", "", 0, 0);

  if (doc.contains("reference")) {
    const json& r = doc.at("reference");
    if (!r.is_object()) fail("reference", "expected an object");
    reject_unknown(r, "reference", {"mode", "path", "batch", "max_steps", "tolerance", "final_batch"});
    const std::string mode = r.value("mode", std::string("compute"));
    if (mode == "compute") cfg.reference.mode = ReferenceSettings::Mode::kCompute;
    else if (mode == "load") cfg.reference.mode = ReferenceSettings::Mode::kLoad;
    else fail("reference.mode", "expected 'compute' or 'load'");
    cfg.reference.path = r.value("path", std::string());
    cfg.reference.batch = get_count(r, "batch", "reference", cfg.reference.batch);
    cfg.reference.max_steps = get_count(r, "max_steps", "reference", cfg.reference.max_steps);
    cfg.reference.tolerance = get_number_or(r, "tolerance", "reference", cfg.reference.tolerance);
    if (!(cfg.reference.tolerance > 0.0)) fail("reference.tolerance", "must be > 0");
    cfg.reference.final_batch = get_count(r, "final_batch", "reference", cfg.reference.final_batch);
  }

  if (doc.contains("lipschitz")) {
    const json& l = doc.at("lipschitz");
    if (!l.is_object()) fail("lipschitz", "expected an object");
    reject_unknown(l, "lipschitz", {"value", "pairs", "batch"});
    if (l.contains("value")) {
      cfg.lipschitz.value = get_number(l, "value", "lipschitz");
      if (!(*cfg.lipschitz.value > 0.0)) fail("lipschitz.value", "must be > 0");
    }
    cfg.lipschitz.pairs = get_count(l, "pairs", "lipschitz", cfg.lipschitz.pairs);
    cfg.lipschitz.batch = get_count(l, "batch", "lipschitz", cfg.lipschitz.batch);
  }

  if (doc.contains("metric")) {
    const json& m = doc.at("metric");
    if (!m.is_object()) fail("metric", "expected an object");
    reject_unknown(m, "metric", {"batch", "trajectory_batch"});
    cfg.metric.batch = get_count(m, "batch", "metric", cfg.metric.batch);
    cfg.metric.trajectory_batch = get_count(m, "trajectory_batch", "metric", cfg.metric.trajectory_batch);
  }

  if (doc.contains("random_start")) {
    if (!doc.at("random_start").is_boolean()) fail("random_start", "expected a boolean");
    cfg.random_start = doc.at("random_start").get<bool>();
  }
  if (doc.contains("cross_check")) {
    if (!doc.at("cross_check").is_boolean()) fail("cross_check", "expected a boolean");
    cfg.cross_check = doc.at("cross_check").get<bool>();
  }
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) fail("output", "expected a string");
    cfg.output_dir = doc.at("output").get<std::string>();
  }

  // Cross-field checks.
  for (std::size_t p = 0; p < cfg.problems.size(); ++p) {
    const double eps = cfg.problems[p].spec.eps();
    for (std::size_t i = 0; i < cfg.schedules.size(); ++i) {
      const ScheduleConfig& s = cfg.schedules[i];
      if (s.beta && *s.beta > eps) {
        fail("schedules[" + std::to_string(i) + "].beta",
             "beta^2 <= eps^2 is violated for problem '" + cfg.problems[p].name + "'");
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config: cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ValidationError("config " + path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                          ": parse error: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace probmax
