#include "omx2d/run_config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "omx2d/errors.hpp"
#include "omx2d/grid.hpp"
#include "omx2d/sweep.hpp"

namespace omx2d {

using nlohmann::json;

const char* to_string(Task task) {
  switch (task) {
    case Task::blockade: return "blockade";
    case Task::omit: return "omit";
    case Task::spectrum: return "spectrum";
    case Task::backaction: return "backaction";
    case Task::cooling: return "cooling";
  }
  return "?";
}

// ---- strict parsing ----------------------------------------------------------------

namespace {

// Forward iterator over the text that remembers the furthest character read,
// so SAX callbacks can be mapped back to a line.
struct TrackingIterator {
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  const char** mark = nullptr;

  reference operator*() const {
    *mark = p;
    return *p;
  }
  TrackingIterator& operator++() {
    ++p;
    return *this;
  }
  TrackingIterator operator++(int) {
    TrackingIterator t = *this;
    ++p;
    return t;
  }
  bool operator==(const TrackingIterator& o) const { return p == o.p; }
  bool operator!=(const TrackingIterator& o) const { return p != o.p; }
};

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

class StrictBuilder : public nlohmann::json_sax<json> {
 public:
  StrictBuilder(const char* begin, const char** mark, std::string source, SourceLines* lines)
      : begin_(begin), mark_(mark), source_(std::move(source)), lines_(lines) {}

  json result;

  bool null() override { return put(json(nullptr)); }
  bool boolean(bool v) override { return put(json(v)); }
  bool number_integer(number_integer_t v) override { return put(json(v)); }
  bool number_unsigned(number_unsigned_t v) override { return put(json(v)); }
  bool number_float(number_float_t v, const string_t&) override { return put(json(v)); }
  bool string(string_t& v) override { return put(json(v)); }
  bool binary(binary_t& v) override { return put(json::binary(v)); }

  bool start_object(std::size_t) override {
    json* slot = place(json::object());
    stack_.push_back({slot, pending_pointer_, {}, 0});
    return true;
  }
  bool key(string_t& k) override {
    Frame& f = stack_.back();
    const int line = current_line();
    if (!f.keys.insert(k).second) {
      throw Error(ErrorKind::parse, source_ + ":" + std::to_string(line) + ": duplicate key '" + k + "' in " +
                                        (f.pointer.empty() ? std::string("/") : f.pointer));
    }
    key_ = k;
    if (lines_) (*lines_)[f.pointer + "/" + escape_pointer(k)] = line;
    return true;
  }
  bool end_object() override {
    stack_.pop_back();
    return true;
  }
  bool start_array(std::size_t) override {
    json* slot = place(json::array());
    stack_.push_back({slot, pending_pointer_, {}, 0});
    return true;
  }
  bool end_array() override {
    stack_.pop_back();
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
    throw Error(ErrorKind::parse, source_ + ": " + ex.what());
  }

 private:
  struct Frame {
    json* node;
    std::string pointer;
    std::set<std::string> keys;
    std::size_t index;
  };

  int current_line() const {
    return 1 + static_cast<int>(std::count(begin_, *mark_ ? *mark_ : begin_, '\n'));
  }

  // Inserts v at the current position; returns the stored node.
  json* place(json v) {
    if (stack_.empty()) {
      result = std::move(v);
      pending_pointer_.clear();
      return &result;
    }
    Frame& f = stack_.back();
    if (f.node->is_object()) {
      pending_pointer_ = f.pointer + "/" + escape_pointer(key_);
      return &((*f.node)[key_] = std::move(v));
    }
    pending_pointer_ = f.pointer + "/" + std::to_string(f.index++);
    if (lines_) (*lines_)[pending_pointer_] = current_line();
    f.node->push_back(std::move(v));
    return &f.node->back();
  }
  bool put(json v) {
    place(std::move(v));
    return true;
  }

  const char* begin_;
  const char** mark_;
  std::string source_;
  SourceLines* lines_;
  std::vector<Frame> stack_;
  std::string key_;
  std::string pending_pointer_;
};

}  // namespace

json parse_json_strict(const std::string& text, const std::string& source, SourceLines* lines) {
  const char* mark = nullptr;
  const char* begin = text.data();
  TrackingIterator first{begin, &mark}, last{begin + text.size(), &mark};
  StrictBuilder builder(begin, &mark, source, lines);
  json::sax_parse(first, last, &builder);
  return std::move(builder.result);
}

// ---- schema --------------------------------------------------------------------------

namespace {

enum class Unit { hz, dimensionless, kelvin };

struct ParamKey {
  const char* name;
  Unit unit;
};

constexpr ParamKey scalar_keys[] = {
    {"omega_a", Unit::hz},   {"omega_b", Unit::hz},   {"omega_c", Unit::hz},   {"g", Unit::hz},
    {"lambda", Unit::hz},    {"kappa_a", Unit::hz},   {"kappa_b", Unit::hz},   {"kappa_c", Unit::hz},
    {"Delta", Unit::hz},     {"Omega", Unit::hz},     {"probe_amp", Unit::hz}, {"Delta_p", Unit::hz},
    {"G", Unit::hz},         {"coupling_ratio", Unit::dimensionless},          {"temperature", Unit::kelvin},
    {"omega", Unit::hz},
};

const ParamKey* find_key(const std::string& name) {
  for (const auto& k : scalar_keys) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

double to_internal(Unit u, double v) { return u == Unit::hz ? angular(v) : v; }

std::string column_name(const ParamKey& k) {
  switch (k.unit) {
    case Unit::hz: return std::string(k.name) + hz_suffix;
    case Unit::kelvin: return std::string(k.name) + "_K";
    case Unit::dimensionless: break;
  }
  return k.name;
}

bool linearized(Task t) { return t == Task::spectrum || t == Task::backaction || t == Task::cooling; }

class Context {
 public:
  Context(const SourceLines& lines, std::string source) : lines_(lines), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    std::string where = source_;
    std::string p = pointer;
    while (true) {
      auto it = lines_.find(p);
      if (it != lines_.end()) {
        where += ":" + std::to_string(it->second);
        break;
      }
      const auto slash = p.rfind('/');
      if (slash == std::string::npos || p.empty()) break;
      p = p.substr(0, slash);
    }
    throw Error(ErrorKind::configuration, where + ": " + (pointer.empty() ? "/" : pointer) + ": " + message);
  }

  void only_keys(const json& obj, const std::string& pointer, std::initializer_list<const char*> allowed) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) fail(pointer + "/" + escape_pointer(it.key()), "unknown key '" + it.key() + "'");
    }
  }

  const json& object(const json& parent, const char* key, const std::string& pointer) const {
    const json& v = parent.at(key);
    if (!v.is_object()) fail(pointer + "/" + key, std::string("'") + key + "' must be an object");
    return v;
  }

  double number(const json& v, const std::string& pointer, const std::string& key) const {
    if (!v.is_number()) fail(pointer, "'" + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(pointer, "'" + key + "' must be finite");
    return d;
  }
  double number(const json& obj, const char* key, const std::string& pointer) const {
    return number(obj.at(key), pointer + "/" + key, key);
  }
  int integer(const json& obj, const char* key, const std::string& pointer) const {
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(pointer + "/" + key, std::string("'") + key + "' must be an integer");
    return v.get<int>();
  }
  bool boolean(const json& obj, const char* key, const std::string& pointer) const {
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(pointer + "/" + key, std::string("'") + key + "' must be true or false");
    return v.get<bool>();
  }
  std::string string(const json& obj, const char* key, const std::string& pointer) const {
    const json& v = obj.at(key);
    if (!v.is_string()) fail(pointer + "/" + key, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
  }
  template <class E>
  E choice(const json& obj, const char* key, const std::string& pointer,
           std::initializer_list<std::pair<const char*, E>> options) const {
    const std::string s = string(obj, key, pointer);
    std::string names;
    for (const auto& [name, value] : options) {
      if (s == name) return value;
      names += names.empty() ? name : std::string(", ") + name;
    }
    fail(pointer + "/" + key, "'" + s + "' is not one of " + names);
  }

 private:
  const SourceLines& lines_;
  std::string source_;
};

// One grid point's inputs before dispatch to a task.
struct Point {
  SystemParams params;
  std::optional<double> G;
  std::optional<double> eps;
  double omega = 0.0;
};

void apply(Point& pt, const std::string& name, double v) {
  SystemParams& s = pt.params;
  if (name == "omega_a") s.omega_a = v;
  else if (name == "omega_b") s.omega_b = v;
  else if (name == "omega_c") s.omega_c = v;
  else if (name == "g") s.g = v;
  else if (name == "lambda") s.lambda = v;
  else if (name == "kappa_a") s.kappa_a = v;
  else if (name == "kappa_b") s.kappa_b = v;
  else if (name == "kappa_c") s.kappa_c = v;
  else if (name == "Delta") s.detuning = v;
  else if (name == "Omega") s.drive = v;
  else if (name == "probe_amp") s.probe_amplitude = v;
  else if (name == "Delta_p") s.probe_detuning = v;
  else if (name == "G") pt.G = v;
  else if (name == "coupling_ratio") pt.eps = v;
  else if (name == "temperature") s.thermal = Temperature{v};
  else if (name == "omega") pt.omega = v;
}

// Everything config_from_json derives besides RunConfig itself.
struct Parsed {
  RunConfig config;
  Point base;
};

Point point_at(const RunConfig& c, const Point& base, std::size_t index) {
  Point pt = base;
  for (std::size_t k = c.axes.size(); k-- > 0;) {
    const auto& ax = c.axes[k];
    apply(pt, ax.name, ax.internal[index % ax.internal.size()]);
    index /= ax.internal.size();
  }
  return pt;
}

LinearizedParams linearize(const RunConfig& c, const Point& pt) {
  LinearizedParams lp = pt.G ? LinearizedParams::from_system(pt.params, *pt.G)
                             : LinearizedParams::from_system(pt.params);
  if (pt.eps) lp.coupling_ratio = *pt.eps;
  lp.form = c.self_energy;
  return lp;
}

std::vector<std::string> task_columns(Task t) {
  const std::string hz = hz_suffix;
  switch (t) {
    case Task::blockade: return {"g2", "n_photon", "g2_analytic", "g2_analytic_flipped"};
    case Task::omit: return {"mu_p", "nu_p", "re_A_minus", "im_A_minus", "n_cav"};
    case Task::spectrum: return {"s_bb", "s_opt", "s_th_b", "s_th_c", "s_bb_langevin"};
    case Task::backaction:
      return {"delta_omega_b" + hz, "gamma_b_opt" + hz, "delta_omega_c" + hz, "gamma_c_opt" + hz,
              "omega_b_eff" + hz,   "kappa_b_eff" + hz, "omega_c_eff" + hz,   "kappa_c_eff" + hz,
              "weak_coupling",      "drift_max_real" + hz};
    case Task::cooling:
      return {"n_m", "n_m_error", "kappa_b_eff" + hz, "kappa_c_eff" + hz, "drift_max_real" + hz};
  }
  return {};
}

std::vector<SweepAxis> parse_sweep(const Context& ctx, json& sweep, Task task) {
  const std::string ptr = "/sweep";
  if (!sweep.is_array()) ctx.fail(ptr, "'sweep' must be an array of axes");
  std::vector<SweepAxis> axes;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    json& a = sweep[i];
    const std::string p = ptr + "/" + std::to_string(i);
    if (!a.is_object()) ctx.fail(p, "axis must be an object");
    if (!a.contains("name")) ctx.fail(p, "missing required key 'name'");
    const std::string name = ctx.string(a, "name", p);
    const ParamKey* key = find_key(name);
    if (!key) ctx.fail(p + "/name", "'" + name + "' is not a sweepable parameter");
    if (name == "omega" && task != Task::spectrum) ctx.fail(p + "/name", "'omega' is only swept by the spectrum task");
    if (!seen.insert(name).second) ctx.fail(p + "/name", "axis '" + name + "' appears twice");
    if (!a.contains("spacing")) a["spacing"] = a.contains("values") ? "values" : "linear";
    const std::string spacing = ctx.string(a, "spacing", p);

    SweepAxis axis;
    axis.name = name;
    axis.column = column_name(*key);
    if (spacing == "values") {
      ctx.only_keys(a, p, {"name", "spacing", "values"});
      if (!a.contains("values") || !a["values"].is_array() || a["values"].empty()) {
        ctx.fail(p, "'values' must be a nonempty array");
      }
      for (std::size_t k = 0; k < a["values"].size(); ++k) {
        axis.values.push_back(ctx.number(a["values"][k], p + "/values/" + std::to_string(k), "values"));
      }
    } else if (spacing == "linear" || spacing == "log" || spacing == "resonance") {
      if (spacing == "resonance") {
        ctx.only_keys(a, p, {"name", "spacing", "start", "stop", "count", "centers", "width", "per_decade", "decades"});
      } else {
        ctx.only_keys(a, p, {"name", "spacing", "start", "stop", "count"});
      }
      for (const char* k : {"start", "stop", "count"}) {
        if (!a.contains(k)) ctx.fail(p, std::string("missing required key '") + k + "'");
      }
      const double lo = ctx.number(a, "start", p), hi = ctx.number(a, "stop", p);
      const int count = ctx.integer(a, "count", p);
      if (count < 2) ctx.fail(p + "/count", "'count' must be >= 2");
      if (spacing == "linear") {
        axis.values = linspace(lo, hi, count);
      } else if (spacing == "log") {
        if (!(lo > 0.0) || !(hi > 0.0)) ctx.fail(p, "log spacing needs start, stop > 0");
        axis.values = logspace(lo, hi, count);
      } else {
        if (!(lo < hi)) ctx.fail(p, "resonance spacing needs start < stop");
        if (!a.contains("centers") || !a["centers"].is_array()) ctx.fail(p, "'centers' must be an array");
        if (!a.contains("width")) ctx.fail(p, "missing required key 'width'");
        if (!a.contains("per_decade")) a["per_decade"] = 10;
        if (!a.contains("decades")) a["decades"] = 4;
        std::vector<double> centers;
        for (std::size_t k = 0; k < a["centers"].size(); ++k) {
          centers.push_back(ctx.number(a["centers"][k], p + "/centers/" + std::to_string(k), "centers"));
        }
        const double width = ctx.number(a, "width", p);
        if (!(width > 0.0)) ctx.fail(p + "/width", "'width' must be positive");
        const int per_decade = ctx.integer(a, "per_decade", p), decades = ctx.integer(a, "decades", p);
        if (per_decade < 1 || decades < 0) ctx.fail(p, "'per_decade' must be >= 1 and 'decades' >= 0");
        axis.values = resonance_grid(lo, hi, count, centers, width, per_decade, decades);
      }
    } else {
      ctx.fail(p + "/spacing", "'" + spacing + "' is not one of linear, log, resonance, values");
    }
    for (double v : axis.values) axis.internal.push_back(to_internal(key->unit, v));
    axes.push_back(std::move(axis));
  }
  return axes;
}

void parse_params(const Context& ctx, const json& params, Task task, Point& base) {
  const std::string ptr = "/params";
  for (auto it = params.begin(); it != params.end(); ++it) {
    const std::string& k = it.key();
    const std::string p = ptr + "/" + escape_pointer(k);
    if (k == "occupancies") {
      const json& o = it.value();
      if (!o.is_object()) ctx.fail(p, "'occupancies' must be an object");
      ctx.only_keys(o, p, {"n_a", "n_b", "n_c"});
      Occupancies n;
      if (o.contains("n_a")) n.photon = ctx.number(o, "n_a", p);
      if (o.contains("n_b")) n.nanobeam = ctx.number(o, "n_b", p);
      if (o.contains("n_c")) n.graphene = ctx.number(o, "n_c", p);
      base.params.thermal = n;
      continue;
    }
    const ParamKey* key = find_key(k);
    if (!key || k == "omega") ctx.fail(p, "unknown key '" + k + "'");
    if (k == "Omega" && it.value().is_array()) {
      const json& z = it.value();
      if (z.size() != 2) ctx.fail(p, "'Omega' must be a number or [re, im]");
      base.params.drive = Complex(angular(ctx.number(z[0], p + "/0", "Omega")),
                                  angular(ctx.number(z[1], p + "/1", "Omega")));
      continue;
    }
    apply(base, k, to_internal(key->unit, ctx.number(it.value(), p, k)));
  }
  if (params.contains("temperature") && params.contains("occupancies")) {
    ctx.fail(ptr + "/temperature", "give either 'temperature' or 'occupancies', not both");
  }
  if ((params.contains("G") || params.contains("coupling_ratio")) && !linearized(task)) {
    ctx.fail(ptr + (params.contains("G") ? "/G" : "/coupling_ratio"),
             std::string("only the spectrum, backaction and cooling tasks take this key, not ") + to_string(task));
  }
  if ((params.contains("probe_amp") || params.contains("Delta_p")) && task != Task::omit) {
    ctx.fail(ptr + (params.contains("probe_amp") ? "/probe_amp" : "/Delta_p"),
             std::string("only the omit task takes this key, not ") + to_string(task));
  }
}

void parse_solver(const Context& ctx, json& solver, RunConfig& c) {
  const std::string p = "/solver";
  if (!solver.is_object()) ctx.fail(p, "'solver' must be an object");
  if (c.task == Task::blockade) {
    ctx.only_keys(solver, p,
                  {"method", "direct_max_unknowns", "krylov_tolerance", "krylov_restart", "krylov_max_iterations",
                   "coarse_window", "coarse_max_block", "check_positivity"});
    SteadyStateOptions& s = c.blockade.solver;
    if (!solver.contains("method")) solver["method"] = "automatic";
    s.method = ctx.choice<SteadyStateMethod>(solver, "method", p,
                                             {{"automatic", SteadyStateMethod::automatic},
                                              {"direct", SteadyStateMethod::direct},
                                              {"krylov", SteadyStateMethod::krylov}});
    auto int_field = [&](const char* k, int& field, int lo) {
      if (!solver.contains(k)) solver[k] = field;
      field = ctx.integer(solver, k, p);
      if (field < lo) ctx.fail(p + "/" + k, std::string("'") + k + "' must be >= " + std::to_string(lo));
    };
    auto pos_field = [&](const char* k, double& field) {
      if (!solver.contains(k)) solver[k] = field;
      field = ctx.number(solver, k, p);
      if (!(field > 0.0)) ctx.fail(p + "/" + k, std::string("'") + k + "' must be positive");
    };
    int_field("direct_max_unknowns", s.direct_max_unknowns, 1);
    pos_field("krylov_tolerance", s.krylov_tolerance);
    int_field("krylov_restart", s.krylov_restart, 2);
    int_field("krylov_max_iterations", s.krylov_max_iterations, 1);
    pos_field("coarse_window", s.coarse_window);
    int_field("coarse_max_block", s.coarse_max_block, 0);
    if (!solver.contains("check_positivity")) solver["check_positivity"] = s.check_positivity;
    s.check_positivity = ctx.boolean(solver, "check_positivity", p);
  } else if (c.task == Task::cooling) {
    ctx.only_keys(solver, p, {"abs_tol", "rel_tol", "max_panels", "minimum_half_width"});
    QuadratureOptions& q = c.quadrature.quadrature;
    if (!solver.contains("abs_tol")) solver["abs_tol"] = q.abs_tol;
    if (!solver.contains("rel_tol")) solver["rel_tol"] = q.rel_tol;
    if (!solver.contains("max_panels")) solver["max_panels"] = q.max_panels;
    if (!solver.contains("minimum_half_width")) solver["minimum_half_width"] = 0.0;
    q.abs_tol = ctx.number(solver, "abs_tol", p);
    q.rel_tol = ctx.number(solver, "rel_tol", p);
    q.max_panels = ctx.integer(solver, "max_panels", p);
    c.quadrature.minimum_half_width = angular(ctx.number(solver, "minimum_half_width", p));
    if (!(q.abs_tol > 0.0 || q.rel_tol > 0.0)) ctx.fail(p, "one of abs_tol, rel_tol must be positive");
    if (q.abs_tol < 0.0 || q.rel_tol < 0.0) ctx.fail(p, "tolerances must be >= 0");
    if (q.max_panels < 1) ctx.fail(p + "/max_panels", "'max_panels' must be >= 1");
  } else {
    ctx.only_keys(solver, p, {});
  }
}

void parse_options(const Context& ctx, json& opts, RunConfig& c) {
  const std::string p = "/options";
  if (!opts.is_object()) ctx.fail(p, "'options' must be an object");
  switch (c.task) {
    case Task::blockade: {
      ctx.only_keys(opts, p,
                    {"fail_fast", "gamma_binding", "convergence_check", "convergence_extra", "convergence_tolerance"});
      if (!opts.contains("gamma_binding")) opts["gamma_binding"] = "kappa_a";
      if (!opts.contains("convergence_check")) opts["convergence_check"] = false;
      if (!opts.contains("convergence_extra")) opts["convergence_extra"] = c.blockade.convergence_extra;
      if (!opts.contains("convergence_tolerance")) opts["convergence_tolerance"] = c.blockade.convergence_tolerance;
      c.blockade.gamma = ctx.choice<GammaBinding>(
          opts, "gamma_binding", p,
          {{"kappa_a", GammaBinding::kappa_a}, {"half_kappa_a", GammaBinding::half_kappa_a}});
      c.blockade.convergence_check = ctx.boolean(opts, "convergence_check", p);
      c.blockade.convergence_extra = ctx.integer(opts, "convergence_extra", p);
      c.blockade.convergence_tolerance = ctx.number(opts, "convergence_tolerance", p);
      if (c.blockade.convergence_extra < 1) ctx.fail(p + "/convergence_extra", "must be >= 1");
      if (!(c.blockade.convergence_tolerance > 0.0)) ctx.fail(p + "/convergence_tolerance", "must be positive");
      break;
    }
    case Task::omit:
      ctx.only_keys(opts, p, {"fail_fast", "probe_formula"});
      if (!opts.contains("probe_formula")) opts["probe_formula"] = "as_printed";
      c.probe_formula = ctx.choice<ProbeFormula>(
          opts, "probe_formula", p, {{"as_printed", ProbeFormula::as_printed}, {"derived", ProbeFormula::derived}});
      break;
    default:
      ctx.only_keys(opts, p, {"fail_fast", "self_energy"});
      if (!opts.contains("self_energy")) opts["self_energy"] = "standard";
      c.self_energy = ctx.choice<SelfEnergyForm>(
          opts, "self_energy", p,
          {{"standard", SelfEnergyForm::standard}, {"as_printed", SelfEnergyForm::as_printed}});
      break;
  }
  if (!opts.contains("fail_fast")) opts["fail_fast"] = false;
  c.fail_fast = ctx.boolean(opts, "fail_fast", p);
}

// Runs the physics-level validation on the corner points so that bad values
// are reported at load time with the key that caused them.
void check_points(const Context& ctx, const RunConfig& c, const Point& base) {
  std::vector<Point> probes{point_at(c, base, 0)};
  for (std::size_t k = 0; k < c.axes.size(); ++k) {
    for (double v : c.axes[k].internal) {
      Point pt = probes.front();
      apply(pt, c.axes[k].name, v);
      probes.push_back(pt);
    }
  }
  for (const Point& pt : probes) {
    try {
      pt.params.validate();
      if (linearized(c.task)) linearize(c, pt).validate();
      if (c.task == Task::omit && !(pt.params.probe_amplitude != 0.0)) {
        throw Error(ErrorKind::invalid_parameter, "probe_amp must be nonzero for the omit task");
      }
    } catch (const Error& e) {
      const std::string& msg = e.detail();
      const std::string key = msg.substr(0, msg.find_first_of(" :="));
      ctx.fail("/params/" + key, msg);
    }
  }
}

}  // namespace

std::size_t RunConfig::point_count() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

RunConfig config_from_json(const json& input, const SourceLines& lines, const std::string& source) {
  const Context ctx(lines, source);
  if (!input.is_object()) ctx.fail("", "config must be a JSON object");
  if (input.contains("config") && input["config"].is_object() && !input.contains("schema")) {
    // resolved dump or result sidecar
    SourceLines inner;
    for (const auto& [ptr, line] : lines) {
      if (ptr.rfind("/config", 0) == 0) inner[ptr.substr(7)] = line;
    }
    return config_from_json(input.at("config"), inner, source);
  }
  json doc = input;
  ctx.only_keys(doc, "", {"schema", "task", "label", "notes", "params", "sweep", "truncation", "solver", "options",
                          "output"});
  if (!doc.contains("schema")) ctx.fail("", "missing required key 'schema'");
  if (ctx.integer(doc, "schema", "") != config_schema_version) {
    ctx.fail("/schema", "unsupported schema version (expected " + std::to_string(config_schema_version) + ")");
  }
  if (!doc.contains("task")) ctx.fail("", "missing required key 'task'");
  RunConfig c;
  c.task = ctx.choice<Task>(doc, "task", "",
                            {{"blockade", Task::blockade},
                             {"omit", Task::omit},
                             {"spectrum", Task::spectrum},
                             {"backaction", Task::backaction},
                             {"cooling", Task::cooling}});
  if (doc.contains("label")) c.label = ctx.string(doc, "label", "");
  if (doc.contains("notes") && !doc["notes"].is_string() && !doc["notes"].is_array()) {
    ctx.fail("/notes", "'notes' must be a string or an array of strings");
  }
  if (doc.contains("output")) c.output = ctx.string(doc, "output", "");

  if (!doc.contains("params")) ctx.fail("", "missing required key 'params'");
  const json& params = ctx.object(doc, "params", "");
  if (!doc.contains("sweep")) doc["sweep"] = json::array();
  c.axes = parse_sweep(ctx, doc["sweep"], c.task);

  Point base;
  parse_params(ctx, params, c.task, base);
  auto swept = [&](const char* name) {
    return std::any_of(c.axes.begin(), c.axes.end(), [&](const SweepAxis& a) { return a.name == name; });
  };
  std::vector<const char*> required{"omega_b", "omega_c", "kappa_a", "kappa_b", "kappa_c"};
  if (c.task == Task::omit) required.push_back("probe_amp");
  for (const char* k : required) {
    if (!params.contains(k) && !swept(k)) ctx.fail("/params", std::string("missing required key '") + k + "'");
  }
  if (c.task == Task::spectrum && !swept("omega")) ctx.fail("/sweep", "the spectrum task needs an 'omega' axis");

  if (c.task == Task::blockade) {
    if (!doc.contains("truncation")) ctx.fail("", "missing required key 'truncation' (blockade task)");
    const json& t = ctx.object(doc, "truncation", "");
    ctx.only_keys(t, "/truncation", {"photon", "nanobeam", "graphene"});
    for (const char* k : {"photon", "nanobeam", "graphene"}) {
      if (!t.contains(k)) ctx.fail("/truncation", std::string("missing required key '") + k + "'");
    }
    c.truncation = {ctx.integer(t, "photon", "/truncation"), ctx.integer(t, "nanobeam", "/truncation"),
                    ctx.integer(t, "graphene", "/truncation")};
    if (c.truncation.photon < 2 || c.truncation.nanobeam < 1 || c.truncation.graphene < 1) {
      ctx.fail("/truncation", "cutoffs must be >= 1 (photon >= 2)");
    }
  } else if (doc.contains("truncation")) {
    ctx.fail("/truncation", "'truncation' only applies to the blockade task");
  }

  if (!doc.contains("solver")) doc["solver"] = json::object();
  parse_solver(ctx, doc["solver"], c);
  if (!doc.contains("options")) doc["options"] = json::object();
  parse_options(ctx, doc["options"], c);

  c.params = base.params;
  c.coupling_G = base.G;
  c.coupling_ratio = base.eps;
  check_points(ctx, c, base);
  c.resolved = std::move(doc);
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  SourceLines lines;
  const json doc = parse_json_strict(text, source, &lines);
  return config_from_json(doc, lines, source);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::configuration, path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// ---- running -----------------------------------------------------------------------------

namespace {

Point base_point(const RunConfig& c) {
  Point p;
  p.params = c.params;
  p.G = c.coupling_G;
  p.eps = c.coupling_ratio;
  return p;
}

struct Outcome {
  std::vector<double> values;
  std::string error;
  SteadyStateReport report;
  bool drift_unstable = false;
  bool weak_coupling = true;
  bool bistable = false;
};

Outcome evaluate(const RunConfig& c, const Point& pt) {
  Outcome o;
  switch (c.task) {
    case Task::blockade: {
      const BlockadePoint bp = blockade_point(pt.params, c.truncation, c.blockade.solver);
      const double chi_t = kerr(pt.params).chi_t;
      const double gamma = bind_gamma(pt.params, c.blockade.gamma);
      const double d = pt.params.detuning;
      o.values = {bp.g2, bp.n_photon, g2_analytic(d, chi_t, gamma), g2_analytic_flipped(d, chi_t, gamma)};
      o.report = bp.report;
      break;
    }
    case Task::omit: {
      const MeanFields f = mean_field_steady(pt.params);
      const ProbeResponse r = probe_response(pt.params, f, c.probe_formula);
      o.values = {r.mu_p, r.nu_p, r.A_minus.real(), r.A_minus.imag(), f.n_cav};
      o.bistable = f.bistable;
      break;
    }
    case Task::spectrum: {
      const LinearizedParams lp = linearize(c, pt);
      const SpectrumPoint s = sbb_closed(lp, pt.omega);
      o.values = {s.total, s.opt, s.th_b, s.th_c, sbb_langevin(lp, pt.omega)};
      o.drift_unstable = !stability(lp).drift_stable;
      break;
    }
    case Task::backaction: {
      const LinearizedParams lp = linearize(c, pt);
      const BackactionResult b = backaction(lp);
      const Stability st = stability(lp);
      o.values = {ordinary(b.delta_omega_b), ordinary(b.gamma_b_opt), ordinary(b.delta_omega_c),
                  ordinary(b.gamma_c_opt),   ordinary(b.omega_b_eff), ordinary(b.kappa_b_eff),
                  ordinary(b.omega_c_eff),   ordinary(b.kappa_c_eff), b.weak_coupling ? 1.0 : 0.0,
                  ordinary(st.drift_max_real)};
      o.weak_coupling = b.weak_coupling;
      o.drift_unstable = !st.drift_stable;
      break;
    }
    case Task::cooling: {
      const LinearizedParams lp = linearize(c, pt);
      const Stability st = stability(lp);
      const PhononNumber n = phonon_number(lp, c.quadrature);
      o.values = {n.n_m, n.error, ordinary(st.kappa_b_eff), ordinary(st.kappa_c_eff), ordinary(st.drift_max_real)};
      o.drift_unstable = !st.drift_stable;
      break;
    }
  }
  return o;
}

std::string point_label(const RunConfig& c, std::size_t index) {
  std::string out = "row " + std::to_string(index);
  std::size_t rest = index;
  std::vector<std::string> parts(c.axes.size());
  for (std::size_t k = c.axes.size(); k-- > 0;) {
    const auto& ax = c.axes[k];
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s=%.9g", ax.column.c_str(), ax.values[rest % ax.values.size()]);
    parts[k] = buf;
    rest /= ax.values.size();
  }
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? ", " : " (") + parts[k];
  if (!parts.empty()) out += ")";
  return out;
}

}  // namespace

ScanTable run_sweep(const RunConfig& c, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> columns;
  for (const auto& a : c.axes) columns.push_back(a.column);
  for (auto& col : task_columns(c.task)) columns.push_back(col);
  ScanTable table(columns);

  const bool fail_fast = c.fail_fast || options.fail_fast;
  const std::size_t n = c.point_count();
  const Point base = base_point(c);
  std::vector<Outcome> out(n);
  parallel_for(n, options.workers, [&](std::size_t i) {
    try {
      out[i] = evaluate(c, point_at(c, base, i));
    } catch (const Error& e) {
      if (fail_fast) throw Error(e.kind(), point_label(c, i) + ": " + e.detail());
      out[i].error = point_label(c, i) + ": " + e.what();
    }
  });

  std::size_t drift_unstable = 0, outside_gate = 0, bistable = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    std::size_t rest = i;
    std::vector<double> lead(c.axes.size());
    for (std::size_t k = c.axes.size(); k-- > 0;) {
      lead[k] = c.axes[k].values[rest % c.axes[k].values.size()];
      rest /= c.axes[k].values.size();
    }
    if (!out[i].error.empty()) {
      table.add_failed_row(lead, out[i].error);
      continue;
    }
    row = lead;
    row.insert(row.end(), out[i].values.begin(), out[i].values.end());
    table.add_row(row);
    drift_unstable += out[i].drift_unstable;
    outside_gate += !out[i].weak_coupling;
    bistable += out[i].bistable;
  }

  json& meta = table.metadata();
  meta["task"] = to_string(c.task);
  if (!c.label.empty()) meta["label"] = c.label;
  meta["points"] = n;
  meta["flagged_rows"] = table.flagged_rows();

  switch (c.task) {
    case Task::blockade: {
      int iterations = 0;
      double residual = 0.0, min_eig = 0.0;
      for (const auto& o : out) {
        iterations = std::max(iterations, o.report.iterations);
        residual = std::max(residual, o.report.residual);
        min_eig = std::min(min_eig, o.report.min_eigenvalue);
      }
      meta["truncation"] = {c.truncation.photon, c.truncation.nanobeam, c.truncation.graphene};
      meta["solver"] = {{"max_iterations", iterations},
                        {"max_relative_residual", residual},
                        {"min_eigenvalue", min_eig}};
      if (std::abs(c.params.drive) > 0.1 * c.params.kappa_a) {
        table.warn("drive |Omega| is not small against kappa_a; the weak-drive closed form does not apply");
      }
      if (c.blockade.convergence_check && n > 0) {
        std::vector<SystemParams> pts(n);
        std::vector<double> g2(n);
        for (std::size_t i = 0; i < n; ++i) {
          pts[i] = point_at(c, base, i).params;
          g2[i] = out[i].error.empty() ? out[i].values[0] : std::nan("");
        }
        BlockadeScanOptions opts = c.blockade;
        opts.workers = options.workers;
        try {
          const TruncationCheck check = truncation_check(pts, g2, c.truncation, opts);
          meta["convergence"] = check.report;
          if (!check.converged) {
            table.warn("truncation convergence check failed: g2 changes by more than the tolerance");
          }
        } catch (const Error& e) {
          table.warn(std::string("truncation convergence check could not run: ") + e.what());
        }
      }
      break;
    }
    case Task::omit:
      meta["probe_formula"] = to_string(c.probe_formula);
      if (bistable) table.warn(std::to_string(bistable) + " point(s) are mean-field bistable; the lowest branch is used");
      if (std::abs(c.params.probe_amplitude) > 0.1 * std::abs(c.params.drive)) {
        table.warn("probe amplitude is not small against the drive; first-order response may not apply");
      }
      break;
    default:
      meta["self_energy"] = to_string(c.self_energy);
      if (drift_unstable) {
        table.warn(std::to_string(drift_unstable) +
                   " point(s) have a linearized drift eigenvalue with positive real part");
      }
      if (outside_gate) {
        table.warn(std::to_string(outside_gate) + " point(s) lie outside the weak-coupling validity gate");
      }
      break;
  }
  if (table.flagged_rows()) table.warn(std::to_string(table.flagged_rows()) + " point(s) failed and are flagged");

  meta["config"] = c.resolved;
  meta["version"] = OMX2D_VERSION;
  meta["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

json resolved_dump(const RunConfig& c) {
  json derived = json::object();
  const Point pt = point_at(c, base_point(c), 0);
  const SystemParams& s = pt.params;
  const KerrCoefficients k = kerr(s);
  const std::string hz = hz_suffix;
  derived["point"] = "first grid point";
  derived["chi_b" + hz] = ordinary(k.chi_b);
  derived["chi_c" + hz] = ordinary(k.chi_c);
  derived["chi_t" + hz] = ordinary(k.chi_t);
  derived["delta" + hz] = ordinary(s.mechanical_detuning());
  const Occupancies n = s.occupancies();
  derived["occupancies"] = {{"n_a", n.photon}, {"n_b", n.nanobeam}, {"n_c", n.graphene}};
  derived["grid_points"] = c.point_count();
  if (linearized(c.task)) {
    const LinearizedParams lp = linearize(c, pt);
    derived["abs_G" + hz] = ordinary(std::abs(lp.G));
    derived["coupling_ratio"] = lp.coupling_ratio;
    if (lp.alpha) derived["abs_alpha"] = std::abs(*lp.alpha);
    const Stability st = stability(lp);
    derived["stable"] = st.stable;
    derived["drift_max_real" + hz] = ordinary(st.drift_max_real);
  }
  if (c.task == Task::blockade) derived["gamma_a" + hz] = ordinary(bind_gamma(s, c.blockade.gamma));
  return {{"config", c.resolved}, {"derived", derived}};
}

json sidecar(const RunConfig& c, const ScanTable& table) {
  json out = table.metadata();
  out["derived"] = resolved_dump(c)["derived"];
  out["columns"] = table.columns();
  out["rows"] = table.row_count();
  return out;
}

}  // namespace omx2d
