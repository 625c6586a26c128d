#include "cli.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prw/prw.hpp"

namespace prw::cli {
namespace {

struct Options {
  std::string command;
  std::uint64_t seed = 1;
  std::string out;
  unsigned threads = 1;
  std::int64_t budget_terms = Budget{}.terms;
  double budget_seconds = Budget{}.seconds;
  std::string config;

  std::string model;    // JSON text or @file
  std::string model_b;  // couple
  std::string tree;     // graft
  std::string grid;     // sweep
  std::string journal;  // sweep
  std::string path_out;
  std::string mode = "pmf";
  std::int64_t steps = 100'000;
  std::int64_t replicas = 1;
  std::int64_t n = 30;
  std::int64_t n_max = 100;
  int points_per_decade = 0;
  std::int64_t pairs = 10;
  std::int64_t run_cap = 100;
  std::int64_t dominance_horizon = 10'000;
  bool store_path = false;
  bool closed_form = false;

  // Values taken from a config file instead of flags.
  std::optional<json> model_json, model_b_json, tree_json, grid_json;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

json load_json_arg(const std::string& arg, const std::optional<json>& from_config, const char* what) {
  if (from_config) return *from_config;
  if (arg.empty()) throw InvalidParameter(std::string("missing --") + what);
  if (arg[0] == '@') return read_json_file(arg.substr(1));
  return parse_json_text(arg, std::string("--") + what);
}

// Output sink: the --out file when given, else the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw Error("cannot write " + path);
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

Budget budget_of(const Options& o) {
  Budget b;
  b.terms = o.budget_terms;
  b.seconds = o.budget_seconds;
  return b;
}

void apply_config(Options& o) {
  if (o.config.empty()) return;
  const json cfg = read_json_file(o.config);
  detail::Reader r(cfg, o.config);
  if (!cfg.is_object()) r.fail("config must be a JSON object");
  const auto version = r.integer_or("schema_version", kSchemaVersion);
  if (version != kSchemaVersion)
    r.at("schema_version").fail("unsupported schema version " + std::to_string(version));
  static const std::set<std::string> known{
      "schema_version", "command",  "seed",    "out",       "threads",    "budget_terms",      "budget_seconds",
      "model",          "model_b",  "tree",    "grid",      "journal",    "path_out",          "mode",
      "steps",          "replicas", "n",       "n_max",     "points_per_decade", "pairs", "run_cap",
      "dominance_horizon", "store_path", "closed_form", "description"};
  for (const auto& [k, v] : cfg.items())
    if (!known.count(k)) r.fail("unknown field '" + k + "'");
  if (r.has("command")) {
    const auto c = r.at("command").string();
    if (!o.command.empty() && o.command != c)
      r.at("command").fail("config command '" + c + "' conflicts with subcommand '" + o.command + "'");
    o.command = c;
  }
  if (r.has("seed")) o.seed = r.at("seed").unsigned_integer();
  if (r.has("out")) o.out = r.at("out").string();
  if (r.has("threads")) o.threads = static_cast<unsigned>(r.at("threads").integer());
  if (r.has("budget_terms")) o.budget_terms = r.at("budget_terms").integer();
  if (r.has("budget_seconds")) o.budget_seconds = r.at("budget_seconds").number();
  if (r.has("model")) o.model_json = cfg["model"];
  if (r.has("model_b")) o.model_b_json = cfg["model_b"];
  if (r.has("tree")) o.tree_json = cfg["tree"];
  if (r.has("grid")) o.grid_json = cfg["grid"];
  if (r.has("journal")) o.journal = r.at("journal").string();
  if (r.has("path_out")) o.path_out = r.at("path_out").string();
  if (r.has("mode")) o.mode = r.at("mode").string();
  if (r.has("steps")) o.steps = r.at("steps").integer();
  if (r.has("replicas")) o.replicas = r.at("replicas").integer();
  if (r.has("n")) o.n = r.at("n").integer();
  if (r.has("n_max")) o.n_max = r.at("n_max").integer();
  if (r.has("points_per_decade")) o.points_per_decade = static_cast<int>(r.at("points_per_decade").integer());
  if (r.has("pairs")) o.pairs = r.at("pairs").integer();
  if (r.has("run_cap")) o.run_cap = r.at("run_cap").integer();
  if (r.has("dominance_horizon")) o.dominance_horizon = r.at("dominance_horizon").integer();
  if (r.has("store_path")) o.store_path = r.at("store_path").boolean();
  if (r.has("closed_form")) o.closed_form = r.at("closed_form").boolean();
}

// ---------------------------------------------------------------------------

int cmd_classify(const Options& o, std::ostream& out) {
  const auto m = model_from_json(load_json_arg(o.model, o.model_json, "model"));
  json evidence;
  Label label = Label::Inconclusive;
  if (o.closed_form) {
    const auto cf = classify_closed_form(m);
    if (!cf) throw InvalidParameter("model has no closed-form label");
    label = cf->label;
    evidence = {{"label", std::string(to_string(label))}, {"rules", {cf->rule}}, {"note", cf->note}};
  } else {
    const auto c = classify(m, budget_of(o));
    label = c.label;
    evidence = classification_json(c);
  }
  evidence["model"] = descriptor(m);
  out << to_string(label) << "\n";
  if (o.out.empty()) {
    out << evidence.dump() << "\n";
  } else {
    Sink s(o.out, out);
    *s << evidence.dump(2) << "\n";
  }
  return label == Label::Inconclusive ? kExitInconclusive : kExitOk;
}

int cmd_tails(const Options& o, std::ostream& out) {
  const auto m = model_from_json(load_json_arg(o.model, o.model_json, "model"));
  if (o.n_max < 1) throw InvalidParameter("--n-max must be >= 1");
  std::vector<std::int64_t> ns;
  if (o.points_per_decade > 0) {
    ns = log_grid(o.n_max, o.points_per_decade);
  } else {
    for (std::int64_t n = 1; n <= o.n_max; ++n) ns.push_back(n);
  }
  Sink s(o.out, out);
  *s << "n,alpha_up,alpha_down,tail_up,tail_down,trunc_mean_up,trunc_mean_down\n";
  for (auto n : ns) {
    *s << n << ',' << fmt(m.alpha(Direction::Up, n)) << ',' << fmt(m.alpha(Direction::Down, n)) << ','
       << fmt(tail(m, Direction::Up, n)) << ',' << fmt(tail(m, Direction::Down, n)) << ','
       << fmt(truncated_mean(m, Direction::Up, n)) << ',' << fmt(truncated_mean(m, Direction::Down, n)) << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const auto m = model_from_json(load_json_arg(o.model, o.model_json, "model"));
  if (o.replicas < 1) throw InvalidParameter("--replicas must be >= 1");
  if (o.store_path && o.path_out.empty() && o.out.empty())
    throw InvalidParameter("--store-path needs --out or --path-out");
  SimulationOptions so;
  so.store_path = o.store_path;
  so.store_runs = false;
  std::vector<TrajectorySummary> res(static_cast<std::size_t>(o.replicas));
  parallel_for(res.size(), o.threads, [&](std::size_t i) {
    res[i] = simulate(m, o.steps, replica_seed(o.seed, i), so);
  });
  Sink s(o.out, out);
  *s << "replica,seed,final_position,drift_estimate,sign_changes_M,returns_to_origin,min_pos,max_pos\n";
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto& r = res[i];
    *s << i << ',' << r.seed << ',' << r.final_position << ','
       << fmt(static_cast<double>(r.final_position) / static_cast<double>(r.steps)) << ',' << r.sign_changes_M << ','
       << r.returns_to_origin << ',' << r.min_pos << ',' << r.max_pos << "\n";
  }
  if (o.store_path) {
    const std::string path = o.path_out.empty() ? o.out + ".paths.csv" : o.path_out;
    std::ofstream p(path, std::ios::binary);
    if (!p) throw Error("cannot write " + path);
    p << "replica,t,position\n";
    for (std::size_t i = 0; i < res.size(); ++i)
      for (std::size_t t = 0; t < res[i].positions->size(); ++t) p << i << ',' << t << ',' << (*res[i].positions)[t] << "\n";
  }
  return kExitOk;
}

int cmd_couple(const Options& o, std::ostream& out, std::ostream& err) {
  const auto a = model_from_json(load_json_arg(o.model, o.model_json, "model"));
  const auto b = model_from_json(load_json_arg(o.model_b, o.model_b_json, "model-b"));
  if (o.replicas < 1) throw InvalidParameter("--replicas must be >= 1");
  SimulationOptions so;
  so.store_runs = false;
  std::vector<CouplingResult> res(static_cast<std::size_t>(o.replicas));
  parallel_for(res.size(), o.threads, [&](std::size_t i) {
    res[i] = couple(a, b, o.steps, replica_seed(o.seed, i), so);
  });
  Sink s(o.out, out);
  *s << "replica,seed,violations,first_violation,final_a,final_b,identical\n";
  std::int64_t total = 0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto& r = res[i];
    total += r.violations;
    *s << i << ',' << r.a.seed << ',' << r.violations << ','
       << (r.first_violation ? std::to_string(*r.first_violation) : std::string()) << ',' << r.a.final_position << ','
       << r.b.final_position << ',' << (r.identical ? 1 : 0) << "\n";
  }
  err << "tail_dominance(n<=" << o.dominance_horizon << "): " << (tail_dominance(a, b, o.dominance_horizon) ? "yes" : "no")
      << ", violations: " << total << "\n";
  return kExitOk;
}

int cmd_oracle(const Options& o, std::ostream& out) {
  const auto m = model_from_json(load_json_arg(o.model, o.model_json, "model"));
  Sink s(o.out, out);
  if (o.mode == "return") {
    const double p = exact_return_prob(m, o.n);
    *s << "# " << json{{"mode", "return"}, {"horizon", o.n}, {"retained_mass", 1.0}}.dump() << "\n";
    *s << "horizon,return_probability\n" << o.n << ',' << fmt(p) << "\n";
    return kExitOk;
  }
  ExactDistribution e;
  if (o.mode == "pmf") e = exact_pmf(m, o.n);
  else if (o.mode == "skeleton") e = exact_skeleton_pmf(m, o.pairs, o.run_cap);
  else throw InvalidParameter("--mode must be pmf, skeleton or return");
  json header{{"mode", o.mode}, {"horizon", e.horizon}, {"retained_mass", e.retained_mass}, {"total", e.total()}};
  if (o.mode == "skeleton") header["run_cap"] = o.run_cap;
  *s << "# " << header.dump() << "\n";
  *s << "position,probability\n";
  for (std::int64_t x = e.min_position; x <= e.max_position(); ++x) {
    const double p = e.probability(x);
    if (p != 0.0) *s << x << ',' << fmt(p) << "\n";
  }
  return kExitOk;
}

int cmd_graft(const Options& o, std::ostream& out) {
  const auto tree = graft_from_json(load_json_arg(o.tree, o.tree_json, "tree"));
  const auto a = assess_graft(tree, budget_of(o));
  const auto bounds = graft_bounds(tree);
  SimulationOptions so;
  so.store_runs = false;
  const auto sim = simulate_grafted(tree, o.steps, o.seed, so);
  json leaves = json::array();
  for (const auto& [k, stats] : sim.leaves) {
    std::vector<double> qs;
    tree.grafts.at(k).leaves(qs);
    for (std::size_t i = 0; i < stats.size(); ++i)
      leaves.push_back({{"dir", std::string(to_string(k.dir))},
                        {"n", k.n},
                        {"leaf", i},
                        {"q", qs[i]},
                        {"visits", stats[i].visits},
                        {"switches", stats[i].switches},
                        {"frequency", stats[i].frequency()}});
  }
  json j{{"tree", graft_to_json(tree)},
         {"bounds", {{"check", descriptor(bounds.check)}, {"hat", descriptor(bounds.hat)}}},
         {"check", classification_json(a.check)},
         {"hat", classification_json(a.hat)},
         {"implied", a.implied ? json(std::string(to_string(*a.implied))) : json(nullptr)},
         {"simulation", {{"steps", o.steps}, {"seed", o.seed}, {"final_position", sim.summary.final_position}, {"leaves", leaves}}}};
  out << (a.implied ? to_string(*a.implied) : std::string_view("Inconclusive")) << "\n";
  if (o.out.empty()) {
    out << j.dump() << "\n";
  } else {
    Sink s(o.out, out);
    *s << j.dump(2) << "\n";
  }
  return a.implied ? kExitOk : kExitInconclusive;
}

// ---------------------------------------------------------------------------
// Sweep

struct GridPoint {
  std::vector<std::string> coords;
  json model;
};

struct Grid {
  std::vector<std::string> names;
  std::vector<GridPoint> points;
};

Grid expand_grid(const json& spec) {
  detail::Reader r(spec, "$grid");
  Grid g;
  if (r.has("points")) {
    g.names = {"model"};
    const auto ps = r.at("points");
    for (std::size_t i = 0; i < ps.size(); ++i) g.points.push_back({{ps.at(i).value().dump()}, ps.at(i).value()});
    return g;
  }
  const json base = r.at("base").value();
  const auto axes = r.at("axes");
  struct Axis {
    nlohmann::json_pointer<std::string> ptr;
    std::vector<json> values;
  };
  std::vector<Axis> ax;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const auto a = axes.at(i);
    const auto path = a.at("path").string();
    Axis x;
    try {
      x.ptr = nlohmann::json_pointer<std::string>(path);
    } catch (const json::exception& e) {
      a.at("path").fail(e.what());
    }
    if (!base.contains(x.ptr)) a.at("path").fail("path '" + path + "' not present in base model");
    const auto vs = a.at("values");
    for (std::size_t k = 0; k < vs.size(); ++k) x.values.push_back(vs.at(k).value());
    g.names.push_back(a.string_or("name", path));
    ax.push_back(std::move(x));
  }
  std::size_t total = 1;
  for (const auto& a : ax) total *= a.values.size();
  // Row-major order; the last axis varies fastest.
  for (std::size_t idx = 0; idx < total; ++idx) {
    GridPoint p;
    p.model = base;
    std::size_t rem = idx;
    std::vector<std::size_t> digit(ax.size());
    for (std::size_t k = ax.size(); k-- > 0;) {
      digit[k] = rem % ax[k].values.size();
      rem /= ax[k].values.size();
    }
    for (std::size_t k = 0; k < ax.size(); ++k) {
      const auto& v = ax[k].values[digit[k]];
      p.model[ax[k].ptr] = v;
      p.coords.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    g.points.push_back(std::move(p));
  }
  return g;
}

std::string series_cell(const std::optional<SeriesVerdict>& v) {
  return v ? std::string(to_string(v->status)) : std::string();
}

std::string sweep_row(std::size_t idx, const GridPoint& p, const Options& o) {
  std::ostringstream row;
  row << idx;
  for (const auto& c : p.coords) row << ',' << csv_field(c);
  try {
    const auto m = model_from_json(p.model);
    if (o.closed_form) {
      if (auto cf = classify_closed_form(m)) {
        row << ',' << to_string(cf->label) << ",,,,,,," << csv_field(cf->rule) << ",";
        return row.str();
      }
    }
    const auto c = classify(m, budget_of(o));
    const auto& ds = c.drift.drift_S;
    std::string drift = detail::drift_json(ds).is_string() ? detail::drift_json(ds).get<std::string>() : fmt(ds.value);
    std::string rules;
    for (const auto& x : c.rules) rules += (rules.empty() ? "" : ";") + x;
    row << ',' << to_string(c.label) << ',' << to_string(c.regime) << ',' << drift << ',' << series_cell(c.j_ud) << ','
        << series_cell(c.j_du) << ',' << series_cell(c.k_ud) << ',' << series_cell(c.k_du) << ',' << csv_field(rules)
        << ',';
  } catch (const std::exception& e) {
    row << ",,,,,,,,," << csv_field(e.what());
  }
  return row.str();
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const json spec = load_json_arg(o.grid, o.grid_json, "grid");
  const Grid g = expand_grid(spec);
  const std::string fingerprint = "# grid " + std::to_string(std::hash<std::string>{}(spec.dump()));

  std::vector<std::optional<std::string>> rows(g.points.size());
  std::unique_ptr<std::ofstream> journal;
  if (!o.journal.empty()) {
    std::ifstream in(o.journal);
    std::string line;
    bool first = true;
    while (in && std::getline(in, line)) {
      if (first) {
        if (line != fingerprint) throw Error("journal " + o.journal + " belongs to a different grid");
        first = false;
        continue;
      }
      const auto comma = line.find(',');
      std::size_t idx = 0;
      const auto r = std::from_chars(line.data(), line.data() + (comma == std::string::npos ? line.size() : comma), idx);
      if (r.ec != std::errc{} || idx >= rows.size()) continue;  // torn trailing write
      rows[idx] = line;
    }
    const bool fresh = first;
    journal = std::make_unique<std::ofstream>(o.journal, std::ios::app | std::ios::binary);
    if (!*journal) throw Error("cannot write " + o.journal);
    if (fresh) *journal << fingerprint << "\n" << std::flush;
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!rows[i]) pending.push_back(i);
  std::mutex mu;
  parallel_for(pending.size(), o.threads, [&](std::size_t k) {
    const std::size_t i = pending[k];
    auto row = sweep_row(i, g.points[i], o);
    std::lock_guard<std::mutex> lock(mu);
    if (journal) *journal << row << "\n" << std::flush;
    rows[i] = std::move(row);
  });

  Sink s(o.out, out);
  *s << "index";
  for (const auto& n : g.names) *s << ',' << csv_field(n);
  *s << ",label,regime,drift_S,J_ud,J_du,K_ud,K_du,rules,error\n";
  std::size_t conclusive = 0, inconclusive = 0;
  for (const auto& r : rows) {
    *s << *r << "\n";
    if (r->find(",Inconclusive,") != std::string::npos) ++inconclusive;
    else if (r->back() == ',') ++conclusive;
  }
  return (inconclusive > 0 && conclusive == 0) ? kExitInconclusive : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Persistent random walks on the double comb"};
  app.require_subcommand(0, 1);
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--out", o.out, "output file (default stdout)");
  app.add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app.add_option("--budget-terms", o.budget_terms, "series/mean term budget");
  app.add_option("--budget-seconds", o.budget_seconds, "series wall-clock budget");
  app.add_option("--config", o.config, "JSON config; its fields override flags");

  auto model_opt = [&](CLI::App* s) { s->add_option("--model", o.model, "model descriptor JSON or @file"); };
  auto* classify_cmd = app.add_subcommand("classify", "recurrence/transience verdict with evidence");
  model_opt(classify_cmd);
  classify_cmd->add_flag("--closed-form", o.closed_form, "use the attached closed-form label");
  auto* tails_cmd = app.add_subcommand("tails", "alpha, tails and truncated means as CSV");
  model_opt(tails_cmd);
  tails_cmd->add_option("--n-max", o.n_max, "largest n");
  tails_cmd->add_option("--points-per-decade", o.points_per_decade, "log grid density (0 = every n)");
  auto* sim_cmd = app.add_subcommand("simulate", "replicated trajectories");
  model_opt(sim_cmd);
  sim_cmd->add_option("--steps", o.steps);
  sim_cmd->add_option("--replicas", o.replicas);
  sim_cmd->add_flag("--store-path", o.store_path, "also write every position");
  sim_cmd->add_option("--path-out", o.path_out, "path CSV (default <out>.paths.csv)");
  auto* couple_cmd = app.add_subcommand("couple", "monotone coupling of two models");
  model_opt(couple_cmd);
  couple_cmd->add_option("--model-b", o.model_b, "second model");
  couple_cmd->add_option("--steps", o.steps);
  couple_cmd->add_option("--replicas", o.replicas);
  couple_cmd->add_option("--dominance-horizon", o.dominance_horizon);
  auto* oracle_cmd = app.add_subcommand("oracle", "exact laws by enumeration");
  model_opt(oracle_cmd);
  oracle_cmd->add_option("--mode", o.mode, "pmf | skeleton | return");
  oracle_cmd->add_option("--n", o.n, "horizon");
  oracle_cmd->add_option("--pairs", o.pairs);
  oracle_cmd->add_option("--run-cap", o.run_cap);
  auto* graft_cmd = app.add_subcommand("graft", "bounds, verdicts and simulation for a grafted tree");
  graft_cmd->add_option("--tree", o.tree, "grafted tree JSON or @file");
  graft_cmd->add_option("--steps", o.steps);
  auto* sweep_cmd = app.add_subcommand("sweep", "classification over a parameter grid");
  sweep_cmd->add_option("--grid", o.grid, "grid spec JSON or @file");
  sweep_cmd->add_option("--journal", o.journal, "completed-row journal for resuming");
  sweep_cmd->add_flag("--closed-form", o.closed_form, "prefer closed-form labels");
  for (auto* s : app.get_subcommands({})) s->fallthrough();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::Success&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  for (auto* s : app.get_subcommands()) o.command = s->get_name();

  try {
    apply_config(o);
    if (o.command == "classify") return cmd_classify(o, out);
    if (o.command == "tails") return cmd_tails(o, out);
    if (o.command == "simulate") return cmd_simulate(o, out);
    if (o.command == "couple") return cmd_couple(o, out, err);
    if (o.command == "oracle") return cmd_oracle(o, out);
    if (o.command == "graft") return cmd_graft(o, out);
    if (o.command == "sweep") return cmd_sweep(o, out);
    err << "error: no command given (use a subcommand or a config with \"command\")\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace prw::cli
