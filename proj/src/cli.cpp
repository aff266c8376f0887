#include "mkinf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "mkinf/barycenter.hpp"
#include "mkinf/errors.hpp"
#include "mkinf/io.hpp"
#include "mkinf/process.hpp"
#include "mkinf/svg.hpp"

namespace fs = std::filesystem;

namespace mkinf::cli {

using json = nlohmann::json;

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> defaults{
      {"fixed_point_tol", 1e-9},  // free-support stopping rule
      {"certify_tol", oracle::kCertifyTolerance},
      {"residual_tol", 1e-6},
      {"fidelity_tol", kFidelityTolerance},
      {"identity_tol", 1e-9},
  };
  return defaults;
}

double tolerance(const RunConfig& config, const std::string& name) {
  if (auto it = config.tolerances.find(name); it != config.tolerances.end()) return it->second;
  return default_tolerances().at(name);
}

void check_config(const RunConfig& config) {
  static const std::vector<std::string> commands{"barycenter", "process", "reroot", "validate", "plot"};
  if (std::find(commands.begin(), commands.end(), config.command) == commands.end())
    throw UsageError("unknown command \"" + config.command + "\"");
  for (const auto& [name, value] : config.tolerances) {
    if (!default_tolerances().count(name)) throw UsageError("unknown tolerance \"" + name + "\"");
    if (!(value > 0.0) || !std::isfinite(value)) throw UsageError("tolerance " + name + " must be positive");
  }
  const bool needs_schedule = config.command == "barycenter" || config.command == "process";
  if (needs_schedule && config.schedule.empty()) throw UsageError(config.command + " needs --schedule");
  if (config.command != "validate" && config.input_path.empty())
    throw UsageError(config.command + " needs an input file");
  if (config.command == "reroot" && !config.t0) throw UsageError("reroot needs --t0");
  if (config.instances < 1) throw UsageError("--count must be positive");
}

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Barycenters of measure curves and the optimal MK-infinity process"};
  app.require_subcommand(1);

  RunConfig config;
  std::vector<std::string> tols;
  std::string strategy = "uniform";

  auto input = [&](CLI::App* sub, const std::string& flag, const std::string& what) {
    sub->add_option(flag, config.input_path, what);
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", config.output_path, "output directory");
    sub->add_option("--tol", tols, "named tolerance NAME=VALUE (repeatable)");
    sub->add_option("--seed", config.seed, "seed for generated instances");
  };
  auto solving = [&](CLI::App* sub) {
    input(sub, "--curve", "curve JSON");
    sub->add_option("--schedule", config.schedule, "grid sizes N1,N2,...")->delimiter(',');
    sub->add_option("--strategy", strategy, "uniform | prefer_ak")
        ->check(CLI::IsMember({"uniform", "prefer_ak"}));
  };

  auto* bary = app.add_subcommand("barycenter", "curve barycenter and convergence log");
  solving(bary);
  common(bary);
  auto* proc = app.add_subcommand("process", "optimal process, cost report and sample paths");
  solving(proc);
  common(proc);
  auto* rr = app.add_subcommand("reroot", "rewrite a process over the law at time t0");
  input(rr, "--process", "process JSON");
  rr->add_option("--t0", config.t0, "re-rooting time");
  common(rr);
  auto* val = app.add_subcommand("validate", "oracle suite on tiny instances");
  input(val, "--instances", "directory of instance JSON files");
  val->add_option("--count", config.instances, "random instances when no directory is given");
  common(val);
  auto* plot = app.add_subcommand("plot", "SVG of a process or measure file");
  input(plot, "--process", "process JSON");
  input(plot, "--measure", "measure JSON");
  common(plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  config.command = app.get_subcommands().front()->get_name();
  config.strategy = strategy == "prefer_ak" ? SamplingStrategy::prefer_ak : SamplingStrategy::uniform;
  for (const auto& t : tols) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError("--tol expects NAME=VALUE, got \"" + t + "\"");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(t.substr(eq + 1), &used);
      if (used != t.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("bad tolerance value in \"" + t + "\"");
    }
    config.tolerances[t.substr(0, eq)] = v;
  }
  check_config(config);
  return config;
}

// ---------------------------------------------------------------------------

namespace {

std::string out_file(const RunConfig& config, const std::string& name) {
  return (fs::path(config.output_path) / name).string();
}

template <class F>
std::string to_text(F&& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

json check(const std::string& name, double residual, double tol) {
  return json{{"name", name}, {"passed", residual <= tol}, {"residual", residual}, {"tolerance", tol}};
}

json skipped(const std::string& name, const std::string& reason) {
  return json{{"name", name}, {"passed", true}, {"skipped", reason}};
}

bool all_exact(const std::vector<TransportMap>& maps) {
  return std::all_of(maps.begin(), maps.end(),
                     [](const TransportMap& m) { return m.kind() != MapKind::barycentric_projection; });
}

// Exact optimum, then one pass of the splitting iteration so every
// marginal is reached by a map.
BarycenterResult solve_instance(const oracle::MultiMarginalInstance& inst, double fp_tol) {
  BarycenterProblem problem{inst.marginals, inst.weights, FreeSupport{}};
  FreeSupportOptions opts;
  opts.tolerance = fp_tol;
  if (inst.marginals.front().dim() > 1) {
    problem.mode = FixedGrid{weighted_average_grid(inst.marginals, inst.weights)};
    const auto exact = finite_barycenter(problem, opts);
    problem.mode = FreeSupport{exact.measure};
  }
  return finite_barycenter(problem, opts);
}

json validate_instance(const oracle::MultiMarginalInstance& inst, const RunConfig& config) {
  const double certify_tol = tolerance(config, "certify_tol");
  const double residual_tol = tolerance(config, "residual_tol");
  const double identity_tol = tolerance(config, "identity_tol");
  const std::size_t m = inst.marginals.size();
  json checks = json::array();

  const auto bary = solve_instance(inst, tolerance(config, "fixed_point_tol"));
  const auto cert = oracle::certify(inst, bary, certify_tol);
  checks.push_back(check("certify_value", cert.value_gap, certify_tol));
  checks.push_back(check("certify_law", cert.law_w2, certify_tol));

  if (all_exact(bary.maps))
    checks.push_back(check("fixed_point", bary.fixed_point_residual, residual_tol));
  else
    checks.push_back(skipped("fixed_point", "barycentric projection maps"));

  const bool equal_weights = std::all_of(inst.weights.begin(), inst.weights.end(), [&](double w) {
    return std::abs(w - inst.weights.front()) <= 1e-15;
  });
  if (m >= 2 && equal_weights) {
    const double pairwise = oracle::solve_multimarginal(inst, oracle::MultiMarginalCost::pairwise_sum).value;
    const double expected = 2.0 * static_cast<double>(m * m) * cert.oracle_value;
    checks.push_back(check("pairwise_equals_2m2_variance", std::abs(pairwise - expected),
                           identity_tol * std::max(1.0, std::abs(pairwise))));
  } else {
    checks.push_back(skipped("pairwise_equals_2m2_variance", "unequal weights"));
  }

  double enum_gap = 0.0;
  bool enumerated = false;
  for (std::size_t i = 1; i < m; ++i) {
    const auto& a = inst.marginals[0];
    const auto& b = inst.marginals[i];
    if (a.size() * b.size() > oracle::kMaxEnumerationCells) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : oracle::enumerate_couplings(a, b)) best = std::min(best, c.cost());
    enum_gap = std::max(enum_gap, std::abs(best - w2(a, b).cost));
    enumerated = true;
  }
  if (enumerated)
    checks.push_back(check("w2_vs_enumeration", enum_gap, identity_tol));
  else
    checks.push_back(skipped("w2_vs_enumeration", "single marginal"));

  TimeGrid grid;
  for (std::size_t j = 0; j < m; ++j) {
    grid.nodes.push_back(static_cast<double>(j + 1) / static_cast<double>(m));
    grid.weights.push_back(inst.weights[j]);
    grid.sample_index.push_back(j);
  }
  const auto proc = build_process(bary, grid, inst.marginals);
  const auto cost = mk_cost(proc);
  checks.push_back(check("cost_identity",
                         std::abs(cost.mk_cost - (2.0 * cost.moment_term - 2.0 * cost.avg_potential)),
                         identity_tol));
  checks.push_back(check("independent_dominance",
                         std::max(0.0, cost.mk_cost - independent_mk_cost(inst.marginals, inst.weights)),
                         identity_tol));
  if (proc.monge_certified)
    checks.push_back(check("marginal_fidelity", marginal_fidelity(proc), tolerance(config, "fidelity_tol")));
  else
    checks.push_back(skipped("marginal_fidelity", "Monge uncertified"));

  std::size_t product = 1;
  for (const auto& mu : inst.marginals) product *= mu.size();
  if (m < oracle::kMaxMarginals && product * inst.marginals[0].size() <= oracle::kMaxProductSupport) {
    oracle::MultiMarginalInstance split = inst;
    split.marginals.push_back(inst.marginals[0]);
    split.weights[0] = inst.weights[0] / 2.0;
    split.weights.push_back(inst.weights[0] / 2.0);
    const double v = oracle::solve_multimarginal(split, oracle::MultiMarginalCost::variance).value;
    checks.push_back(check("split_marginal_monotone", std::max(0.0, v - cert.oracle_value), identity_tol));
  } else {
    checks.push_back(skipped("split_marginal_monotone", "outside oracle caps"));
  }

  bool passed = true;
  for (const auto& c : checks) passed = passed && c.at("passed").get<bool>();
  return json{{"passed", passed}, {"checks", std::move(checks)}};
}

std::vector<NamedInstance> load_instances(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::parse_error, "not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::parse_error, "no instance files in " + dir);
  std::vector<NamedInstance> out;
  for (const auto& f : files)
    out.emplace_back(f.filename().string(), io::instance_from_json(io::read_json_file(f.string())));
  return out;
}

json run_barycenter(const RunConfig& config, bool with_process) {
  const auto curve = io::curve_from_json(io::read_json_file(config.input_path));
  CurveBarycenterOptions opts;
  opts.free_support.tolerance = tolerance(config, "fixed_point_tol");
  const auto cb = curve_barycenter(curve, config.schedule, config.strategy, opts);

  json summary{{"command", config.command},
               {"N", cb.log.back().N},
               {"objective", cb.result.objective},
               {"iterations", cb.result.iterations},
               {"fixed_point_residual", cb.result.fixed_point_residual},
               {"atoms", cb.result.measure.size()}};
  if (!with_process) {
    io::write_json_file(out_file(config, "barycenter.json"), io::to_json(cb.result.measure));
    io::write_text_file(out_file(config, "convergence.csv"),
                        to_text([&](std::ostream& os) { io::write_convergence_csv(os, cb.log); }));
    summary["outputs"] = {"barycenter.json", "convergence.csv"};
    return summary;
  }

  const auto proc = build_process(cb);
  json report = io::to_json(mk_cost(proc));
  report["marginal_fidelity"] = marginal_fidelity(proc);
  report["average_map_residual"] = average_map_residual(proc);
  report["nodes"] = proc.nodes();
  io::write_json_file(out_file(config, "process.json"), io::to_json(proc));
  io::write_json_file(out_file(config, "cost_report.json"), report);
  io::write_text_file(out_file(config, "paths.csv"),
                      to_text([&](std::ostream& os) { io::write_paths_csv(os, proc); }));
  io::write_text_file(out_file(config, "couplings.csv"), to_text([&](std::ostream& os) {
                        for (std::size_t j = 0; j < proc.nodes(); ++j)
                          io::write_coupling_csv(os, time_coupling(proc, j), j, j == 0);
                      }));
  summary["mk_cost"] = report["mk_cost"];
  summary["monge_certified"] = proc.monge_certified;
  summary["outputs"] = {"process.json", "cost_report.json", "paths.csv", "couplings.csv"};
  return summary;
}

json run_reroot(const RunConfig& config) {
  const auto proc = io::process_from_json(io::read_json_file(config.input_path));
  const std::size_t node = nearest_node(proc, *config.t0);
  const auto out = reroot(proc, node);
  io::write_json_file(out_file(config, "rerooted_process.json"), io::to_json(out));
  return json{{"command", "reroot"},
              {"node", node},
              {"t0", proc.time_maps[node].t},
              {"mk_cost_before", mk_cost(proc).mk_cost},
              {"mk_cost_after", mk_cost(out).mk_cost},
              {"outputs", {"rerooted_process.json"}}};
}

json run_plot(const RunConfig& config) {
  const json j = io::read_json_file(config.input_path);
  if (j.contains("maps")) {
    const auto proc = io::process_from_json(j);
    io::write_text_file(out_file(config, "paths.svg"), svg::paths(proc));
    io::write_text_file(out_file(config, "measure.svg"), svg::measure(proc.barycenter));
    return json{{"command", "plot"}, {"outputs", {"paths.svg", "measure.svg"}}};
  }
  io::write_text_file(out_file(config, "measure.svg"), svg::measure(io::measure_from_json(j)));
  return json{{"command", "plot"}, {"outputs", {"measure.svg"}}};
}

json error_json(const std::string& message, const std::string& kind) {
  return json{{"error", message}, {"kind", kind}};
}

}  // namespace

std::vector<NamedInstance> random_instances(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> mass(0.1, 1.0);
  std::vector<NamedInstance> out;
  for (int k = 0; k < count; ++k) {
    const std::size_t m = 2 + rng() % 2;
    const std::size_t n = 1 + rng() % 2;
    oracle::MultiMarginalInstance inst;
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t s = 1 + rng() % 4;
      std::vector<Point> pts(s, Point(n));
      std::vector<double> w(s);
      for (std::size_t a = 0; a < s; ++a) {
        for (auto& v : pts[a]) v = coord(rng);
        w[a] = mass(rng);
      }
      inst.marginals.push_back(DiscreteMeasure::normalized(std::move(pts), std::move(w)));
      // every other instance uses equal weights so the pairwise identity is exercised
      inst.weights.push_back(k % 2 == 0 ? 1.0 : mass(rng));
      total += inst.weights.back();
    }
    for (double& w : inst.weights) w /= total;
    out.emplace_back("random_" + std::to_string(k), std::move(inst));
  }
  return out;
}

json validation_report(const std::vector<NamedInstance>& instances, const RunConfig& config) {
  json results = json::array();
  bool passed = true;
  for (const auto& [name, inst] : instances) {
    json r = validate_instance(inst, config);
    r["name"] = name;
    passed = passed && r.at("passed").get<bool>();
    results.push_back(std::move(r));
  }
  return json{{"passed", passed}, {"seed", config.seed}, {"instances", std::move(results)}};
}

int run(const RunConfig& config, std::ostream& out) {
  try {
    check_config(config);
    fs::create_directories(config.output_path);
    json summary;
    if (config.command == "barycenter" || config.command == "process") {
      summary = run_barycenter(config, config.command == "process");
    } else if (config.command == "reroot") {
      summary = run_reroot(config);
    } else if (config.command == "plot") {
      summary = run_plot(config);
    } else {
      const auto instances = config.input_path.empty() ? random_instances(config.seed, config.instances)
                                                       : load_instances(config.input_path);
      const json report = validation_report(instances, config);
      io::write_json_file(out_file(config, "validation.json"), report);
      std::size_t failed = 0;
      for (const auto& r : report.at("instances")) failed += r.at("passed").get<bool>() ? 0 : 1;
      if (failed > 0) {
        out << error_json(std::to_string(failed) + " of " + std::to_string(instances.size()) +
                              " instances failed validation",
                          error_code_name(ErrorCode::validation_failure))
                   .dump()
            << '\n';
        return 1;
      }
      summary = json{{"command", "validate"},
                     {"instances", instances.size()},
                     {"passed", true},
                     {"outputs", {"validation.json"}}};
    }
    out << summary.dump(2) << '\n';
    return 0;
  } catch (const UsageError& e) {
    out << error_json(e.what(), "usage").dump() << '\n';
    return 2;
  } catch (const NonConvergence& e) {
    json j = error_json(e.what(), error_code_name(e.code()));
    j["last_residual"] = e.last_residual();
    j["iterations"] = e.iterations();
    out << j.dump() << '\n';
    return 1;
  } catch (const Error& e) {
    out << error_json(e.what(), error_code_name(e.code())).dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    out << error_json(e.what(), "internal").dump() << '\n';
    return 1;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> config;
  try {
    config = parse_args(argc, argv, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for the list of commands\n";
    out << error_json(e.what(), "usage").dump() << '\n';
    return 2;
  }
  if (!config) return 0;
  return run(*config, out);
}

}  // namespace mkinf::cli
