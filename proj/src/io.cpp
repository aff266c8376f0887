#include "mkinf/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mkinf/errors.hpp"

namespace mkinf::io {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::parse_error, what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) bad(std::string("missing field \"") + name + "\"");
  return j.at(name);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) bad(std::string(what) + " must be a number");
  return j.get<double>();
}

std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

std::vector<Point> point_list(const json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be an array of points");
  std::vector<Point> out;
  out.reserve(j.size());
  for (const auto& p : j) out.push_back(numbers(p, what));
  return out;
}

json points_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back(p);
  return arr;
}

MapKind kind_from_name(const std::string& name) {
  if (name == "exact_monge") return MapKind::exact_monge;
  if (name == "barycentric_projection") return MapKind::barycentric_projection;
  if (name == "monotone_1d") return MapKind::monotone_1d;
  bad("unknown map kind \"" + name + "\"");
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    bad(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
  out << text;
}

json to_json(const DiscreteMeasure& mu) {
  return json{{"dim", mu.dim()}, {"points", points_json(mu.points())}, {"weights", mu.weights()}};
}

DiscreteMeasure measure_from_json(const json& j) {
  const auto pts = point_list(field(j, "points"), "points");
  const auto w = numbers(field(j, "weights"), "weights");
  if (j.contains("dim")) {
    const double n = number(j.at("dim"), "dim");
    for (const auto& p : pts)
      if (static_cast<double>(p.size()) != n)
        throw Error(ErrorCode::dimension_mismatch, "point length differs from \"dim\"");
  }
  return DiscreteMeasure(pts, w);
}

json to_json(const MeasureCurve& curve) {
  json samples = json::array();
  for (const auto& s : curve.samples()) {
    json e{{"t", s.t}, {"measure", to_json(s.measure)}};
    if (s.flags) {
      e["is_ac"] = s.flags->is_ac;
      if (s.flags->linf) e["linf"] = *s.flags->linf;
    }
    samples.push_back(std::move(e));
  }
  return json{{"samples", std::move(samples)},
              {"interpolation", curve.interpolation() == Interpolation::quantile ? "quantile" : "nearest"}};
}

MeasureCurve curve_from_json(const json& j) {
  const json& arr = field(j, "samples");
  if (!arr.is_array()) bad("\"samples\" must be an array");
  std::vector<CurveSample> samples;
  for (const auto& s : arr) {
    std::optional<DensityFlags> flags;
    if (s.contains("is_ac") || s.contains("linf")) {
      DensityFlags f;
      if (s.contains("is_ac")) {
        if (!s.at("is_ac").is_boolean()) bad("\"is_ac\" must be a boolean");
        f.is_ac = s.at("is_ac").get<bool>();
      }
      if (s.contains("linf") && !s.at("linf").is_null()) f.linf = number(s.at("linf"), "linf");
      flags = f;
    }
    samples.push_back({number(field(s, "t"), "t"), measure_from_json(field(s, "measure")), flags});
  }
  Interpolation interp = Interpolation::nearest;
  if (j.contains("interpolation")) {
    const auto& v = j.at("interpolation");
    if (!v.is_string()) bad("\"interpolation\" must be a string");
    if (v == "quantile")
      interp = Interpolation::quantile;
    else if (v != "nearest")
      bad("unknown interpolation \"" + v.get<std::string>() + "\"");
  }
  return MeasureCurve(std::move(samples), interp);
}

json to_json(const ProcessRepresentation& proc) {
  json maps = json::array();
  for (std::size_t j = 0; j < proc.nodes(); ++j) {
    const auto& tm = proc.time_maps[j];
    maps.push_back(json{{"t", tm.t},
                        {"weight", proc.grid.weights[j]},
                        {"kind", map_kind_name(tm.map.kind())},
                        {"images", points_json(tm.map.images())}});
  }
  json out{{"base", to_json(proc.base)},
           {"maps", std::move(maps)},
           {"barycenter", to_json(proc.barycenter)},
           {"monge_certified", proc.monge_certified}};
  if (!proc.marginals.empty()) {
    json marg = json::array();
    for (const auto& mu : proc.marginals) marg.push_back(to_json(mu));
    out["marginals"] = std::move(marg);
  }
  return out;
}

ProcessRepresentation process_from_json(const json& j) {
  DiscreteMeasure base = measure_from_json(field(j, "base"));
  const json& arr = field(j, "maps");
  if (!arr.is_array() || arr.empty()) bad("\"maps\" must be a nonempty array");

  TimeGrid grid;
  std::vector<TimeMap> time_maps;
  bool certified = true;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const json& m = arr[k];
    const double t = number(field(m, "t"), "t");
    auto images = point_list(field(m, "images"), "images");
    if (images.size() != base.size()) throw Error(ErrorCode::missing_map, "map images do not cover the base");
    MapKind kind = MapKind::exact_monge;
    if (m.contains("kind")) kind = kind_from_name(m.at("kind").get<std::string>());
    certified = certified && kind != MapKind::barycentric_projection;
    grid.nodes.push_back(t);
    grid.weights.push_back(m.contains("weight") ? number(m.at("weight"), "weight")
                                                : 1.0 / static_cast<double>(arr.size()));
    grid.sample_index.push_back(k);
    time_maps.push_back({t, TransportMap(base, std::move(images), kind)});
  }
  DiscreteMeasure bary = j.contains("barycenter") ? measure_from_json(j.at("barycenter")) : base;
  std::vector<DiscreteMeasure> marginals;
  if (j.contains("marginals"))
    for (const auto& mu : j.at("marginals")) marginals.push_back(measure_from_json(mu));
  if (j.contains("monge_certified")) certified = certified && j.at("monge_certified").get<bool>();
  ProcessRepresentation proc{std::move(base), std::move(time_maps), std::move(grid), std::move(bary),
                             std::move(marginals), certified};
  proc.validate();
  return proc;
}

json to_json(const oracle::MultiMarginalInstance& inst) {
  json marg = json::array();
  for (const auto& mu : inst.marginals) marg.push_back(to_json(mu));
  return json{{"marginals", std::move(marg)}, {"weights", inst.weights}};
}

oracle::MultiMarginalInstance instance_from_json(const json& j) {
  oracle::MultiMarginalInstance inst;
  const json& arr = field(j, "marginals");
  if (!arr.is_array()) bad("\"marginals\" must be an array");
  for (const auto& mu : arr) inst.marginals.push_back(measure_from_json(mu));
  if (j.contains("weights")) {
    inst.weights = numbers(j.at("weights"), "weights");
  } else {
    inst.weights.assign(inst.marginals.size(), 1.0 / static_cast<double>(inst.marginals.size()));
  }
  inst.validate();
  return inst;
}

json to_json(const CostReport& r) {
  return json{{"mk_cost", r.mk_cost},
              {"avg_potential", r.avg_potential},
              {"moment_term", r.moment_term},
              {"lower_bound", r.lower_bound},
              {"average_law_bound", r.average_law_bound},
              {"monge_certified", r.monge_certified}};
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRecord>& log) {
  os << "N,objective,w2_step,fixed_point_residual\n";
  for (const auto& r : log)
    os << r.N << ',' << fmt(r.objective) << ',' << fmt(r.w2_step) << ',' << fmt(r.fixed_point_residual)
       << '\n';
}

void write_paths_csv(std::ostream& os, const ProcessRepresentation& proc) {
  os << "atom,weight,t";
  for (std::size_t d = 0; d < proc.base.dim(); ++d) os << ",x" << d;
  os << '\n';
  for (std::size_t i = 0; i < proc.base.size(); ++i)
    for (const auto& tm : proc.time_maps) {
      os << i << ',' << fmt(proc.base.weight(i)) << ',' << fmt(tm.t);
      for (double v : tm.map.image(i)) os << ',' << fmt(v);
      os << '\n';
    }
}

void write_coupling_csv(std::ostream& os, const Coupling& plan, std::optional<std::size_t> node,
                        bool header) {
  if (header) os << (node ? "node,row,col,mass\n" : "row,col,mass\n");
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      if (!(plan.mass(i, j) > 0.0)) continue;
      if (node) os << *node << ',';
      os << i << ',' << j << ',' << fmt(plan.mass(i, j)) << '\n';
    }
}

}  // namespace mkinf::io
