#include "mkinf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mkinf/errors.hpp"

namespace mkinf::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // pads degenerate ranges so a single value still lands mid-canvas
  double scale(double v, double out_lo, double out_hi) const {
    double a = lo, b = hi;
    if (b - a < 1e-12) {
      a -= 0.5;
      b += 0.5;
    }
    return out_lo + (v - a) / (b - a) * (out_hi - out_lo);
  }
};

void open(std::ostringstream& os) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
     << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
     << kHeight - kMargin << "\" stroke=\"black\"/>\n";
}

}  // namespace

std::string paths(const ProcessRepresentation& proc, std::size_t coord) {
  if (coord >= proc.base.dim()) throw Error(ErrorCode::invalid_argument, "plot coordinate out of range");
  Range ty, xy;
  for (const auto& tm : proc.time_maps) {
    ty.add(tm.t);
    for (const auto& p : tm.map.images()) xy.add(p[coord]);
  }
  double wmax = 0.0;
  for (double w : proc.base.weights()) wmax = std::max(wmax, w);

  std::ostringstream os;
  open(os);
  for (std::size_t i = 0; i < proc.base.size(); ++i) {
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\""
       << num(0.5 + 3.0 * proc.base.weight(i) / wmax) << "\" points=\"";
    for (std::size_t j = 0; j < proc.nodes(); ++j) {
      if (j) os << ' ';
      os << num(ty.scale(proc.time_maps[j].t, kMargin, kWidth - kMargin)) << ','
         << num(xy.scale(proc.time_maps[j].map.image(i)[coord], kHeight - kMargin, kMargin));
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string measure(const DiscreteMeasure& mu) {
  double wmax = 0.0;
  for (double w : mu.weights()) wmax = std::max(wmax, w);
  std::ostringstream os;
  open(os);
  if (mu.dim() == 1) {
    Range xr;
    for (const auto& p : mu.points()) xr.add(p[0]);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double x = xr.scale(mu.point(i)[0], kMargin, kWidth - kMargin);
      const double y = kHeight - kMargin - (kHeight - 2 * kMargin) * mu.weight(i) / wmax;
      os << "<line x1=\"" << num(x) << "\" y1=\"" << num(kHeight - kMargin) << "\" x2=\"" << num(x)
         << "\" y2=\"" << num(y) << "\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
    }
  } else {
    Range xr, yr;
    for (const auto& p : mu.points()) {
      xr.add(p[0]);
      yr.add(p[1]);
    }
    for (std::size_t i = 0; i < mu.size(); ++i)
      os << "<circle cx=\"" << num(xr.scale(mu.point(i)[0], kMargin, kWidth - kMargin)) << "\" cy=\""
         << num(yr.scale(mu.point(i)[1], kHeight - kMargin, kMargin)) << "\" r=\""
         << num(1.0 + 8.0 * std::sqrt(mu.weight(i) / wmax)) << "\" fill=\"steelblue\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace mkinf::svg
