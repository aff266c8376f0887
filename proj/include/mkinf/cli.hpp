#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mkinf/measures.hpp"
#include "mkinf/oracle.hpp"

namespace mkinf::cli {

struct RunConfig {
  std::string command;      // barycenter | process | reroot | validate | plot
  std::string input_path;   // curve, process, measure file or instance directory
  std::string output_path = ".";
  std::vector<int> schedule;
  SamplingStrategy strategy = SamplingStrategy::uniform;
  std::map<std::string, double> tolerances;
  std::uint64_t seed = 0;
  std::optional<double> t0;
  int instances = 20;  // random instances for validate without an input directory
};

/// Bad flags or a config that breaks the RunConfig invariants; exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named tolerances and their defaults.
const std::map<std::string, double>& default_tolerances();
double tolerance(const RunConfig& config, const std::string& name);

void check_config(const RunConfig& config);

/// Throws UsageError; returns nullopt when help was printed.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out);

/// Executes one command. Writes artifacts under output_path and a summary
/// (or an error object) as JSON on `out`. Returns the exit status.
int run(const RunConfig& config, std::ostream& out);

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

using NamedInstance = std::pair<std::string, oracle::MultiMarginalInstance>;

/// Oracle suite over the given instances; every check carries its residual.
nlohmann::json validation_report(const std::vector<NamedInstance>& instances, const RunConfig& config);

std::vector<NamedInstance> random_instances(std::uint64_t seed, int count);

}  // namespace mkinf::cli
