// Command implementations behind the `dmapf` executable.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmapf/runtime.hpp"

namespace dmapf::cli {

// Process exit codes.
enum Exit : int {
  kOk = 0,
  kInvalid = 1,  // validate found violations
  kUsage = 2,    // bad arguments, unparsable or ill-formed input
  kUnsolvable = 3,
  kPlanFailed = 4,
  kRoundLimit = 5,
  kTimeout = 6,
  kProtocol = 7,
  kInternal = 8,
};

int exit_code(SolveStatus s);

struct RunConfig {
  SolverConfig solver;
  std::string transport = "inproc";  // inproc | tcp
  int workers = 2;                   // tcp: worker processes to spawn
  unsigned seed = 0;
};

struct GenerateOptions {
  int width = 24;
  int height = 24;
  int agents = 23;
  double density = 0.0;
  unsigned seed = 0;
  bool solvable = false;
  int dx = 8;  // tiling used by the solvability check
  int dy = 8;
  std::string format = "grid";  // grid | asprilo
};

// Instance text; deterministic for fixed options. Throws
// std::invalid_argument when the parameters cannot be met.
std::string generate_instance(const GenerateOptions& o);

struct BenchRow {
  int width = 0;
  int height = 0;
  int agents = 0;
};

struct BenchResult {
  BenchRow row;
  bool solved = false;
  double seconds = 0;
  int span = 0;
  int moves = 0;
};

// "24x24:23,46,69" -> three rows.
std::vector<BenchRow> parse_bench_rows(const std::string& spec);
std::string bench_table(const std::vector<BenchResult>& results, const std::string& format);

// SVG of a partition dump: areas filled, borders outlined, corners marked.
std::string render_partition_svg(const std::string& dump_json);
// One text frame per time step.
std::vector<std::string> render_ascii_frames(const Problem& p, const GlobalSolution& s);
// One SVG document per time step.
std::vector<std::string> render_svg_frames(const Problem& p, const GlobalSolution& s);

// "time=<s> span=<n> moves=<n>"
std::string metrics_line(double seconds, const GlobalSolution& s);

// Entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace dmapf::cli
