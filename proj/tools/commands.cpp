#include <netinet/in.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "dmapf/abstract.hpp"
#include "dmapf/instance_io.hpp"
#include "json.hpp"

extern char** environ;

namespace dmapf::cli {

int exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return kOk;
    case SolveStatus::Unsolvable: return kUnsolvable;
    case SolveStatus::PlanFailed: return kPlanFailed;
    case SolveStatus::RoundLimit: return kRoundLimit;
    case SolveStatus::Timeout: return kTimeout;
    case SolveStatus::ProtocolError: return kProtocol;
  }
  return kInternal;
}

std::string metrics_line(double seconds, const GlobalSolution& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << "time=" << seconds << " span=" << s.makespan << " moves=" << s.moves;
  return os.str();
}

namespace {

bool solvable(const std::string& text, int dx, int dy) {
  Problem p = parse_grid(text);
  Partition part = divide(p, dx, dy);
  try {
    plan_all(assign_agents(part, p), part.links);
  } catch (const UnreachableGoal&) {
    return false;
  }
  return true;
}

std::string to_grid_text(int w, int h, const std::vector<bool>& blocked, const std::vector<int>& starts,
                         const std::vector<int>& goals) {
  std::ostringstream os;
  for (std::size_t a = 0; a < starts.size(); ++a) {
    os << "agent " << a + 1 << " " << starts[a] % w << " " << starts[a] / w << " " << goals[a] % w << " "
       << goals[a] / w << "\n";
  }
  os << "\n";
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) os << (blocked[static_cast<std::size_t>(y * w + x)] ? '#' : '.');
    os << "\n";
  }
  return os.str();
}

std::string to_asprilo_text(const Problem& p) {
  std::ostringstream os;
  os << "% generated by dmapf\n";
  for (const auto& [id, c] : p.nodes()) os << "init(object(node," << id << "),value(at,(" << c.x << "," << c.y << "))).\n";
  for (AgentId a : p.agents()) {
    Coord s = p.coord(p.starts().at(a));
    os << "init(object(robot," << a << "),value(at,(" << s.x << "," << s.y << "))).\n";
    if (auto g = p.goal(a)) {
      Coord gc = p.coord(*g);
      os << "init(object(shelf," << a << "),value(at,(" << gc.x << "," << gc.y << "))).\n";
      os << "init(object(product," << a << "),value(on,(" << a << ",1))).\n";
      os << "init(object(order," << a << "),value(line,(" << a << ",1))).\n";
    }
  }
  return os.str();
}

}  // namespace

std::string generate_instance(const GenerateOptions& o) {
  if (o.width < 1 || o.height < 1) throw std::invalid_argument("map must be at least 1x1");
  if (o.agents < 0) throw std::invalid_argument("agent count must be non-negative");
  if (o.density < 0 || o.density > 1) throw std::invalid_argument("density must lie in [0, 1]");
  const int cells = o.width * o.height;
  const int obstacles = static_cast<int>(std::floor(o.density * cells));
  const int free = cells - obstacles;
  if (free == 0) throw std::invalid_argument("density leaves no free cells");
  if (free < o.agents) {
    throw std::invalid_argument(std::to_string(o.agents) + " agents need distinct cells, only " +
                                std::to_string(free) + " are free");
  }
  std::mt19937 rng(o.seed);
  constexpr int kAttempts = 1000;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<int> order(static_cast<std::size_t>(cells));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> blocked(static_cast<std::size_t>(cells), false);
    for (int i = 0; i < obstacles; ++i) blocked[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
    std::vector<int> open(order.begin() + obstacles, order.end());
    std::sort(open.begin(), open.end());
    std::shuffle(open.begin(), open.end(), rng);
    std::vector<int> starts(open.begin(), open.begin() + o.agents);
    std::shuffle(open.begin(), open.end(), rng);
    std::vector<int> goals(open.begin(), open.begin() + o.agents);
    std::string text = to_grid_text(o.width, o.height, blocked, starts, goals);
    if (o.solvable && !solvable(text, o.dx, o.dy)) continue;
    if (o.format == "asprilo") return to_asprilo_text(parse_grid(text));
    return text;
  }
  throw std::invalid_argument("no solvable instance found in " + std::to_string(kAttempts) + " attempts");
}

std::vector<BenchRow> parse_bench_rows(const std::string& spec) {
  std::vector<BenchRow> rows;
  std::istringstream groups(spec);
  std::string group;
  // Groups are separated by ';', e.g. "24x24:23,46;48x48:92".
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    auto colon = group.find(':');
    auto x = group.find('x');
    if (colon == std::string::npos || x == std::string::npos || x > colon) {
      throw std::invalid_argument("bench row must look like WxH:n1,n2 (got '" + group + "')");
    }
    BenchRow base;
    base.width = std::stoi(group.substr(0, x));
    base.height = std::stoi(group.substr(x + 1, colon - x - 1));
    std::istringstream counts(group.substr(colon + 1));
    std::string n;
    while (std::getline(counts, n, ',')) {
      if (n.empty()) continue;
      BenchRow r = base;
      r.agents = std::stoi(n);
      rows.push_back(r);
    }
  }
  return rows;
}

std::string bench_table(const std::vector<BenchResult>& results, const std::string& format) {
  std::ostringstream os;
  const bool csv = format == "csv";
  if (csv) {
    os << "map,n_R,time,span,moves\n";
  } else {
    os << "| Map | n_R | Time | Span | Moves |\n|---|---|---|---|---|\n";
  }
  for (const auto& r : results) {
    std::ostringstream map, t, span, moves;
    map << r.row.width << " x " << r.row.height;
    if (r.solved) {
      t << std::fixed << std::setprecision(1) << r.seconds;
      span << r.span;
      moves << r.moves;
    } else {
      t << "-";
      span << "-";
      moves << "-";
    }
    if (csv) {
      os << map.str() << "," << r.row.agents << "," << t.str() << "," << span.str() << "," << moves.str() << "\n";
    } else {
      os << "| " << map.str() << " | " << r.row.agents << " | " << t.str() << " | " << span.str() << " | "
         << moves.str() << " |\n";
    }
  }
  return os.str();
}

namespace {

void add_solver_flags(CLI::App& app, SolverConfig& cfg) {
  app.add_option("--dx", cfg.dx, "Subproblem width")->envname("DMAPF_DX")->check(CLI::Range(2, 1 << 20));
  app.add_option("--dy", cfg.dy, "Subproblem height")->envname("DMAPF_DY")->check(CLI::Range(2, 1 << 20));
  app.add_option("--F", cfg.F, "Horizon sensitivity F")->envname("DMAPF_F")->check(CLI::PositiveNumber);
  app.add_option("--nf", cfg.n_f, "Free-node threshold for the crowding guard")->envname("DMAPF_NF");
  app.add_option("--timeout", cfg.timeout_s, "Solve timeout in seconds")->envname("DMAPF_TIMEOUT")
      ->check(CLI::PositiveNumber);
  app.add_option("--rpc-timeout", cfg.rpc_timeout_s, "Timeout of any single protocol wait in seconds")
      ->envname("DMAPF_RPC_TIMEOUT")
      ->check(CLI::PositiveNumber);
  app.add_option("--round-cap", cfg.round_cap, "Maximum rounds (0 = automatic)")->envname("DMAPF_ROUND_CAP");
}

void write_solution(const Problem& p, const GlobalSolution& s, const std::string& json_path) {
  write_file(json_path, solution_to_json(p, s));
  std::string text_path = json_path;
  if (text_path.size() > 5 && text_path.substr(text_path.size() - 5) == ".json") text_path.resize(text_path.size() - 5);
  write_file(text_path + ".paths.txt", solution_to_text(p, s));
}

std::vector<int> free_ports(int n) {
  std::vector<int> fds, ports;
  for (int i = 0; i < n; ++i) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof addr;
    if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      throw std::runtime_error("cannot reserve a local port");
    }
    fds.push_back(fd);
    ports.push_back(ntohs(addr.sin_port));
  }
  for (int fd : fds) ::close(fd);
  return ports;
}

std::string self_exe() {
  std::vector<char> buf(4096);
  ssize_t n = ::readlink("/proc/self/exe", buf.data(), buf.size() - 1);
  if (n <= 0) throw std::runtime_error("cannot locate own executable");
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Spawns `workers` processes of this executable and waits for them. The
// process hosting solver 1 writes `out`.
int solve_tcp(const std::string& instance, const RunConfig& rc, const std::string& out) {
  if (rc.workers < 1) throw std::invalid_argument("--workers must be positive");
  auto ports = free_ports(rc.workers);
  std::string endpoints;
  for (std::size_t i = 0; i < ports.size(); ++i) {
    endpoints += (i ? "," : "") + std::string("127.0.0.1:") + std::to_string(ports[i]);
  }
  const std::string exe = self_exe();
  std::vector<pid_t> pids;
  for (int rank = 0; rank < rc.workers; ++rank) {
    std::vector<std::string> args{exe,
                                  "worker",
                                  instance,
                                  "--rank",
                                  std::to_string(rank),
                                  "--endpoints",
                                  endpoints,
                                  "--out",
                                  out,
                                  "--dx",
                                  std::to_string(rc.solver.dx),
                                  "--dy",
                                  std::to_string(rc.solver.dy),
                                  "--F",
                                  number(rc.solver.F),
                                  "--nf",
                                  std::to_string(rc.solver.n_f),
                                  "--timeout",
                                  number(rc.solver.timeout_s),
                                  "--rpc-timeout",
                                  number(rc.solver.rpc_timeout_s),
                                  "--round-cap",
                                  std::to_string(rc.solver.round_cap)};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    pid_t pid = 0;
    if (::posix_spawn(&pid, exe.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
      throw std::runtime_error("cannot spawn worker process");
    }
    pids.push_back(pid);
  }
  int first_code = kOk;
  for (std::size_t i = 0; i < pids.size(); ++i) {
    int status = 0;
    ::waitpid(pids[i], &status, 0);
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : kInternal;
    if (i == 0) first_code = code;
    if (code != kOk && first_code == kOk) first_code = code;
  }
  return first_code;
}

int cmd_solve(const std::string& instance, const RunConfig& rc, std::string out, bool events,
              const std::string& trace_path) {
  Problem p = load_problem(instance);
  if (out.empty()) out = instance + ".solution.json";
  if (rc.transport == "tcp") {
    const auto start = std::chrono::steady_clock::now();
    std::remove(out.c_str());
    int code = solve_tcp(instance, rc, out);
    if (code != kOk) return code;
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    GlobalSolution s = parse_solution(p, read_file(out));
    std::cout << metrics_line(seconds, s) << "\n";
    return kOk;
  }
  SolverConfig cfg = rc.solver;
  cfg.keep_trace = !trace_path.empty();
  SolveReport report = solve(p, cfg);
  if (events) {
    for (const auto& e : report.events) std::cerr << e << "\n";
  }
  if (!trace_path.empty()) {
    std::string text;
    for (const auto& line : report.trace) text += line + "\n";
    write_file(trace_path, text);
  }
  if (report.status != SolveStatus::Solved) {
    std::cerr << "dmapf: " << to_string(report.status) << ": " << report.message << "\n";
    return exit_code(report.status);
  }
  write_solution(p, *report.solution, out);
  std::cout << metrics_line(report.seconds, *report.solution) << "\n";
  return kOk;
}

int cmd_worker(const std::string& instance, const SolverConfig& cfg, int rank, const std::string& endpoint_list,
               const std::string& out) {
  Problem p = load_problem(instance);
  auto endpoints = parse_endpoints(endpoint_list);
  if (rank < 0 || rank >= static_cast<int>(endpoints.size())) throw std::invalid_argument("--rank out of range");
  Partition part = divide(p, cfg.dx, cfg.dy);
  TcpTransport transport(endpoints, rank, part.solver_count(), false);
  auto [first, last] = hosted_range(part.solver_count(), static_cast<int>(endpoints.size()), rank);
  SolveReport report = run_hosted(p, cfg, transport, first, last);
  transport.close();
  if (report.status != SolveStatus::Solved) {
    std::cerr << "dmapf worker " << rank << ": " << to_string(report.status) << ": " << report.message << "\n";
    return exit_code(report.status);
  }
  if (first == 1 && report.solution) {
    if (!out.empty()) write_solution(p, *report.solution, out);
  }
  return kOk;
}

int cmd_validate(const std::string& instance, const std::string& solution) {
  Problem p = load_problem(instance);
  GlobalSolution s = parse_solution(p, read_file(solution));
  ValidationReport r = validate(p, s);
  if (r.ok) {
    std::cout << "ok span=" << s.makespan << " moves=" << s.moves << "\n";
    return kOk;
  }
  for (const auto& v : r.violations) std::cout << v.describe() << "\n";
  std::cout << r.violations.size() << " violation(s)\n";
  return kInvalid;
}

int cmd_bench(const std::string& rows_spec, const RunConfig& rc, double density, const std::string& format,
              const std::string& out) {
  std::vector<BenchResult> results;
  auto rows = parse_bench_rows(rows_spec);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    GenerateOptions g;
    g.width = rows[i].width;
    g.height = rows[i].height;
    g.agents = rows[i].agents;
    g.density = density;
    g.seed = rc.seed + static_cast<unsigned>(i);
    g.solvable = true;
    g.dx = rc.solver.dx;
    g.dy = rc.solver.dy;
    Problem p = parse_grid(generate_instance(g));
    SolveReport report = solve(p, rc.solver);
    BenchResult r;
    r.row = rows[i];
    r.solved = report.status == SolveStatus::Solved;
    r.seconds = report.seconds;
    if (r.solved) {
      r.span = report.solution->makespan;
      r.moves = report.solution->moves;
    }
    std::cerr << g.width << "x" << g.height << " n_R=" << g.agents << ": " << to_string(report.status) << "\n";
    results.push_back(r);
  }
  std::string table = bench_table(results, format);
  if (out.empty()) {
    std::cout << table;
  } else {
    write_file(out, table);
  }
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Distributed multi-agent path finding over a partitioned grid"};
  app.require_subcommand(1);
  RunConfig rc;

  auto* solve_cmd = app.add_subcommand("solve", "Solve an instance and write the solution");
  std::string instance, out, trace_path;
  bool events = false;
  solve_cmd->add_option("instance", instance, "Instance file (grid or ASPRILO facts)")->required();
  solve_cmd->add_option("-o,--out", out, "Solution JSON path; the text form goes to <stem>.paths.txt");
  solve_cmd->add_option("--transport", rc.transport, "inproc or tcp")
      ->envname("DMAPF_TRANSPORT")
      ->check(CLI::IsMember({"inproc", "tcp"}));
  solve_cmd->add_option("--workers", rc.workers, "Worker processes in tcp mode")->envname("DMAPF_WORKERS");
  solve_cmd->add_option("--seed", rc.seed, "Seed (recorded; solving is deterministic)")->envname("DMAPF_SEED");
  solve_cmd->add_flag("--events", events, "Print protocol events to stderr");
  solve_cmd->add_option("--trace", trace_path, "Write the message trace as NDJSON");
  add_solver_flags(*solve_cmd, rc.solver);

  auto* gen_cmd = app.add_subcommand("generate", "Generate a random instance");
  GenerateOptions gen;
  std::string gen_out;
  gen_cmd->add_option("--width", gen.width)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--height", gen.height)->check(CLI::PositiveNumber);
  gen_cmd->add_option("-n,--agents", gen.agents)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--density", gen.density, "Obstacle density")->envname("DMAPF_DENSITY");
  gen_cmd->add_option("--seed", gen.seed)->envname("DMAPF_SEED");
  gen_cmd->add_flag("--solvable", gen.solvable, "Reject instances with unreachable goals")
      ->envname("DMAPF_SOLVABLE");
  gen_cmd->add_option("--dx", gen.dx, "Tiling for the solvability check")->envname("DMAPF_DX");
  gen_cmd->add_option("--dy", gen.dy, "Tiling for the solvability check")->envname("DMAPF_DY");
  gen_cmd->add_option("--format", gen.format)->check(CLI::IsMember({"grid", "asprilo"}));
  gen_cmd->add_option("-o,--out", gen_out, "Output path (stdout if omitted)");

  auto* val_cmd = app.add_subcommand("validate", "Check a solution against an instance");
  std::string val_instance, val_solution;
  val_cmd->add_option("instance", val_instance)->required();
  val_cmd->add_option("solution", val_solution)->required();

  auto* bench_cmd = app.add_subcommand("bench", "Solve generated instances and tabulate time/span/moves");
  std::string rows_spec = "24x24:23,46,69,92,120", bench_format = "md", bench_out;
  double bench_density = 0.0;
  bench_cmd->add_option("--rows", rows_spec, "Rows as WxH:n1,n2;WxH:n3 (empty for none)");
  bench_cmd->add_option("--density", bench_density)->envname("DMAPF_DENSITY");
  bench_cmd->add_option("--seed", rc.seed)->envname("DMAPF_SEED");
  bench_cmd->add_option("--format", bench_format)->check(CLI::IsMember({"md", "csv"}));
  bench_cmd->add_option("-o,--out", bench_out);
  add_solver_flags(*bench_cmd, rc.solver);

  auto* part_cmd = app.add_subcommand("partition", "Dump the partition of an instance as JSON");
  std::string part_instance, part_out;
  SolverConfig part_cfg;
  part_cmd->add_option("instance", part_instance)->required();
  part_cmd->add_option("-o,--out", part_out);
  part_cmd->add_option("--dx", part_cfg.dx)->envname("DMAPF_DX")->check(CLI::Range(2, 1 << 20));
  part_cmd->add_option("--dy", part_cfg.dy)->envname("DMAPF_DY")->check(CLI::Range(2, 1 << 20));

  auto* render_cmd = app.add_subcommand("render", "Render a partition dump or a solution");
  render_cmd->require_subcommand(1);
  auto* render_part = render_cmd->add_subcommand("partition", "SVG of a partition dump");
  std::string dump_path, render_out;
  render_part->add_option("dump", dump_path)->required();
  render_part->add_option("-o,--out", render_out)->required();
  auto* render_sol = render_cmd->add_subcommand("solution", "Frames of a solution");
  std::string rs_instance, rs_solution, rs_format = "ascii", rs_out;
  render_sol->add_option("instance", rs_instance)->required();
  render_sol->add_option("solution", rs_solution)->required();
  render_sol->add_option("--format", rs_format)->check(CLI::IsMember({"ascii", "svg"}));
  render_sol->add_option("-o,--out", rs_out, "ASCII file, or SVG path prefix")->required();

  auto* worker_cmd = app.add_subcommand("worker", "Run the solvers of one rank in tcp mode");
  std::string w_instance, w_endpoints, w_out;
  int w_rank = 0;
  SolverConfig w_cfg;
  worker_cmd->add_option("instance", w_instance)->required();
  worker_cmd->add_option("--rank", w_rank)->required();
  worker_cmd->add_option("--endpoints", w_endpoints, "host:port list, one per rank")->required();
  worker_cmd->add_option("--out", w_out, "Solution path written by the rank hosting solver 1");
  add_solver_flags(*worker_cmd, w_cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(instance, rc, out, events, trace_path);
    if (*gen_cmd) {
      std::string text = generate_instance(gen);
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        write_file(gen_out, text);
      }
      return kOk;
    }
    if (*val_cmd) return cmd_validate(val_instance, val_solution);
    if (*bench_cmd) return cmd_bench(rows_spec, rc, bench_density, bench_format, bench_out);
    if (*part_cmd) {
      std::string dump = partition_to_json(divide(load_problem(part_instance), part_cfg.dx, part_cfg.dy));
      if (part_out.empty()) {
        std::cout << dump;
      } else {
        write_file(part_out, dump);
      }
      return kOk;
    }
    if (*render_part) {
      write_file(render_out, render_partition_svg(read_file(dump_path)));
      return kOk;
    }
    if (*render_sol) {
      Problem p = load_problem(rs_instance);
      GlobalSolution s = parse_solution(p, read_file(rs_solution));
      if (rs_format == "ascii") {
        std::string text;
        auto frames = render_ascii_frames(p, s);
        for (std::size_t t = 0; t < frames.size(); ++t) text += "t=" + std::to_string(t) + "\n" + frames[t] + "\n";
        write_file(rs_out, text);
      } else {
        auto frames = render_svg_frames(p, s);
        for (std::size_t t = 0; t < frames.size(); ++t) {
          std::ostringstream name;
          name << rs_out << "_" << std::setw(4) << std::setfill('0') << t << ".svg";
          write_file(name.str(), frames[t]);
        }
      }
      return kOk;
    }
    if (*worker_cmd) return cmd_worker(w_instance, w_cfg, w_rank, w_endpoints, w_out);
  } catch (const ParseError& e) {
    std::cerr << "dmapf: parse error";
    if (e.line() > 0) std::cerr << " at line " << e.line();
    std::cerr << ": " << e.what() << "\n";
    return kUsage;
  } catch (const ModelError& e) {
    std::cerr << "dmapf: invalid instance: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "dmapf: " << e.what() << "\n";
    return kUsage;
  } catch (const ProtocolError& e) {
    std::cerr << "dmapf: protocol error: " << e.what() << "\n";
    return kProtocol;
  } catch (const std::exception& e) {
    std::cerr << "dmapf: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace dmapf::cli
