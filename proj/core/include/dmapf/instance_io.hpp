// Instance and solution file formats.
//
// Two instance formats are understood:
//   * ASPRILO facts: init(object(node|robot|order|product|shelf, Id), value(Key, Arg)).
//     Goals follow the order -> product -> shelf -> node chain.
//   * Plain grid: `agent <id> <sx> <sy> [<gx> <gy>]` header lines, a blank
//     line, then rows of '.' (free) and '#' (obstacle).
#pragma once

#include <string>
#include <string_view>

#include "dmapf/model.hpp"

namespace dmapf {

Problem parse_asprilo(std::string_view text);
Problem parse_grid(std::string_view text);

// Grid form of a problem whose coordinates are non-negative.
std::string render_grid(const Problem& p);

// Picks the parser by content ("init(" means ASPRILO).
Problem parse_instance(std::string_view text);
Problem load_problem(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// `agent <id>: (x0,y0) (x1,y1) ...`, one line per agent.
std::string solution_to_text(const Problem& p, const GlobalSolution& s);
// {"makespan":..,"moves":..,"paths":[{"agent":..,"path":[[x,y],...]},...]}
std::string solution_to_json(const Problem& p, const GlobalSolution& s);
// Accepts either form. Makespan and moves are recomputed from the paths when
// they have equal length; otherwise makespan is taken from the longest path.
GlobalSolution parse_solution(const Problem& p, std::string_view text);

}  // namespace dmapf
