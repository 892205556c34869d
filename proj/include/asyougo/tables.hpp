#pragma once

#include <string>
#include <utility>
#include <vector>

#include "asyougo/channel.hpp"

namespace asyougo {

/// (xi_r, xi_o) cells of the four comparison tables.
std::vector<std::pair<double, double>> geometric_table_grid();  // tables 1 and 2
std::vector<std::pair<double, double>> average_table_grid();    // tables 3 and 4

struct CostTable {
    std::string name;
    std::vector<std::string> columns;  // first two are xi_r, xi_o
    std::vector<std::vector<double>> rows;
    bool converged = true;
};

/// 1: geo sum vs geo max; 2: geo sum vs bt sum; 3: link breakdown of the
/// average-cost optimum; 4: lambda*, lambda', lambda_h. Cells run on up to
/// `threads` threads (0 = hardware concurrency); results do not depend on it.
CostTable compute_table(int which, const Model& base, int threads = 0);

std::string table_to_csv(const CostTable& t);

}  // namespace asyougo
