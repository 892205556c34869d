#pragma once

#include <functional>
#include <span>

namespace asyougo {

/// Called after every sweep with the tracked value vector (layout documented
/// per solver). Used by tests to watch iterate monotonicity.
using IterateObserver = std::function<void(int iteration, std::span<const double> values)>;

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 1'000'000;
    IterateObserver observer;
};

struct SolveInfo {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    double tol = 0.0;
};

}  // namespace asyougo
