#pragma once

#include "hyperlab/types.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace hyperlab {

/// Right-hand side dy/dt = f(t, y); writes into dy (already sized).
using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;

/// Called once per requested output node with the interpolated state.
using OdeObserver = std::function<void(std::size_t index, double t, const Eigen::VectorXd& y)>;

/// Called after every accepted step; returning true stops the integration early.
using OdeStop = std::function<bool(double t, const Eigen::VectorXd& y)>;

/// Scalar function whose sign changes mark points where the right-hand side loses
/// smoothness.  Steps are shortened so that they end within `breakpoint_tol` past a
/// sign change instead of straddling it.
using OdeBreakpoint = std::function<double(double t, const Eigen::VectorXd& y)>;

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0; ///< 0 selects an automatic initial step
    long max_steps = 2'000'000;
    double breakpoint_tol = 1e-6; ///< largest step portion allowed on the far side of a breakpoint
};

struct OdeResult {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
    bool stopped_early = false;
    double t_end = 0.0;
    std::size_t nodes_emitted = 0;
};

/// Adaptive Dormand-Prince 8(5,3) integration with 7th-order dense output.
/// `nodes` must be non-decreasing and >= t0; the observer receives the state at
/// each node (interpolated inside accepted steps).  Throws NumericalError
/// ("StepFailure") when the step size underflows or max_steps is exceeded.
OdeResult integrate_dop853(const OdeRhs& rhs, double t0, const Eigen::VectorXd& y0, const std::vector<double>& nodes,
                           const OdeOptions& opts, const OdeObserver& observer, const OdeStop& stop = nullptr,
                           const OdeBreakpoint& breakpoint = nullptr);

} // namespace hyperlab
