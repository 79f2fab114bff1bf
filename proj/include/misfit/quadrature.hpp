#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "misfit/errors.hpp"

namespace misfit {

struct QuadCell {
    double x0, x1, y0, y1;
};

struct QuadratureOptions {
    double abs_tol = 1e-10;
    std::size_t max_cells = 2'000'000; // refinement budget (leaf cells)
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    std::size_t cells_used = 0;
};

/// Adaptive 2D quadrature over a union of axis-aligned rectangles.
///
/// Tensor Gauss-Legendre per cell; the error indicator compares the one-cell
/// estimate against a 2x2 split, and the worst cell is refined until the
/// summed indicator drops below abs_tol. Deterministic refinement order.
/// Throws BudgetExceeded if the budget runs out before the tolerance is met.
QuadratureResult integrate_2d(const std::function<double(double, double)>& f,
                              std::vector<QuadCell> initial_cells,
                              const QuadratureOptions& opts);

/// Grid of cells over [x0,x1] x [y0,y1] with cuts at the given interior
/// abscissae (values outside the box are ignored).
std::vector<QuadCell> grid_cells(double x0, double x1, double y0, double y1,
                                 const std::vector<double>& x_cuts,
                                 const std::vector<double>& y_cuts);

} // namespace misfit
