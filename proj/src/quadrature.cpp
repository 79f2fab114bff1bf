#include "misfit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "misfit/numerics.hpp"

namespace misfit {
namespace {

// 7-point Gauss-Legendre on [-1, 1].
constexpr int kOrder = 7;
constexpr double kNodes[kOrder] = {
    -0.9491079123427585245262, -0.7415311855993944398639, -0.4058451513773971669066,
    0.0,
    0.4058451513773971669066,  0.7415311855993944398639,  0.9491079123427585245262};
constexpr double kWeights[kOrder] = {
    0.1294849661688696932706, 0.2797053914892766679015, 0.3818300505051189449504,
    0.4179591836734693877551,
    0.3818300505051189449504, 0.2797053914892766679015, 0.1294849661688696932706};

double tensor_rule(const std::function<double(double, double)>& f, const QuadCell& c) {
    const double hx = 0.5 * (c.x1 - c.x0), cx = 0.5 * (c.x0 + c.x1);
    const double hy = 0.5 * (c.y1 - c.y0), cy = 0.5 * (c.y0 + c.y1);
    double acc = 0.0;
    for (int i = 0; i < kOrder; ++i) {
        const double x = cx + hx * kNodes[i];
        double row = 0.0;
        for (int j = 0; j < kOrder; ++j)
            row += kWeights[j] * f(x, cy + hy * kNodes[j]);
        acc += kWeights[i] * row;
    }
    return acc * hx * hy;
}

struct Entry {
    QuadCell cell;
    double coarse;  // one-shot estimate
    double fine;    // 2x2 split estimate
    double err;     // |fine - coarse|
    std::uint64_t id; // deterministic tie-break
};

struct ByError {
    bool operator()(const Entry& a, const Entry& b) const {
        if (a.err != b.err) return a.err < b.err;
        return a.id > b.id;
    }
};

Entry make_entry(const std::function<double(double, double)>& f, const QuadCell& c,
                 std::uint64_t id) {
    Entry e;
    e.cell = c;
    e.coarse = tensor_rule(f, c);
    const double xm = 0.5 * (c.x0 + c.x1), ym = 0.5 * (c.y0 + c.y1);
    e.fine = tensor_rule(f, {c.x0, xm, c.y0, ym}) + tensor_rule(f, {xm, c.x1, c.y0, ym}) +
             tensor_rule(f, {c.x0, xm, ym, c.y1}) + tensor_rule(f, {xm, c.x1, ym, c.y1});
    e.err = std::abs(e.fine - e.coarse);
    if (!std::isfinite(e.err)) throw Error("quadrature: non-finite integrand");
    e.id = id;
    return e;
}

} // namespace

std::vector<QuadCell> grid_cells(double x0, double x1, double y0, double y1,
                                 const std::vector<double>& x_cuts,
                                 const std::vector<double>& y_cuts) {
    auto axis = [](double a, double b, const std::vector<double>& cuts) {
        std::vector<double> v{a};
        for (double c : cuts)
            if (c > a && c < b) v.push_back(c);
        v.push_back(b);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto xs = axis(x0, x1, x_cuts);
    const auto ys = axis(y0, y1, y_cuts);
    std::vector<QuadCell> cells;
    cells.reserve((xs.size() - 1) * (ys.size() - 1));
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ys.size(); ++j)
            cells.push_back({xs[i], xs[i + 1], ys[j], ys[j + 1]});
    return cells;
}

QuadratureResult integrate_2d(const std::function<double(double, double)>& f,
                              std::vector<QuadCell> initial_cells,
                              const QuadratureOptions& opts) {
    std::priority_queue<Entry, std::vector<Entry>, ByError> heap;
    std::uint64_t next_id = 0;
    double total_err = 0.0;
    std::size_t n_cells = 0;

    for (const auto& c : initial_cells) {
        if (!(c.x1 > c.x0) || !(c.y1 > c.y0)) continue;
        Entry e = make_entry(f, c, next_id++);
        total_err += e.err;
        heap.push(e);
        ++n_cells;
    }

    while (total_err > opts.abs_tol && !heap.empty()) {
        if (n_cells + 4 > opts.max_cells)
            throw BudgetExceeded("quadrature budget exhausted: error " +
                                 std::to_string(total_err) + " > tol " +
                                 std::to_string(opts.abs_tol));
        Entry worst = heap.top();
        heap.pop();
        total_err -= worst.err;
        if (worst.err == 0.0) { // everything left is converged
            heap.push(worst);
            break;
        }
        const QuadCell& c = worst.cell;
        const double xm = 0.5 * (c.x0 + c.x1), ym = 0.5 * (c.y0 + c.y1);
        for (const QuadCell& sub : {QuadCell{c.x0, xm, c.y0, ym}, QuadCell{xm, c.x1, c.y0, ym},
                                    QuadCell{c.x0, xm, ym, c.y1}, QuadCell{xm, c.x1, ym, c.y1}}) {
            Entry e = make_entry(f, sub, next_id++);
            total_err += e.err;
            heap.push(e);
        }
        n_cells += 3;
    }

    KahanSum sum;
    std::vector<Entry> leaves;
    leaves.reserve(heap.size());
    while (!heap.empty()) {
        leaves.push_back(heap.top());
        heap.pop();
    }
    // deterministic summation order regardless of heap internals
    std::sort(leaves.begin(), leaves.end(),
              [](const Entry& a, const Entry& b) { return a.id < b.id; });
    for (const auto& e : leaves) sum.add(e.fine);

    QuadratureResult r;
    r.value = sum.value();
    r.abs_error_estimate = total_err;
    r.cells_used = n_cells;
    return r;
}

} // namespace misfit
