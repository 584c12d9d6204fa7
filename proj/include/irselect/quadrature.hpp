#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <vector>

#include "irselect/common.hpp"

namespace irselect {
namespace quad {

inline constexpr int kGlOrder = 15;
inline constexpr double kGlNode[kGlOrder] = {
    -9.87992518020485377e-01, -9.37273392400705951e-01, -8.48206583410427206e-01,
    -7.24417731360170070e-01, -5.70972172608538830e-01, -3.94151347077563385e-01,
    -2.01194093997434514e-01, 0.00000000000000000e+00,  2.01194093997434514e-01,
    3.94151347077563385e-01,  5.70972172608538830e-01,  7.24417731360170070e-01,
    8.48206583410427206e-01,  9.37273392400705951e-01,  9.87992518020485377e-01};
inline constexpr double kGlWeight[kGlOrder] = {
    3.07532419961186465e-02, 7.03660474881080689e-02, 1.07159220467171773e-01,
    1.39570677926153908e-01, 1.66269205816993781e-01, 1.86161000015561878e-01,
    1.98431485327111246e-01, 2.02578241925560898e-01, 1.98431485327111246e-01,
    1.86161000015561878e-01, 1.66269205816993781e-01, 1.39570677926153908e-01,
    1.07159220467171773e-01, 7.03660474881080689e-02, 3.07532419961186465e-02};

template <typename F>
double gl15(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < kGlOrder; ++i)
        acc += kGlWeight[i] * f(mid + half * kGlNode[i]);
    return acc * half;
}

struct Result {
    double value = 0.0;
    double error = 0.0;    // achieved error estimate
    std::size_t panels = 0;
    bool converged = true;
};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

// Adaptive Gauss-Legendre over a pre-split panel list.  Each panel is scored
// by |GL15(panel) - GL15(halves)|; the worst panel is bisected until the
// summed estimate meets tol or the panel budget runs out.  tol_rel/tol_abs:
// target is max(tol_rel*|I|, tol_abs).
template <typename F>
Result integrate_adaptive(const F& f, const std::vector<double>& edges,
                          double tol_rel = 1e-10, double tol_abs = 1e-14,
                          std::size_t panel_budget = 400000) {
    Result res;
    if (edges.size() < 2) return res;

    auto score = [&](double a, double b) -> Panel {
        const double whole = gl15(f, a, b);
        const double mid = 0.5 * (a + b);
        const double halves = gl15(f, a, mid) + gl15(f, mid, b);
        return Panel{a, b, halves, std::abs(halves - whole)};
    };

    std::priority_queue<Panel> heap;
    double total = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        Panel p = score(edges[i], edges[i + 1]);
        total += p.value;
        err += p.error;
        heap.push(p);
    }
    res.panels = heap.size();

    auto tolerance = [&]() { return std::max(tol_rel * std::abs(total), tol_abs); };

    while (err > tolerance() && !heap.empty()) {
        if (res.panels >= panel_budget) {
            res.value = total;
            res.error = err;
            res.converged = false;
            return res;
        }
        Panel worst = heap.top();
        heap.pop();
        total -= worst.value;
        err -= worst.error;
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) continue; // width at rounding limit
        for (const Panel& p : {score(worst.a, mid), score(mid, worst.b)}) {
            total += p.value;
            err += p.error;
            heap.push(p);
        }
        ++res.panels;
    }
    res.value = total;
    res.error = err;
    return res;
}

// Edge helper: a + k*step for k = 0..ceil((b-a)/step), clipped to [a, b].
inline std::vector<double> stepped_edges(double a, double b, double step,
                                         std::size_t max_edges = 500000) {
    std::vector<double> e;
    if (!(b > a)) return e;
    if (!(step > 0.0) || (b - a) / step + 2.0 > static_cast<double>(max_edges))
        throw NumericalError("oscillatory panel count exceeds budget");
    e.push_back(a);
    for (double x = a + step; x < b; x += step) e.push_back(x);
    e.push_back(b);
    return e;
}

// Geometric grading from b down to roughly b*ratio^n, then a final [a, ...] cap.
inline std::vector<double> graded_edges(double a, double b, int levels) {
    std::vector<double> e;
    e.push_back(b);
    double x = b;
    for (int i = 0; i < levels && x * 0.5 > a; ++i) {
        x *= 0.5;
        e.push_back(x);
    }
    e.push_back(a);
    std::reverse(e.begin(), e.end());
    return e;
}

} // namespace quad
} // namespace irselect
