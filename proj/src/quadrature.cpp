#include "nlobs/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>

#include "nlobs/error.hpp"

namespace nlobs::quad {

Rule gauss_legendre(std::size_t n) {
    if (n == 0) throw DomainError("Gauss-Legendre rule needs at least one node");
    Rule r{std::vector<double>(n), std::vector<double>(n)};
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return r;
}

const Rule& gauss_legendre8() {
    static const Rule rule = gauss_legendre(8);
    return rule;
}

namespace {

void refine_toward(std::vector<Panel>& out, double lo, double hi, bool toward_lo) {
    // Widths shrink by 4 per level toward the singular end until 1e-13 of the panel.
    const double width = hi - lo;
    constexpr int kLevels = 22;
    double a = toward_lo ? lo : hi;
    std::vector<Panel> pieces;
    double frac = 1.0;
    for (int lvl = 0; lvl < kLevels; ++lvl) frac *= 0.25;
    double prev = frac;
    if (toward_lo) {
        pieces.push_back({a, a + width * frac});
        for (int lvl = kLevels - 1; lvl >= 0; --lvl) {
            const double next = prev * 4.0;
            pieces.push_back({a + width * prev, lvl == 0 ? hi : a + width * next});
            prev = next;
        }
    } else {
        for (int lvl = 0; lvl < kLevels; ++lvl) {
            const double f_outer = std::pow(0.25, lvl);
            const double f_inner = f_outer * 0.25;
            pieces.push_back({lvl == 0 ? lo : a - width * f_outer, a - width * f_inner});
        }
        pieces.push_back({a - width * frac, hi});
    }
    for (const auto& p : pieces)
        if (p.hi > p.lo) out.push_back(p);
}

}  // namespace

std::vector<Panel> refined_around(double lo, double hi, double point) {
    if (!(lo < point && point < hi)) throw DomainError("refinement point must lie inside the panel");
    std::vector<Panel> out;
    refine_toward(out, lo, point, false);
    refine_toward(out, point, hi, true);
    return out;
}

std::vector<Panel> graded_panels(double offset, double length, double ratio,
                                 std::span<const double> breaks, std::span<const double> singular) {
    if (!(offset > 0.0) || !(length > 0.0) || !(ratio > 1.0))
        throw DomainError("graded panels need positive offset, length and ratio > 1");
    std::vector<double> cuts{0.0};
    double t = std::min(offset, length);
    cuts.push_back(t);
    while (t < length) {
        t = std::min(length, std::max(t * ratio, t + offset * (ratio - 1.0)));
        cuts.push_back(t);
    }
    for (double b : breaks)
        if (b > 0.0 && b < length) cuts.push_back(b);
    for (double b : singular)
        if (b > 0.0 && b < length) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Panel> panels;
    panels.reserve(cuts.size());
    auto is_singular = [&](double x) {
        return std::any_of(singular.begin(), singular.end(), [x](double s) { return s == x; });
    };
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k], hi = cuts[k + 1];
        if (!(hi > lo)) continue;
        const bool sing_lo = is_singular(lo);
        const bool sing_hi = is_singular(hi);
        if (sing_lo && sing_hi) {
            const double mid = 0.5 * (lo + hi);
            refine_toward(panels, lo, mid, true);
            refine_toward(panels, mid, hi, false);
        } else if (sing_lo) {
            refine_toward(panels, lo, hi, true);
        } else if (sing_hi) {
            refine_toward(panels, lo, hi, false);
        } else {
            panels.push_back({lo, hi});
        }
    }
    return panels;
}

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment kronrod15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double fsum = f(c - dx) + f(c + dx);
        resk += kWgk[j] * fsum;
        if (j % 2 == 1) resg += kWg[j / 2] * fsum;
    }
    return {a, b, resk * h, std::fabs((resk - resg) * h)};
}

}  // namespace

AdaptiveResult adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        double abs_tol, std::size_t max_intervals) {
    if (a == b) return {0.0, 0.0, 0};
    std::priority_queue<Segment> heap;
    Segment first = kronrod15(f, a, b);
    heap.push(first);
    double total = first.value;
    double err = first.error;
    std::size_t evals = 15;
    while (err > std::max(abs_tol, rel_tol * std::fabs(total)) && heap.size() < max_intervals) {
        Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > std::min(worst.a, worst.b) && mid < std::max(worst.a, worst.b))) break;
        heap.pop();
        Segment left = kronrod15(f, worst.a, mid);
        Segment right = kronrod15(f, mid, worst.b);
        evals += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum from the leaves to shed drift from the running updates.
    double sum = 0.0, esum = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        esum += heap.top().error;
        heap.pop();
    }
    return {sum, esum, evals};
}

}  // namespace nlobs::quad
