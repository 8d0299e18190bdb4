#include "nlobs/lemma_suite.hpp"

#include <algorithm>
#include <cmath>

#include "nlobs/core_ops.hpp"
#include "nlobs/error.hpp"
#include "nlobs/random.hpp"

namespace nlobs {

namespace {

constexpr double kConstantMargin = 1.01;

struct Quad {
    double a, b, a2, b2;
};

Quad draw(SampleStream& rng) {
    return {rng.uniform(-kSampleRange, kSampleRange), rng.uniform(-kSampleRange, kSampleRange),
            rng.uniform(-kSampleRange, kSampleRange), rng.uniform(-kSampleRange, kSampleRange)};
}

void record(LemmaSuiteResult& r, const std::string& check, double p, const Quad& q, double lhs,
            double rhs) {
    ++r.violations;
    if (r.examples.size() < kMaxRecordedViolations)
        r.examples.push_back({check, p, {q.a, q.b, q.a2, q.b2}, lhs, rhs});
}

// lhs and the bracket (|Δ|^{p-1} + |Δ||a-b|^{p-2}) of the two superquadratic forms.
struct SuperTerms {
    double lhs1, base1, lhs2, base2;
};

SuperTerms super_terms(const NonlinearityFn& L, const Quad& q, double p) {
    const double gap = std::fabs(q.a - q.b);
    const double da = std::fabs(q.a - q.a2);
    const double db = std::fabs(q.b - q.b2);
    const double lab = L(q.a, q.b, p);
    return {std::fabs(lab - L(q.a2, q.b, p)), std::pow(da, p - 1.0) + da * std::pow(gap, p - 2.0),
            std::fabs(lab - L(q.a, q.b2, p)), std::pow(db, p - 1.0) + db * std::pow(gap, p - 2.0)};
}

double monotone_product(const NonlinearityFn& L, double a, double b, double p) {
    return (L(a, 0.0, p) - L(b, 0.0, p)) * (a - b);
}

double bounds_ratio(const NonlinearityFn& L, double a, double b, double p) {
    const double diff = a - b;
    return monotone_product(L, a, b, p) /
           (std::pow(std::fabs(a) + std::fabs(b), p - 2.0) * diff * diff);
}

void require_samples(std::size_t samples) {
    if (samples < 1) throw DomainError("lemma suites need at least one sample");
}

LemmaSuiteResult make_result(const char* check, double p, std::uint64_t seed, std::size_t samples) {
    LemmaSuiteResult r;
    r.check = check;
    r.p = p;
    r.seed = seed;
    r.samples = samples;
    return r;
}

}  // namespace

NonlinearityFn default_nonlinearity() { return [](double a, double b, double p) { return eval_L(a, b, p); }; }

NonlinearityFn corrupted_nonlinearity() {
    // Adds a term in a alone: breaks the dependence on a - b only.
    return [](double a, double b, double p) { return eval_L(a, b, p) + 0.5 * a; };
}

LemmaSuiteResult run_subquadratic_suite(double p, std::size_t samples, std::uint64_t seed,
                                        const NonlinearityFn& L) {
    if (!(p > 1.0 && p <= 2.0)) throw DomainError("subquadratic suite requires 1 < p <= 2");
    require_samples(samples);
    LemmaSuiteResult r = make_result("subquadratic", p, seed, samples);
    SampleStream rng(seed);
    for (std::size_t k = 0; k < samples; ++k) {
        const Quad q = draw(rng);
        const double lhs = std::fabs(L(q.a, q.b, p) - L(q.a2, q.b2, p));
        const double rhs = 4.0 * std::pow(std::fabs((q.a - q.b) - (q.a2 - q.b2)), p - 1.0);
        if (rhs > 0.0) r.worst_ratio = std::max(r.worst_ratio, lhs / rhs);
        if (!(lhs <= rhs * (1.0 + kInequalitySlack))) record(r, r.check, p, q, lhs, rhs);
    }
    return r;
}

LemmaSuiteResult run_superquadratic_suite(double p, std::size_t samples, std::uint64_t seed,
                                          const NonlinearityFn& L) {
    if (!(p >= 2.0)) throw DomainError("superquadratic suite requires p >= 2");
    require_samples(samples);
    LemmaSuiteResult r = make_result("superquadratic", p, seed, samples);

    double c_star = 0.0;
    {
        SampleStream scan(seed);
        for (std::size_t k = 0; k < samples; ++k) {
            const auto t = super_terms(L, draw(scan), p);
            if (t.base1 > 0.0) c_star = std::max(c_star, t.lhs1 / t.base1);
            if (t.base2 > 0.0) c_star = std::max(c_star, t.lhs2 / t.base2);
        }
    }
    r.fitted_constant = c_star;
    const double c = kConstantMargin * c_star;

    SampleStream verify(derive_seed(seed, 1));
    for (std::size_t k = 0; k < samples; ++k) {
        const Quad q = draw(verify);
        const auto t = super_terms(L, q, p);
        if (t.base1 > 0.0) r.worst_ratio = std::max(r.worst_ratio, t.lhs1 / t.base1);
        if (t.base2 > 0.0) r.worst_ratio = std::max(r.worst_ratio, t.lhs2 / t.base2);
        if (!(t.lhs1 <= c * t.base1 * (1.0 + kInequalitySlack)))
            record(r, "superquadratic-first", p, q, t.lhs1, c * t.base1);
        if (!(t.lhs2 <= c * t.base2 * (1.0 + kInequalitySlack)))
            record(r, "superquadratic-second", p, q, t.lhs2, c * t.base2);
    }
    return r;
}

LemmaSuiteResult run_ab_nonneg_suite(double p, std::size_t samples, std::uint64_t seed,
                                     const NonlinearityFn& L) {
    if (!(p > 1.0)) throw DomainError("monotone product requires p > 1");
    require_samples(samples);
    LemmaSuiteResult r = make_result("ab-nonneg", p, seed, samples);
    SampleStream rng(seed);
    for (std::size_t k = 0; k < samples; ++k) {
        const Quad q = draw(rng);
        const double prod = monotone_product(L, q.a, q.b, p);
        const double floor = -kSignSlack * std::pow(std::max(std::fabs(q.a), std::fabs(q.b)), p);
        if (!(prod >= floor)) record(r, r.check, p, q, prod, floor);
    }
    return r;
}

LemmaSuiteResult run_ab_bounds_suite(double p, std::size_t samples, std::uint64_t seed,
                                     const NonlinearityFn& L) {
    if (!(p > 1.0)) throw DomainError("ratio bounds require p > 1");
    require_samples(samples);
    LemmaSuiteResult r = make_result("ab-bounds", p, seed, samples);

    double c_star = 1.0;
    {
        SampleStream scan(seed);
        for (std::size_t k = 0; k < samples; ++k) {
            const Quad q = draw(scan);
            if (q.a == q.b) continue;
            const double ratio = bounds_ratio(L, q.a, q.b, p);
            if (ratio > 0.0) c_star = std::max({c_star, ratio, 1.0 / ratio});
        }
    }
    r.fitted_constant = c_star;
    const double c = kConstantMargin * c_star;

    SampleStream verify(derive_seed(seed, 1));
    for (std::size_t k = 0; k < samples; ++k) {
        const Quad q = draw(verify);
        if (q.a == q.b) continue;
        const double ratio = bounds_ratio(L, q.a, q.b, p);
        r.worst_ratio = std::max(r.worst_ratio, ratio > 0.0 ? std::max(ratio, 1.0 / ratio) : 0.0);
        if (!(ratio >= 1.0 / c && ratio <= c)) record(r, r.check, p, q, ratio, c);
    }
    return r;
}

}  // namespace nlobs
