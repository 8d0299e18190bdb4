#include "nlobs/assembly.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <thread>

#include "nlobs/error.hpp"
#include "nlobs/quadrature.hpp"

namespace nlobs {

Digest sha256(const std::string& bytes) {
    Digest d{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), d.data(), &len, EVP_sha256(), nullptr) != 1 || len != d.size())
        throw Error("SHA-256 digest failed");
    return d;
}

std::string hex_prefix(const Digest& d, std::size_t bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    for (std::size_t k = 0; k < bytes; ++k) {
        s.push_back(kHex[d[k] >> 4]);
        s.push_back(kHex[d[k] & 15]);
    }
    return s;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr char kCacheMagic[8] = {'N', 'L', 'O', 'B', 'S', 'W', 'M', '1'};

void append_hex(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    out.append(buf, res.ptr);
    out.push_back(';');
}

// Σ_k b_k zy^k / (sigma + k - e), b_k the coefficients of (1 - x)^{-1-sigma}.
double binomial_inner(double zy, double sigma, double e) {
    double bk = 1.0, zk = 1.0, sum = 0.0;
    for (int k = 0; k < 400; ++k) {
        const double denom = sigma + k - e;
        if (!(denom > 0.0)) throw DomainError("far-field exponent is not integrable");
        const double term = bk * zk / denom;
        sum += term;
        if (std::fabs(term) <= 1e-18 * std::fabs(sum)) break;
        bk *= (1.0 + sigma + k) / (k + 1.0);
        zk *= zy;
    }
    return sum;
}

// Coefficients c_j of sign * coef * ∫_Y^∞ C(q,j) (-u)^j y^{beta(q-j)} (y - z)^{-1-sigma} dy, j >= j0.
std::vector<double> power_coefficients(double Y, double z, double sigma, double beta, double q, int j0,
                                       double coef, double sign, double u_limit) {
    std::vector<double> c;
    double binom = 1.0;  // C(q, j) (-1)^j
    double biggest = 0.0;
    for (int j = 0; j < 200; ++j) {
        if (j < j0) {
            c.push_back(0.0);
        } else {
            const double e = beta * (q - j);
            const double cj = sign * coef * binom * std::pow(Y, e - sigma) * binomial_inner(z / Y, sigma, e);
            c.push_back(cj);
            const double mag = std::fabs(cj) * std::pow(u_limit, j);
            biggest = std::max(biggest, mag);
            if (j > j0 + 2 && mag <= 1e-18 * biggest) break;
        }
        binom *= -(q - j) / (j + 1.0);
        if (binom == 0.0) break;
    }
    return c;
}

double horner(const std::vector<double>& c, double u) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * u + *it;
    return acc;
}

double horner_derivative(const std::vector<double>& c, double u) {
    double acc = 0.0;
    for (std::size_t j = c.size(); j-- > 1;) acc = acc * u + static_cast<double>(j) * c[j];
    return acc;
}

}  // namespace

double unit_pair_integral(std::size_t k, double sigma) {
    if (k == 0) throw DomainError("pair integral needs distinct cells");
    if (!(sigma > 0.0)) throw DomainError("pair integral needs sigma > 0");
    const double alpha = 1.0 - sigma;
    if (k == 1) {
        if (sigma >= 1.0) return 1.0;
        return (2.0 - std::exp2(alpha)) / (sigma * alpha);
    }
    // Second difference of t^{1-sigma} expanded in r = 1/k; stable for every alpha.
    const double kd = static_cast<double>(k);
    const double r2 = 1.0 / (kd * kd);
    double pm = (alpha - 1.0) / 2.0;
    double rp = r2;
    double sum = 0.0;
    for (int m = 1; m < 200; ++m) {
        const double term = pm * rp;
        sum += term;
        if (std::fabs(term) <= 1e-17 * std::fabs(sum)) break;
        pm *= (alpha - 2.0 * m) * (alpha - 2.0 * m - 1.0) / ((2.0 * m + 1.0) * (2.0 * m + 2.0));
        rp *= r2;
    }
    return -(2.0 / sigma) * std::pow(kd, alpha) * sum;
}

WeightMatrix::WeightMatrix(std::size_t n, std::vector<double> data) : n_(n), data_(std::move(data)) {
    if (data_.size() != n_ * n_) throw ContractError("weight matrix data must be n*n");
}

WeightMatrix assemble_weights(const Geometry& geom, const KernelSpec& spec, unsigned threads) {
    const std::size_t n = geom.n_cells();
    const double sigma = spec.order().sp();
    const double scale = std::pow(geom.cell_width(), 1.0 - sigma);
    std::vector<double> S(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) S[k] = scale * unit_pair_integral(k, sigma);

    std::vector<double> data(n * n, 0.0);
    const Coefficient& a = spec.coefficient();
    auto fill_rows = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) data[i * n + j] = a(geom.center(i), geom.center(j)) * S[i > j ? i - j : j - i];
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        fill_rows(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t lo = 0; lo < n; lo += chunk) pool.emplace_back(fill_rows, lo, std::min(n, lo + chunk));
    }
    return WeightMatrix(n, std::move(data));
}

Digest geometry_hash(const Geometry& geom) {
    std::string s = "geometry;";
    for (const auto& iv : geom.omega().parts()) {
        append_hex(s, iv.lo);
        append_hex(s, iv.hi);
    }
    s += "|";
    append_hex(s, geom.omega_prime().lo);
    append_hex(s, geom.omega_prime().hi);
    s += std::to_string(geom.n_cells());
    return sha256(s);
}

Digest kernel_hash(const KernelSpec& spec) {
    std::string s = "kernel;";
    append_hex(s, spec.order().s());
    append_hex(s, spec.order().p());
    append_hex(s, spec.lambda());
    std::visit(Overloaded{
                   [&](const ConstantCoefficient& c) {
                       s += "constant;";
                       append_hex(s, c.value);
                   },
                   [&](const CheckerboardCoefficient& c) {
                       s += "checkerboard;";
                       append_hex(s, c.low);
                       append_hex(s, c.high);
                       append_hex(s, c.period);
                   },
                   [&](const PiecewiseCoefficient& c) {
                       s += "piecewise;";
                       for (double b : c.breaks) append_hex(s, b);
                       s += "|";
                       for (const auto& row : c.table)
                           for (double v : row) append_hex(s, v);
                   },
                   [&](const RandomLatticeCoefficient& c) {
                       s += "random;" + std::to_string(c.seed) + ";";
                       append_hex(s, c.period);
                       append_hex(s, c.contrast);
                   },
               },
               spec.coefficient().form());
    return sha256(s);
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
    out.write(b, 8);
}

bool get_u64(std::istream& in, std::uint64_t& v) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return true;
}

}  // namespace

void save_weights(const std::filesystem::path& file, const WeightMatrix& w, const Digest& geom,
                  const Digest& kernel) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open weight cache for writing: " + file.string());
    out.write(kCacheMagic, sizeof kCacheMagic);
    out.write(reinterpret_cast<const char*>(geom.data()), geom.size());
    out.write(reinterpret_cast<const char*>(kernel.data()), kernel.size());
    put_u64(out, w.n());
    for (double v : w.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw Error("failed writing weight cache: " + file.string());
}

std::optional<WeightMatrix> load_weights(const std::filesystem::path& file, const Digest& geom,
                                         const Digest& kernel) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    Digest g{}, k{};
    if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kCacheMagic)) return std::nullopt;
    if (!in.read(reinterpret_cast<char*>(g.data()), g.size()) || g != geom) return std::nullopt;
    if (!in.read(reinterpret_cast<char*>(k.data()), k.size()) || k != kernel) return std::nullopt;
    std::uint64_t n = 0;
    if (!get_u64(in, n) || n > 65536) return std::nullopt;
    std::vector<double> data(n * n);
    for (auto& v : data) {
        std::uint64_t bits = 0;
        if (!get_u64(in, bits)) return std::nullopt;
        v = std::bit_cast<double>(bits);
    }
    return WeightMatrix(n, std::move(data));
}

WeightMatrix cached_weights(const Geometry& geom, const KernelSpec& spec, const std::filesystem::path& dir) {
    const Digest gh = geometry_hash(geom);
    const Digest kh = kernel_hash(spec);
    const auto file = dir / (hex_prefix(gh, 8) + "-" + hex_prefix(kh, 8) + ".nlw");
    if (auto w = load_weights(file, gh, kh)) return std::move(*w);
    WeightMatrix w = assemble_weights(geom, spec);
    std::filesystem::create_directories(dir);
    auto tmp = file;
    tmp += ".tmp";
    save_weights(tmp, w, gh, kh);
    std::filesystem::rename(tmp, file);
    return w;
}

// ---------------------------------------------------------------------------

ExteriorCoupling::ExteriorCoupling(std::shared_ptr<const Geometry> geom, KernelSpec spec, ExteriorData g,
                                   CouplingOptions opts)
    : geom_(std::move(geom)), spec_(std::move(spec)), g_(std::move(g)), opts_(std::move(opts)) {
    if (!geom_) throw ContractError("coupling needs a geometry");
    g_.validate(spec_.order());
    if (!(opts_.ratio > 1.0)) throw ConfigError("panel ratio must exceed 1");
    if (!(opts_.u_bound > 0.0)) throw ConfigError("coupling u_bound must be positive");
    const Geometry& G = *geom_;
    const Interval op = G.omega_prime();
    const IntervalUnion region = opts_.region ? *opts_.region : G.omega();
    if (opts_.region) {
        if (!(region.inf() > op.lo && region.sup() < op.hi))
            throw ConfigError("coupling region must be compactly contained in the computational interval");
        for (const auto& part : G.omega().parts()) {
            const bool inside = std::any_of(region.parts().begin(), region.parts().end(), [&](const Interval& r) {
                return r.lo <= part.lo && part.hi <= r.hi;
            });
            if (!inside) throw ConfigError("coupling region must contain the constraint domain");
        }
    }

    const std::size_t n = G.n_cells();
    slot_.assign(n, kNone);
    g_centers_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        g_centers_[i] = g_(G.center(i));
        if (region.contains(G.center(i))) {
            slot_[i] = cells_.size();
            cells_.push_back(i);
        }
    }

    const double sigma = spec_.order().sp();
    const double q = spec_.order().p() - 1.0;
    const double R = g_.truncation_radius(G.diameter());
    const Coefficient& a = spec_.coefficient();
    const auto& rule = quad::gauss_legendre8();
    const auto g_breaks = g_.breakpoints();
    const auto g_sing = g_.singular_points();

    offsets_.push_back(0);
    panel_offsets_.push_back(0);
    far_.resize(cells_.size());
    for (std::size_t slot = 0; slot < cells_.size(); ++slot) {
        const double x = G.center(cells_[slot]);
        for (int s : {-1, +1}) {
            const double B = s > 0 ? op.hi : op.lo;
            const double start = s * B;  // right-oriented coordinates y' = s y
            const double z = s * x;
            const double delta = start - z;
            const auto far = g_.far_form(s);
            const double coef = a.far_field(x, s);
            const double coef_start = s * a.far_field_start(s);
            double Y;
            if (far.power) {
                Y = std::max({start, 2.0 * std::fabs(z), std::pow(2.0 * opts_.u_bound, 1.0 / far.beta), s * far.start});
                if (a.far_field_exact()) Y = std::max(Y, coef_start);
            } else if (a.far_field_exact()) {
                Y = std::max({start, s * far.start, coef_start});
            } else {
                Y = std::max({start, R, s * far.start});
            }

            if (Y > start) {
                std::vector<double> breaks, sing;
                for (double b : g_breaks) breaks.push_back(s * b - start);
                for (double b : g_sing) sing.push_back(s * b - start);
                const double span_hi = std::min(Y - start, G.diameter());
                const auto yb = s > 0 ? a.y_breaks(B, B + span_hi, B, 256) : a.y_breaks(B - span_hi, B, B, 256);
                for (double b : yb) breaks.push_back(s * b - start);
                for (const auto& panel : quad::graded_panels(delta, Y - start, opts_.ratio, breaks, sing)) {
                    const double mid = 0.5 * (panel.lo + panel.hi);
                    const double half = 0.5 * (panel.hi - panel.lo);
                    const double y0 = s * (start + panel.lo), y1 = s * (start + panel.hi);
                    const double lo = std::min(y0, y1), hi = std::max(y0, y1);
                    const double inset = 1e-9 * (hi - lo);
                    panels_.push_back({lo, hi, points_.size(), g_(lo + inset), g_(hi - inset)});
                    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                        const double y = s * (start + mid + half * rule.nodes[k]);
                        points_.push_back(y);
                        weights_.push_back(half * rule.weights[k] * a(x, y) * std::pow(std::fabs(x - y), -1.0 - sigma));
                        values_.push_back(g_(y));
                    }
                }
            }

            FarTerm ft;
            ft.coef = coef;
            ft.start = Y;
            ft.center = z;
            ft.weight = coef * std::pow(Y - z, -sigma) / sigma;
            if (far.power) {
                ft.kind = FarTerm::Kind::Power;
                ft.beta = far.beta;
                ft.u_limit = 0.5 * std::pow(Y, far.beta);
                ft.l = power_coefficients(Y, z, sigma, far.beta, q, 0, coef, -1.0, ft.u_limit);
                ft.e = power_coefficients(Y, z, sigma, far.beta, q + 1.0, 1, coef, 1.0, ft.u_limit);
            } else {
                ft.kind = FarTerm::Kind::Constant;
                ft.value = far.value;
            }
            far_[slot][s > 0 ? 1 : 0] = std::move(ft);
        }
        offsets_.push_back(points_.size());
        panel_offsets_.push_back(panels_.size());
    }
}

double ExteriorCoupling::crossing_correction(std::size_t slot, double u, Integrand which) const {
    const double p = spec_.order().p(), q = p - 1.0, sigma = spec_.order().sp();
    auto F = [&](double gy) {
        const double d = u - gy;
        switch (which) {
            case Integrand::L: return signed_pow(d, q);
            case Integrand::Slope: return d == 0.0 ? 0.0 : q * std::pow(std::fabs(d), q - 1.0);
            case Integrand::Energy: break;
        }
        return std::pow(std::fabs(d), p);
    };
    const double x = geom_->center(cells_[slot]);
    const Coefficient& a = spec_.coefficient();
    const auto& rule = quad::gauss_legendre8();
    double total = 0.0;
    for (std::size_t k = panel_offsets_[slot]; k < panel_offsets_[slot + 1]; ++k) {
        const PanelRecord& pr = panels_[k];
        const double flo = pr.g_lo - u, fhi = pr.g_hi - u;
        if (!((flo < 0.0 && fhi > 0.0) || (flo > 0.0 && fhi < 0.0))) continue;
        // g is monotone on every panel (panels are cut at g's breakpoints).
        double lo = pr.lo, hi = pr.hi;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (std::fabs(lo) + std::fabs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = g_(mid) - u;
            if (fm == 0.0) {
                lo = hi = mid;
                break;
            }
            if ((fm < 0.0) == (flo < 0.0))
                lo = mid;
            else
                hi = mid;
        }
        const double cross = 0.5 * (lo + hi);
        if (!(cross > pr.lo && cross < pr.hi)) continue;
        for (std::size_t n = pr.first; n < pr.first + rule.nodes.size(); ++n) total -= weights_[n] * F(values_[n]);
        for (const auto& sub : quad::refined_around(pr.lo, pr.hi, cross)) {
            const double mid = 0.5 * (sub.lo + sub.hi), half = 0.5 * (sub.hi - sub.lo);
            for (std::size_t n = 0; n < rule.nodes.size(); ++n) {
                const double y = mid + half * rule.nodes[n];
                total += half * rule.weights[n] * a(x, y) * std::pow(std::fabs(x - y), -1.0 - sigma) * F(g_(y));
            }
        }
    }
    return total;
}

double ExteriorCoupling::far_l(const FarTerm& f, double u, double* slope) const {
    const double p = spec_.order().p();
    const double q = p - 1.0;
    switch (f.kind) {
        case FarTerm::Kind::None:
            if (slope) *slope = 0.0;
            return 0.0;
        case FarTerm::Kind::Constant: {
            const double d = u - f.value;
            if (slope) {
                if (d == 0.0)
                    *slope = (p < 2.0 && f.weight > 0.0) ? std::numeric_limits<double>::infinity()
                                                          : (p == 2.0 ? f.weight : 0.0);
                else
                    *slope = f.weight * q * std::pow(std::fabs(d), q - 1.0);
            }
            return f.weight * signed_pow(d, q);
        }
        case FarTerm::Kind::Power:
            break;
    }
    if (std::fabs(u) <= f.u_limit) {
        if (slope) *slope = horner_derivative(f.l, u);
        return horner(f.l, u);
    }
    // Outside the precomputed series range: integrate numerically to where the
    // series converges again.
    const double sigma = spec_.order().sp();
    const double Y2 = std::pow(2.0 * std::fabs(u), 1.0 / f.beta) * (1.0 + 1e-12);
    const double Y2s = std::max(Y2, 2.0 * std::fabs(f.center));
    const double cut = u > 0.0 ? std::pow(u, 1.0 / f.beta) : f.start;
    auto piecewise = [&](const std::function<double(double)>& fn) {
        double v = 0.0;
        if (cut > f.start && cut < Y2s) {
            v += quad::adaptive(fn, f.start, cut, 1e-13).value;
            v += quad::adaptive(fn, cut, Y2s, 1e-13).value;
        } else {
            v += quad::adaptive(fn, f.start, Y2s, 1e-13).value;
        }
        return v;
    };
    const double value =
        f.coef * (piecewise([&](double y) {
                      return signed_pow(u - std::pow(y, f.beta), q) * std::pow(y - f.center, -1.0 - sigma);
                  }) -
                  power_far_series(Y2s, f.center, sigma, f.beta, u, q, 0).value);
    if (slope) {
        *slope = f.coef * q *
                 (piecewise([&](double y) {
                      const double d = std::fabs(u - std::pow(y, f.beta));
                      return d == 0.0 ? 0.0 : std::pow(d, q - 1.0) * std::pow(y - f.center, -1.0 - sigma);
                  }) +
                  power_far_series(Y2s, f.center, sigma, f.beta, u, q - 1.0, 0).value);
    }
    return value;
}

double ExteriorCoupling::far_e(const FarTerm& f, double u) const {
    const double p = spec_.order().p();
    switch (f.kind) {
        case FarTerm::Kind::None: return 0.0;
        case FarTerm::Kind::Constant: return f.weight * std::pow(std::fabs(u - f.value), p);
        case FarTerm::Kind::Power: break;
    }
    if (std::fabs(u) <= f.u_limit) return horner(f.e, u);
    const double sigma = spec_.order().sp();
    const double Y2 = std::max(std::pow(2.0 * std::fabs(u), 1.0 / f.beta) * (1.0 + 1e-12), 2.0 * std::fabs(f.center));
    auto fn = [&](double y) {
        const double gy = std::pow(y, f.beta);
        return (std::pow(std::fabs(u - gy), p) - std::pow(gy, p)) * std::pow(y - f.center, -1.0 - sigma);
    };
    const double cut = u > 0.0 ? std::pow(u, 1.0 / f.beta) : f.start;
    double v = 0.0;
    if (cut > f.start && cut < Y2) {
        v = quad::adaptive(fn, f.start, cut, 1e-13).value + quad::adaptive(fn, cut, Y2, 1e-13).value;
    } else {
        v = quad::adaptive(fn, f.start, Y2, 1e-13).value;
    }
    return f.coef * (v + power_far_series(Y2, f.center, sigma, f.beta, u, p, 1).value);
}

double ExteriorCoupling::l_term(std::size_t cell, double u, const simd::KernelTable& k) const {
    const std::size_t s = slot_[cell];
    if (s == kNone) throw ContractError("cell is not coupled to the exterior");
    const std::size_t lo = offsets_[s], hi = offsets_[s + 1];
    double v = k.weighted_l_sum(weights_.data() + lo, values_.data() + lo, hi - lo, u, spec_.order().p());
    v += crossing_correction(s, u, Integrand::L);
    return v + far_l(far_[s][0], u, nullptr) + far_l(far_[s][1], u, nullptr);
}

simd::ValueSlope ExteriorCoupling::l_term_slope(std::size_t cell, double u, const simd::KernelTable& k) const {
    const std::size_t s = slot_[cell];
    if (s == kNone) throw ContractError("cell is not coupled to the exterior");
    const std::size_t lo = offsets_[s], hi = offsets_[s + 1];
    auto vs = k.weighted_l_sum_slope(weights_.data() + lo, values_.data() + lo, hi - lo, u, spec_.order().p());
    vs.value += crossing_correction(s, u, Integrand::L);
    if (std::isfinite(vs.slope)) vs.slope += crossing_correction(s, u, Integrand::Slope);
    double sl = 0.0, sr = 0.0;
    vs.value += far_l(far_[s][0], u, &sl) + far_l(far_[s][1], u, &sr);
    vs.slope += sl + sr;
    return vs;
}

double ExteriorCoupling::energy_term(std::size_t cell, double u, const simd::KernelTable& k) const {
    const std::size_t s = slot_[cell];
    if (s == kNone) throw ContractError("cell is not coupled to the exterior");
    const std::size_t lo = offsets_[s], hi = offsets_[s + 1];
    const double v = k.weighted_abs_pow_sum(weights_.data() + lo, values_.data() + lo, hi - lo, u, spec_.order().p()) +
                     crossing_correction(s, u, Integrand::Energy);
    return v + far_e(far_[s][0], u) + far_e(far_[s][1], u);
}

double ExteriorCoupling::total_weight(std::size_t cell) const noexcept {
    const std::size_t s = slot_[cell];
    if (s == kNone) return 0.0;
    double t = 0.0;
    for (std::size_t k = offsets_[s]; k < offsets_[s + 1]; ++k) t += weights_[k];
    return t + far_[s][0].weight + far_[s][1].weight;
}

std::span<const double> ExteriorCoupling::node_points(std::size_t cell) const noexcept {
    const std::size_t s = slot_[cell];
    if (s == kNone) return {};
    return {points_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
}

std::span<const double> ExteriorCoupling::node_weights(std::size_t cell) const noexcept {
    const std::size_t s = slot_[cell];
    if (s == kNone) return {};
    return {weights_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
}

std::span<const double> ExteriorCoupling::node_values(std::size_t cell) const noexcept {
    const std::size_t s = slot_[cell];
    if (s == kNone) return {};
    return {values_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
}

// ---------------------------------------------------------------------------

double apply_A1(const WeightMatrix& w, const GridFunction& u, const GridFunction& v, double p) {
    require_same_geometry(u, v);
    if (w.n() != u.size()) throw ContractError("weights and grid function sizes differ");
    const std::size_t n = w.n();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = i + 1; j < n; ++j)
            row += 2.0 * signed_pow(u[i] - u[j], p - 1.0) * (v[i] - v[j]) * w(i, j);
        total += row;
    }
    return total;
}

double apply_A2(const ExteriorCoupling& c, const GridFunction& u, const GridFunction& v) {
    require_same_geometry(u, v);
    const Geometry& G = c.geometry();
    if (!(G == u.geometry())) throw ContractError("coupling and grid function geometries differ");
    for (std::size_t i = 0; i < G.n_cells(); ++i)
        if (!G.interior(i) && v[i] != 0.0)
            throw ContractError("test function must vanish on COLLAR cells");
    const auto& k = simd::active_kernels();
    double total = 0.0;
    for (std::size_t i : c.cells())
        if (v[i] != 0.0) total += 2.0 * v[i] * G.cell_width() * c.l_term(i, u[i], k);
    return total;
}

DiscreteOperator::DiscreteOperator(std::shared_ptr<const WeightMatrix> w, std::shared_ptr<const ExteriorCoupling> c,
                                   const simd::KernelTable* kernels)
    : w_(std::move(w)), c_(std::move(c)), k_(kernels ? kernels : &simd::active_kernels()) {
    if (!w_ || !c_) throw ContractError("operator needs weights and coupling");
    if (w_->n() != c_->geometry().n_cells()) throw ContractError("weights and geometry sizes differ");
    for (std::size_t i : c_->geometry().interior_cells())
        if (!c_->covers(i)) throw ContractError("every INTERIOR cell must be coupled to the exterior");
}

double DiscreteOperator::row(std::size_t i, double t, std::span<const double> u) const {
    const double p = order().p();
    const double a1 = k_->weighted_l_sum(w_->row(i), u.data(), u.size(), t, p);
    return 2.0 * a1 + 2.0 * geometry().cell_width() * c_->l_term(i, t, *k_);
}

simd::ValueSlope DiscreteOperator::row_slope(std::size_t i, double t, std::span<const double> u) const {
    const double p = order().p();
    const auto a1 = k_->weighted_l_sum_slope(w_->row(i), u.data(), u.size(), t, p);
    const auto a2 = c_->l_term_slope(i, t, *k_);
    const double h2 = 2.0 * geometry().cell_width();
    return {2.0 * a1.value + h2 * a2.value, 2.0 * a1.slope + h2 * a2.slope};
}

void DiscreteOperator::require_boundary_values(const GridFunction& u) const {
    const Geometry& G = geometry();
    if (!(u.geometry() == G)) throw ContractError("grid function lives on a different geometry");
    const auto& g = c_->g_at_centers();
    for (std::size_t i = 0; i < G.n_cells(); ++i)
        if (!G.interior(i) && std::fabs(u[i] - g[i]) > 1e-12 * (1.0 + std::fabs(g[i])))
            throw ContractError("grid function must equal g on COLLAR cells");
}

GridFunction residual(const DiscreteOperator& op, const GridFunction& u) {
    op.require_boundary_values(u);
    GridFunction F = GridFunction::zeros(u.geometry_ptr());
    for (std::size_t i : op.geometry().interior_cells()) F[i] = op.row(i, u[i], u.values());
    return F;
}

namespace {

// Neumaier compensated sum.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace

double energy(const DiscreteOperator& op, const GridFunction& u) {
    op.require_boundary_values(u);
    const double p = op.order().p();
    const auto& k = op.kernels();
    const auto& w = op.weights();
    const std::size_t n = w.n();
    CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(k.weighted_abs_pow_sum(w.row(i), u.values().data(), n, u[i], p) / p);
    const double h = op.geometry().cell_width();
    for (std::size_t i : op.geometry().interior_cells())
        acc.add(2.0 / p * h * op.coupling().energy_term(i, u[i], k));
    return acc.value();
}

double sobolev_norm(const WeightMatrix& w, const GridFunction& v, double p) {
    const auto& k = simd::scalar_kernels();
    const std::size_t n = w.n();
    double seminorm = 0.0, lp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        seminorm += k.weighted_abs_pow_sum(w.row(i), v.values().data(), n, v[i], p);
        lp += std::pow(std::fabs(v[i]), p);
    }
    return std::pow(seminorm + v.geometry().cell_width() * lp, 1.0 / p);
}

DualNormReport dual_norm_bounds(const DiscreteOperator& op, const GridFunction& u, const GridFunction& v, double c) {
    const double p = op.order().p(), q = p - 1.0, sigma = op.order().sp();
    DualNormReport rep{};
    rep.a1 = apply_A1(op.weights(), u, v, p);
    rep.a2 = apply_A2(op.coupling(), u, v);
    const double nu = sobolev_norm(op.weights(), u, p);
    const double nv = sobolev_norm(op.weights(), v, p);
    const Geometry& G = op.geometry();
    const auto& first = G.omega().parts().front();
    const double z = 0.5 * (first.lo + first.hi);
    const double r = G.boundary_gap();
    const double tail = tail_of_exterior_data(op.coupling().exterior(), z, r, op.order()).value;
    const double d1 = std::pow(nu, q) * nv;
    const double d2 = std::pow(r, -sigma) * (std::pow(nu, q) + std::pow(tail, q)) * nv;
    rep.a1_ratio = d1 > 0.0 ? std::fabs(rep.a1) / d1 : 0.0;
    rep.a2_ratio = d2 > 0.0 ? std::fabs(rep.a2) / d2 : 0.0;
    rep.a1_bound_ok = rep.a1_ratio <= c;
    rep.a2_bound_ok = rep.a2_ratio <= c;
    return rep;
}

}  // namespace nlobs
