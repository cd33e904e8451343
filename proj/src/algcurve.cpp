#include "pnft/algcurve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pnft/quadrature.hpp"
#include "pnft/theta.hpp"

namespace pnft::algcurve {

// ---------------------------------------------------------------------------
// Main spectrum

MainSpectrum::MainSpectrum(CVector points, double min_separation) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorCode::InvalidSpectrum, "empty main spectrum");
    for (const Complex& p : points_) {
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag()) || !(p.imag() > 0.0)) {
            throw Error(ErrorCode::InvalidSpectrum, "main spectrum points must lie in the open upper half-plane");
        }
    }
    std::sort(points_.begin(), points_.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    for (std::size_t i = 0; i < points_.size(); ++i) {
        for (std::size_t j = i + 1; j < points_.size(); ++j) {
            if (std::abs(points_[i] - points_[j]) <= min_separation) {
                throw Error(ErrorCode::CoincidentBranchPoints, "two main spectrum points coincide");
            }
        }
    }
}

MainSpectrum MainSpectrum::scaled(double s) const {
    CVector p(points_);
    for (auto& v : p) v *= s;
    return MainSpectrum(p, 0.0);
}

MainSpectrum MainSpectrum::shifted(double shift) const {
    CVector p(points_);
    for (auto& v : p) v += shift;
    return MainSpectrum(p, 0.0);
}

double spectrum_distance(const CVector& a, const CVector& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "spectra differ in size");
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best_sum = std::numeric_limits<double>::infinity();
    double best_max = 0.0;
    do {
        double sum = 0.0;
        double mx = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = std::abs(a[i] - b[perm[i]]);
            sum += d * d;
            mx = std::max(mx, d);
        }
        if (sum < best_sum) {
            best_sum = sum;
            best_max = mx;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best_max;
}

// ---------------------------------------------------------------------------
// Geometry helpers

namespace {

struct Segment {
    Complex p1;
    Complex p2;
    Complex mid;
    Complex half;
    int cut;
};

// sqrt((lambda - p1)(lambda - p2)) with its cut on the segment and ~ lambda at infinity.
inline Complex segment_root(const Segment& s, Complex lam) {
    const Complex w = lam - s.mid;
    const Complex z = ((lam - s.p1) * (lam - s.p2)) / (w * w);
    return w * std::sqrt(z);
}

struct Geometry {
    std::vector<Segment> segments;
    CVector bends;  // interior polyline vertices; each contributes a removable double zero

    explicit Geometry(const HyperellipticCurve& curve) {
        for (std::size_t k = 0; k < curve.cuts.size(); ++k) {
            const CVector& v = curve.cuts[k].vertices;
            for (std::size_t j = 0; j + 1 < v.size(); ++j) {
                segments.push_back({v[j], v[j + 1], 0.5 * (v[j] + v[j + 1]), 0.5 * (v[j + 1] - v[j]), static_cast<int>(k)});
            }
            for (std::size_t j = 1; j + 1 < v.size(); ++j) bends.push_back(v[j]);
        }
    }

    Complex root(Complex lam) const {
        Complex r{1.0, 0.0};
        for (const auto& s : segments) r *= segment_root(s, lam);
        for (const auto& q : bends) r /= (lam - q);
        return r;
    }

    Complex root_without(Complex lam, std::size_t skip) const {
        Complex r{1.0, 0.0};
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (i != skip) r *= segment_root(segments[i], lam);
        }
        for (const auto& q : bends) r /= (lam - q);
        return r;
    }
};

double cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }

double point_segment_distance(Complex p, Complex a, Complex b) {
    const Complex d = b - a;
    double t = std::real((p - a) * std::conj(d)) / std::norm(d);
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * d));
}

bool segments_meet(Complex a1, Complex a2, Complex b1, Complex b2, double eps) {
    const double d1 = cross(a2 - a1, b1 - a1);
    const double d2 = cross(a2 - a1, b2 - a1);
    const double d3 = cross(b2 - b1, a1 - b1);
    const double d4 = cross(b2 - b1, a2 - b1);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    return point_segment_distance(b1, a1, a2) < eps || point_segment_distance(b2, a1, a2) < eps ||
           point_segment_distance(a1, b1, b2) < eps || point_segment_distance(a2, b1, b2) < eps;
}

bool polylines_meet(const CVector& a, const CVector& b, double eps, bool skip_first_of_a) {
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        for (std::size_t j = 0; j + 1 < b.size(); ++j) {
            Complex a1 = a[i];
            if (skip_first_of_a && i == 0) {
                // The escape starts on its own cut; move the test point off the endpoint.
                a1 = a[0] + 1e-6 * (a[1] - a[0]);
            }
            if (segments_meet(a1, a[i + 1], b[j], b[j + 1], eps)) return true;
        }
    }
    return false;
}

}  // namespace

Complex HyperellipticCurve::sheet_root(Complex lambda) const {
    return Geometry(*this).root(lambda);
}

// ---------------------------------------------------------------------------
// Curve construction

HyperellipticCurve build_curve(const MainSpectrum& spectrum) {
    const int g = spectrum.genus();
    if (g < 1) throw Error(ErrorCode::InvalidGenus, "genus >= 1 required");
    const CVector& pts = spectrum.points();
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(pts[i] - pts[j]) <= 1e-12) throw Error(ErrorCode::CoincidentBranchPoints, "coincident points");
        }
    }

    HyperellipticCurve curve;
    curve.spectrum = spectrum;
    double scale = 0.0;
    double top = 0.0;
    for (const auto& p : pts) {
        scale = std::max(scale, std::abs(p));
        top = std::max(top, p.imag());
    }
    curve.scale = scale;
    curve.ceiling = top + 0.5 * scale;
    for (const auto& p : pts) curve.branch_points.push_back(p);
    for (const auto& p : pts) curve.branch_points.push_back(std::conj(p));

    // Group points whose real parts (nearly) coincide; such groups get nested cuts.
    const double cluster_tol = 1e-3 * scale;
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < n; ++i) {
        if (!clusters.empty() && pts[i].real() - pts[clusters.back().back()].real() < cluster_tol) {
            clusters.back().push_back(i);
        } else {
            clusters.push_back({i});
        }
    }
    auto cluster_min = [&](std::size_t c) { return pts[clusters[c].front()].real(); };
    auto cluster_max = [&](std::size_t c) {
        double m = -std::numeric_limits<double>::infinity();
        for (auto i : clusters[c]) m = std::max(m, pts[i].real());
        return m;
    };

    curve.cuts.resize(n);
    curve.escapes.resize(n);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const double gap_right = (c + 1 < clusters.size()) ? cluster_min(c + 1) - cluster_max(c) : scale;
        const double gap_left = (c > 0) ? cluster_min(c) - cluster_max(c - 1) : scale;
        std::vector<std::size_t> members = clusters[c];
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) { return pts[a].imag() < pts[b].imag(); });
        const std::size_t m = members.size();
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t k = members[j];
            const Complex p = pts[k];
            if (j == 0) {
                curve.cuts[k].vertices = {std::conj(p), p};
            } else {
                const double d = 0.4 * gap_right * static_cast<double>(j) / static_cast<double>(m);
                curve.cuts[k].vertices = {std::conj(p), std::conj(p) + d, p + d, p};
            }
            if (j + 1 == m) {
                curve.escapes[k] = {p, Complex(p.real(), curve.ceiling)};
            } else {
                const double e = 0.2 * gap_left;
                curve.escapes[k] = {p, p - e, Complex(p.real() - e, curve.ceiling)};
            }
        }
    }

    const double eps = 1e-12 * scale;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (polylines_meet(curve.cuts[a].vertices, curve.cuts[b].vertices, eps, false)) {
                throw Error(ErrorCode::CutsIntersect, "branch cuts intersect");
            }
        }
    }
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const bool own = (a == b);
            if (polylines_meet(curve.escapes[a], curve.cuts[b].vertices, own ? 0.0 : eps, own)) {
                throw Error(ErrorCode::CutsIntersect, "integration path crosses a branch cut");
            }
        }
    }

    for (int k = 0; k < g; ++k) {
        curve.a_cycles.push_back(k);
        curve.b_cycles.emplace_back(k, g);
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Quadrature

namespace {

// Accumulates weight * lambda^j / P for j = 0..J-1.
struct MomentSink {
    int count;
    void operator()(Complex lam, Complex inv_root, Complex weight, CVec& acc) const {
        Complex pw = weight * inv_root;
        for (int j = 0; j < count; ++j) {
            acc(j) += pw;
            pw *= lam;
        }
    }
};

// Integral around the cut, counterclockwise, using one-sided boundary values
// of P on the left of the polyline (oriented conj(lambda) -> lambda).
template <class Sink>
void integrate_around_cut(const Geometry& geo, int cut, int nodes, const Sink& sink, CVec& acc) {
    std::vector<std::size_t> own;
    for (std::size_t i = 0; i < geo.segments.size(); ++i) {
        if (geo.segments[i].cut == cut) own.push_back(i);
    }
    const GaussRule& gl = gauss_legendre(nodes);
    for (std::size_t idx = 0; idx < own.size(); ++idx) {
        const Segment& s = geo.segments[own[idx]];
        const bool start_branch = (idx == 0);
        const bool end_branch = (idx + 1 == own.size());
        const Complex h = s.half;
        if (start_branch && end_branch) {
            // Chebyshev substitution absorbs both square-root endpoints.
            for (int i = 0; i < nodes; ++i) {
                const double th = (i + 0.5) * kPi / nodes;
                const double sn = std::sin(th);
                const Complex lam = s.mid - std::cos(th) * h;
                const Complex left = kI * h * sn * geo.root_without(lam, own[idx]);
                sink(lam, 1.0 / left, -2.0 * h * sn * (kPi / nodes), acc);
            }
        } else if (start_branch || end_branch) {
            for (int i = 0; i < nodes; ++i) {
                const double u = 0.5 * (gl.nodes[static_cast<std::size_t>(i)] + 1.0);
                const double w = 0.5 * gl.weights[static_cast<std::size_t>(i)];
                const Complex lam = start_branch ? s.p1 + 2.0 * h * u * u : s.p2 - 2.0 * h * u * u;
                const double own_factor = 2.0 * u * std::sqrt((1.0 - u) * (1.0 + u));
                const Complex left = kI * h * own_factor * geo.root_without(lam, own[idx]);
                sink(lam, 1.0 / left, -2.0 * 4.0 * h * u * w, acc);
            }
        } else {
            for (int i = 0; i < nodes; ++i) {
                const double sv = gl.nodes[static_cast<std::size_t>(i)];
                const double w = gl.weights[static_cast<std::size_t>(i)];
                const Complex lam = s.mid + sv * h;
                const Complex left = kI * h * std::sqrt((1.0 - sv) * (1.0 + sv)) * geo.root_without(lam, own[idx]);
                sink(lam, 1.0 / left, -2.0 * h * w, acc);
            }
        }
    }
}

// Integral along an open polyline on sheet one. A singular endpoint is a
// branch point and is handled by the substitution lambda = P + D u^2.
template <class Sink>
void integrate_path(const Geometry& geo, const CVector& path, bool start_branch, bool end_branch, int nodes,
                    const Sink& sink, CVec& acc) {
    const GaussRule& gl = gauss_legendre(nodes);
    const std::size_t nseg = path.size() - 1;
    for (std::size_t j = 0; j < nseg; ++j) {
        const Complex a = path[j];
        const Complex b = path[j + 1];
        const bool sa = start_branch && j == 0;
        const bool sb = end_branch && j + 1 == nseg;
        auto run = [&](Complex from, Complex to, bool sing_from, bool sing_to) {
            const Complex d = to - from;
            for (int i = 0; i < nodes; ++i) {
                const double u = 0.5 * (gl.nodes[static_cast<std::size_t>(i)] + 1.0);
                const double w = 0.5 * gl.weights[static_cast<std::size_t>(i)];
                Complex lam;
                Complex weight;
                if (sing_from) {
                    lam = from + d * (u * u);
                    weight = 2.0 * d * u * w;
                } else if (sing_to) {
                    lam = to - d * (u * u);
                    weight = 2.0 * d * u * w;
                } else {
                    lam = from + d * u;
                    weight = d * w;
                }
                sink(lam, 1.0 / geo.root(lam), weight, acc);
            }
        };
        if (sa && sb) {
            const Complex m = 0.5 * (a + b);
            run(a, m, true, false);
            run(m, b, false, true);
        } else {
            run(a, b, sa, sb);
        }
    }
}

template <class Eval>
CVec converge(const Eval& eval, const QuadratureOptions& opts, double& err, const char* what) {
    int n = opts.initial_nodes;
    CVec prev = eval(n);
    while (true) {
        const int n2 = 2 * n;
        CVec cur = eval(n2);
        const double diff = (cur - prev).cwiseAbs().maxCoeff();
        const double mag = std::max(cur.cwiseAbs().maxCoeff(), 1e-300);
        if (diff <= opts.tol * mag) {
            err = std::max(err, diff / mag);
            return cur;
        }
        if (n2 >= opts.max_nodes) {
            throw Error(ErrorCode::QuadratureNotConverged, std::string(what) + " did not converge within the node budget");
        }
        prev = std::move(cur);
        n = n2;
    }
}

CVector b_path(const HyperellipticCurve& curve, int k) {
    const int r = curve.reference_cut();
    CVector path = curve.escapes[static_cast<std::size_t>(k)];
    const CVector& back = curve.escapes[static_cast<std::size_t>(r)];
    for (auto it = back.rbegin(); it != back.rend(); ++it) path.push_back(*it);
    return path;
}

struct RawPeriods {
    CMatrix A;  // (J x g) moments over a-cycles
    CMatrix B;  // (J x g) moments over b-cycles
    double err = 0.0;
};

RawPeriods raw_periods(const HyperellipticCurve& curve, const Geometry& geo, int moments, const QuadratureOptions& opts) {
    const int g = curve.genus();
    RawPeriods out;
    out.A.resize(moments, g);
    out.B.resize(moments, g);
    const MomentSink sink{moments};
    for (int k = 0; k < g; ++k) {
        out.A.col(k) = converge(
            [&](int nodes) {
                CVec acc = CVec::Zero(moments);
                integrate_around_cut(geo, curve.a_cycles[static_cast<std::size_t>(k)], nodes, sink, acc);
                return acc;
            },
            opts, out.err, "a-cycle quadrature");
        const CVector path = b_path(curve, k);
        out.B.col(k) = converge(
            [&](int nodes) {
                CVec acc = CVec::Zero(moments);
                integrate_path(geo, path, true, true, nodes, sink, acc);
                return CVec(2.0 * acc);
            },
            opts, out.err, "b-cycle quadrature");
    }
    return out;
}

}  // namespace

CycleIntegrals cycle_integrals(const HyperellipticCurve& curve, const QuadratureOptions& opts) {
    const Geometry geo(curve);
    const int g = curve.genus();
    RawPeriods raw = raw_periods(curve, geo, g, opts);
    CycleIntegrals out;
    out.A = raw.A;
    out.B = raw.B;
    out.error_estimate = raw.err;
    return out;
}

// ---------------------------------------------------------------------------
// Theta parameters

namespace {

// Coefficients e_n of 1/P = lambda^{-(g+1)} sum e_n lambda^{-n} on sheet one.
CVector inverse_root_series(const CVector& branch_points, int order) {
    CVector s(static_cast<std::size_t>(order) + 1, 0.0);
    for (int nn = 1; nn <= order; ++nn) {
        Complex p{0.0, 0.0};
        for (const auto& e : branch_points) p += std::pow(e, nn);
        s[static_cast<std::size_t>(nn)] = p / (2.0 * nn);
    }
    CVector e(static_cast<std::size_t>(order) + 1, 0.0);
    e[0] = 1.0;
    for (int nn = 1; nn <= order; ++nn) {
        Complex acc{0.0, 0.0};
        for (int k = 1; k <= nn; ++k) acc += static_cast<double>(k) * s[static_cast<std::size_t>(k)] * e[static_cast<std::size_t>(nn - k)];
        e[static_cast<std::size_t>(nn)] = acc / static_cast<double>(nn);
    }
    return e;
}

// Laurent coefficient of lambda^{-n} in poly(lambda)/P(lambda).
Complex laurent(const CVector& poly, const CVector& e, int g, int nn) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < poly.size(); ++j) {
        const int idx = nn + static_cast<int>(j) - g - 1;
        if (idx >= 0 && idx < static_cast<int>(e.size())) acc += poly[j] * e[static_cast<std::size_t>(idx)];
    }
    return acc;
}

bool positive_definite(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (m + m.transpose()));
    return llt.info() == Eigen::Success;
}

// Unimodular change of basis that exposes a small integer relation between the
// frequencies: column operations col_j -= m col_i with |m| <= bound, applied
// while they lower the ratio between the smallest and the largest |omega|.
Eigen::MatrixXi reduce_frequency_basis(const RVec& omega, const RVec& kvec, int bound) {
    const int g = static_cast<int>(omega.size());
    Eigen::MatrixXi M = Eigen::MatrixXi::Identity(g, g);
    RVec w = omega;
    const double wmax = std::max(omega.cwiseAbs().maxCoeff(), 1e-300);
    const double zero = 1e-9 * wmax;
    auto spread = [&](const RVec& v) {
        const double hi = v.cwiseAbs().maxCoeff();
        return hi > 0.0 ? v.cwiseAbs().minCoeff() / hi : 1.0;
    };
    for (int iter = 0; iter < 64 && g > 1; ++iter) {
        double best = spread(w);
        int bj = -1;
        int bi = -1;
        long bm = 0;
        for (int j = 0; j < g; ++j) {
            for (int i = 0; i < g; ++i) {
                if (i == j || std::abs(w(i)) <= zero) continue;
                const double ratio = w(j) / w(i);
                if (std::abs(ratio) > bound + 0.5) continue;
                const long m = std::lround(ratio);
                if (m == 0) continue;
                RVec trial = w;
                trial(j) -= static_cast<double>(m) * w(i);
                const double sp = spread(trial);
                if (sp < best * (1.0 - 1e-9)) {
                    best = sp;
                    bj = j;
                    bi = i;
                    bm = m;
                }
            }
        }
        if (bj < 0) break;
        w(bj) -= static_cast<double>(bm) * w(bi);
        M.col(bj) -= static_cast<int>(bm) * M.col(bi);
    }
    // Sign convention: nonzero frequencies positive, otherwise positive wavenumber.
    const RVec kk = M.cast<double>().transpose() * kvec;
    for (int j = 0; j < g; ++j) {
        const bool flip = std::abs(w(j)) > zero ? (w(j) < 0.0) : (kk(j) < 0.0);
        if (flip) {
            M.col(j) *= -1;
            w(j) = -w(j);
        }
    }
    // Order by ascending |omega|.
    std::vector<int> order(static_cast<std::size_t>(g));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double fa = std::abs(w(a)) <= zero ? 0.0 : std::abs(w(a));
        const double fb = std::abs(w(b)) <= zero ? 0.0 : std::abs(w(b));
        return fa < fb;
    });
    Eigen::MatrixXi sorted(g, g);
    for (int j = 0; j < g; ++j) sorted.col(j) = M.col(order[static_cast<std::size_t>(j)]);
    return sorted;
}

double torus_average(const theta::RiemannTheta& th, const CVec& r) {
    const int g = th.genus();
    double prev = -1.0;
    // The trapezoidal rule converges geometrically on the torus; the grid is
    // capped at about 4M points in higher genus.
    for (int n = 16; n <= 256 && std::pow(static_cast<double>(n), g) <= 4.2e6; n *= 2) {
        std::vector<double> t(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
        RVec dir = RVec::Zero(g);
        dir(0) = 1.0;
        double total = 0.0;
        long lines = 1;
        for (int d = 1; d < g; ++d) lines *= n;
        for (long idx = 0; idx < lines; ++idx) {
            CVec base = CVec::Zero(g);
            long rem = idx;
            for (int d = 1; d < g; ++d) {
                base(d) = static_cast<double>(rem % n) / n;
                rem /= n;
            }
            const CVector lden = th.log_line(base, dir, t);
            const CVector lnum = th.log_line(base - r, dir, t, false);
            for (int i = 0; i < n; ++i) total += std::exp(2.0 * std::real(lnum[static_cast<std::size_t>(i)] - lden[static_cast<std::size_t>(i)]));
        }
        const double avg = total / (static_cast<double>(lines) * n);
        if (prev > 0.0 && std::abs(avg - prev) <= 1e-11 * avg) return avg;
        prev = avg;
    }
    return prev;
}

}  // namespace

void validate(const ThetaParameters& p) {
    const int g = p.genus;
    if (g < 1 || p.tau.rows() != g || p.tau.cols() != g || p.omega.size() != g || p.kvec.size() != g ||
        p.delta_minus.size() != g || p.delta_plus.size() != g) {
        throw Error(ErrorCode::InvalidArgument, "theta parameters have inconsistent dimensions");
    }
    if ((p.tau - p.tau.transpose()).norm() > 1e-8 * p.tau.norm()) {
        throw Error(ErrorCode::InvalidArgument, "tau is not symmetric");
    }
    if (!positive_definite(p.tau.imag())) throw Error(ErrorCode::InvalidArgument, "Im(tau) is not positive definite");
    if (p.delta_plus.cwiseAbs().maxCoeff() != 0.0) throw Error(ErrorCode::InvalidArgument, "delta_plus must vanish");
}

ThetaParameters theta_parameters(const HyperellipticCurve& curve, const ParameterOptions& opts) {
    const int g = curve.genus();
    const Geometry geo(curve);
    const int moments = g + 3;
    RawPeriods raw = raw_periods(curve, geo, moments, opts.quadrature);

    const CMatrix A = raw.A.topRows(g);
    Eigen::JacobiSVD<CMatrix> svd(A);
    const double cond = svd.singularValues()(0) / svd.singularValues()(g - 1);
    if (!(cond < 1e10)) throw Error(ErrorCode::IllConditionedPeriods, "a-period matrix condition number " + std::to_string(cond));
    const CMatrix C = A.inverse();
    CMatrix tau = C * raw.B.topRows(g);

    // Normalized second-kind differentials with poles at infinity on sheet one:
    // Omega1 ~ dlambda, Omega2 ~ 2 lambda dlambda, vanishing a-periods.
    const CVector e = inverse_root_series(curve.branch_points, 80);
    CVector c1(static_cast<std::size_t>(g) + 2, 0.0);
    c1[static_cast<std::size_t>(g) + 1] = 1.0;
    c1[static_cast<std::size_t>(g)] = -e[1];
    CVector c2(static_cast<std::size_t>(g) + 3, 0.0);
    c2[static_cast<std::size_t>(g) + 2] = 2.0;
    c2[static_cast<std::size_t>(g) + 1] = -2.0 * e[1];
    c2[static_cast<std::size_t>(g)] = -2.0 * e[2] + 2.0 * e[1] * e[1];
    auto fill_low = [&](CVector& c) {
        CVec rhs = CVec::Zero(g);
        for (int k = 0; k < g; ++k) {
            for (std::size_t j = static_cast<std::size_t>(g); j < c.size(); ++j) rhs(k) -= c[j] * raw.A(static_cast<Eigen::Index>(j), k);
        }
        const CVec low = A.transpose().partialPivLu().solve(rhs);
        for (int j = 0; j < g; ++j) c[static_cast<std::size_t>(j)] = low(j);
    };
    fill_low(c1);
    fill_low(c2);
    CVec U = CVec::Zero(g);
    CVec V = CVec::Zero(g);
    for (int l = 0; l < g; ++l) {
        for (std::size_t j = 0; j < c1.size(); ++j) U(l) += c1[j] * raw.B(static_cast<Eigen::Index>(j), l);
        for (std::size_t j = 0; j < c2.size(); ++j) V(l) += c2[j] * raw.B(static_cast<Eigen::Index>(j), l);
    }

    // Orientation of the b-cycles: Im(tau) must be positive definite.
    if (!positive_definite(tau.imag())) {
        if (positive_definite(-tau.imag())) {
            tau = -tau;
            U = -U;
            V = -V;
        } else {
            throw Error(ErrorCode::IllConditionedPeriods, "period matrix has indefinite imaginary part");
        }
    }
    // Adding a-cycles to b-cycles shifts tau by integers; make it symmetric.
    for (int k = 0; k < g; ++k) {
        for (int l = k + 1; l < g; ++l) {
            const double shift = std::round(std::real(tau(l, k) - tau(k, l)));
            tau(k, l) += shift;
        }
    }
    const double asym = (tau - tau.transpose()).norm() / tau.norm();
    if (asym > 1e-6) throw Error(ErrorCode::QuadratureNotConverged, "period matrix is not symmetric");
    tau = 0.5 * (tau + tau.transpose()).eval();

    RVec omega = -U.real();
    RVec kvec = -2.0 * V.real();

    // Abel map from the top of the reference cut to infinity on sheet one.
    const int ref = curve.reference_cut();
    const Complex E = curve.spectrum.points()[static_cast<std::size_t>(ref)];
    double bmax = 0.0;
    for (const auto& b : curve.branch_points) bmax = std::max(bmax, std::abs(b));
    CVector path = curve.escapes[static_cast<std::size_t>(ref)];
    const Complex top = path.back();
    const Complex far(top.real(), top.imag() + 4.0 * bmax + curve.scale);
    path.push_back(far);
    auto finite_part = [&](int nodes) {
        CVec acc = CVec::Zero(g + 2);
        auto sink = [&](Complex lam, Complex inv_root, Complex weight, CVec& out) {
            Complex pw = weight * inv_root;
            for (int j = 0; j < g; ++j) {
                out(j) += pw;
                pw *= lam;
            }
            Complex p1{0.0, 0.0};
            Complex p2{0.0, 0.0};
            for (std::size_t j = c1.size(); j-- > 0;) p1 = p1 * lam + c1[j];
            for (std::size_t j = c2.size(); j-- > 0;) p2 = p2 * lam + c2[j];
            out(g) += weight * (p1 * inv_root - 1.0);
            out(g + 1) += weight * (p2 * inv_root - 2.0 * lam);
        };
        integrate_path(geo, path, true, false, nodes, sink, acc);
        return acc;
    };
    CVec ray = converge(finite_part, opts.quadrature, raw.err, "Abel-map quadrature");
    // Tail beyond `far` from the Laurent expansion at infinity.
    const int terms = static_cast<int>(e.size()) - 1;
    for (int j = 0; j < g; ++j) {
        for (int m = 0; m + g + 1 - j <= terms; ++m) {
            const int p = g + m - j;  // integral of lambda^{-(p+1)}
            ray(j) += e[static_cast<std::size_t>(m)] * std::pow(far, -p) / static_cast<double>(p);
        }
    }
    for (int nn = 2; nn <= terms - 2; ++nn) {
        ray(g) += laurent(c1, e, g, nn) * std::pow(far, 1 - nn) / static_cast<double>(nn - 1);
        ray(g + 1) += laurent(c2, e, g, nn) * std::pow(far, 1 - nn) / static_cast<double>(nn - 1);
    }
    CVec r = 2.0 * C * ray.head(g);
    double omega0 = std::real(2.0 * (ray(g) - E));
    double k0 = std::real(4.0 * (ray(g + 1) - E * E));

    // Basis with small integer frequency relations made explicit.
    const Eigen::MatrixXi M = reduce_frequency_basis(omega, kvec, opts.reduction_bound);
    const Eigen::MatrixXd Md = M.cast<double>();
    omega = Md.transpose() * omega;
    kvec = Md.transpose() * kvec;
    r = Md.transpose().cast<Complex>() * r;
    tau = (Md.transpose().cast<Complex>() * tau * Md.cast<Complex>()).eval();
    const double wmax = omega.cwiseAbs().maxCoeff();
    for (int j = 0; j < g; ++j) {
        if (std::abs(omega(j)) <= 1e-12 * wmax) omega(j) = 0.0;
    }

    // The carrier frequency is defined modulo the lattice of omega; shifting r by
    // tau n moves omega0 -> omega0 - n.omega and k0 -> k0 - n.k.
    {
        Eigen::VectorXi best = Eigen::VectorXi::Zero(g);
        double best_abs = std::abs(omega0);
        int best_norm = 0;
        Eigen::VectorXi n = Eigen::VectorXi::Constant(g, -3);
        while (true) {
            // Components along zero frequencies cannot lower |omega0|.
            bool useful = true;
            for (int j = 0; j < g; ++j) {
                if (omega(j) == 0.0 && n(j) != 0) useful = false;
            }
            if (useful) {
                const double cand = std::abs(omega0 - n.cast<double>().dot(omega));
                const int norm = n.cwiseAbs().sum();
                const double margin = 1e-9 * (1.0 + std::abs(omega0));
                if (cand < best_abs - margin || (std::abs(cand - best_abs) <= margin && norm < best_norm)) {
                    best_abs = cand;
                    best = n;
                    best_norm = norm;
                }
            }
            int d = 0;
            while (d < g && n(d) == 3) n(d++) = -3;
            if (d == g) break;
            ++n(d);
        }
        const RVec nb = best.cast<double>();
        omega0 -= nb.dot(omega);
        k0 -= nb.dot(kvec);
        r += tau * nb.cast<Complex>();
    }

    // Mean intensity from the trace formula, then |K0| from the torus average of
    // |theta(x - r)/theta(x)|^2.
    const Complex I2 = laurent(c1, e, g, 2);
    const double mean_power = -2.0 * std::real(I2);
    if (!(mean_power > 0.0)) throw Error(ErrorCode::IllConditionedPeriods, "non-positive mean power");
    theta::RiemannTheta th(tau, opts.theta_tol);
    const double avg = torus_average(th, r);

    ThetaParameters out;
    out.genus = g;
    out.tau = tau;
    out.omega = omega;
    out.kvec = kvec;
    out.omega0 = omega0;
    out.k0 = k0;
    out.K0 = std::sqrt(mean_power / avg);
    out.delta_minus = -2.0 * kPi * r;
    out.delta_plus = RVec::Zero(g);
    out.condition_number = cond;
    validate(out);
    return out;
}

}  // namespace pnft::algcurve
