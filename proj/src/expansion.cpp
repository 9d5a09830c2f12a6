#include "hill/expansion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <utility>

#include <Eigen/Dense>

#include "hill/galerkin.hpp"
#include "hill/ode_rk.hpp"
#include "hill/parallel.hpp"
#include "hill/quadrature.hpp"

namespace hill {

namespace {

constexpr int FIBER_MARGIN = 12;   // Galerkin rows kept beyond the band window
constexpr int MAX_FCELLS = 8;      // unit cells a test function may span

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// quadrature grid in t with exclusion windows
//
// Around every excluded quasimomentum three nested windows of radii
// eps0 > eps1 > eps2 are carved out.  Nodes inside eps2 are never created;
// the two surrounding shells are kept as separate panels so that a single
// sweep yields the integral for all three window radii (shell 0 = outside
// eps0, shell 1 = between eps0 and eps1, shell 2 = between eps1 and eps2).
// ---------------------------------------------------------------------------
struct TQuad {
    std::vector<double> node, weight;
    std::vector<int> shell;   // 0, 1, 2
    std::vector<int> owner;   // index into the exclusion list; -1 in the bulk
};

struct ExclusionWindows {
    std::vector<double> pts;
    double eps0, eps1, eps2;

    int shell_of(double t, int* owner) const {
        double best = 1e300;
        int who = -1;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double d = std::abs(t - pts[i]);
            if (d < best) { best = d; who = static_cast<int>(i); }
        }
        *owner = -1;
        if (who < 0 || best >= eps0) return 0;
        *owner = who;
        if (best < eps2) return -1;   // inside the core: excluded entirely
        if (best < eps1) return 2;
        return 1;
    }
};

TQuad build_tquad(double lo, double hi, const ExclusionWindows& win, int target_nodes) {
    // breakpoints: interval ends plus every window boundary inside
    std::vector<double> cuts = {lo, hi};
    for (double e : win.pts)
        for (double r : {win.eps0, win.eps1, win.eps2})
            for (double s : {-1.0, 1.0}) {
                const double c = e + s * r;
                if (c > lo + 1e-14 && c < hi - 1e-14) cuts.push_back(c);
            }
    std::sort(cuts.begin(), cuts.end());

    static constexpr double GX[8] = {
        -0.9602898564975362, -0.7966664774136267, -0.5255324099163290,
        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
        0.7966664774136267,  0.9602898564975362};
    static constexpr double GW[8] = {
        0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
        0.2223810344533745, 0.1012285362903763};

    const double bulk_h = (hi - lo) / std::max(1, target_nodes / 8);
    TQuad q;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double u = cuts[s], v = cuts[s + 1];
        if (v - u < 1e-14) continue;
        int owner = -1;
        const int shell = win.shell_of(0.5 * (u + v), &owner);
        if (shell < 0) continue;   // window core
        const int panels = shell == 0 ? std::max(1, int(std::lround((v - u) / bulk_h))) : 2;
        const double ph = (v - u) / panels;
        for (int pnl = 0; pnl < panels; ++pnl) {
            const double c = u + (pnl + 0.5) * ph, r = 0.5 * ph;
            for (int g = 0; g < 8; ++g) {
                q.node.push_back(c + r * GX[g]);
                q.weight.push_back(r * GW[g]);
                q.shell.push_back(shell);
                q.owner.push_back(owner);
            }
        }
    }
    return q;
}

// ---------------------------------------------------------------------------
// test-function samples on every unit cell meeting the support
// ---------------------------------------------------------------------------
struct FCells {
    int m0 = 0;                        // first cell index
    std::vector<std::vector<cplx>> v;  // v[r][i] = f(m0 + r + i/xquad), i = 0..xquad
};

FCells sample_cells(const TestFunction& f, int xquad) {
    FCells fc;
    fc.m0 = static_cast<int>(std::floor(f.lo()));
    const int mlast = static_cast<int>(std::ceil(f.hi())) - 1;
    for (int m = fc.m0; m <= mlast; ++m) {
        std::vector<cplx> row(static_cast<std::size_t>(xquad) + 1);
        for (int i = 0; i <= xquad; ++i) row[static_cast<std::size_t>(i)] = f(m + double(i) / xquad);
        fc.v.push_back(std::move(row));
    }
    return fc;
}

// linear interpolation of a tracked band curve at quasimomentum t in [0, pi]
cplx curve_at(const SpectralCurve& c, double t, double* local_gap) {
    const auto& s = c.samples;
    auto it = std::lower_bound(s.begin(), s.end(), t,
                               [](const BlochEigenvalue& b, double x) { return b.t < x; });
    std::size_t j = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
    if (j + 1 >= s.size()) j = s.size() - 2;
    const double t0 = s[j].t, t1 = s[j + 1].t;
    const double u = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
    *local_gap = std::abs(s[j + 1].lambda - s[j].lambda);
    return s[j].lambda + u * (s[j + 1].lambda - s[j].lambda);
}

// bands that carry singular points, pooled before integration
struct GroupContext {
    std::vector<int> S;
    std::vector<const SpectralCurve*> curves;   // aligned with S
};

// mask over the window slots marking the pooled bands at this t
std::vector<char> group_mask(const GroupContext& gc, const Eigen::VectorXcd& lambda, int nwin,
                             double t) {
    std::vector<char> mask(static_cast<std::size_t>(nwin), 0);
    const double ta = std::abs(t);
    for (std::size_t si = 0; si < gc.S.size(); ++si) {
        double gap = 0.0;
        const cplx pred = curve_at(*gc.curves[si], ta, &gap);
        int best = -1;
        double bd = 1e300;
        for (int i = 0; i < nwin; ++i) {
            if (mask[static_cast<std::size_t>(i)]) continue;   // greedy, one slot per band
            const double d = std::abs(lambda[i] - pred);
            if (d < bd) { bd = d; best = i; }
        }
        if (best >= 0 && bd <= std::max(1e-4 * (1.0 + std::abs(pred)), 5.0 * gap))
            mask[static_cast<std::size_t>(best)] = 1;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// per-node engines
// ---------------------------------------------------------------------------

// eigenprojection form: terms a_k(t) Psi_k(x) of the fiber expansion of f_t
struct BlochNode {
    std::vector<cplx> a;                   // per window slot
    std::vector<std::vector<cplx>> term;   // [slot][i], i over the base cell grid
    std::vector<char> grouped;
};

BlochNode bloch_node(const FourierPotential& p, const FCells& fc, const GroupContext& gc,
                     double t, int nmax, int xquad, Eigen::MatrixXcd* psi_out = nullptr) {
    const int K = nmax + FIBER_MARGIN + p.order();
    const auto fb = fiber_basis(p, t, K);
    const int dim = 2 * K + 1;
    const int nwin = 2 * nmax + 1;

    // f_t on the base grid
    Eigen::VectorXcd ft(xquad);
    for (int i = 0; i < xquad; ++i) {
        cplx acc = 0.0;
        for (std::size_t r = 0; r < fc.v.size(); ++r) {
            const int m = fc.m0 + static_cast<int>(r);
            acc += fc.v[r][static_cast<std::size_t>(i)] * std::polar(1.0, -m * t);
        }
        ft[i] = acc;
    }

    // basis matrix E(i, a) = e^{i (2 pi j + t) x_i}, j = a - K, on x_i = i/xquad
    Eigen::MatrixXcd E(xquad, dim);
    std::vector<cplx> tw(static_cast<std::size_t>(xquad));
    for (int r = 0; r < xquad; ++r) tw[static_cast<std::size_t>(r)] = std::polar(1.0, TWO_PI * r / xquad);
    for (int i = 0; i < xquad; ++i) {
        const cplx ph = std::polar(1.0, t * double(i) / xquad);
        for (int a = 0; a < dim; ++a) {
            const long j = a - K;
            const long rr = ((j * i) % xquad + xquad) % xquad;
            E(i, a) = tw[static_cast<std::size_t>(rr)] * ph;
        }
    }

    // quasi-Fourier coefficients of f_t and the window expansion data
    const Eigen::VectorXcd c = E.adjoint() * ft / double(xquad);
    const Eigen::VectorXcd amp = fb.W.topRows(nwin) * c;       // a_k(t), unit-norm columns
    const Eigen::MatrixXcd Psi = E * fb.V.leftCols(nwin);      // Psi_k on the base grid
    if (psi_out) *psi_out = Psi;

    BlochNode out;
    out.a.resize(static_cast<std::size_t>(nwin));
    out.term.assign(static_cast<std::size_t>(nwin), std::vector<cplx>(static_cast<std::size_t>(xquad)));
    for (int s = 0; s < nwin; ++s) {
        out.a[static_cast<std::size_t>(s)] = amp[s];
        for (int i = 0; i < xquad; ++i)
            out.term[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] = amp[s] * Psi(i, s);
    }
    out.grouped = gc.S.empty() ? std::vector<char>(static_cast<std::size_t>(nwin), 0)
                               : group_mask(gc, fb.lambda, nwin, t);
    return out;
}

// lambda-plane form: one augmented integration per (band, t) produces the
// fundamental pair, its lambda-derivative (for F'), and the cell integrals
// of theta * f and phi * f in a single adaptive pass.
struct ArcSlice {
    cplx lambda;
    std::vector<cplx> theta, phi;          // traces on the base grid, xquad + 1 points
    std::vector<std::array<cplx, 2>> cell; // per output cell: integrand = c0*theta + c1*phi
};

struct DirectNode {
    std::vector<ArcSlice> slice;   // per window slot
    std::vector<char> grouped;
};

// augmented state layout (complex):
//   0 theta   1 theta'   2 d theta/d lambda   3 d theta'/d lambda
//   4 phi     5 phi'     6 d phi/d lambda     7 d phi'/d lambda
//   8 + 2r / 9 + 2r : integrals of theta * f(. + m_r) and phi * f(. + m_r)
constexpr std::size_t DSTATE = 8 + 2 * MAX_FCELLS;

DirectNode direct_node(const FourierPotential& p, const TestFunction& f, const FCells& fc,
                       const GroupContext& gc, double t, int nmax, int xquad, int out_m0,
                       int out_m1, double ode_tol) {
    const int K = nmax + FIBER_MARGIN + p.order();
    const auto fb = fiber_basis(p, t, K);
    const int nwin = 2 * nmax + 1;
    const int ncells = static_cast<int>(fc.v.size());

    std::vector<double> grid(static_cast<std::size_t>(xquad) + 1);
    for (int i = 0; i <= xquad; ++i) grid[static_cast<std::size_t>(i)] = double(i) / xquad;

    DirectNode out;
    out.slice.resize(static_cast<std::size_t>(nwin));
    for (int s = 0; s < nwin; ++s) {
        const cplx lambda = fb.lambda[s];
        auto& sl = out.slice[static_cast<std::size_t>(s)];
        sl.lambda = lambda;
        sl.theta.resize(static_cast<std::size_t>(xquad) + 1);
        sl.phi.resize(static_cast<std::size_t>(xquad) + 1);

        using Stepper = Rkf78<DSTATE>;
        Stepper::State y{};
        y[0] = 1.0;   // theta(0) = 1, theta'(0) = 0
        y[5] = 1.0;   // phi(0) = 0,  phi'(0) = 1
        const auto rhs = [&](double x, const Stepper::State& u, Stepper::State& du) {
            const cplx w = p.evaluate(x) - lambda;
            du[0] = u[1]; du[1] = w * u[0];
            du[2] = u[3]; du[3] = w * u[2] - u[0];
            du[4] = u[5]; du[5] = w * u[4];
            du[6] = u[7]; du[7] = w * u[6] - u[4];
            for (int r = 0; r < MAX_FCELLS; ++r) {
                if (r < ncells) {
                    const cplx fv = f(x + fc.m0 + r);
                    du[8 + 2 * static_cast<std::size_t>(r)] = u[0] * fv;
                    du[9 + 2 * static_cast<std::size_t>(r)] = u[4] * fv;
                } else {
                    du[8 + 2 * static_cast<std::size_t>(r)] = 0.0;
                    du[9 + 2 * static_cast<std::size_t>(r)] = 0.0;
                }
            }
        };
        OdeOptions opt;
        opt.rtol = ode_tol;
        opt.atol = ode_tol;
        Stepper::integrate_grid(rhs, 0.0, 1.0, y, opt, grid, [&](std::size_t gi, double, const Stepper::State& u) {
            sl.theta[gi] = u[0];
            sl.phi[gi] = u[4];
        });

        const cplx theta1 = y[0], dtheta1 = y[1], phi1 = y[4], dphi1 = y[5];
        const cplx dF = y[2] + y[7];   // d(theta(1) + phi'(1))/d lambda

        // h = integral of phi * f, g = integral of theta * f over the line,
        // assembled from the per-cell integrals via monodromy powers
        const cplx M[2][2] = {{theta1, phi1}, {dtheta1, dphi1}};
        const cplx Minv[2][2] = {{dphi1, -phi1}, {-dtheta1, theta1}};
        const auto mpow = [&](int m) {
            cplx A = 1.0, B = 0.0, C = 0.0, D = 1.0;
            const auto& T = m >= 0 ? M : Minv;
            for (int k = 0; k < std::abs(m); ++k) {
                const cplx a2 = T[0][0] * A + T[0][1] * C, b2 = T[0][0] * B + T[0][1] * D;
                const cplx c2 = T[1][0] * A + T[1][1] * C, d2 = T[1][0] * B + T[1][1] * D;
                A = a2; B = b2; C = c2; D = d2;
            }
            return std::array<cplx, 4>{A, B, C, D};   // [[A,B],[C,D]] = M^m
        };

        cplx h = 0.0, g = 0.0;
        for (int r = 0; r < ncells; ++r) {
            const auto Pm = mpow(fc.m0 + r);
            const cplx It = y[8 + 2 * static_cast<std::size_t>(r)];
            const cplx Ip = y[9 + 2 * static_cast<std::size_t>(r)];
            h += Pm[1] * It + Pm[3] * Ip;   // phi(y+m) = B theta + D phi
            g += Pm[0] * It + Pm[2] * Ip;   // theta(y+m) = A theta + C phi
        }

        // phi(x, lambda) combination, divided by F'(lambda); the branch sign
        // of p is applied when the arcs are assembled
        const cplx half = 0.5 * (theta1 - dphi1);
        const cplx ctheta = (half * h - phi1 * g) / dF;
        const cplx cphi = (dtheta1 * h + half * g) / dF;
        sl.cell.resize(static_cast<std::size_t>(out_m1 - out_m0 + 1));
        for (int m = out_m0; m <= out_m1; ++m) {
            const auto Pm = mpow(m);
            sl.cell[static_cast<std::size_t>(m - out_m0)] = {ctheta * Pm[0] + cphi * Pm[1],
                                                             ctheta * Pm[2] + cphi * Pm[3]};
        }
    }
    out.grouped = gc.S.empty() ? std::vector<char>(static_cast<std::size_t>(nwin), 0)
                               : group_mask(gc, fb.lambda, nwin, t);
    return out;
}

// ---------------------------------------------------------------------------
// accumulation and report assembly shared by the two reconstructions
// ---------------------------------------------------------------------------
struct Accum {
    int nwin = 0, nout = 0;
    std::vector<std::array<std::vector<cplx>, 3>> band;   // [slot][shell][x]
    std::array<std::vector<cplx>, 3> grouped;
    std::vector<double> owner_mass;                       // shell-2 mass per exclusion point

    Accum(int nw, int no, int nowners) : nwin(nw), nout(no) {
        band.resize(static_cast<std::size_t>(nw));
        for (auto& b : band)
            for (auto& sh : b) sh.assign(static_cast<std::size_t>(no), cplx(0.0));
        for (auto& sh : grouped) sh.assign(static_cast<std::size_t>(no), cplx(0.0));
        owner_mass.assign(static_cast<std::size_t>(std::max(1, nowners)), 0.0);
    }
};

double l2_on_grid(const std::vector<cplx>& v, int xquad) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double m = std::norm(v[i]);
        s += (i == 0 || i + 1 == v.size()) ? 0.5 * m : m;
    }
    return std::sqrt(s / xquad);
}

std::vector<cplx> add(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

// ladder variants (eps0, eps1, eps2) and the Richardson extrapolation of the
// last two rungs for one accumulated contribution
std::array<std::vector<cplx>, 4> ladder(const std::array<std::vector<cplx>, 3>& sh) {
    std::array<std::vector<cplx>, 4> out;
    out[0] = sh[0];
    out[1] = add(out[0], sh[1]);
    out[2] = add(out[1], sh[2]);
    out[3].resize(out[2].size());
    for (std::size_t i = 0; i < out[2].size(); ++i)
        out[3][i] = out[2][i] + (out[2][i] - out[1][i]) / 9.0;
    return out;
}

struct LadderedTotals {
    std::array<std::vector<cplx>, 4> total;                      // three rungs + extrapolation
    std::vector<std::array<std::vector<cplx>, 4>> band_var;      // [slot][rung]
    std::array<std::vector<cplx>, 4> grouped_var;

    const std::vector<cplx>& band_final(int s) const { return band_var[static_cast<std::size_t>(s)][3]; }
    const std::vector<cplx>& grouped_final() const { return grouped_var[3]; }
};

LadderedTotals combine(const Accum& acc, double scale) {
    LadderedTotals lt;
    for (auto& tvar : lt.total) tvar.assign(static_cast<std::size_t>(acc.nout), cplx(0.0));
    lt.band_var.resize(static_cast<std::size_t>(acc.nwin));
    for (int s = 0; s < acc.nwin; ++s) {
        auto lad = ladder(acc.band[static_cast<std::size_t>(s)]);
        for (int v = 0; v < 4; ++v) {
            auto& rung = lad[static_cast<std::size_t>(v)];
            for (auto& z : rung) z *= scale;
            for (int i = 0; i < acc.nout; ++i)
                lt.total[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)] += rung[static_cast<std::size_t>(i)];
        }
        lt.band_var[static_cast<std::size_t>(s)] = std::move(lad);
    }
    auto lad = ladder(acc.grouped);
    for (int v = 0; v < 4; ++v) {
        auto& rung = lad[static_cast<std::size_t>(v)];
        for (auto& z : rung) z *= scale;
        for (int i = 0; i < acc.nout; ++i)
            lt.total[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)] += rung[static_cast<std::size_t>(i)];
    }
    lt.grouped_var = std::move(lad);
    return lt;
}

struct Problem {
    const FourierPotential* p;
    const TestFunction* f;
    ExpansionConfig cfg;
    int ia, ib, nout, nwin;
    double fnorm;
    FCells fc;
    GroupContext gc;
    std::vector<SpectralCurve> curves;
    SingularityReport sing;
    std::vector<double> excl;   // exclusion quasimomenta in (-pi, pi): 0 and +-t_j
};

Problem setup(const FourierPotential& p, const TestFunction& f, const ExpansionConfig& cfg) {
    cfg.validate();
    if (f.hi() <= f.lo()) throw BadConfig("expansion: test function has empty support");
    if (f.hi() - f.lo() > MAX_FCELLS)
        throw BadConfig("expansion: test-function support exceeds " + std::to_string(MAX_FCELLS) +
                        " unit cells");

    Problem pr;
    pr.p = &p;
    pr.f = &f;
    pr.cfg = cfg;
    pr.ia = static_cast<int>(cfg.a);
    pr.ib = static_cast<int>(cfg.b);
    pr.nout = (pr.ib - pr.ia) * cfg.xquad + 1;
    pr.nwin = 2 * cfg.nmax + 1;
    pr.fnorm = f.l2_norm();
    if (!(pr.fnorm > 0.0)) throw BadConfig("expansion: test function is numerically zero");
    pr.fc = sample_cells(f, cfg.xquad);

    TrackingConfig tcfg;
    tcfg.nmax = cfg.nmax;
    tcfg.tgrid = std::clamp(cfg.tgrid / 2, 64, 256);
    tcfg.ode_tol = cfg.ode_tol;
    tcfg.workers = cfg.workers;
    pr.curves = track_bands(p, tcfg);
    pr.sing = find_singularities(p, pr.curves, tcfg);

    pr.gc.S = pr.sing.S;
    for (int n : pr.gc.S)
        for (const auto& c : pr.curves)
            if (c.n == n) { pr.gc.curves.push_back(&c); break; }
    if (pr.gc.curves.size() != pr.gc.S.size())
        throw NumericalError("expansion: singular band missing from the tracked set");

    pr.excl.push_back(0.0);
    for (double tj : pr.sing.exclusion_t) {
        pr.excl.push_back(tj);
        pr.excl.push_back(-tj);
    }
    std::sort(pr.excl.begin(), pr.excl.end());
    return pr;
}

void accumulate_bloch(const Problem& pr, const TQuad& tq, Accum& acc,
                      std::vector<std::vector<cplx>>& lattice) {
    const int xq = pr.cfg.xquad;
    const std::size_t nn = tq.node.size();
    constexpr std::size_t CHUNK = 16;
    std::vector<BlochNode> buf(CHUNK);
    for (std::size_t base = 0; base < nn; base += CHUNK) {
        const std::size_t cnt = std::min(CHUNK, nn - base);
        parallel_for(cnt,
                     [&](std::size_t k) {
                         buf[k] = bloch_node(*pr.p, pr.fc, pr.gc, tq.node[base + k],
                                             pr.cfg.nmax, xq);
                     },
                     pr.cfg.workers);
        for (std::size_t k = 0; k < cnt; ++k) {
            const std::size_t ni = base + k;
            const double t = tq.node[ni], w = tq.weight[ni];
            const int sh = tq.shell[ni];
            double mass = 0.0;
            for (int s = 0; s < pr.nwin; ++s) {
                auto& node = buf[k];
                lattice[static_cast<std::size_t>(s)][ni] = node.a[static_cast<std::size_t>(s)];
                auto& arr = node.grouped[static_cast<std::size_t>(s)]
                                ? acc.grouped[static_cast<std::size_t>(sh)]
                                : acc.band[static_cast<std::size_t>(s)][static_cast<std::size_t>(sh)];
                const auto& term = node.term[static_cast<std::size_t>(s)];
                for (int m = pr.ia; m < pr.ib; ++m) {
                    const cplx mult = w * std::polar(1.0, m * t);
                    cplx* dst = arr.data() + static_cast<std::size_t>(m - pr.ia) * xq;
                    for (int i = 0; i < xq; ++i) dst[i] += mult * term[static_cast<std::size_t>(i)];
                }
                arr[static_cast<std::size_t>(pr.nout - 1)] +=
                    w * std::polar(1.0, pr.ib * t) * term[0];
                if (sh == 2) mass += std::abs(w) * std::abs(term[0]);
            }
            if (sh == 2 && tq.owner[ni] >= 0)
                acc.owner_mass[static_cast<std::size_t>(tq.owner[ni])] += mass;
        }
    }
}

void accumulate_direct(const Problem& pr, const TQuad& tq, Accum& acc) {
    const int xq = pr.cfg.xquad;
    const std::size_t nn = tq.node.size();
    constexpr std::size_t CHUNK = 16;
    std::vector<DirectNode> buf(CHUNK);
    for (std::size_t base = 0; base < nn; base += CHUNK) {
        const std::size_t cnt = std::min(CHUNK, nn - base);
        parallel_for(cnt,
                     [&](std::size_t k) {
                         buf[k] = direct_node(*pr.p, *pr.f, pr.fc, pr.gc, tq.node[base + k],
                                              pr.cfg.nmax, xq, pr.ia, pr.ib, pr.cfg.ode_tol);
                     },
                     pr.cfg.workers);
        for (std::size_t k = 0; k < cnt; ++k) {
            const std::size_t ni = base + k;
            const double w = tq.weight[ni];
            const int sh = tq.shell[ni];
            double mass = 0.0;
            for (int s = 0; s < pr.nwin; ++s) {
                auto& node = buf[k];
                const auto& sl = node.slice[static_cast<std::size_t>(s)];
                auto& arr = node.grouped[static_cast<std::size_t>(s)]
                                ? acc.grouped[static_cast<std::size_t>(sh)]
                                : acc.band[static_cast<std::size_t>(s)][static_cast<std::size_t>(sh)];
                for (int m = pr.ia; m < pr.ib; ++m) {
                    const auto& cc = sl.cell[static_cast<std::size_t>(m - pr.ia)];
                    cplx* dst = arr.data() + static_cast<std::size_t>(m - pr.ia) * xq;
                    for (int i = 0; i < xq; ++i)
                        dst[i] += w * (cc[0] * sl.theta[static_cast<std::size_t>(i)] +
                                       cc[1] * sl.phi[static_cast<std::size_t>(i)]);
                }
                const auto& cl = sl.cell[static_cast<std::size_t>(pr.ib - pr.ia)];
                arr[static_cast<std::size_t>(pr.nout - 1)] += w * (cl[0] * sl.theta[0] + cl[1] * sl.phi[0]);
                if (sh == 2) mass += std::abs(w) * std::abs(cl[0] * sl.theta[0] + cl[1] * sl.phi[0]);
            }
            if (sh == 2 && tq.owner[ni] >= 0)
                acc.owner_mass[static_cast<std::size_t>(tq.owner[ni])] += mass;
        }
    }
}

void check_window_convergence(const Problem& pr, const std::array<std::vector<cplx>, 4>& rungs,
                              const std::vector<double>& excl, const Accum& acc) {
    std::vector<cplx> d1(rungs[0].size()), d2(rungs[0].size());
    for (std::size_t i = 0; i < d1.size(); ++i) {
        d1[i] = rungs[1][i] - rungs[0][i];
        d2[i] = rungs[2][i] - rungs[1][i];
    }
    const double n1 = l2_on_grid(d1, pr.cfg.xquad), n2 = l2_on_grid(d2, pr.cfg.xquad);
    if (n2 > 0.6 * n1 && n2 > 1e-5 * pr.fnorm) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < acc.owner_mass.size(); ++i)
            if (acc.owner_mass[i] > acc.owner_mass[worst]) worst = i;
        const double tstar = worst < excl.size() ? excl[worst] : 0.0;
        throw QuadratureNonconvergence(
            "reconstruction: window shrinkage is not converging near t = " + fmt_num(tstar) +
            " (increments " + fmt_num(n1) + " -> " + fmt_num(n2) + ")");
    }
}

ReconstructionReport assemble_report(const Problem& pr, const TQuad& tq, const LadderedTotals& lt,
                                     const std::vector<std::vector<cplx>>& lattice,
                                     const ExclusionWindows& win) {
    ReconstructionReport rep;
    const int xq = pr.cfg.xquad;
    rep.x.resize(static_cast<std::size_t>(pr.nout));
    rep.f_values.resize(static_cast<std::size_t>(pr.nout));
    for (int i = 0; i < pr.nout; ++i) {
        rep.x[static_cast<std::size_t>(i)] = pr.ia + double(i) / xq;
        rep.f_values[static_cast<std::size_t>(i)] = (*pr.f)(rep.x[static_cast<std::size_t>(i)]);
    }
    rep.f_hat = lt.total[3];

    rep.eps_ladder = {win.eps0, win.eps1, win.eps2};
    for (int v = 0; v < 3; ++v) {
        std::vector<cplx> diff(static_cast<std::size_t>(pr.nout));
        for (int i = 0; i < pr.nout; ++i)
            diff[static_cast<std::size_t>(i)] =
                lt.total[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)] - rep.f_values[static_cast<std::size_t>(i)];
        rep.rel_error_by_eps.push_back(l2_on_grid(diff, xq) / pr.fnorm);
    }
    std::vector<cplx> diff(static_cast<std::size_t>(pr.nout));
    for (int i = 0; i < pr.nout; ++i)
        diff[static_cast<std::size_t>(i)] = rep.f_hat[static_cast<std::size_t>(i)] - rep.f_values[static_cast<std::size_t>(i)];
    rep.abs_l2_error = l2_on_grid(diff, xq);
    rep.rel_l2_error = rep.abs_l2_error / pr.fnorm;
    rep.parseval_ratio = parseval_check(*pr.f, pr.cfg);

    // pooled-band bookkeeping: a slot is pooled if any node pooled it
    std::vector<char> pooled(static_cast<std::size_t>(pr.nwin), 0);
    if (!pr.gc.S.empty())
        for (int s = 0; s < pr.nwin; ++s)
            if (l2_on_grid(lt.band_final(s), xq) == 0.0 &&
                std::find(pr.gc.S.begin(), pr.gc.S.end(), zigzag_label(s)) != pr.gc.S.end())
                pooled[static_cast<std::size_t>(s)] = 1;
    for (int s = 0; s < pr.nwin; ++s) {
        if (pooled[static_cast<std::size_t>(s)]) continue;
        rep.band_labels.push_back(zigzag_label(s));
        rep.band_norms.push_back(l2_on_grid(lt.band_final(s), xq));
        rep.band_profiles.push_back(lt.band_final(s));
    }
    rep.grouped_bands = pr.gc.S;
    rep.grouped_profile = lt.grouped_final();
    rep.grouped_norm = l2_on_grid(rep.grouped_profile, xq);

    rep.t_nodes = tq.node;
    rep.coeff_lattice = lattice;
    return rep;
}

} // namespace

// ---------------------------------------------------------------------------
// TestFunction
// ---------------------------------------------------------------------------

TestFunction::TestFunction(double lo, double hi, std::function<cplx(double)> eval)
    : lo_(lo), hi_(hi), eval_(std::move(eval)) {}

cplx TestFunction::operator()(double x) const {
    if (!eval_ || x < lo_ || x > hi_) return 0.0;
    return eval_(x);
}

TestFunction TestFunction::bump(double lo, double hi, cplx amplitude) {
    if (!(hi > lo)) throw BadConfig("bump: empty support");
    return TestFunction(lo, hi, [lo, hi, amplitude](double x) -> cplx {
        const double u = (2.0 * x - lo - hi) / (hi - lo);
        const double v = 1.0 - u * u;
        if (v < 1e-12) return 0.0;
        return amplitude * std::exp(1.0 - 1.0 / v);
    });
}

TestFunction TestFunction::modulated_bump(double lo, double hi, double freq, cplx amplitude) {
    auto base = bump(lo, hi, amplitude);
    return TestFunction(lo, hi, [base, freq](double x) { return base(x) * std::polar(1.0, freq * x); });
}

TestFunction TestFunction::from_samples(std::vector<double> x, std::vector<cplx> v) {
    if (x.size() != v.size() || x.size() < 4)
        throw TooFewSamples("from_samples: need at least 4 matching samples");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !finite(v[i]))
            throw NonFiniteInput("from_samples: non-finite sample");
        if (i > 0 && x[i] <= x[i - 1])
            throw BadConfig("from_samples: abscissae must be strictly increasing");
    }
    // natural cubic spline: second derivatives from the tridiagonal system
    const std::size_t n = x.size();
    std::vector<cplx> y2(n, 0.0), rhs(n, 0.0);
    std::vector<double> diag(n, 1.0), sub(n, 0.0), sup(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        sub[i] = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        sup[i] = h1 / 6.0;
        rhs[i] = (v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0;
    }
    for (std::size_t i = 1; i < n; ++i) {           // Thomas elimination
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    y2[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) y2[i] = (rhs[i] - sup[i] * y2[i + 1]) / diag[i];

    auto xs = std::make_shared<std::vector<double>>(std::move(x));
    auto vs = std::make_shared<std::vector<cplx>>(std::move(v));
    auto d2 = std::make_shared<std::vector<cplx>>(std::move(y2));
    const double lo = xs->front(), hi = xs->back();
    return TestFunction(lo, hi, [xs, vs, d2](double xx) -> cplx {
        const auto& X = *xs;
        auto it = std::upper_bound(X.begin(), X.end(), xx);
        std::size_t j = it == X.begin() ? 0 : static_cast<std::size_t>(it - X.begin()) - 1;
        if (j + 1 >= X.size()) j = X.size() - 2;
        const double h = X[j + 1] - X[j];
        const double A = (X[j + 1] - xx) / h, B = 1.0 - A;
        return A * (*vs)[j] + B * (*vs)[j + 1] +
               ((A * A * A - A) * (*d2)[j] + (B * B * B - B) * (*d2)[j + 1]) * (h * h) / 6.0;
    });
}

double TestFunction::l2_norm(int panels_per_cell) const {
    if (!(hi_ > lo_)) return 0.0;
    const auto cells = std::max(1, static_cast<int>(std::ceil(hi_ - lo_)));
    const auto rule = composite_gl8(lo_, hi_, static_cast<std::size_t>(panels_per_cell * cells));
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) s += rule.w[i] * std::norm((*this)(rule.x[i]));
    return std::sqrt(std::max(0.0, s));
}

// ---------------------------------------------------------------------------
// config / transform / coefficients / Parseval
// ---------------------------------------------------------------------------

void ExpansionConfig::validate() const {
    if (nmax < 1) throw BadConfig("ExpansionConfig: nmax must be >= 1");
    if (tgrid < 64) throw BadConfig("ExpansionConfig: tgrid must be >= 64");
    if (!(eps_sing >= 1e-6 && eps_sing <= 0.05))
        throw BadConfig("ExpansionConfig: eps_sing must lie in [1e-6, 0.05]");
    if (xquad < 32 || xquad % 2 != 0) throw BadConfig("ExpansionConfig: xquad must be even and >= 32");
    if (!(b > a) || std::floor(a) != a || std::floor(b) != b || b - a > 12)
        throw BadConfig("ExpansionConfig: [a, b] must be an integer interval spanning <= 12 cells");
    if (!(cross_tol_rel > 0.0)) throw BadConfig("ExpansionConfig: cross_tol_rel must be positive");
    if (!(ode_tol > 0.0)) throw BadConfig("ExpansionConfig: ode_tol must be positive");
}

std::vector<cplx> gelfand_transform(const TestFunction& f, double t,
                                    const std::vector<double>& xgrid) {
    std::vector<cplx> out(xgrid.size(), cplx(0.0));
    for (std::size_t i = 0; i < xgrid.size(); ++i) {
        const double x = xgrid[i];
        if (!std::isfinite(x)) throw NonFiniteInput("gelfand_transform: non-finite grid point");
        const int mlo = static_cast<int>(std::ceil(f.lo() - x));
        const int mhi = static_cast<int>(std::floor(f.hi() - x));
        cplx acc = 0.0;
        for (int m = mlo; m <= mhi; ++m) acc += f(x + m) * std::polar(1.0, -m * t);
        out[i] = acc;
    }
    return out;
}

CoefficientSet coefficients(const FourierPotential& p, const TestFunction& f, double t, int nmax,
                            const ExpansionConfig& cfg) {
    if (!std::isfinite(t) || std::abs(t) > PI)
        throw BadConfig("coefficients: t must lie in (-pi, pi)");
    if (std::abs(t) < 1e-9 || PI - std::abs(t) < 1e-9)
        throw ExclusionPoint("coefficients: t = " + fmt_num(t) + " is an excluded quasimomentum");
    if (nmax < 1) throw BadConfig("coefficients: nmax must be >= 1");

    const int K = nmax + FIBER_MARGIN + p.order();
    const auto fb = fiber_basis(p, t, K);
    const int nwin = 2 * nmax + 1;
    for (int i = 0; i < nwin; ++i) {
        if (fb.proj_norm[i] > 1e4)
            throw MultipleEigenvalue("coefficients: eigen-pairing degenerates at lambda = " +
                                     fmt_num(fb.lambda[i].real()) + (fb.lambda[i].imag() < 0 ? " - " : " + ") +
                                     fmt_num(std::abs(fb.lambda[i].imag())) + "i");
        for (int j = i + 1; j < nwin; ++j)
            if (std::abs(fb.lambda[i] - fb.lambda[j]) < 1e-5 * (1.0 + std::abs(fb.lambda[i])))
                throw MultipleEigenvalue("coefficients: two window eigenvalues collide at t = " +
                                         fmt_num(t));
    }

    FCells fc = sample_cells(f, cfg.xquad);
    GroupContext none;
    Eigen::MatrixXcd Psi;
    const auto node = bloch_node(p, fc, none, t, nmax, cfg.xquad, &Psi);

    CoefficientSet cs;
    cs.t = t;
    cs.xgrid.resize(static_cast<std::size_t>(cfg.xquad));
    for (int i = 0; i < cfg.xquad; ++i) cs.xgrid[static_cast<std::size_t>(i)] = double(i) / cfg.xquad;
    for (int s = 0; s < nwin; ++s) {
        cs.labels.push_back(zigzag_label(s));
        cs.lambda.push_back(fb.lambda[s]);
        cs.alpha.push_back(cplx(1.0 / fb.proj_norm[s]));
        cs.a.push_back(node.a[static_cast<std::size_t>(s)]);
        std::vector<cplx> psi(static_cast<std::size_t>(cfg.xquad));
        for (int i = 0; i < cfg.xquad; ++i) psi[static_cast<std::size_t>(i)] = Psi(i, s);
        cs.psi.push_back(std::move(psi));
    }
    return cs;
}

double parseval_check(const TestFunction& f, const ExpansionConfig& cfg) {
    cfg.validate();
    const double den = f.l2_norm();
    if (!(den > 0.0)) throw BadConfig("parseval_check: test function is numerically zero");
    const FCells fc = sample_cells(f, cfg.xquad);
    const int M = cfg.tgrid;
    double num = 0.0;
    for (int k = 0; k < M; ++k) {
        const double t = -PI + TWO_PI * (k + 0.5) / M;
        double inner = 0.0;
        for (int i = 0; i < cfg.xquad; ++i) {
            cplx acc = 0.0;
            for (std::size_t r = 0; r < fc.v.size(); ++r)
                acc += fc.v[r][static_cast<std::size_t>(i)] *
                       std::polar(1.0, -(fc.m0 + static_cast<int>(r)) * t);
            inner += std::norm(acc);
        }
        num += inner / cfg.xquad;
    }
    num /= M;
    return num / (den * den);
}

// ---------------------------------------------------------------------------
// reconstructions
// ---------------------------------------------------------------------------

ReconstructionReport reconstruct_bloch(const FourierPotential& p, const TestFunction& f,
                                       const ExpansionConfig& cfg) {
    Problem pr = setup(p, f, cfg);
    const ExclusionWindows win{pr.excl, 10.0 * cfg.eps_sing, cfg.eps_sing, 0.1 * cfg.eps_sing};
    const TQuad tq = build_tquad(-PI, PI, win, cfg.tgrid);

    Accum acc(pr.nwin, pr.nout, static_cast<int>(pr.excl.size()));
    std::vector<std::vector<cplx>> lattice(static_cast<std::size_t>(pr.nwin),
                                           std::vector<cplx>(tq.node.size(), cplx(0.0)));
    accumulate_bloch(pr, tq, acc, lattice);

    const LadderedTotals lt = combine(acc, 1.0 / TWO_PI);
    check_window_convergence(pr, lt.total, pr.excl, acc);
    return assemble_report(pr, tq, lt, lattice, win);
}

ReconstructionReport reconstruct_direct(const FourierPotential& p, const TestFunction& f,
                                        const ExpansionConfig& cfg) {
    // the projection form doubles as the branch referee for sqrt(4 - F^2)
    ReconstructionReport bloch = reconstruct_bloch(p, f, cfg);

    Problem pr = setup(p, f, cfg);
    std::vector<double> excl_pos = {0.0};
    for (double tj : pr.sing.exclusion_t) excl_pos.push_back(tj);
    const ExclusionWindows win{excl_pos, 10.0 * cfg.eps_sing, cfg.eps_sing, 0.1 * cfg.eps_sing};
    const TQuad tq = build_tquad(0.0, PI, win, std::max(64, cfg.tgrid / 2));

    Accum acc(pr.nwin, pr.nout, static_cast<int>(excl_pos.size()));
    accumulate_direct(pr, tq, acc);

    // raw arcs carry integrand phi(x, lambda)/F'(lambda); the branch
    // p(lambda_k(t)) = 2 sin t corresponds to the sign -1, the opposite
    // branch to +1.  Each arc gets the sign that matches the projection
    // form, starting from the 2 sin t choice.
    LadderedTotals raw = combine(acc, 1.0 / PI);

    // align raw band slots with the bloch report's band profiles
    std::vector<const std::vector<cplx>*> bloch_profiles(static_cast<std::size_t>(pr.nwin), nullptr);
    for (std::size_t i = 0; i < bloch.band_labels.size(); ++i) {
        const int s = zigzag_position(bloch.band_labels[i]);
        if (s >= 0 && s < pr.nwin) bloch_profiles[static_cast<std::size_t>(s)] = &bloch.band_profiles[i];
    }

    const int xq = cfg.xquad;
    ReconstructionReport rep;
    double worst_resid = 0.0;
    std::string worst_name = "none";

    const auto choose_sign = [&](const std::vector<cplx>& rawarr, const std::vector<cplx>& ref,
                                 const std::string& name) {
        std::vector<cplx> dminus(rawarr.size()), dplus(rawarr.size());
        for (std::size_t i = 0; i < rawarr.size(); ++i) {
            dminus[i] = -rawarr[i] - ref[i];
            dplus[i] = rawarr[i] - ref[i];
        }
        const double nm = l2_on_grid(dminus, xq), np = l2_on_grid(dplus, xq);
        const double resid = std::min(nm, np);
        if (resid > worst_resid) { worst_resid = resid; worst_name = name; }
        return np < nm ? 1.0 : -1.0;
    };

    std::vector<double> sign_of(static_cast<std::size_t>(pr.nwin), -1.0);
    std::vector<char> pooled(static_cast<std::size_t>(pr.nwin), 0);
    const std::vector<cplx> zero(static_cast<std::size_t>(pr.nout), cplx(0.0));
    std::vector<int> flips;
    for (int s = 0; s < pr.nwin; ++s) {
        const int label = zigzag_label(s);
        pooled[static_cast<std::size_t>(s)] =
            !pr.gc.S.empty() &&
            std::find(pr.gc.S.begin(), pr.gc.S.end(), label) != pr.gc.S.end() &&
            l2_on_grid(raw.band_final(s), xq) == 0.0;
        if (pooled[static_cast<std::size_t>(s)]) continue;
        const auto* ref =
            bloch_profiles[static_cast<std::size_t>(s)] ? bloch_profiles[static_cast<std::size_t>(s)] : &zero;
        sign_of[static_cast<std::size_t>(s)] =
            choose_sign(raw.band_final(s), *ref, "band " + std::to_string(label));
        if (sign_of[static_cast<std::size_t>(s)] > 0.0) flips.push_back(label);
    }
    double gsign = -1.0;
    if (!pr.gc.S.empty()) {
        gsign = choose_sign(raw.grouped_final(), bloch.grouped_profile, "grouped");
        if (gsign > 0.0) rep.notes.push_back("grouped term: branch reversed from 2 sin t");
    }

    // sign-corrected ladder rungs and the extrapolated reconstruction
    std::array<std::vector<cplx>, 4> signed_total;
    for (auto& v : signed_total) v.assign(static_cast<std::size_t>(pr.nout), cplx(0.0));
    for (int v = 0; v < 4; ++v) {
        auto& dst = signed_total[static_cast<std::size_t>(v)];
        for (int s = 0; s < pr.nwin; ++s) {
            const auto& src = raw.band_var[static_cast<std::size_t>(s)][static_cast<std::size_t>(v)];
            const double sg = pooled[static_cast<std::size_t>(s)] ? 1.0 : sign_of[static_cast<std::size_t>(s)];
            for (int i = 0; i < pr.nout; ++i) dst[static_cast<std::size_t>(i)] += sg * src[static_cast<std::size_t>(i)];
        }
        const auto& gsrc = raw.grouped_var[static_cast<std::size_t>(v)];
        for (int i = 0; i < pr.nout; ++i) dst[static_cast<std::size_t>(i)] += gsign * gsrc[static_cast<std::size_t>(i)];
    }
    check_window_convergence(pr, signed_total, excl_pos, acc);

    rep.x = bloch.x;
    rep.f_values = bloch.f_values;
    rep.f_hat = std::move(signed_total[3]);
    std::vector<cplx> diff(static_cast<std::size_t>(pr.nout));
    for (int i = 0; i < pr.nout; ++i)
        diff[static_cast<std::size_t>(i)] = rep.f_hat[static_cast<std::size_t>(i)] - rep.f_values[static_cast<std::size_t>(i)];
    rep.abs_l2_error = l2_on_grid(diff, xq);
    rep.rel_l2_error = rep.abs_l2_error / pr.fnorm;
    rep.parseval_ratio = bloch.parseval_ratio;
    rep.eps_ladder = {win.eps0, win.eps1, win.eps2};
    for (int v = 0; v < 3; ++v) {
        for (int i = 0; i < pr.nout; ++i)
            diff[static_cast<std::size_t>(i)] = signed_total[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)] -
                                                rep.f_values[static_cast<std::size_t>(i)];
        rep.rel_error_by_eps.push_back(l2_on_grid(diff, xq) / pr.fnorm);
    }
    for (int s = 0; s < pr.nwin; ++s) {
        if (pooled[static_cast<std::size_t>(s)]) continue;
        rep.band_labels.push_back(zigzag_label(s));
        std::vector<cplx> prof = raw.band_final(s);
        for (auto& z : prof) z *= sign_of[static_cast<std::size_t>(s)];
        rep.band_norms.push_back(l2_on_grid(prof, xq));
        rep.band_profiles.push_back(std::move(prof));
    }
    rep.grouped_bands = pr.gc.S;
    rep.grouped_profile = raw.grouped_final();
    for (auto& z : rep.grouped_profile) z *= gsign;
    rep.grouped_norm = l2_on_grid(rep.grouped_profile, xq);
    rep.t_nodes = tq.node;
    rep.flipped_arcs = std::move(flips);

    std::vector<cplx> cross(static_cast<std::size_t>(pr.nout));
    for (int i = 0; i < pr.nout; ++i)
        cross[static_cast<std::size_t>(i)] = rep.f_hat[static_cast<std::size_t>(i)] - bloch.f_hat[static_cast<std::size_t>(i)];
    rep.cross_error = l2_on_grid(cross, xq) / pr.fnorm;
    if (rep.cross_error > cfg.cross_tol_rel)
        throw BranchInconsistency(
            "reconstruct_direct: both branch signs disagree with the projection form "
            "(relative mismatch " + fmt_num(rep.cross_error) + ", worst arc: " + worst_name + ")");
    if (!rep.flipped_arcs.empty() &&
        rep.flipped_arcs.size() == rep.band_labels.size())
        rep.notes.push_back("branch resolved to p = -2 sin t on every arc");
    return rep;
}

} // namespace hill
