#include "hill/cli.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hill/diagnostics.hpp"
#include "hill/expansion.hpp"
#include "hill/floquet.hpp"
#include "hill/io.hpp"
#include "hill/monodromy.hpp"
#include "hill/potential.hpp"
#include "hill/spectrum.hpp"
#include "hill/types.hpp"

namespace hill {

namespace {

// ---------------------------------------------------------------------------
// shared option plumbing
// ---------------------------------------------------------------------------

struct PotentialOpts {
    std::string path;
    bool zero = false;
    std::vector<double> mathieu;    // re im
    std::vector<double> two_term;   // a_re a_im b_re b_im
};

void add_potential_flags(CLI::App* cmd, PotentialOpts& o) {
    cmd->add_option("--potential", o.path,
                    "potential JSON file: {\"coeffs\":[{\"n\",\"re\",\"im\"},...],\"meta\":{}}");
    cmd->add_flag("--zero", o.zero, "the zero potential");
    cmd->add_option("--mathieu", o.mathieu,
                    "cosine potential 2 a cos(2 pi x); a as two floats: re im")
        ->expected(2);
    cmd->add_option("--two-term", o.two_term,
                    "a e^{-i 2 pi x} + b e^{i 2 pi x}; four floats: a_re a_im b_re b_im")
        ->expected(4);
}

FourierPotential resolve_potential(const PotentialOpts& o) {
    const int sources = int(!o.path.empty()) + int(o.zero) + int(!o.mathieu.empty()) +
                        int(!o.two_term.empty());
    if (sources != 1)
        throw InputError("exactly one of --potential, --zero, --mathieu, --two-term is required");
    if (!o.path.empty()) return load_potential(o.path);
    if (o.zero) return FourierPotential::zero();
    if (!o.mathieu.empty()) return FourierPotential::mathieu({o.mathieu[0], o.mathieu[1]});
    return FourierPotential::two_term({o.two_term[0], o.two_term[1]},
                                      {o.two_term[2], o.two_term[3]});
}

void add_workers_flag(CLI::App* cmd, int& workers) {
    cmd->add_option("--workers", workers,
                    "worker-pool size (0 = machine parallelism); results do not depend on it")
        ->envname("HILLBAND_WORKERS");
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content;
    else
        write_text_file(out_path, content);
}

/// format_double, but always with a decimal point or exponent so that
/// integral values print as "1.0", not "1".
std::string format_double_dot(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEna") == std::string::npos) s += ".0";
    return s;
}

std::string format_complex(cplx z) {
    return format_double(z.real()) + " " + format_double(z.imag());
}

const char* verdict_name(ConditionVerdict v) {
    switch (v) {
        case ConditionVerdict::Holds: return "holds";
        case ConditionVerdict::Fails: return "fails";
        case ConditionVerdict::Borderline: return "borderline";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int run_discriminant(const PotentialOpts& po, const std::vector<double>& lambda_parts,
                     double tol) {
    const FourierPotential p = resolve_potential(po);
    const cplx lambda(lambda_parts.at(0), lambda_parts.size() > 1 ? lambda_parts.at(1) : 0.0);
    const MonodromyData m = fundamental_at_one(p, lambda, tol, 1);
    std::cout << "F = " << format_complex(m.F) << "\n";
    std::cout << "dF = " << format_complex(m.dF) << "\n";
    return 0;
}

int run_bands(const PotentialOpts& po, const TrackingConfig& cfg, const std::string& out_path,
              const std::string& profiles_path, int profile_grid) {
    const FourierPotential p = resolve_potential(po);
    validate(cfg);
    const std::vector<SpectralCurve> curves = track_bands(p, cfg);

    if (!out_path.empty() && ends_with(out_path, ".csv")) {
        emit(out_path, bands_to_csv(curves));
    } else {
        BandsFile bf;
        bf.potential = p;
        bf.config = cfg;
        bf.bands = curves;
        emit(out_path, bands_to_json(bf));
    }

    if (!profiles_path.empty()) {
        std::vector<int> labels;
        std::vector<std::vector<AlphaSample>> profiles;
        for (const auto& curve : curves) {
            labels.push_back(curve.n);
            profiles.push_back(alpha_profile(p, curve.n, profile_grid, cfg));
        }
        write_text_file(profiles_path, alpha_profiles_to_csv(labels, profiles));
    }
    return 0;
}

int run_singularities(const PotentialOpts& po, const std::string& bands_path,
                      TrackingConfig cfg, const std::string& out_path) {
    SingularityReport rep;
    const bool have_potential = !po.path.empty() || po.zero || !po.mathieu.empty() ||
                                !po.two_term.empty();
    if (!bands_path.empty()) {
        if (have_potential)
            throw InputError("--bands already carries its potential; drop the potential flags");
        BandsFile bf = load_bands(bands_path);
        if (!bf.potential)
            throw InputError("bands file has no embedded potential");
        cfg.nmax = bf.config.nmax;
        cfg.tgrid = bf.config.tgrid;
        rep = find_singularities(*bf.potential, bf.bands, cfg);
    } else {
        const FourierPotential p = resolve_potential(po);
        rep = find_singularities(p, cfg);
    }
    emit(out_path, singularity_report_to_json(rep));
    return 0;
}

int run_check_pair(cplx a, cplx b, long long Q) {
    const PhaseConditionResult r = phase_condition_check(a, b, Q);
    std::cout << verdict_name(r.verdict) << ", min=" << format_double_dot(r.min_primary) << "\n";
    std::cout << "alpha = " << format_double(r.alpha) << "\n";
    std::cout << "primary: min=" << format_double(r.min_primary) << " at q="
              << r.q_primary << ", p=" << r.p_primary << "\n";
    std::cout << "doubled: min=" << format_double(r.min_doubled) << " at q="
              << r.q_doubled << ", p=" << r.p_doubled << "\n";
    if (r.certificate)
        std::cout << "certificate: alpha = " << r.cert_num << "/" << r.cert_den << "\n";
    if (!r.note.empty()) std::cout << "note: " << r.note << "\n";
    return 0;
}

int run_check_coefficients(const FourierPotential& p, CoefficientConditionParams prm,
                           int range) {
    if (range <= 0) range = p.order();
    std::vector<int> nrange;
    for (int n = 1; n <= range; ++n) nrange.push_back(n);
    const CoefficientConditionResult r = coefficient_condition_check(p, prm, nrange);
    if (r.holds)
        std::cout << "holds\n";
    else
        std::cout << "fails at n=" << r.first_violation << "\n";
    for (const auto& row : r.rows) {
        std::cout << "n=" << row.n << " ratio=" << format_double(row.ratio)
                  << " |q_n|=" << format_double(row.abs_qn)
                  << " lower=" << format_double(row.lower)
                  << " ratio_ok=" << (row.ratio_ok ? 1 : 0)
                  << " size_ok=" << (row.size_ok ? 1 : 0)
                  << " sign_ok=" << (row.sign_ok ? 1 : 0) << "\n";
    }
    return 0;
}

int run_expand(const PotentialOpts& po, const std::vector<double>& bump,
               const std::vector<double>& modulated, const std::string& function_path,
               const std::string& method, const ExpansionConfig& cfg,
               const std::string& out_path, const std::string& csv_path) {
    const FourierPotential p = resolve_potential(po);
    const int sources = int(!bump.empty()) + int(!modulated.empty()) + int(!function_path.empty());
    if (sources != 1)
        throw InputError("exactly one of --bump, --modulated-bump, --function is required");

    auto make_function = [&]() -> TestFunction {
        if (!bump.empty()) return TestFunction::bump(bump[0], bump[1]);
        if (!modulated.empty())
            return TestFunction::modulated_bump(modulated[0], modulated[1], modulated[2]);
        return load_test_function(function_path);
    };
    const TestFunction f = make_function();
    cfg.validate();

    const ReconstructionReport rep = (method == "direct") ? reconstruct_direct(p, f, cfg)
                                                          : reconstruct_bloch(p, f, cfg);

    std::cout << "method = " << method << "\n";
    std::cout << "abs_l2_error = " << format_double(rep.abs_l2_error) << "\n";
    std::cout << "rel_l2_error = " << format_double(rep.rel_l2_error) << "\n";
    std::cout << "parseval_ratio = " << format_double(rep.parseval_ratio) << "\n";
    if (!rep.grouped_bands.empty()) {
        std::cout << "grouped_bands =";
        for (int n : rep.grouped_bands) std::cout << " " << n;
        std::cout << "\ngrouped_norm = " << format_double(rep.grouped_norm) << "\n";
    }
    if (method == "direct") {
        std::cout << "cross_error = " << format_double(rep.cross_error) << "\n";
        std::cout << "flipped_arcs = " << rep.flipped_arcs.size() << "\n";
    }
    for (const auto& note : rep.notes) std::cout << "note: " << note << "\n";

    if (!out_path.empty()) write_text_file(out_path, reconstruction_to_json(rep));
    if (!csv_path.empty()) write_text_file(csv_path, reconstruction_to_csv(rep));
    return 0;
}

// ---------------------------------------------------------------------------
// self-test suite
// ---------------------------------------------------------------------------

void require(bool cond, const std::string& msg) {
    if (!cond) throw NumericalError(msg);
}

double rel_err(cplx got, cplx want) {
    return std::abs(got - want) / (1.0 + std::abs(want));
}

int run_selftest(bool fast) {
    using clock = std::chrono::steady_clock;
    struct Check {
        const char* name;
        bool slow;
        std::function<void()> body;
    };

    const auto zero = FourierPotential::zero();
    const auto mat = FourierPotential::mathieu(0.3);

    std::vector<Check> checks;

    checks.push_back({"free discriminant matches 2 cos sqrt(lambda)", false, [&] {
        for (cplx lam : {cplx(1.0), cplx(PI * PI), cplx(2.0, 1.0), cplx(40.0)}) {
            const cplx got = discriminant(zero, lam);
            const cplx want = 2.0 * std::cos(std::sqrt(lam));
            require(rel_err(got, want) < 1e-10, "free-operator discriminant mismatch");
        }
    }});

    checks.push_back({"monodromy determinant is unimodular", false, [&] {
        for (cplx lam : {cplx(1.0), cplx(10.0, 2.0)}) {
            const auto m = fundamental_at_one(mat, lam, 1e-10, 1);
            require(m.wronskian_defect < 1e-8, "Wronskian defect too large");
        }
    }});

    checks.push_back({"discriminant derivative matches finite differences", false, [&] {
        const cplx lam(7.0, 0.5), h(1e-4);
        const cplx dF = discriminant_derivative(mat, lam, 1e-12);
        const cplx fd = (discriminant(mat, lam + h, 1e-12) - discriminant(mat, lam - h, 1e-12)) /
                        (2.0 * h);
        require(rel_err(dF, fd) < 1e-6, "derivative vs finite differences mismatch");
    }});

    checks.push_back({"free fiber eigenvalues are (2 pi n + t)^2", false, [&] {
        TrackingConfig cfg;
        cfg.nmax = 5;
        const double t = 1.0;
        for (const auto& ev : eigenvalues_at(zero, t, cfg)) {
            const double base = TWO_PI * ev.n + t;
            require(rel_err(ev.lambda, base * base) < 1e-8, "free fiber eigenvalue mismatch");
        }
    }});

    checks.push_back({"band velocity solves the implicit-derivative identity", false, [&] {
        const auto p = FourierPotential::mathieu(cplx(0.0, 0.3));
        const double h = 1e-5;
        for (auto [n, t] : std::vector<std::pair<int, double>>{{0, 1.3}, {2, 0.7}}) {
            const cplx lam = bloch_eigenvalue(p, n, t).lambda;
            const cplx dlam = (bloch_eigenvalue(p, n, t + h).lambda -
                               bloch_eigenvalue(p, n, t - h).lambda) / (2.0 * h);
            const cplx dF = discriminant_derivative(p, lam, 1e-12);
            require(rel_err(dlam * dF, -2.0 * std::sin(t)) < 1e-6,
                    "band-velocity identity violated");
        }
    }});

    checks.push_back({"real potential pairing is unimodular", false, [&] {
        const auto rec = eigenfunction_pair(mat, 1, 2.0);
        require(std::abs(std::abs(rec.alpha) - 1.0) < 1e-6, "|alpha| != 1 for a real potential");
    }});

    checks.push_back({"Floquet multiplier extension holds", false, [&] {
        std::vector<double> grid(65);
        for (int i = 0; i <= 64; ++i) grid[i] = i / 64.0;
        const cplx lam = bloch_eigenvalue(mat, 0, 1.0).lambda;
        const auto fp = floquet_solutions(mat, lam, 1.0, grid);
        require(quasiperiodicity_defect(fp, true) < 1e-8, "Phi_+ multiplier defect");
        require(quasiperiodicity_defect(fp, false) < 1e-8, "Phi_- multiplier defect");
    }});

    checks.push_back({"phase condition certificate and witness", false, [&] {
        const auto holds = phase_condition_check(1.0, 1.0, 1000);
        require(holds.verdict == ConditionVerdict::Holds, "a=b=1 should hold");
        require(std::abs(holds.min_primary - 1.0) < 1e-12, "a=b=1 minimum should be 1");
        const auto fails = phase_condition_check(1.0, -1.0, 1000);
        require(fails.verdict == ConditionVerdict::Fails, "a=1,b=-1 should fail");
        require(fails.min_primary < 1e-12, "a=1,b=-1 minimum should vanish");
    }});

    checks.push_back({"coefficient condition on a real cosine pair", false, [&] {
        CoefficientConditionParams prm;
        prm.c = 0.25;
        const auto r = coefficient_condition_check(mat, prm, {1});
        require(r.holds, "cosine-pair coefficient condition should hold");
    }});

    checks.push_back({"cell transform is quasi-periodic", false, [&] {
        const auto f = TestFunction::bump(-0.4, 0.7);
        const double t = 1.1;
        std::vector<double> xgrid(11);
        for (int i = 0; i <= 10; ++i) xgrid[i] = i / 10.0;
        const auto ft = gelfand_transform(f, t, xgrid);
        const cplx defect = ft.back() - std::exp(cplx(0.0, t)) * ft.front();
        require(std::abs(defect) < 1e-12, "f_t(1) != e^{it} f_t(0)");
    }});

    checks.push_back({"Parseval mass ratio is one", false, [&] {
        ExpansionConfig cfg;
        cfg.nmax = 6;
        cfg.tgrid = 64;
        cfg.xquad = 64;
        const double ratio = parseval_check(TestFunction::bump(-0.4, 0.7), cfg);
        require(std::abs(ratio - 1.0) < 1e-6, "Parseval ratio deviates from 1");
    }});

    checks.push_back({"free-operator expansion recovers a pure wave coefficient", false, [&] {
        const double t = 0.5;
        const double w = TWO_PI * 3 + t;
        std::vector<double> x(241);
        std::vector<cplx> v(241);
        for (int i = 0; i <= 240; ++i) {
            x[i] = i / 240.0;
            v[i] = std::exp(cplx(0.0, w * x[i]));
        }
        const auto f = TestFunction::from_samples(std::move(x), std::move(v));
        ExpansionConfig cfg;
        cfg.tgrid = 64;
        cfg.xquad = 128;
        const auto cs = coefficients(zero, f, t, 5, cfg);
        for (std::size_t i = 0; i < cs.labels.size(); ++i) {
            const cplx want = cs.labels[i] == 3 ? cplx(1.0) : cplx(0.0);
            require(std::abs(cs.a[i] - want) < 1e-5, "wave coefficient mismatch");
        }
    }});

    checks.push_back({"band archive serialization round-trips exactly", false, [&] {
        TrackingConfig cfg;
        cfg.nmax = 2;
        cfg.tgrid = 16;
        const auto p = FourierPotential::mathieu(cplx(0.0, 0.3));
        BandsFile bf;
        bf.potential = p;
        bf.config = cfg;
        bf.bands = track_bands(p, cfg);
        const BandsFile rt = bands_from_json(bands_to_json(bf));
        require(rt.bands.size() == bf.bands.size(), "band count changed in round-trip");
        for (std::size_t i = 0; i < bf.bands.size(); ++i) {
            require(rt.bands[i].n == bf.bands[i].n, "band label changed in round-trip");
            const auto& a = bf.bands[i].samples;
            const auto& b = rt.bands[i].samples;
            require(a.size() == b.size(), "sample count changed in round-trip");
            for (std::size_t k = 0; k < a.size(); ++k)
                require(a[k].lambda == b[k].lambda && a[k].t == b[k].t,
                        "sample changed in round-trip");
        }
    }});

    checks.push_back({"projection reconstruction converges on a cosine potential", true, [&] {
        ExpansionConfig cfg;
        cfg.nmax = 6;
        cfg.tgrid = 64;
        cfg.xquad = 64;
        cfg.a = -1.0;
        cfg.b = 1.0;
        const auto rep = reconstruct_bloch(mat, TestFunction::bump(-0.4, 0.7), cfg);
        require(rep.rel_l2_error < 1e-2, "reconstruction error too large");
        require(std::abs(rep.parseval_ratio - 1.0) < 1e-6, "Parseval ratio deviates from 1");
        require(rep.rel_error_by_eps.size() == 3, "window ladder incomplete");
    }});

    checks.push_back({"interior singular point is found and classified", true, [&] {
        TrackingConfig cfg;
        cfg.nmax = 6;
        cfg.tgrid = 64;
        const auto rep = find_singularities(FourierPotential::two_term(1.0, -1.0), cfg);
        require(rep.s == 1 && rep.m == 1, "expected exactly one interior singular point");
        require(rep.S == std::vector<int>{-1, 0}, "unexpected singular band set");
        require(rep.exclusion_t.size() == 1 &&
                    std::abs(rep.exclusion_t[0] - 2.9823609602928958) < 1e-6,
                "interior critical quasimomentum mismatch");
    }});

    int failures = 0;
    int ran = 0;
    for (const auto& c : checks) {
        if (fast && c.slow) continue;
        ++ran;
        const auto start = clock::now();
        try {
            c.body();
            const double secs = std::chrono::duration<double>(clock::now() - start).count();
            std::printf("PASS  %-55s (%.2fs)\n", c.name, secs);
        } catch (const std::exception& e) {
            ++failures;
            std::printf("FAIL  %-55s %s\n", c.name, e.what());
        }
    }
    std::printf("%d/%d checks passed\n", ran - failures, ran);
    return failures == 0 ? 0 : 2;
}

} // namespace

// ---------------------------------------------------------------------------
// argument parsing
// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args) {
    CLI::App app{"band structure, singular-point diagnostics, and eigenfunction expansions\n"
                 "for -y'' + q(x) y with a 1-periodic trigonometric-polynomial potential q"};
    app.require_subcommand(0, 1);
    std::function<int()> action;

    // discriminant ----------------------------------------------------------
    auto* disc = app.add_subcommand(
        "discriminant", "evaluate F(lambda) = theta(1) + phi'(1) and dF/dlambda");
    PotentialOpts disc_po;
    add_potential_flags(disc, disc_po);
    std::vector<double> disc_lambda;
    disc->add_option("--lambda", disc_lambda, "lambda as one or two floats: re [im]")
        ->expected(1, 2)
        ->required();
    double disc_tol = 1e-10;
    disc->add_option("--tol", disc_tol, "integrator tolerance")->check(CLI::PositiveNumber);
    disc->callback([&] { action = [&] { return run_discriminant(disc_po, disc_lambda, disc_tol); }; });

    // bands ------------------------------------------------------------------
    auto* bands = app.add_subcommand("bands", "track the band curves lambda_n(t) over [0, pi]");
    PotentialOpts bands_po;
    add_potential_flags(bands, bands_po);
    TrackingConfig bands_cfg;
    bands->add_option("--nmax", bands_cfg.nmax, "track bands |n| <= nmax")->check(CLI::PositiveNumber);
    bands->add_option("--tgrid", bands_cfg.tgrid, "t samples on [0, pi]")->check(CLI::PositiveNumber);
    bands->add_option("--tol", bands_cfg.newton_tol, "root-refinement residual bound")
        ->check(CLI::PositiveNumber);
    add_workers_flag(bands, bands_cfg.workers);
    std::string bands_out, bands_profiles;
    int bands_profile_grid = 33;
    bands->add_option("--out", bands_out, "output file (.json or .csv); stdout when omitted");
    bands->add_option("--profiles", bands_profiles,
                      "also write per-band pairing profiles (t,n,abs_alpha,proj_norm) CSV");
    bands->add_option("--profile-grid", bands_profile_grid, "t samples per pairing profile")
        ->check(CLI::PositiveNumber);
    bands->callback([&] {
        action = [&] {
            return run_bands(bands_po, bands_cfg, bands_out, bands_profiles, bands_profile_grid);
        };
    });

    // singularities -----------------------------------------------------------
    auto* sing = app.add_subcommand(
        "singularities", "locate and classify critical points of F on the spectrum");
    PotentialOpts sing_po;
    add_potential_flags(sing, sing_po);
    std::string sing_bands, sing_out;
    sing->add_option("--bands", sing_bands,
                     "band archive (JSON from the bands subcommand) to reuse instead of re-tracking");
    TrackingConfig sing_cfg;
    sing->add_option("--nmax", sing_cfg.nmax, "scan bands |n| <= nmax")->check(CLI::PositiveNumber);
    sing->add_option("--tgrid", sing_cfg.tgrid, "t samples on [0, pi]")->check(CLI::PositiveNumber);
    add_workers_flag(sing, sing_cfg.workers);
    sing->add_option("--out", sing_out, "output JSON file; stdout when omitted");
    sing->callback([&] {
        action = [&] { return run_singularities(sing_po, sing_bands, sing_cfg, sing_out); };
    });

    // check --------------------------------------------------------------------
    auto* check = app.add_subcommand(
        "check", "arithmetic solvability conditions on the potential coefficients");
    std::vector<double> check_mathieu, check_two_term;
    check->add_option("--mathieu", check_mathieu,
                      "harmonic pair via two floats (a_re a_im, meaning b = a) or four "
                      "floats (a_re a_im b_re b_im)")
        ->expected(2, 4);
    check->add_option("--two-term", check_two_term,
                      "harmonic pair a, b as four floats: a_re a_im b_re b_im")
        ->expected(4);
    std::string check_potential;
    check->add_option("--potential", check_potential,
                      "potential JSON file: run the all-coefficients condition instead");
    long long check_Q = 10000;
    check->add_option("--Q", check_Q, "search bound for the phase-condition scan")
        ->check(CLI::PositiveNumber);
    CoefficientConditionParams check_prm;
    check->add_option("--s", check_prm.s, "smoothness exponent in the lower bound c n^{-s-1}");
    check->add_option("--c", check_prm.c, "lower-bound constant")->check(CLI::PositiveNumber);
    check->add_option("--eps", check_prm.eps, "imaginary-part fraction")->check(CLI::PositiveNumber);
    check->add_option("--ratio-cap", check_prm.ratio_cap, "cap on |q_n / q_-n| both ways")
        ->check(CLI::PositiveNumber);
    int check_range = 0;
    check->add_option("--range", check_range, "check n = 1..range (default: potential order)");
    check->callback([&] {
        action = [&] {
            const int sources = int(!check_mathieu.empty()) + int(!check_two_term.empty()) +
                                int(!check_potential.empty());
            if (sources != 1)
                throw InputError("exactly one of --mathieu, --two-term, --potential is required");
            if (!check_potential.empty()) {
                if (check->count("--Q") > 0)
                    throw InputError("--Q applies only to the --mathieu/--two-term pair mode");
                return run_check_coefficients(load_potential(check_potential), check_prm,
                                              check_range);
            }
            for (const char* f : {"--s", "--c", "--eps", "--ratio-cap", "--range"})
                if (check->count(f) > 0)
                    throw InputError(std::string(f) +
                                     " applies only to the --potential all-coefficients mode");
            std::vector<double> v = check_mathieu.empty() ? check_two_term : check_mathieu;
            if (v.size() == 2) v = {v[0], v[1], v[0], v[1]};
            return run_check_pair({v[0], v[1]}, {v[2], v[3]}, check_Q);
        };
    });

    // expand --------------------------------------------------------------------
    auto* expand = app.add_subcommand(
        "expand", "expand a compactly supported function over the quasi-periodic eigenbasis "
                  "and reconstruct it");
    PotentialOpts expand_po;
    add_potential_flags(expand, expand_po);
    std::vector<double> expand_bump, expand_modulated;
    std::string expand_function;
    expand->add_option("--bump", expand_bump, "smooth bump supported on [lo, hi]")->expected(2);
    expand->add_option("--modulated-bump", expand_modulated,
                       "bump on [lo, hi] times e^{i freq x}; three floats: lo hi freq")
        ->expected(3);
    expand->add_option("--function", expand_function,
                       "test-function JSON file: {\"support\":[lo,hi],\"samples\":[{\"x\",\"re\",\"im\"},...]}");
    std::string expand_method = "bloch";
    expand->add_option("--method", expand_method,
                       "bloch: quasimomentum-space projection form; direct: lambda-plane contour "
                       "form, cross-checked against the projection form")
        ->check(CLI::IsMember({"bloch", "direct"}));
    ExpansionConfig expand_cfg;
    expand->add_option("--nmax", expand_cfg.nmax, "band window |k| <= nmax")->check(CLI::PositiveNumber);
    expand->add_option("--tgrid", expand_cfg.tgrid, "target quadrature nodes in t")
        ->check(CLI::PositiveNumber);
    expand->add_option("--eps-sing", expand_cfg.eps_sing, "middle exclusion-window radius")
        ->check(CLI::PositiveNumber);
    std::vector<double> expand_interval;
    expand->add_option("--interval", expand_interval, "reconstruction interval as two integers a b")
        ->expected(2);
    expand->add_option("--xquad", expand_cfg.xquad, "x samples per unit cell")->check(CLI::PositiveNumber);
    expand->add_option("--cross-tol", expand_cfg.cross_tol_rel,
                       "direct-vs-projection mismatch tolerance (relative)")
        ->check(CLI::PositiveNumber);
    expand->add_option("--ode-tol", expand_cfg.ode_tol, "integrator tolerance")
        ->check(CLI::PositiveNumber);
    add_workers_flag(expand, expand_cfg.workers);
    std::string expand_out, expand_csv;
    expand->add_option("--out", expand_out, "report JSON file");
    expand->add_option("--csv", expand_csv, "reconstruction CSV file (x,re_f,im_f,re_fhat,im_fhat)");
    expand->callback([&] {
        action = [&] {
            if (!expand_interval.empty()) {
                expand_cfg.a = expand_interval[0];
                expand_cfg.b = expand_interval[1];
            }
            return run_expand(expand_po, expand_bump, expand_modulated, expand_function,
                              expand_method, expand_cfg, expand_out, expand_csv);
        };
    });

    // selftest ------------------------------------------------------------------
    auto* selftest = app.add_subcommand("selftest", "run the cross-module invariant suite");
    bool selftest_fast = false;
    selftest->add_flag("--fast", selftest_fast, "skip the slow checks");
    selftest->callback([&] { action = [&] { return run_selftest(selftest_fast); }; });

    // parse and dispatch ----------------------------------------------------------
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (!action) {
        std::cout << app.help();
        return 1;
    }

    try {
        return action();
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace hill
