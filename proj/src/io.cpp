#include "hill/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "hill/types.hpp"

namespace hill {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json parse_json(const std::string& text, const std::string& what) {
    try {
        return ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(what + ": " + e.what());
    }
}

double get_num(const ordered_json& j, const char* key, const std::string& what) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw InputError(what + ": missing numeric field \"" + key + "\"");
    return j.at(key).get<double>();
}

int get_int(const ordered_json& j, const char* key, const std::string& what) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw InputError(what + ": missing integer field \"" + key + "\"");
    return j.at(key).get<int>();
}

ordered_json complex_to_json(cplx z) {
    return ordered_json{{"re", z.real()}, {"im", z.imag()}};
}

const char* kind_name(SingularityKind k) {
    switch (k) {
        case SingularityKind::InteriorMultiple: return "interior_multiple";
        case SingularityKind::EndpointJordan: return "endpoint_jordan";
        case SingularityKind::EndpointSemisimple: return "endpoint_semisimple";
    }
    return "unknown";
}

void append_row(std::string& out, std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
        if (!first) out += ',';
        out += c;
        first = false;
    }
    out += '\n';
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw InputError("error while reading file: " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot create file: " + path);
    out << content;
    out.flush();
    if (!out) throw InputError("error while writing file: " + path);
}

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

FourierPotential potential_from_json(const std::string& text) {
    const std::string what = "potential file";
    ordered_json j = parse_json(text, what);
    if (!j.is_object() || !j.contains("coeffs") || !j.at("coeffs").is_array())
        throw InputError(what + ": expected an object with a \"coeffs\" array");
    std::map<int, cplx> coeffs;
    for (const auto& c : j.at("coeffs")) {
        int n = get_int(c, "n", what);
        cplx q(get_num(c, "re", what), get_num(c, "im", what));
        if (coeffs.count(n))
            throw InputError(what + ": duplicate coefficient n=" + std::to_string(n));
        coeffs[n] = q;
    }
    SmoothnessMeta meta;
    if (j.contains("meta") && j.at("meta").is_object()) {
        const auto& m = j.at("meta");
        if (m.contains("p") && m.at("p").is_number_integer()) meta.p = m.at("p").get<int>();
        if (m.contains("s") && m.at("s").is_number_integer()) meta.s = m.at("s").get<int>();
    }
    return FourierPotential::from_fourier(coeffs, meta);
}

FourierPotential load_potential(const std::string& path) {
    return potential_from_json(read_text_file(path));
}

std::string potential_to_json(const FourierPotential& p) {
    ordered_json coeffs = ordered_json::array();
    for (const auto& [n, q] : p.coeffs()) {
        coeffs.push_back(ordered_json{{"n", n}, {"re", q.real()}, {"im", q.imag()}});
    }
    ordered_json meta = ordered_json::object();
    if (p.meta().p) meta["p"] = *p.meta().p;
    if (p.meta().s) meta["s"] = *p.meta().s;
    ordered_json j{{"coeffs", std::move(coeffs)}, {"meta", std::move(meta)}};
    return j.dump(2) + "\n";
}

std::string bands_to_json(const BandsFile& bf) {
    ordered_json j = ordered_json::object();
    if (bf.potential) {
        ordered_json coeffs = ordered_json::array();
        for (const auto& [n, q] : bf.potential->coeffs())
            coeffs.push_back(ordered_json{{"n", n}, {"re", q.real()}, {"im", q.imag()}});
        j["potential"] = ordered_json{{"coeffs", std::move(coeffs)}, {"meta", ordered_json::object()}};
    }
    j["config"] = ordered_json{{"nmax", bf.config.nmax}, {"tgrid", bf.config.tgrid}};
    ordered_json bands = ordered_json::array();
    for (const auto& curve : bf.bands) {
        ordered_json samples = ordered_json::array();
        for (const auto& s : curve.samples) {
            samples.push_back(ordered_json{{"t", s.t},
                                           {"re", s.lambda.real()},
                                           {"im", s.lambda.imag()},
                                           {"mult", s.multiplicity}});
        }
        bands.push_back(ordered_json{{"n", curve.n},
                                     {"samples", std::move(samples)},
                                     {"closed", curve.closed},
                                     {"suspect", curve.suspect},
                                     {"notes", curve.notes}});
    }
    j["bands"] = std::move(bands);
    return j.dump(2) + "\n";
}

BandsFile bands_from_json(const std::string& text) {
    const std::string what = "bands file";
    ordered_json j = parse_json(text, what);
    if (!j.is_object() || !j.contains("bands") || !j.at("bands").is_array())
        throw InputError(what + ": expected an object with a \"bands\" array");
    BandsFile bf;
    if (j.contains("potential"))
        bf.potential = potential_from_json(j.at("potential").dump());
    if (j.contains("config") && j.at("config").is_object()) {
        const auto& c = j.at("config");
        bf.config.nmax = get_int(c, "nmax", what);
        bf.config.tgrid = get_int(c, "tgrid", what);
    }
    for (const auto& b : j.at("bands")) {
        SpectralCurve curve;
        curve.n = get_int(b, "n", what);
        if (!b.contains("samples") || !b.at("samples").is_array())
            throw InputError(what + ": band " + std::to_string(curve.n) + " has no samples array");
        for (const auto& s : b.at("samples")) {
            BlochEigenvalue ev;
            ev.n = curve.n;
            ev.t = get_num(s, "t", what);
            ev.lambda = cplx(get_num(s, "re", what), get_num(s, "im", what));
            ev.multiplicity = s.contains("mult") ? get_int(s, "mult", what) : 1;
            curve.samples.push_back(ev);
        }
        if (b.contains("closed") && b.at("closed").is_boolean())
            curve.closed = b.at("closed").get<bool>();
        if (b.contains("suspect") && b.at("suspect").is_boolean())
            curve.suspect = b.at("suspect").get<bool>();
        if (b.contains("notes") && b.at("notes").is_array())
            for (const auto& note : b.at("notes"))
                if (note.is_string()) curve.notes.push_back(note.get<std::string>());
        bf.bands.push_back(std::move(curve));
    }
    return bf;
}

BandsFile load_bands(const std::string& path) {
    return bands_from_json(read_text_file(path));
}

std::string bands_to_csv(const std::vector<SpectralCurve>& bands) {
    std::string out = "t,n,re,im\n";
    for (const auto& curve : bands)
        for (const auto& s : curve.samples)
            append_row(out, {format_double(s.t), std::to_string(curve.n),
                             format_double(s.lambda.real()), format_double(s.lambda.imag())});
    return out;
}

std::string singularity_report_to_json(const SingularityReport& rep) {
    ordered_json candidates = ordered_json::array();
    for (const auto& c : rep.candidates) {
        candidates.push_back(ordered_json{{"lambda", complex_to_json(c.lambda)},
                                          {"t", c.t},
                                          {"kind", kind_name(c.kind)},
                                          {"F_residual", c.F_residual},
                                          {"Fprime_residual", c.Fprime_residual},
                                          {"bands", c.bands}});
    }
    ordered_json j{{"candidates", std::move(candidates)},
                   {"S", rep.S},
                   {"exclusion_t", rep.exclusion_t},
                   {"verdicts",
                    ordered_json{{"s", rep.s},
                                 {"m", rep.m},
                                 {"spectral_singularities", rep.s > 0}}},
                   {"log", rep.log}};
    return j.dump(2) + "\n";
}

std::string alpha_profiles_to_csv(const std::vector<int>& labels,
                                  const std::vector<std::vector<AlphaSample>>& profiles) {
    if (labels.size() != profiles.size())
        throw InputError("alpha profiles: one label per profile required");
    std::string out = "t,n,abs_alpha,proj_norm\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (const auto& s : profiles[i]) {
            if (s.ok) {
                double mag = std::abs(s.alpha);
                append_row(out, {format_double(s.t), std::to_string(labels[i]),
                                 format_double(mag), format_double(1.0 / mag)});
            } else {
                append_row(out, {format_double(s.t), std::to_string(labels[i]), "nan", "nan"});
            }
        }
    }
    return out;
}

TestFunction test_function_from_json(const std::string& text) {
    const std::string what = "test-function file";
    ordered_json j = parse_json(text, what);
    if (!j.is_object() || !j.contains("samples") || !j.at("samples").is_array())
        throw InputError(what + ": expected an object with a \"samples\" array");
    std::vector<double> x;
    std::vector<cplx> v;
    for (const auto& s : j.at("samples")) {
        x.push_back(get_num(s, "x", what));
        v.emplace_back(get_num(s, "re", what), get_num(s, "im", what));
    }
    if (j.contains("support")) {
        const auto& sup = j.at("support");
        if (!sup.is_array() || sup.size() != 2 || !sup[0].is_number() || !sup[1].is_number())
            throw InputError(what + ": \"support\" must be [lo, hi]");
        if (x.empty())
            throw InputError(what + ": empty samples array");
        double lo = sup[0].get<double>(), hi = sup[1].get<double>();
        if (std::abs(x.front() - lo) > 1e-9 || std::abs(x.back() - hi) > 1e-9)
            throw InputError(what + ": samples must span the declared support exactly");
    }
    return TestFunction::from_samples(std::move(x), std::move(v));
}

TestFunction load_test_function(const std::string& path) {
    return test_function_from_json(read_text_file(path));
}

std::string reconstruction_to_json(const ReconstructionReport& rep) {
    auto complex_rows = [](const std::vector<cplx>& v) {
        ordered_json arr = ordered_json::array();
        for (cplx z : v) arr.push_back(complex_to_json(z));
        return arr;
    };
    ordered_json profiles = ordered_json::array();
    for (const auto& prof : rep.band_profiles) profiles.push_back(complex_rows(prof));
    ordered_json lattice = ordered_json::array();
    for (const auto& row : rep.coeff_lattice) lattice.push_back(complex_rows(row));

    ordered_json j{{"x", rep.x},
                   {"f", complex_rows(rep.f_values)},
                   {"f_hat", complex_rows(rep.f_hat)},
                   {"abs_l2_error", rep.abs_l2_error},
                   {"rel_l2_error", rep.rel_l2_error},
                   {"parseval_ratio", rep.parseval_ratio},
                   {"eps_ladder", rep.eps_ladder},
                   {"rel_error_by_eps", rep.rel_error_by_eps},
                   {"band_labels", rep.band_labels},
                   {"band_norms", rep.band_norms},
                   {"band_profiles", std::move(profiles)},
                   {"grouped_bands", rep.grouped_bands},
                   {"grouped_norm", rep.grouped_norm},
                   {"grouped_profile", complex_rows(rep.grouped_profile)},
                   {"t_nodes", rep.t_nodes},
                   {"coeff_lattice", std::move(lattice)},
                   {"cross_error", rep.cross_error},
                   {"flipped_arcs", rep.flipped_arcs},
                   {"notes", rep.notes}};
    return j.dump(2) + "\n";
}

std::string reconstruction_to_csv(const ReconstructionReport& rep) {
    std::string out = "x,re_f,im_f,re_fhat,im_fhat\n";
    for (std::size_t i = 0; i < rep.x.size(); ++i) {
        append_row(out, {format_double(rep.x[i]),
                         format_double(rep.f_values[i].real()),
                         format_double(rep.f_values[i].imag()),
                         format_double(rep.f_hat[i].real()),
                         format_double(rep.f_hat[i].imag())});
    }
    return out;
}

} // namespace hill
