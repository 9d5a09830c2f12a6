#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hill/diagnostics.hpp"
#include "hill/expansion.hpp"
#include "hill/floquet.hpp"
#include "hill/potential.hpp"
#include "hill/spectrum.hpp"

namespace hill {

/// Read a whole file into a string; throws InputError when the file cannot
/// be opened.
std::string read_text_file(const std::string& path);

/// Write `content` to `path`, replacing any existing file; throws
/// InputError when the file cannot be created.
void write_text_file(const std::string& path, const std::string& content);

/// Deterministic, locale-independent formatting of a double: the shortest
/// decimal string that round-trips to the same value.
std::string format_double(double v);

/// Potential file format:
///   {"coeffs": [{"n": int, "re": float, "im": float}, ...], "meta": {...}}
/// where meta may carry optional integer fields "p" and "s".
FourierPotential potential_from_json(const std::string& text);
FourierPotential load_potential(const std::string& path);
std::string potential_to_json(const FourierPotential& p);

/// A tracked-band archive: the potential and tracking configuration that
/// produced the curves, plus the curves themselves.  The JSON layout is
///   {"potential": {...}, "config": {"nmax": int, "tgrid": int},
///    "bands": [{"n": int,
///               "samples": [{"t": float, "re": float, "im": float,
///                            "mult": int}, ...],
///               "closed": bool, "suspect": bool, "notes": [str, ...]}]}
struct BandsFile {
    std::optional<FourierPotential> potential;
    TrackingConfig config;
    std::vector<SpectralCurve> bands;
};

std::string bands_to_json(const BandsFile& bf);
BandsFile bands_from_json(const std::string& text);
BandsFile load_bands(const std::string& path);

/// Flat plotting table with header "t,n,re,im", one row per sample.
std::string bands_to_csv(const std::vector<SpectralCurve>& bands);

/// Singularity report layout:
///   {"candidates": [{"lambda": {"re","im"}, "t": float, "kind": str,
///                    "F_residual": float, "Fprime_residual": float,
///                    "bands": [int,...]}, ...],
///    "S": [int, ...], "exclusion_t": [float, ...],
///    "verdicts": {"s": int, "m": int, "spectral_singularities": bool},
///    "log": [str, ...]}
std::string singularity_report_to_json(const SingularityReport& rep);

/// Pairing profiles per band with header "t,n,abs_alpha,proj_norm"; rows
/// where the pairing is undefined (multiple eigenvalue) hold "nan".
std::string alpha_profiles_to_csv(const std::vector<int>& labels,
                                  const std::vector<std::vector<AlphaSample>>& profiles);

/// Test-function file format:
///   {"support": [lo, hi],
///    "samples": [{"x": float, "re": float, "im": float}, ...]}
/// The samples must span the support; the function is their natural
/// cubic-spline interpolant, extended by zero outside.
TestFunction test_function_from_json(const std::string& text);
TestFunction load_test_function(const std::string& path);

/// Full reconstruction report as JSON (grids, profiles, error metrics).
std::string reconstruction_to_json(const ReconstructionReport& rep);

/// Plotting table with header "x,re_f,im_f,re_fhat,im_fhat".
std::string reconstruction_to_csv(const ReconstructionReport& rep);

} // namespace hill
