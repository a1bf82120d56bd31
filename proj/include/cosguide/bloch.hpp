#pragma once

#include <span>
#include <vector>

#include "cosguide/modal.hpp"

namespace cosguide {

struct PencilPair {
    MatC m1; // [ t  0 ; -r  I ]
    MatC m2; // [ I -rp;  0  tp]
};

PencilPair assemble_pencil(const CellScattering& cell);

enum class BlochClass { Propagating, Evanescent, AtZeroOrInfinity };

struct BlochMode {
    Cplx lambda{0.0, 0.0};
    VecC vec; // (a+, a-) amplitudes at the left lead, unit 2-norm
    BlochClass cls = BlochClass::AtZeroOrInfinity;
    double theta = 0.0; // arg lambda, propagating modes only
    double flux = 0.0;  // signed longitudinal flux, propagating modes only
};

/// Point flags raised while classifying a spectrum; sweeps record them and
/// continue (an isolated ambiguous grid point washes out under smoothing).
struct BlochFlags {
    bool ambiguous = false;      // |lambda| within 10x tol of the shell, outside it
    bool zero_flux = false;      // propagating mode with |flux| < 1e-10
    bool count_mismatch = false; // positive/negative flux counts differ
    bool symmetry_fail = false;  // lambda <-> 1/lambda multiset check failed

    bool any() const { return ambiguous || zero_flux || count_mismatch || symmetry_fail; }
    int bits() const {
        return (ambiguous ? 1 : 0) | (zero_flux ? 2 : 0) | (count_mismatch ? 4 : 0) |
               (symmetry_fail ? 8 : 0);
    }
};

struct BlochSpectrum {
    double k = 0.0;
    ModeBasis basis; // lead basis the amplitudes refer to
    std::vector<BlochMode> modes;
    int n_positive = 0;
    int n_negative = 0;
    BlochFlags flags;
    double symmetry_residual = 0.0; // worst relative lambda<->1/lambda mismatch
};

struct BlochOptions {
    double unimodular_tol = 1e-6;
    double tol_inf = 1e-8;      // |lambda| outside [tol_inf, 1/tol_inf] -> zero/infinity bucket
    double symmetry_tol = 1e-6; // relative, on finite nonzero eigenvalues
};

/// Longitudinal flux of a Bloch field with lead amplitudes (a+, a-):
/// propagating channels carry beta_n (|a+|^2 - |a-|^2); evanescent channels
/// contribute only the cross term 2 kappa_n Im(conj(a+) a-).
double mode_flux(const ModeBasis& basis, const VecC& vec);

BlochSpectrum solve_bloch(const PencilPair& pencil, const ModeBasis& lead,
                          const BlochOptions& opt = {});

/// Number of propagating Bloch modes with positive flux.
int count_modes(const BlochSpectrum& spectrum);

struct BandPoint {
    double k = 0.0;
    double theta = 0.0;
    int flux_sign = 0;
};

struct BandSweepResult {
    std::vector<BandPoint> points;
    std::vector<double> flagged_k;
};

BandSweepResult band_points(const Profile& profile, std::span<const double> k_grid, int n_evan,
                            const CellOptions& cell_opt = {}, const BlochOptions& bloch_opt = {});

/// Compare the flux sign of every propagating mode at k against the sign of
/// d(theta)/dk obtained by re-solving at k + dk and matching eigenvectors by
/// maximal overlap. Returns (checked, agreed).
struct FluxAudit {
    int checked = 0;
    int agreed = 0;
};

FluxAudit audit_flux_signs(const Profile& profile, double k, double dk, int n_evan,
                           const CellOptions& cell_opt = {}, const BlochOptions& bloch_opt = {});

} // namespace cosguide
