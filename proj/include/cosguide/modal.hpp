#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "cosguide/geometry.hpp"

namespace cosguide {

using Cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

/// Thrown when a requested wavenumber sits numerically on a lead-mode
/// cutoff; suggested_k is the same point shifted off the degeneracy.
class near_cutoff_error : public std::runtime_error {
public:
    near_cutoff_error(double k, double suggested)
        : std::runtime_error("wavenumber " + std::to_string(k) +
                             " is too close to a transverse-mode cutoff; try " +
                             std::to_string(suggested)),
          suggested_k(suggested) {}
    double suggested_k;
};

/// Local transverse sine modes of a constant cross-section [offset,
/// offset+width]: sqrt(2/width) sin(n pi (y-offset)/width), n = 1..size().
/// beta(n) is the longitudinal wavenumber: real positive below n_prop,
/// positive-imaginary (decaying) above.
struct ModeBasis {
    double k = 0.0;
    double offset = 0.0;
    double width = 0.0;
    int n_prop = 0;
    int n_evan = 0;
    VecC beta;

    int size() const { return n_prop + n_evan; }
    double upper() const { return offset + width; }
};

/// Basis for an arbitrary cross-section; no cutoff guard (a vanishing beta
/// in an interior slice is harmless).
ModeBasis make_basis(double k, double offset, double width, int n_evan);

/// Lead basis of the waveguide; rejects k within 1e-9 of a lead cutoff.
ModeBasis build_basis(const Profile& profile, double k, int n_evan);

/// Overlap integrals O(m,n) = int phi_m^a(y) phi_n^b(y) dy over the
/// intersection of the two supports, in closed form.
MatR overlap_matrix(const ModeBasis& a, const ModeBasis& b);

/// Scattering blocks with the convention
///   a- = r a+ + tp b-,     b+ = t a+ + rp b-,
/// amplitudes referenced at the ports so no stored exponential exceeds 1.
struct Smat {
    MatC r, t, rp, tp;

    int left_size() const { return static_cast<int>(r.rows()); }
    int right_size() const { return static_cast<int>(rp.rows()); }
};

Smat identity_smat(int n);

/// Redheffer star product: A's right port feeds B's left port.
Smat star(const Smat& a, const Smat& b);

/// Swap the two ports (the scattering of the mirrored section).
Smat flip_smat(const Smat& s);

/// Free propagation over a length dx of constant cross-section.
Smat propagation_smat(const ModeBasis& basis, double dx);

/// Apply propagation on the right port of s in place (diagonal scalings).
void fold_propagation(Smat& s, const ModeBasis& basis, double dx);

/// Mode-matching scattering of the zero-length junction between two
/// cross-sections. The matching conditions are projected through the
/// aperture (intersection) basis, which conserves the truncated flux
/// exactly and keeps the S-matrix reciprocal by construction.
Smat junction_smat(const ModeBasis& left, const ModeBasis& right);

/// Scattering of the profile section x0..x1 between ports with the local
/// cross-sections at x0 and x1, by staircase discretization.
struct SectionScattering {
    double k = 0.0;
    ModeBasis left;
    ModeBasis right;
    Smat s;
    int n_slices = 0;
};

SectionScattering staircase_section(const Profile& profile, double x0, double x1, double k,
                                    int n_evan, int n_slices);

/// Cross-sectional mode-coupling matrix E(x) of the local sine basis,
/// E(m,n) = int phi_m d(phi_n)/dx dy ... antisymmetric, zero diagonal:
///   m+n odd:  E(n,m) = -2 m n / (h (m^2-n^2)) * (h1' + h2')
///   m+n even: E(n,m) = +2 m n / (h (m^2-n^2)) * (h2' - h1')
MatR coupling_matrix(const Profile& profile, double x, int n);

/// Scattering of the section x0..x1 by segment-wise fourth-order (Magnus)
/// integration of the exact coupled-mode system
///   a' = E a + b,   b' = (kt^2 - k^2) a + E b,
/// each segment transfer converted to an S-matrix and star-composed. The
/// frozen-coefficient exponentials preserve the flux form exactly, so
/// far-field unitarity survives truncation at any segment count.
SectionScattering coupled_section(const Profile& profile, double x0, double x1, double k,
                                  int n_evan, int n_segments);

/// Unit-cell scattering between the two leads.
struct CellScattering {
    double k = 0.0;
    ModeBasis basis; // lead basis, identical on both ports
    MatC r, t, rp, tp;
    int n_evan = 0;
    int n_slices = 0;
    double unitarity_residual = 0.0;
    double reciprocity_residual = 0.0;
    double mirror_residual = 0.0;
    bool converged = true; // far-field unitarity within the failure bound
};

enum class CellMethod {
    CoupledMode, // default: high-order integration of the coupled-mode system
    Staircase,   // piecewise-constant cross-sections; first-order, kept as an oracle
};

struct CellOptions {
    int n_slices = 0;           // 0: auto_slices(); segments for CoupledMode
    int use_mirror = -1;        // -1: follow profile symmetry; 0/1 force
    double unitarity_fail = 1e-6;
    CellMethod method = CellMethod::CoupledMode;
};

CellScattering cell_scattering(const Profile& profile, double k, int n_evan,
                               const CellOptions& opt = {});

/// Default staircase resolution: at least 200 slices and at least 20 per
/// longitudinal wavelength across the cell.
int auto_slices(double k, double period);

/// Max-abs residual of S~ S~^dag - I for the flux-normalized propagating
/// block (far-field unitarity).
double unitarity_residual(const ModeBasis& basis, const MatC& r, const MatC& t, const MatC& rp,
                          const MatC& tp);

/// Max-abs residual of S~ - S~^T on the flux-normalized propagating block.
double reciprocity_residual(const ModeBasis& basis, const MatC& r, const MatC& t, const MatC& rp,
                            const MatC& tp);

} // namespace cosguide
