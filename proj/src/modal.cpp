#include "cosguide/modal.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

namespace cosguide {

namespace {

constexpr double pi = std::numbers::pi;

double sinc(double z) {
    if (std::abs(z) < 1e-4) {
        double z2 = z * z;
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
    }
    return std::sin(z) / z;
}

// int_c^d cos(p y + q) dy, stable for p -> 0.
double cos_integral(double p, double q, double c, double d) {
    double mid = 0.5 * (c + d);
    double half = 0.5 * (d - c);
    return (d - c) * std::cos(p * mid + q) * sinc(p * half);
}

} // namespace

ModeBasis make_basis(double k, double offset, double width, int n_evan) {
    if (!(k > 0.0) || !(width > 0.0)) throw std::invalid_argument("make_basis: need k, width > 0");
    if (n_evan < 0) throw std::invalid_argument("make_basis: n_evan must be >= 0");
    ModeBasis b;
    b.k = k;
    b.offset = offset;
    b.width = width;
    b.n_prop = static_cast<int>(std::floor(k * width / pi));
    b.n_evan = n_evan;
    b.beta.resize(b.size());
    for (int n = 1; n <= b.size(); ++n) {
        double kt = n * pi / width;
        double disc = k * k - kt * kt;
        b.beta(n - 1) = disc >= 0.0 ? Cplx(std::sqrt(disc), 0.0) : Cplx(0.0, std::sqrt(-disc));
    }
    return b;
}

ModeBasis build_basis(const Profile& profile, double k, int n_evan) {
    const double w = profile.lead_width();
    const double cutoff_spacing = pi / w;
    double frac = k / cutoff_spacing;
    double nearest = std::round(frac) * cutoff_spacing;
    if (std::round(frac) >= 1.0 && std::abs(k - nearest) < 1e-9) {
        double dk_mean = 2.0 * pi / (k * profile.cell_area());
        double shift = 1e-6 * dk_mean;
        throw near_cutoff_error(k, k > nearest ? k + shift : k - shift);
    }
    ModeBasis b = make_basis(k, profile.lead_section().lower, w, n_evan);
    return b;
}

MatR overlap_matrix(const ModeBasis& a, const ModeBasis& b) {
    const double c = std::max(a.offset, b.offset);
    const double d = std::min(a.upper(), b.upper());
    if (!(d > c)) throw std::invalid_argument("overlap_matrix: disjoint cross-sections");
    MatR o(a.size(), b.size());
    const double pref = 1.0 / std::sqrt(a.width * b.width);
    for (int m = 1; m <= a.size(); ++m) {
        double p1 = m * pi / a.width;
        double q1 = -p1 * a.offset;
        for (int n = 1; n <= b.size(); ++n) {
            double p2 = n * pi / b.width;
            double q2 = -p2 * b.offset;
            o(m - 1, n - 1) = pref * (cos_integral(p1 - p2, q1 - q2, c, d) -
                                      cos_integral(p1 + p2, q1 + q2, c, d));
        }
    }
    return o;
}

Smat identity_smat(int n) {
    Smat s;
    s.r = MatC::Zero(n, n);
    s.rp = MatC::Zero(n, n);
    s.t = MatC::Identity(n, n);
    s.tp = MatC::Identity(n, n);
    return s;
}

Smat flip_smat(const Smat& s) { return {s.rp, s.tp, s.r, s.t}; }

Smat star(const Smat& a, const Smat& b) {
    const int nm = a.right_size();
    if (b.left_size() != nm) throw std::invalid_argument("star: port dimensions do not match");
    Eigen::PartialPivLU<MatC> lu(MatC::Identity(nm, nm) - a.rp * b.r);
    MatC xt = lu.solve(a.t);   // (I - rp_a r_b)^-1 t_a
    MatC xr = lu.solve(a.rp);  // (I - rp_a r_b)^-1 rp_a
    Smat out;
    out.t = b.t * xt;
    out.r = a.r + a.tp * (b.r * xt);
    MatC xrtp = xr * b.tp;
    out.rp = b.rp + b.t * xrtp;
    out.tp = a.tp * (b.tp + b.r * xrtp);
    return out;
}

Smat propagation_smat(const ModeBasis& basis, double dx) {
    const int n = basis.size();
    Smat s;
    s.r = MatC::Zero(n, n);
    s.rp = MatC::Zero(n, n);
    VecC ph(n);
    for (int i = 0; i < n; ++i) ph(i) = std::exp(Cplx(0.0, 1.0) * basis.beta(i) * dx);
    s.t = ph.asDiagonal();
    s.tp = ph.asDiagonal();
    return s;
}

void fold_propagation(Smat& s, const ModeBasis& basis, double dx) {
    const int n = basis.size();
    VecC ph(n);
    for (int i = 0; i < n; ++i) ph(i) = std::exp(Cplx(0.0, 1.0) * basis.beta(i) * dx);
    s.t = ph.asDiagonal() * s.t;
    s.tp = s.tp * ph.asDiagonal();
    s.rp = ph.asDiagonal() * s.rp * ph.asDiagonal();
}

Smat junction_smat(const ModeBasis& left, const ModeBasis& right) {
    if (std::abs(left.offset - right.offset) < 1e-15 &&
        std::abs(left.width - right.width) < 1e-15 && left.size() == right.size())
        return identity_smat(left.size());

    const double c = std::max(left.offset, right.offset);
    const double d = std::min(left.upper(), right.upper());
    if (!(d > c)) throw std::invalid_argument("junction_smat: disjoint cross-sections");
    ModeBasis aperture = make_basis(left.k, c, d - c, left.n_evan);

    const MatR ol = overlap_matrix(left, aperture);  // N_L x N_I
    const MatR orr = overlap_matrix(right, aperture); // N_R x N_I

    // Continuity of the field and of its longitudinal derivative through
    // the aperture, eliminated for the aperture coefficients:
    //   G e = 2 (O_L^T B_L p_L + O_R^T B_R q_R),
    //   G = O_L^T B_L O_L + O_R^T B_R O_R.
    MatC oltbl = ol.transpose().cast<Cplx>() * left.beta.asDiagonal();   // N_I x N_L
    MatC ortbr = orr.transpose().cast<Cplx>() * right.beta.asDiagonal(); // N_I x N_R
    MatC g = oltbl * ol.cast<Cplx>() + ortbr * orr.cast<Cplx>();

    Eigen::PartialPivLU<MatC> lu(g);
    MatC xl = lu.solve(oltbl); // N_I x N_L
    MatC xr = lu.solve(ortbr); // N_I x N_R

    Smat s;
    s.t = 2.0 * (orr.cast<Cplx>() * xl);
    s.r = 2.0 * (ol.cast<Cplx>() * xl);
    s.r.diagonal().array() -= 1.0;
    s.tp = 2.0 * (ol.cast<Cplx>() * xr);
    s.rp = 2.0 * (orr.cast<Cplx>() * xr);
    s.rp.diagonal().array() -= 1.0;
    return s;
}

int auto_slices(double k, double period) {
    double per_wavelength = 20.0 * period * k / (2.0 * pi);
    return std::max(200, static_cast<int>(std::ceil(per_wavelength)));
}

SectionScattering staircase_section(const Profile& profile, double x0, double x1, double k,
                                    int n_evan, int n_slices) {
    if (!(x1 > x0)) throw std::invalid_argument("staircase_section: need x1 > x0");
    if (n_slices < 1) throw std::invalid_argument("staircase_section: need n_slices >= 1");

    SectionScattering sec;
    sec.k = k;
    sec.n_slices = n_slices;
    auto section_basis = [&](double x) {
        CrossSection cs = profile.cross_section(x);
        return make_basis(k, cs.lower, cs.width(), n_evan);
    };
    sec.left = section_basis(x0);
    sec.right = section_basis(x1);

    const double dx = (x1 - x0) / n_slices;
    ModeBasis prev = sec.left;
    Smat acc;
    bool first = true;
    for (int j = 0; j < n_slices; ++j) {
        ModeBasis slice = section_basis(x0 + (j + 0.5) * dx);
        Smat junc = junction_smat(prev, slice);
        acc = first ? std::move(junc) : star(acc, junc);
        first = false;
        fold_propagation(acc, slice, dx);
        prev = std::move(slice);
    }
    acc = star(acc, junction_smat(prev, sec.right));
    sec.s = std::move(acc);
    return sec;
}

MatR coupling_matrix(const Profile& profile, double x, int n) {
    const double h = profile.gap(x);
    const double sum = profile.lower_slope(x) + profile.upper_slope(x);
    const double dif = profile.upper_slope(x) - profile.lower_slope(x);
    MatR e = MatR::Zero(n, n);
    for (int m = 1; m <= n; ++m) {
        for (int nn = 1; nn <= n; ++nn) {
            if (m == nn) continue;
            double f = 2.0 * m * nn /
                       (h * (static_cast<double>(nn) * nn - static_cast<double>(m) * m));
            e(m - 1, nn - 1) = ((m + nn) % 2) ? -f * sum : f * dif;
        }
    }
    return e;
}

namespace {

// z' = A(x) z for z = (a, b), a the field coefficients, b the projected
// x-derivative; A = [[E, I], [D, E]] with D = diag((n pi/h)^2 - k^2).
MatR coupled_system_matrix(const Profile& profile, double x, double k, int n) {
    MatR a = MatR::Zero(2 * n, 2 * n);
    a.topLeftCorner(n, n) = coupling_matrix(profile, x, n);
    a.bottomRightCorner(n, n) = a.topLeftCorner(n, n);
    a.topRightCorner(n, n) = MatR::Identity(n, n);
    const double h = profile.gap(x);
    for (int m = 1; m <= n; ++m) {
        double kt = m * pi / h;
        a(n + m - 1, m - 1) = kt * kt - k * k;
    }
    return a;
}

// Wave-splitting wavenumbers at an interior boundary, clipped away from
// local cutoffs (the splitting basis is arbitrary as long as adjacent
// segments share it; ports use the exact lead values instead).
VecC clipped_mu(const Profile& profile, double x, double k, int n, double clip) {
    const double h = profile.gap(x);
    VecC mu(n);
    for (int m = 1; m <= n; ++m) {
        double kt = m * pi / h;
        double disc = k * k - kt * kt;
        if (disc > clip * clip)
            mu(m - 1) = Cplx(std::sqrt(disc), 0.0);
        else if (disc < -clip * clip)
            mu(m - 1) = Cplx(0.0, std::sqrt(-disc));
        else
            mu(m - 1) = Cplx(clip, 0.0);
    }
    return mu;
}

// Segment transfer in (a, b) variables -> S-matrix in the wave variables
// a = p + q, b = i mu (p - q) of the two boundaries.
Smat transfer_to_smat(const MatR& t, const VecC& mu0, const VecC& mu1) {
    const int n = static_cast<int>(mu0.size());
    const Cplx iu(0.0, 1.0);
    MatC t11 = t.topLeftCorner(n, n).cast<Cplx>();
    MatC t12 = t.topRightCorner(n, n).cast<Cplx>();
    MatC t21 = t.bottomLeftCorner(n, n).cast<Cplx>();
    MatC t22 = t.bottomRightCorner(n, n).cast<Cplx>();

    VecC imu0 = iu * mu0;
    MatC p0 = t11 + t12 * imu0.asDiagonal();
    MatC q0 = t21 + t22 * imu0.asDiagonal();
    MatC p1 = t11 - t12 * imu0.asDiagonal();
    MatC q1 = t21 - t22 * imu0.asDiagonal();
    VecC rinv(n);
    for (int i = 0; i < n; ++i) rinv(i) = 1.0 / (iu * mu1(i));

    MatC m11 = 0.5 * (p0 + rinv.asDiagonal() * q0);
    MatC m12 = 0.5 * (p1 + rinv.asDiagonal() * q1);
    MatC m21 = 0.5 * (p0 - rinv.asDiagonal() * q0);
    MatC m22 = 0.5 * (p1 - rinv.asDiagonal() * q1);

    Eigen::PartialPivLU<MatC> lu(m22);
    Smat s;
    s.r = -lu.solve(m21);
    s.tp = lu.inverse();
    s.t = m11 + m12 * s.r;
    s.rp = m12 * s.tp;
    return s;
}

} // namespace

SectionScattering coupled_section(const Profile& profile, double x0, double x1, double k,
                                  int n_evan, int n_segments) {
    if (!(x1 > x0)) throw std::invalid_argument("coupled_section: need x1 > x0");
    if (n_segments < 1) throw std::invalid_argument("coupled_section: need n_segments >= 1");

    SectionScattering sec;
    sec.k = k;
    sec.n_slices = n_segments;
    auto port_prop = [&](double x) {
        return static_cast<int>(std::floor(k * profile.gap(x) / pi));
    };
    const int n = std::max(port_prop(x0), port_prop(x1)) + n_evan;
    auto port_basis = [&](double x) {
        CrossSection cs = profile.cross_section(x);
        return make_basis(k, cs.lower, cs.width(), n - port_prop(x));
    };
    sec.left = port_basis(x0);
    sec.right = port_basis(x1);

    const double dx = (x1 - x0) / n_segments;
    const double clip = 1e-3 * k;
    const double gauss = dx * std::sqrt(3.0) / 6.0;

    VecC mu_left = sec.left.beta;
    Smat acc;
    bool first = true;
    for (int j = 0; j < n_segments; ++j) {
        const double xa = x0 + j * dx;
        const double xc = xa + 0.5 * dx;
        VecC mu_right =
            (j + 1 == n_segments) ? sec.right.beta : clipped_mu(profile, xa + dx, k, n, clip);

        // Fourth-order Magnus with two Gauss nodes per segment.
        MatR a1 = coupled_system_matrix(profile, xc - gauss, k, n);
        MatR a2 = coupled_system_matrix(profile, xc + gauss, k, n);
        MatR omega = 0.5 * dx * (a1 + a2) +
                     (std::sqrt(3.0) / 12.0) * dx * dx * (a2 * a1 - a1 * a2);
        MatR t = omega.exp();

        Smat seg = transfer_to_smat(t, mu_left, mu_right);
        acc = first ? std::move(seg) : star(acc, seg);
        first = false;
        mu_left = std::move(mu_right);
    }
    sec.s = std::move(acc);
    return sec;
}

namespace {

MatC flux_normalized_block(const ModeBasis& basis, const MatC& r, const MatC& t, const MatC& rp,
                           const MatC& tp) {
    const int m = basis.n_prop;
    VecC s(m), si(m);
    for (int i = 0; i < m; ++i) {
        double b = basis.beta(i).real();
        s(i) = std::sqrt(b);
        si(i) = 1.0 / std::sqrt(b);
    }
    MatC sm(2 * m, 2 * m);
    sm.topLeftCorner(m, m) = s.asDiagonal() * r.topLeftCorner(m, m) * si.asDiagonal();
    sm.topRightCorner(m, m) = s.asDiagonal() * tp.topLeftCorner(m, m) * si.asDiagonal();
    sm.bottomLeftCorner(m, m) = s.asDiagonal() * t.topLeftCorner(m, m) * si.asDiagonal();
    sm.bottomRightCorner(m, m) = s.asDiagonal() * rp.topLeftCorner(m, m) * si.asDiagonal();
    return sm;
}

} // namespace

double unitarity_residual(const ModeBasis& basis, const MatC& r, const MatC& t, const MatC& rp,
                          const MatC& tp) {
    if (basis.n_prop == 0) return 0.0;
    MatC sm = flux_normalized_block(basis, r, t, rp, tp);
    MatC g = sm.adjoint() * sm;
    g.diagonal().array() -= 1.0;
    return g.cwiseAbs().maxCoeff();
}

double reciprocity_residual(const ModeBasis& basis, const MatC& r, const MatC& t, const MatC& rp,
                            const MatC& tp) {
    if (basis.n_prop == 0) return 0.0;
    MatC sm = flux_normalized_block(basis, r, t, rp, tp);
    return (sm - sm.transpose()).cwiseAbs().maxCoeff();
}

CellScattering cell_scattering(const Profile& profile, double k, int n_evan,
                               const CellOptions& opt) {
    CellScattering cell;
    cell.k = k;
    cell.n_evan = n_evan;
    cell.basis = build_basis(profile, k, n_evan);

    int n_slices = opt.n_slices > 0 ? opt.n_slices : auto_slices(k, profile.period());
    bool mirror = opt.use_mirror < 0 ? profile.mirror_symmetric() : opt.use_mirror > 0;
    const double half = profile.period() / 2.0;

    auto build = [&](double a, double b, int ns) {
        return opt.method == CellMethod::Staircase
                   ? staircase_section(profile, a, b, k, n_evan, ns)
                   : coupled_section(profile, a, b, k, n_evan, ns);
    };
    Smat s;
    if (mirror) {
        if (n_slices % 2) ++n_slices;
        SectionScattering left = build(-half, 0.0, n_slices / 2);
        s = star(left.s, flip_smat(left.s));
    } else {
        s = build(-half, half, n_slices).s;
    }
    cell.n_slices = n_slices;
    cell.r = std::move(s.r);
    cell.t = std::move(s.t);
    cell.rp = std::move(s.rp);
    cell.tp = std::move(s.tp);

    cell.unitarity_residual = unitarity_residual(cell.basis, cell.r, cell.t, cell.rp, cell.tp);
    cell.reciprocity_residual = reciprocity_residual(cell.basis, cell.r, cell.t, cell.rp, cell.tp);
    double mr = (cell.r - cell.rp).cwiseAbs().maxCoeff();
    double mt = (cell.t - cell.tp).cwiseAbs().maxCoeff();
    cell.mirror_residual = std::max(mr, mt);
    cell.converged = cell.unitarity_residual <= opt.unitarity_fail;
    return cell;
}

} // namespace cosguide
