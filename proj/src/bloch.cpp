#include "cosguide/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cosguide/eig.hpp"

namespace cosguide {

PencilPair assemble_pencil(const CellScattering& cell) {
    const int n = cell.basis.size();
    PencilPair p;
    p.m1 = MatC::Zero(2 * n, 2 * n);
    p.m2 = MatC::Zero(2 * n, 2 * n);
    p.m1.topLeftCorner(n, n) = cell.t;
    p.m1.bottomLeftCorner(n, n) = -cell.r;
    p.m1.bottomRightCorner(n, n) = MatC::Identity(n, n);
    p.m2.topLeftCorner(n, n) = MatC::Identity(n, n);
    p.m2.topRightCorner(n, n) = -cell.rp;
    p.m2.bottomRightCorner(n, n) = cell.tp;
    return p;
}

double mode_flux(const ModeBasis& basis, const VecC& vec) {
    const int n = basis.size();
    if (vec.size() != 2 * n) throw std::invalid_argument("mode_flux: vector size mismatch");
    double flux = 0.0;
    for (int i = 0; i < n; ++i) {
        Cplx ap = vec(i);
        Cplx am = vec(n + i);
        if (i < basis.n_prop) {
            flux += basis.beta(i).real() * (std::norm(ap) - std::norm(am));
        } else {
            flux += 2.0 * basis.beta(i).imag() * std::imag(std::conj(ap) * am);
        }
    }
    return flux;
}

namespace {

// Worst relative mismatch of the multiset {lambda} against {1/lambda};
// for finite nonzero eigenvalues |l_i l_j - 1| is exactly the relative
// distance of l_j from 1/l_i.
double inversion_symmetry_residual(const std::vector<Cplx>& lambdas) {
    const std::size_t n = lambdas.size();
    std::vector<bool> used(n, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = i;
        for (std::size_t j = i; j < n; ++j) {
            if (used[j]) continue;
            double res = std::abs(lambdas[i] * lambdas[j] - 1.0);
            if (res < best) {
                best = res;
                best_j = j;
            }
        }
        used[i] = true;
        used[best_j] = true;
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace

BlochSpectrum solve_bloch(const PencilPair& pencil, const ModeBasis& lead,
                          const BlochOptions& opt) {
    BlochSpectrum sp;
    sp.k = lead.k;
    sp.basis = lead;

    GeneralizedEig eig = generalized_eig(pencil.m1, pencil.m2);
    const int m = static_cast<int>(eig.alpha.size());
    sp.modes.reserve(m);
    std::vector<Cplx> finite;

    for (int i = 0; i < m; ++i) {
        BlochMode mode;
        mode.vec = eig.vectors.col(i);
        double nrm = mode.vec.norm();
        if (nrm > 0.0) mode.vec /= nrm;
        const Cplx a = eig.alpha(i);
        const Cplx b = eig.beta(i);
        // |lambda| outside [tol_inf, 1/tol_inf] counts as zero/infinity;
        // compare via alpha, beta magnitudes so beta = 0 needs no division.
        if (std::abs(a) * opt.tol_inf >= std::abs(b) || std::abs(a) <= std::abs(b) * opt.tol_inf) {
            mode.cls = BlochClass::AtZeroOrInfinity;
            sp.modes.push_back(std::move(mode));
            continue;
        }
        mode.lambda = a / b;
        finite.push_back(mode.lambda);
        double dev = std::abs(std::abs(mode.lambda) - 1.0);
        if (dev <= opt.unimodular_tol) {
            mode.cls = BlochClass::Propagating;
            mode.theta = std::arg(mode.lambda);
            mode.flux = mode_flux(lead, mode.vec);
            if (std::abs(mode.flux) < 1e-10)
                sp.flags.zero_flux = true;
            else if (mode.flux > 0.0)
                ++sp.n_positive;
            else
                ++sp.n_negative;
        } else {
            mode.cls = BlochClass::Evanescent;
            if (dev <= 10.0 * opt.unimodular_tol) sp.flags.ambiguous = true;
        }
        sp.modes.push_back(std::move(mode));
    }

    sp.symmetry_residual = inversion_symmetry_residual(finite);
    sp.flags.symmetry_fail = sp.symmetry_residual > opt.symmetry_tol;
    sp.flags.count_mismatch = sp.n_positive != sp.n_negative;
    return sp;
}

int count_modes(const BlochSpectrum& spectrum) { return spectrum.n_positive; }

BandSweepResult band_points(const Profile& profile, std::span<const double> k_grid, int n_evan,
                            const CellOptions& cell_opt, const BlochOptions& bloch_opt) {
    BandSweepResult out;
    for (double k : k_grid) {
        CellScattering cell = cell_scattering(profile, k, n_evan, cell_opt);
        BlochSpectrum sp = solve_bloch(assemble_pencil(cell), cell.basis, bloch_opt);
        if (sp.flags.any()) out.flagged_k.push_back(k);
        for (const BlochMode& mode : sp.modes) {
            if (mode.cls != BlochClass::Propagating) continue;
            out.points.push_back({k, mode.theta, mode.flux > 0.0 ? 1 : -1});
        }
    }
    return out;
}

FluxAudit audit_flux_signs(const Profile& profile, double k, double dk, int n_evan,
                           const CellOptions& cell_opt, const BlochOptions& bloch_opt) {
    auto solve_at = [&](double kk) {
        CellScattering cell = cell_scattering(profile, kk, n_evan, cell_opt);
        return solve_bloch(assemble_pencil(cell), cell.basis, bloch_opt);
    };
    BlochSpectrum s0 = solve_at(k);
    BlochSpectrum s1 = solve_at(k + dk);

    FluxAudit audit;
    for (const BlochMode& mode : s0.modes) {
        if (mode.cls != BlochClass::Propagating || std::abs(mode.flux) < 1e-10) continue;
        // Match by maximal eigenvector overlap at the shifted wavenumber.
        double best = -1.0;
        const BlochMode* partner = nullptr;
        for (const BlochMode& cand : s1.modes) {
            if (cand.cls != BlochClass::Propagating) continue;
            double ov = std::abs(mode.vec.dot(cand.vec));
            if (ov > best) {
                best = ov;
                partner = &cand;
            }
        }
        if (!partner || best < 0.5) continue;
        double dtheta = partner->theta - mode.theta;
        if (dtheta > std::numbers::pi) dtheta -= 2.0 * std::numbers::pi;
        if (dtheta < -std::numbers::pi) dtheta += 2.0 * std::numbers::pi;
        if (dtheta == 0.0) continue;
        ++audit.checked;
        if ((dtheta > 0.0) == (mode.flux > 0.0)) ++audit.agreed;
    }
    return audit;
}

} // namespace cosguide
