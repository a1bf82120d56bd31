#include "cosguide/eig.hpp"

#include <stdexcept>
#include <string>

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace cosguide {

GeneralizedEig generalized_eig(Eigen::MatrixXcd a, Eigen::MatrixXcd b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw std::invalid_argument("generalized_eig: matrices must be square and equal-sized");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    GeneralizedEig out;
    out.alpha.resize(n);
    out.beta.resize(n);
    out.vectors.resize(n, n);
    std::complex<double> vl_dummy;
    lapack_int info =
        LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, b.data(), n, out.alpha.data(),
                      out.beta.data(), &vl_dummy, 1, out.vectors.data(), n);
    if (info != 0)
        throw std::runtime_error("zggev failed with info=" + std::to_string(info));
    return out;
}

} // namespace cosguide
