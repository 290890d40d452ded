// Independent dense reference implementations used by the tests.
//
// Everything here works on the full 2^N space in the Pauli picture and shares
// no code with the library beyond the mask convention (site j <-> bit j-1).

#pragma once

#include "xxsync/hilbert.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Mat pauli_y() {
    Mat m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}
// Basis |0>, |1> with sigma_z |1> = -|1>.
inline Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
// sigma_- = |0><1|
inline Mat sigma_minus_1q() {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = 1.0;
    return m;
}

// Single-site operator on the full chain. Index = occupation mask, so site N is
// the most significant Kronecker factor.
inline Mat site_op(const Mat& op, int site, int N) {
    Mat out = Mat::Identity(1, 1);
    for (int j = N; j >= 1; --j) {
        const Mat f = (j == site) ? op : Mat::Identity(2, 2);
        out = Eigen::kroneckerProduct(out, f).eval();
    }
    return out;
}

// H = -(omega/2) sum sz + (J/2) sum (sx sx + sy sy) + N omega / 2.
inline Mat hamiltonian(int N, double omega, double J) {
    const int dim = 1 << N;
    Mat H = Mat::Identity(dim, dim) * (N * omega / 2.0);
    for (int j = 1; j <= N; ++j) H -= (omega / 2.0) * site_op(pauli_z(), j, N);
    for (int j = 1; j < N; ++j) {
        H += (J / 2.0) * (site_op(pauli_x(), j, N) * site_op(pauli_x(), j + 1, N) +
                          site_op(pauli_y(), j, N) * site_op(pauli_y(), j + 1, N));
    }
    return H;
}

inline Mat sigma_minus(int site, int N) { return site_op(sigma_minus_1q(), site, N); }
inline Mat sigma_x(int site, int N) { return site_op(pauli_x(), site, N); }

struct DenseJump {
    Mat L;
    double rate;
};

inline Mat rhs(const Mat& rho, const Mat& H, const std::vector<DenseJump>& jumps) {
    const cplx I(0, 1);
    Mat out = -I * (H * rho - rho * H);
    for (const auto& j : jumps) {
        const Mat LdL = j.L.adjoint() * j.L;
        out += j.rate * (j.L * rho * j.L.adjoint() - 0.5 * (LdL * rho + rho * LdL));
    }
    return out;
}

// Row-stacked superoperator: vec(A rho B) = (A kron B^T) vec(rho), vec row-major.
inline Mat liouvillian(const Mat& H, const std::vector<DenseJump>& jumps) {
    const Eigen::Index d = H.rows();
    const Mat Id = Mat::Identity(d, d);
    const cplx I(0, 1);
    Mat Lv = -I * (Eigen::kroneckerProduct(H, Id).eval() - Eigen::kroneckerProduct(Id, H.transpose()).eval());
    for (const auto& j : jumps) {
        const Mat LdL = j.L.adjoint() * j.L;
        Lv += j.rate * (Eigen::kroneckerProduct(j.L, j.L.conjugate()).eval() -
                        0.5 * Eigen::kroneckerProduct(LdL, Id).eval() -
                        0.5 * Eigen::kroneckerProduct(Id, LdL.transpose()).eval());
    }
    return Lv;
}

inline Eigen::VectorXcd vec_rows(const Mat& rho) {
    Eigen::VectorXcd v(rho.size());
    for (Eigen::Index r = 0; r < rho.rows(); ++r)
        for (Eigen::Index c = 0; c < rho.cols(); ++c) v(r * rho.cols() + c) = rho(r, c);
    return v;
}

inline Mat unvec_rows(const Eigen::VectorXcd& v, Eigen::Index d) {
    Mat rho(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) rho(r, c) = v(r * d + c);
    return rho;
}

// Full-space matrix restricted to (or padded from) a sector basis.
inline Mat restrict_to(const Mat& full, const xxsync::SectorBasis& b) {
    const auto d = static_cast<Eigen::Index>(b.dim());
    Mat out(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) out(r, c) = full(b.state(r).mask(), b.state(c).mask());
    return out;
}

inline Mat embed_full(const Mat& sub, const xxsync::SectorBasis& b) {
    const int dim = 1 << b.N();
    Mat out = Mat::Zero(dim, dim);
    for (Eigen::Index r = 0; r < sub.rows(); ++r)
        for (Eigen::Index c = 0; c < sub.cols(); ++c) out(b.state(r).mask(), b.state(c).mask()) = sub(r, c);
    return out;
}

inline Eigen::VectorXcd embed_full_vec(const Eigen::VectorXcd& sub, const xxsync::SectorBasis& b) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(1 << b.N());
    for (Eigen::Index i = 0; i < sub.size(); ++i) out(b.state(i).mask()) = sub(i);
    return out;
}

// Brute-force partial trace onto sites (1, N); result index 2*n_1 + n_N.
inline Eigen::Matrix4cd edge_pair(const Mat& full, int N) {
    Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
    const int dim = 1 << N;
    const auto idx = [N](int mask) { return 2 * (mask & 1) + ((mask >> (N - 1)) & 1); };
    const int edge = 1 | (1 << (N - 1));
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            if ((a & ~edge) == (b & ~edge)) out(idx(a), idx(b)) += full(a, b);
    return out;
}

// phi_n(j) from floating-point evaluation only.
inline double mode_float(int n, int j, int N) {
    return std::sqrt(2.0 / (N + 1)) * std::sin(n * j * std::numbers::pi / (N + 1));
}

inline Mat random_density(Eigen::Index d, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Mat A(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) A(r, c) = cplx(g(rng), g(rng));
    Mat rho = A * A.adjoint();
    return rho / rho.trace();
}

}  // namespace oracle
