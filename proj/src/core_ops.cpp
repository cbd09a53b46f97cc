#include "qfb/core_ops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

namespace qfb {

Operator2 liouvillian_apply(const Operator2& hamiltonian,
                            std::span<const Operator2> channels,
                            const Operator2& tau) {
    if (!is_hermitian(hamiltonian))
        throw std::invalid_argument("liouvillian_apply: Hamiltonian is not Hermitian");
    const complex i(0, 1);
    Operator2 out = -i * (hamiltonian * tau - tau * hamiltonian);
    for (const auto& l : channels) {
        const Operator2 ldl = l.adjoint() * l;
        out += l * tau * l.adjoint() - 0.5 * (ldl * tau + tau * ldl);
    }
    return out;
}

SuperOp2 sandwich_superop(const Operator2& a, const Operator2& b) {
    return Eigen::kroneckerProduct(b.transpose(), a);
}

SuperOp2 diffusive_superop(const Operator2& l) {
    return sandwich_superop(l, Operator2::Identity()) +
           sandwich_superop(Operator2::Identity(), l.adjoint());
}

SuperOp2 superop_matrix(const Operator2& hamiltonian,
                        std::span<const Operator2> channels) {
    if (!is_hermitian(hamiltonian))
        throw std::invalid_argument("superop_matrix: Hamiltonian is not Hermitian");
    const complex i(0, 1);
    const Operator2 eye = Operator2::Identity();
    SuperOp2 m = -i * (sandwich_superop(hamiltonian, eye) - sandwich_superop(eye, hamiltonian));
    for (const auto& l : channels) {
        const Operator2 ldl = l.adjoint() * l;
        m += sandwich_superop(l, l.adjoint());
        m -= 0.5 * (sandwich_superop(ldl, eye) + sandwich_superop(eye, ldl));
    }
    return m;
}

namespace {

// Plain scaling-and-squaring with a truncated Taylor core; ample for 4x4.
SuperOp2 exp_scaling_squaring(const SuperOp2& g) {
    const double nrm = g.cwiseAbs().sum();
    int squarings = 0;
    while (nrm / std::pow(2.0, squarings) > 0.5) ++squarings;
    SuperOp2 a = g / std::pow(2.0, squarings);
    SuperOp2 result = SuperOp2::Identity();
    SuperOp2 term = SuperOp2::Identity();
    for (int k = 1; k <= 16; ++k) {
        term = (term * a / static_cast<double>(k)).eval();
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = (result * result).eval();
    return result;
}

}  // namespace

SuperOp2 superop_exp(const SuperOp2& generator, double t) {
    if (t < 0) throw std::invalid_argument("superop_exp: negative time");
    if (t == 0) return SuperOp2::Identity();
    Eigen::ComplexEigenSolver<SuperOp2> es(generator);
    if (es.info() == Eigen::Success) {
        const SuperOp2& v = es.eigenvectors();
        Eigen::JacobiSVD<SuperOp2> svd(v);
        const double cond =
            svd.singularValues()(0) / std::max(svd.singularValues()(3), 1e-300);
        if (cond < 1e8) {
            Eigen::Vector4cd ew = (es.eigenvalues() * t).array().exp();
            return v * ew.asDiagonal() * v.inverse();
        }
    }
    return exp_scaling_squaring(generator * t);
}

double choi_min_eigenvalue(const SuperOp2& map) {
    // Choi = sum_{ij} |i><j| (x) Phi(|i><j|), basis order (00,01,10,11).
    Eigen::Matrix4cd choi = Eigen::Matrix4cd::Zero();
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            Operator2 eij = Operator2::Zero();
            eij(i, j) = 1;
            const Operator2 phi = unvectorize(map * vectorize(eij));
            choi.block<2, 2>(2 * i, 2 * j) = phi;
        }
    }
    const Eigen::Matrix4cd sym = 0.5 * (choi + choi.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(sym);
    return es.eigenvalues().minCoeff();
}

Operator2 stationary_state(const SuperOp2& generator) {
    Eigen::ComplexEigenSolver<SuperOp2> es(generator);
    if (es.info() != Eigen::Success)
        throw numerical_error("stationary_state: eigendecomposition failed");
    int best = 0;
    for (int k = 1; k < 4; ++k)
        if (std::abs(es.eigenvalues()(k)) < std::abs(es.eigenvalues()(best))) best = k;
    if (std::abs(es.eigenvalues()(best)) > 1e-8)
        throw numerical_error("stationary_state: no (near-)zero eigenvalue");
    Operator2 rho = unvectorize(es.eigenvectors().col(best));
    const complex tr = rho.trace();
    if (std::abs(tr) < 1e-12)
        throw numerical_error("stationary_state: traceless null vector");
    rho /= tr;
    return hermitize(rho);
}

bool is_density_operator(const Operator2& rho, double herm_tol, double pos_tol,
                         double trace_tol) {
    if (!is_hermitian(rho, herm_tol)) return false;
    if (std::abs(rho.trace().real() - 1.0) > trace_tol) return false;
    Eigen::SelfAdjointEigenSolver<Operator2> es(hermitize(rho));
    return es.eigenvalues().minCoeff() >= -pos_tol;
}

}  // namespace qfb
