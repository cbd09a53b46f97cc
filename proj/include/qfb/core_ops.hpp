#pragma once

// Complex linear algebra on the two-dimensional Hilbert space: operators,
// states, superoperators in vectorized (column-stacking) form, matrix
// functions. Everything here is a pure function on small fixed-size
// Eigen matrices.

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace qfb {

using complex = std::complex<double>;
using Operator2 = Eigen::Matrix2cd;
using StateVector2 = Eigen::Vector2cd;
using SuperOp2 = Eigen::Matrix4cd;   // acts on column-stacked 2x2 operators
using OpVec = Eigen::Vector4cd;

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pauli basis and friends.
namespace pauli {
inline const Operator2 id = Operator2::Identity();
inline const Operator2 sz = (Operator2() << 1, 0, 0, -1).finished();
inline const Operator2 sp = (Operator2() << 0, 1, 0, 0).finished();   // raising
inline const Operator2 sm = (Operator2() << 0, 0, 1, 0).finished();   // lowering
inline const Operator2 sx = (Operator2() << 0, 1, 1, 0).finished();
inline const Operator2 sy = (Operator2() << 0, complex(0, -1), complex(0, 1), 0).finished();
inline const Operator2 p_plus = (Operator2() << 1, 0, 0, 0).finished();  // sp*sm, excited projector
inline const StateVector2 excited = (StateVector2() << 1, 0).finished();
inline const StateVector2 ground = (StateVector2() << 0, 1).finished();
}  // namespace pauli

constexpr double kHermTol = 1e-10;

inline bool is_hermitian(const Operator2& a, double tol = kHermTol) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline Operator2 hermitize(const Operator2& a) { return 0.5 * (a + a.adjoint()); }

inline Operator2 maximally_mixed() { return 0.5 * Operator2::Identity(); }

// Column-stacking vectorization.
inline OpVec vectorize(const Operator2& a) {
    OpVec v;
    v << a(0, 0), a(1, 0), a(0, 1), a(1, 1);
    return v;
}

inline Operator2 unvectorize(const OpVec& v) {
    Operator2 a;
    a << v(0), v(2), v(1), v(3);
    return a;
}

// L[tau] = -i[H,tau] - 1/2 sum {L_i* L_i, tau} + sum L_i tau L_i*
Operator2 liouvillian_apply(const Operator2& hamiltonian,
                            std::span<const Operator2> channels,
                            const Operator2& tau);

// 4x4 matrix representation of the generator above.
SuperOp2 superop_matrix(const Operator2& hamiltonian,
                        std::span<const Operator2> channels);

// Superoperator for tau -> A tau B (column stacking: B^T kron A).
SuperOp2 sandwich_superop(const Operator2& a, const Operator2& b);

// Superoperator for tau -> L tau + tau L*  (the diffusive SME term).
SuperOp2 diffusive_superop(const Operator2& l);

// e^{G t}, eigendecomposition with scaling-and-squaring fallback.
SuperOp2 superop_exp(const SuperOp2& generator, double t);

// Minimum eigenvalue of the Choi matrix of the map; >= -tol iff CP.
double choi_min_eigenvalue(const SuperOp2& map);

// Stationary density operator of a trace-preserving generator
// (eigenvector of the zero eigenvalue, normalized to unit trace).
Operator2 stationary_state(const SuperOp2& generator);

// Validation helpers for density operators.
bool is_density_operator(const Operator2& rho, double herm_tol = 1e-10,
                         double pos_tol = 1e-10, double trace_tol = 1e-10);

}  // namespace qfb
