#include "qfb/bloch.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qfb {

BlochSystem build_bloch(const AtomParams& p, const FeedbackSpec& fb) {
    p.validate();
    if (fb.mode != FeedbackMode::phase_simplified && fb.mode != FeedbackMode::none)
        throw config_error("build_bloch: requires the simplified phase feedback (or none)");
    const double k1 = fb.mode == FeedbackMode::none ? 0.0 : fb.k1;
    const double a1 = std::abs(p.alpha1);
    const double th1 = p.theta1();
    const double dn = p.delta_nu();
    const double gn = (2 * p.n_bar + 1) * p.gamma;

    BlochSystem bs;
    bs.gamma = p.gamma;
    bs.alpha1_sq = std::norm(p.alpha1);
    bs.alpha2_sq = std::norm(p.alpha2);
    bs.theta2 = p.theta2();
    bs.Gamma = gn + p.k0 * p.k0 + k1 * k1;
    bs.A << 0.5 * bs.Gamma, dn, -k1 * a1 * std::sin(th1),
            -dn, 0.5 * bs.Gamma, p.omega_r + k1 * a1 * std::cos(th1),
            0.0, -p.omega_r, gn;
    bs.u << -k1 * a1 * std::sin(th1), k1 * a1 * std::cos(th1), p.gamma;

    Eigen::FullPivLU<Eigen::Matrix3d> lu(bs.A);
    if (!lu.isInvertible())
        throw numerical_error("build_bloch: singular Bloch matrix");
    bs.d = -lu.solve(bs.u);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(bs.A);
    bs.condition = svd.singularValues()(0) / svd.singularValues()(2);
    return bs;
}

double spectrum_inelastic_rotated(const BlochSystem& bs, double mu, double dth) {
    const double th = bs.theta2 + dth;
    const double c = std::cos(th), s = std::sin(th);
    const double v = c * bs.d(0) + s * bs.d(1);
    const Eigen::Vector3d rhs =
        bs.A * Eigen::Vector3d(c * (1 + bs.d(2)), s * (1 + bs.d(2)), -v) + v * bs.u;
    const Eigen::Matrix3d resolvent =
        bs.A * bs.A + mu * mu * Eigen::Matrix3d::Identity();
    Eigen::FullPivLU<Eigen::Matrix3d> lu(resolvent);
    if (!lu.isInvertible())
        throw numerical_error("spectrum_inelastic: singular resolvent A^2 + mu^2");
    return 1.0 + Eigen::Vector3d(c, s, 0).dot(2 * bs.alpha2_sq * lu.solve(rhs));
}

double spectrum_inelastic(const BlochSystem& bs, double mu) {
    return spectrum_inelastic_rotated(bs, mu, 0.0);
}

double spectrum_elastic_weight(const BlochSystem& bs) {
    const double v = bs.v();
    return 2 * M_PI * bs.alpha2_sq * v * v;
}

namespace {

// phi(x) = (1 - e^{-x}) / x - 1, with the removable singularity at 0.
std::complex<double> phi_fn(std::complex<double> x) {
    if (std::abs(x) < 1e-4)
        return -x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
    return (1.0 - std::exp(-x)) / x - 1.0;
}

// phi(A t) applied through the eigendecomposition of A.
Eigen::Matrix3d phi_of_At(const Eigen::Matrix3d& a, double t) {
    Eigen::ComplexEigenSolver<Eigen::Matrix3d> es(a);
    if (es.info() != Eigen::Success)
        throw numerical_error("mandel_q3: eigendecomposition of A failed");
    Eigen::Vector3cd f;
    for (int k = 0; k < 3; ++k) f(k) = phi_fn(es.eigenvalues()(k) * t);
    const Eigen::Matrix3cd m =
        es.eigenvectors() * f.asDiagonal() * es.eigenvectors().inverse();
    return m.real();
}

Eigen::Vector3d q3_vector(const BlochSystem& bs) {
    Eigen::FullPivLU<Eigen::Matrix3d> lu(bs.A);
    if (!lu.isInvertible()) throw numerical_error("mandel_q3: singular Bloch matrix");
    return lu.solve(Eigen::Vector3d(bs.d(0), bs.d(1), 1 + bs.d(2)));
}

}  // namespace

double mandel_q3(const BlochSystem& bs, double beta3_sq, double t) {
    if (t <= 0) throw std::invalid_argument("mandel_q3: window length must be > 0");
    return beta3_sq * (phi_of_At(bs.A, t) * q3_vector(bs))(2);
}

double mandel_q3_longtime(const BlochSystem& bs, double beta3_sq) {
    return -beta3_sq * q3_vector(bs)(2);
}

double mandel_m3_rate(const BlochSystem& bs, double beta3_sq) {
    return 0.5 * beta3_sq * (1 + bs.d(2));
}

double laser_spectrum(const AtomParams& p, double mu) {
    if (p.k0 == 0.0)
        throw std::invalid_argument("laser_spectrum: k0 = 0 gives a delta line");
    const double k0sq = p.k0 * p.k0;
    const double det = mu - p.nu;
    return p.omega_r * p.omega_r * k0sq / (k0sq * k0sq + 4 * det * det);
}

double heisenberg_product(const BlochSystem& bs, double mu) {
    return spectrum_inelastic_rotated(bs, mu, 0.0) *
           spectrum_inelastic_rotated(bs, mu, M_PI / 2);
}

}  // namespace qfb
