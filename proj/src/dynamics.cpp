#include "xxsync/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace xxsync {

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("integrator: dt must be positive");
    if (!(t_max > 0.0)) throw std::invalid_argument("integrator: t_max must be positive");
    if (!(dt < t_max)) throw std::invalid_argument("integrator: dt must be smaller than t_max");
    if (record_stride < 1) throw std::invalid_argument("integrator: record_stride must be >= 1");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("integrator: tolerances must be positive");
    if (positivity_check_every < 1) throw std::invalid_argument("integrator: positivity_check_every must be >= 1");
}

DensityMatrix lindblad_rhs(const DensityMatrix& rho, const SparseOperator& H, const std::vector<Jump>& jumps) {
    const auto& b = rho.basis;
    if (H.domain->dim() != b->dim()) throw std::invalid_argument("lindblad_rhs: H on a different basis");
    for (const auto& j : jumps) {
        if (j.op.domain->dim() != b->dim() || j.op.codomain->dim() != b->dim()) {
            throw std::invalid_argument("lindblad_rhs: jump operator on a different basis");
        }
    }
    const cplx I(0.0, 1.0);
    Eigen::MatrixXcd out = -I * (H.matrix * rho.entries - rho.entries * H.matrix);
    for (const auto& j : jumps) {
        const SparseMatrix LdL = SparseMatrix(j.op.matrix.adjoint()) * j.op.matrix;
        const SparseMatrix Ld = j.op.matrix.adjoint();
        out += j.rate * (j.op.matrix * (rho.entries * Ld));
        out -= 0.5 * j.rate * (LdL * rho.entries + rho.entries * LdL);
    }
    return DensityMatrix(b, std::move(out));
}

LindbladGenerator::LindbladGenerator(const SparseOperator& H, std::vector<Jump> jumps) : basis_(H.domain) {
    const cplx I(0.0, 1.0);
    K_ = H.matrix;
    for (auto& j : jumps) {
        if (j.op.domain->dim() != basis_->dim()) throw std::invalid_argument("generator: jump basis mismatch");
        SparseMatrix LdL = SparseMatrix(j.op.matrix.adjoint()) * j.op.matrix;
        K_ -= (0.5 * j.rate * I) * LdL;
        L_.push_back(j.op.matrix);
        L_adj_.push_back(j.op.matrix.adjoint());
        rates_.push_back(j.rate);
    }
    K_.makeCompressed();
    K_adj_ = K_.adjoint();
}

void LindbladGenerator::apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
    const cplx minus_i(0.0, -1.0);
    out.noalias() = minus_i * (K_ * rho);
    out.noalias() -= minus_i * (rho * K_adj_);
    Eigen::MatrixXcd tmp(rho.rows(), rho.cols());
    for (std::size_t a = 0; a < L_.size(); ++a) {
        tmp.noalias() = rho * L_adj_[a];
        out.noalias() += rates_[a] * (L_[a] * tmp);
    }
}

std::vector<Jump> build_jumps(const NoiseSpec& noise, const BasisPtr& basis) {
    noise.validate(basis->N());
    std::vector<Jump> jumps;
    for (std::size_t a = 0; a < noise.sites.size(); ++a) {
        jumps.push_back({build_jump_operator(noise.sites[a], basis, JumpKind::lowering), noise.rates[a]});
    }
    if (noise.thermal()) {
        for (std::size_t a = 0; a < noise.sites.size(); ++a) {
            const double rate = (*noise.thermal_rates)[a];
            if (rate > 0.0) jumps.push_back({build_jump_operator(noise.sites[a], basis, JumpKind::raising), rate});
        }
    }
    return jumps;
}

BasisPtr dynamics_basis(int N, int excitation_support, const NoiseSpec& noise) {
    if (noise.thermal()) {
        if (N > kMaxThermalSites) {
            throw std::invalid_argument("thermal noise needs the full space; N > " +
                                        std::to_string(kMaxThermalSites) + " refused");
        }
        return enumerate_sector(N, N);
    }
    return enumerate_sector(N, std::clamp(excitation_support, 0, N));
}

PhysicalityReport physicality_check(const DensityMatrix& rho, double tol) {
    PhysicalityReport rep;
    rep.trace = rho.entries.trace().real();
    rep.trace_deficit = 1.0 - rep.trace;
    rep.hermiticity_residual = (rho.entries - rho.entries.adjoint()).cwiseAbs().maxCoeff();
    const Eigen::MatrixXcd herm = 0.5 * (rho.entries + rho.entries.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues().minCoeff();
    rep.passed = std::abs(rep.trace_deficit) <= tol && rep.hermiticity_residual <= tol && rep.min_eigenvalue >= -tol &&
                 std::abs(rho.entries.trace().imag()) <= tol;
    return rep;
}

std::vector<double> Trajectory::series(int site) const {
    auto it = std::find(sites.begin(), sites.end(), site);
    if (it == sites.end()) throw std::invalid_argument("trajectory: site " + std::to_string(site) + " not recorded");
    const auto col = static_cast<std::size_t>(it - sites.begin());
    std::vector<double> out;
    out.reserve(sigma_x.size());
    for (const auto& row : sigma_x) out.push_back(row[col]);
    return out;
}

namespace {

// Butcher tableau of the Dormand-Prince 5(4) pair.
struct DormandPrince {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b*, the embedded fourth-order difference
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

class Stepper {
public:
    explicit Stepper(const LindbladGenerator& gen) : gen_(gen) {
        const auto d = static_cast<Eigen::Index>(gen.basis()->dim());
        for (auto* m : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_}) m->resize(d, d);
    }

    void rk4(Eigen::MatrixXcd& y, double h) {
        gen_.apply(y, k1_);
        tmp_ = y + (0.5 * h) * k1_;
        gen_.apply(tmp_, k2_);
        tmp_ = y + (0.5 * h) * k2_;
        gen_.apply(tmp_, k3_);
        tmp_ = y + h * k3_;
        gen_.apply(tmp_, k4_);
        y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

    // One Dormand-Prince attempt. Returns the scaled error norm; y_new holds the
    // fifth-order solution. k1 must hold f(y) on entry (FSAL).
    double dopri(const Eigen::MatrixXcd& y, double h, Eigen::MatrixXcd& y_new, double rtol, double atol) {
        using D = DormandPrince;
        tmp_ = y + h * D::a21 * k1_;
        gen_.apply(tmp_, k2_);
        tmp_ = y + h * (D::a31 * k1_ + D::a32 * k2_);
        gen_.apply(tmp_, k3_);
        tmp_ = y + h * (D::a41 * k1_ + D::a42 * k2_ + D::a43 * k3_);
        gen_.apply(tmp_, k4_);
        tmp_ = y + h * (D::a51 * k1_ + D::a52 * k2_ + D::a53 * k3_ + D::a54 * k4_);
        gen_.apply(tmp_, k5_);
        tmp_ = y + h * (D::a61 * k1_ + D::a62 * k2_ + D::a63 * k3_ + D::a64 * k4_ + D::a65 * k5_);
        gen_.apply(tmp_, k6_);
        y_new = y + h * (D::b1 * k1_ + D::b3 * k3_ + D::b4 * k4_ + D::b5 * k5_ + D::b6 * k6_);
        gen_.apply(y_new, k7_);
        tmp_ = h * (D::e1 * k1_ + D::e3 * k3_ + D::e4 * k4_ + D::e5 * k5_ + D::e6 * k6_ + D::e7 * k7_);
        double err = 0.0;
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            for (Eigen::Index r = 0; r < y.rows(); ++r) {
                const double scale = atol + rtol * std::max(std::abs(y(r, c)), std::abs(y_new(r, c)));
                err = std::max(err, std::abs(tmp_(r, c)) / scale);
            }
        }
        return err;
    }

    void init_fsal(const Eigen::MatrixXcd& y) { gen_.apply(y, k1_); }
    void accept_fsal() { std::swap(k1_, k7_); }

private:
    const LindbladGenerator& gen_;
    Eigen::MatrixXcd k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_;
};

class Recorder {
public:
    Recorder(Trajectory& traj, const DensityMatrix& rho0, const IntegratorConfig& cfg, const std::vector<int>& sites,
             const Observer& obs)
        : traj_(traj), cfg_(cfg), obs_(obs), trace0_(rho0.entries.trace().real()), basis_(rho0.basis) {
        for (int s : sites) sx_.push_back(build_sigma_x(s, basis_));
        traj_.sites = sites;
        pending_snapshots_ = cfg.snapshot_times;
        std::sort(pending_snapshots_.begin(), pending_snapshots_.end());
    }

    void record(double t, const Eigen::MatrixXcd& y, bool force_positivity) {
        const DensityMatrix view(basis_, y);
        const double drift = y.trace().real() - trace0_;
        if (std::abs(drift) > 1e-6) {
            std::ostringstream msg;
            msg << "trace drift " << drift << " at t = " << t << " exceeds 1e-6";
            throw PhysicalityError(msg.str());
        }
        traj_.times.push_back(t);
        traj_.trace_drift.push_back(drift);
        std::vector<double> row;
        row.reserve(sx_.size());
        for (const auto& op : sx_) row.push_back(expectation(view, op).real());
        traj_.sigma_x.push_back(std::move(row));

        if (force_positivity || (++count_ % cfg_.positivity_check_every) == 0) {
            const auto rep = physicality_check(view, 1.0);
            traj_.min_eigenvalue_seen = std::min(traj_.min_eigenvalue_seen, rep.min_eigenvalue);
            if (rep.min_eigenvalue < -100.0 * cfg_.abs_tol) {
                std::ostringstream msg;
                msg << "minimum eigenvalue " << rep.min_eigenvalue << " at t = " << t << " below "
                    << -100.0 * cfg_.abs_tol;
                throw PhysicalityError(msg.str());
            }
        }
        if (obs_) obs_(t, view);
    }

    // Snapshot requests are honoured at the first step time at or past the
    // requested time (within half a step).
    void maybe_snapshot(double t, double h, const Eigen::MatrixXcd& y) {
        while (!pending_snapshots_.empty() && t >= pending_snapshots_.front() - 0.5 * h) {
            traj_.snapshots.push_back({t, DensityMatrix(basis_, y)});
            pending_snapshots_.erase(pending_snapshots_.begin());
        }
    }

private:
    Trajectory& traj_;
    const IntegratorConfig& cfg_;
    const Observer& obs_;
    double trace0_;
    BasisPtr basis_;
    std::vector<SparseOperator> sx_;
    std::vector<double> pending_snapshots_;
    long count_{0};
};

}  // namespace

Trajectory evolve(const DensityMatrix& rho0, const ChainSpec& chain, const NoiseSpec& noise,
                  const IntegratorConfig& config, const std::vector<int>& sites, const Observer& observer) {
    config.validate();
    chain.validate();
    const BasisPtr& basis = rho0.basis;
    if (basis->N() != chain.N) throw std::invalid_argument("evolve: state basis built for a different N");
    if (noise.thermal() && basis->dim() != (std::size_t{1} << chain.N)) {
        throw std::invalid_argument("evolve: thermal noise requires the full Hilbert space");
    }
    if (basis->kmin() != 0) throw std::invalid_argument("evolve: basis must contain the ground sector");
    for (std::size_t i = 1; i < basis->sectors().size(); ++i) {
        if (basis->sectors()[i] != basis->sectors()[i - 1] + 1) {
            throw std::invalid_argument("evolve: basis sectors must be contiguous");
        }
    }
    // Amplitude damping only lowers the excitation number, so sectors 0..kmax
    // are closed; any population above kmax would have been rejected on embedding.

    const SparseOperator H = build_hamiltonian(chain, basis);
    const LindbladGenerator gen(H, build_jumps(noise, basis));
    Stepper stepper(gen);

    Trajectory traj;
    Recorder rec(traj, rho0, config, sites, observer);
    Eigen::MatrixXcd y = rho0.entries;
    const double h = config.dt;
    const double interval = config.record_interval();
    const auto n_records = static_cast<long>(std::floor(config.t_max / interval + 1e-9));

    rec.record(0.0, y, true);
    rec.maybe_snapshot(0.0, h, y);

    if (config.method == Method::rk4) {
        long step = 0;
        const long n_steps = n_records * config.record_stride;
        while (step < n_steps) {
            stepper.rk4(y, h);
            ++step;
            const double t = static_cast<double>(step) * h;
            rec.maybe_snapshot(t, h, y);
            if (step % config.record_stride == 0) rec.record(t, y, step == n_steps);
        }
    } else {
        double t = 0.0;
        double step_h = h;
        Eigen::MatrixXcd y_new(y.rows(), y.cols());
        stepper.init_fsal(y);
        for (long rec_idx = 1; rec_idx <= n_records; ++rec_idx) {
            const double target = static_cast<double>(rec_idx) * interval;
            while (t < target - 1e-12 * std::max(1.0, target)) {
                const double try_h = std::min(step_h, target - t);
                const double err = stepper.dopri(y, try_h, y_new, config.rel_tol, config.abs_tol);
                if (!std::isfinite(err)) throw PhysicalityError("adaptive step produced non-finite error");
                if (err <= 1.0) {
                    t += try_h;
                    y.swap(y_new);
                    stepper.accept_fsal();
                    rec.maybe_snapshot(t, try_h, y);
                }
                const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                // Clipping to a record time must not shrink the step for later.
                if (err <= 1.0 && try_h < step_h) {
                    step_h = std::max(step_h, try_h * factor);
                } else {
                    step_h = try_h * factor;
                }
                if (step_h < 1e-12) throw PhysicalityError("adaptive step size underflow");
            }
            t = target;
            rec.record(t, y, rec_idx == n_records);
        }
    }

    traj.final_state = DensityMatrix(basis, y);
    return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t";
    for (int s : traj.sites) os << ",sx_" << s;
    os << ",trace_drift\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << traj.times[i];
        for (double v : traj.sigma_x[i]) os << ',' << v;
        os << ',' << traj.trace_drift[i] << '\n';
    }
}

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("snapshot: truncated input");
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

constexpr char kSnapshotMagic[8] = {'X', 'X', 'S', 'N', 'A', 'P', '0', '1'};

}  // namespace

void write_snapshot(std::ostream& os, const Snapshot& snap) {
    const auto& b = *snap.rho.basis;
    os.write(kSnapshotMagic, sizeof(kSnapshotMagic));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(b.N()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(b.sectors().size()));
    for (int k : b.sectors()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(k));
    put_le<std::uint64_t>(os, b.dim());
    put_le<double>(os, snap.time);
    for (const auto& s : b.states()) put_le<std::uint32_t>(os, s.mask());
    for (Eigen::Index r = 0; r < snap.rho.entries.rows(); ++r) {
        for (Eigen::Index c = 0; c < snap.rho.entries.cols(); ++c) {
            put_le<double>(os, snap.rho.entries(r, c).real());
            put_le<double>(os, snap.rho.entries(r, c).imag());
        }
    }
}

Snapshot read_snapshot(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kSnapshotMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("snapshot: bad magic");
    }
    const auto N = static_cast<int>(get_le<std::uint32_t>(is));
    const auto n_sectors = get_le<std::uint32_t>(is);
    std::vector<int> sectors;
    for (std::uint32_t i = 0; i < n_sectors; ++i) sectors.push_back(static_cast<int>(get_le<std::uint32_t>(is)));
    auto basis = enumerate_sectors(N, sectors);
    const auto dim = get_le<std::uint64_t>(is);
    if (dim != basis->dim()) throw std::runtime_error("snapshot: dimension does not match sectors");
    Snapshot snap;
    snap.time = get_le<double>(is);
    for (std::uint64_t i = 0; i < dim; ++i) {
        if (get_le<std::uint32_t>(is) != basis->state(i).mask()) throw std::runtime_error("snapshot: basis order mismatch");
    }
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double re = get_le<double>(is);
            const double im = get_le<double>(is);
            m(r, c) = cplx(re, im);
        }
    }
    snap.rho = DensityMatrix(std::move(basis), std::move(m));
    return snap;
}

}  // namespace xxsync
