#include "xxsync/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace xxsync {

std::size_t TransitionTable::site_column(int site) const {
    auto it = std::find(sites.begin(), sites.end(), site);
    if (it == sites.end()) throw std::invalid_argument("transition table: site " + std::to_string(site) + " not tabulated");
    return static_cast<std::size_t>(it - sites.begin());
}

TransitionTable transition_table(const DfsBasis& dfs, const std::vector<int>& sites) {
    TransitionTable table;
    table.sites = sites;
    std::vector<SparseOperator> lowering;
    for (int s : sites) lowering.push_back(build_jump_operator(s, dfs.basis, JumpKind::lowering));

    const auto& st = dfs.states;
    for (std::size_t nu = 0; nu < st.size(); ++nu) {
        if (st[nu].excitations == 0) continue;
        std::vector<Eigen::VectorXcd> lowered;
        for (const auto& L : lowering) lowered.push_back(L.matrix * st[nu].vector);
        for (std::size_t mu = 0; mu < st.size(); ++mu) {
            if (st[mu].excitations + 1 != st[nu].excitations) continue;
            Transition tr{mu, nu, st[nu].energy - st[mu].energy, {}};
            bool any = false;
            for (const auto& v : lowered) {
                const cplx x = st[mu].vector.dot(v);
                if (std::abs(x.imag()) > 1e-10) throw std::logic_error("transition table: complex matrix element");
                tr.x.push_back(x.real());
                any = any || std::abs(x.real()) >= 1e-12;
            }
            if (any) table.entries.push_back(std::move(tr));
        }
    }
    return table;
}

AsymptoticState asymptotic_state_analytic(const DensityMatrix& rho0, const DfsBasis& dfs) {
    if (dfs.report.thermal) throw AnalyticUnavailable("analytic rho_inf: thermal noise has no dark ground state");
    const auto& basis = *rho0.basis;
    if (basis.N() != dfs.basis->N()) throw std::invalid_argument("analytic rho_inf: N mismatch");
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        if (basis.state(i).excitations() < 2) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        if (rho0.entries.row(ii).cwiseAbs().maxCoeff() > 1e-14 || rho0.entries.col(ii).cwiseAbs().maxCoeff() > 1e-14) {
            throw AnalyticUnavailable("analytic rho_inf: initial state has weight above the single-excitation sector");
        }
    }

    // Dark vectors re-expressed on the initial state's basis.
    const auto n = static_cast<Eigen::Index>(dfs.states.size());
    Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(basis.dim()), n);
    for (Eigen::Index a = 0; a < n; ++a) {
        const auto& v = dfs.states[static_cast<std::size_t>(a)].vector;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (v[i] == 0.0) continue;
            const auto row = basis.index_of(dfs.basis->state(static_cast<std::size_t>(i)));
            if (row >= 0) V(row, a) = v[i];
        }
    }
    AsymptoticState out;
    out.source = AsymptoticSource::analytic;
    out.t_ref = 0.0;
    out.coherences = V.adjoint() * rho0.entries * V;
    // Bright single-excitation weight decays into |G>.
    const double fed = rho0.entries.trace().real() - out.coherences.trace().real();
    out.coherences(0, 0) += fed;
    return out;
}

AsymptoticState asymptotic_state_empirical(const Snapshot& snapshot, const DfsBasis& dfs) {
    if (snapshot.rho.basis->dim() != dfs.basis->dim()) {
        throw std::invalid_argument("empirical rho_inf: snapshot and DFS bases differ");
    }
    const Eigen::MatrixXcd V = dfs.matrix();
    AsymptoticState out;
    out.source = AsymptoticSource::empirical;
    out.t_ref = snapshot.time;
    out.coherences = V.adjoint() * snapshot.rho.entries * V;
    return out;
}

std::vector<double> closed_form_series(const AsymptoticState& state, const TransitionTable& table, int site,
                                       const std::vector<double>& times) {
    const std::size_t col = table.site_column(site);
    std::vector<double> out(times.size(), 0.0);
    for (const auto& tr : table.entries) {
        const double x = tr.x[col];
        if (x == 0.0) continue;
        const cplx weight = state.coherences(static_cast<Eigen::Index>(tr.nu), static_cast<Eigen::Index>(tr.mu)) * x;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double phase = -tr.frequency * (times[i] - state.t_ref);
            out[i] += 2.0 * (weight * cplx(std::cos(phase), std::sin(phase))).real();
        }
    }
    return out;
}

SyncVerdict classify_synchronization(const DfsReport& report, const TransitionTable& table) {
    const std::size_t c1 = table.site_column(1);
    const std::size_t cN = table.site_column(report.N);

    SyncVerdict v;
    for (const auto& tr : table.entries) {
        if (std::abs(tr.x[c1]) >= 1e-12 || std::abs(tr.x[cN]) >= 1e-12) v.frequencies.push_back(tr.frequency);
    }
    if (report.r == 0) {
        v.reason = SyncReason::empty_dfs;
        return v;
    }
    if (report.generic_sync) {
        v.generic = true;
        v.constant_C = report.sync_sign;
        v.reason = SyncReason::unique_dark_mode;
        return v;
    }
    v.reason = SyncReason::conflicting_matrix_elements;
    // Same-frequency transitions whose edge ratios differ cannot share one C.
    for (std::size_t a = 0; a < table.entries.size(); ++a) {
        for (std::size_t b = a + 1; b < table.entries.size(); ++b) {
            const auto& ta = table.entries[a];
            const auto& tb = table.entries[b];
            if (std::abs(ta.frequency - tb.frequency) > 1e-10) continue;
            // X1_a XN_b == X1_b XN_a is the proportionality condition.
            const double cross = ta.x[c1] * tb.x[cN] - tb.x[c1] * ta.x[cN];
            if (std::abs(cross) > 1e-10) v.conflicts.emplace_back(a, b);
        }
    }
    return v;
}

std::vector<FrequencyAmplitude> frequency_amplitudes(const AsymptoticState& state, const TransitionTable& table,
                                                     int site) {
    const std::size_t col = table.site_column(site);
    std::vector<std::pair<double, cplx>> groups;
    for (const auto& tr : table.entries) {
        const cplx w = 2.0 * state.coherences(static_cast<Eigen::Index>(tr.nu), static_cast<Eigen::Index>(tr.mu)) * tr.x[col];
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return std::abs(g.first - tr.frequency) <= 1e-10; });
        if (it == groups.end()) {
            groups.emplace_back(tr.frequency, w);
        } else {
            it->second += w;
        }
    }
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<FrequencyAmplitude> out;
    for (const auto& [f, w] : groups) out.push_back({f, std::abs(w), std::abs(w) < 1e-8});
    return out;
}

double asymptotic_concurrence(const AsymptoticState& state, const DfsReport& report) {
    if (report.g != 2) throw std::invalid_argument("asymptotic_concurrence: closed form holds only for g == 2");
    if (state.coherences.rows() < 2) throw std::invalid_argument("asymptotic_concurrence: dark mode missing from state");
    return 4.0 * std::abs(state.coherences(1, 1)) / (report.N + 1);
}

Eigen::MatrixXcd assemble_liouvillian(const SparseOperator& H, const std::vector<Jump>& jumps) {
    // vec(A X B) = (B^T kron A) vec(X) with column stacking. Kronecker terms are
    // accumulated in place to avoid d^2 x d^2 temporaries.
    const auto d = static_cast<Eigen::Index>(H.domain->dim());
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(d * d, d * d);
    const Eigen::MatrixXcd Id = Eigen::MatrixXcd::Identity(d, d);

    auto add_kron = [&L, d](cplx c, const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                if (A(i, j) != 0.0) L.block(i * d, j * d, d, d) += (c * A(i, j)) * B;
            }
        }
    };

    const Eigen::MatrixXcd Hd = Eigen::MatrixXcd(H.matrix);
    const cplx I(0.0, 1.0);
    add_kron(-I, Id, Hd);
    add_kron(I, Hd.transpose(), Id);
    for (const auto& j : jumps) {
        const Eigen::MatrixXcd A = Eigen::MatrixXcd(j.op.matrix);
        const Eigen::MatrixXcd AdA = A.adjoint() * A;
        add_kron(j.rate, A.conjugate(), A);
        add_kron(-0.5 * j.rate, Id, AdA);
        add_kron(-0.5 * j.rate, AdA.transpose(), Id);
    }
    return L;
}

PeripheralSpectrum liouvillian_peripheral_spectrum(const ChainSpec& chain, const NoiseSpec& noise) {
    chain.validate();
    if (chain.N > kMaxOracleSites) {
        throw std::invalid_argument("peripheral spectrum: N > " + std::to_string(kMaxOracleSites) + " too large");
    }
    noise.validate(chain.N);
    const BasisPtr basis = enumerate_sector(chain.N, chain.N);
    const SparseOperator H = build_hamiltonian(chain, basis);
    const Eigen::MatrixXcd L = assemble_liouvillian(H, build_jumps(noise, basis));

    // H conserves k and every jump shifts the row and column excitation numbers
    // together, so L is block diagonal in delta = k_row - k_col.
    const auto d = static_cast<Eigen::Index>(basis->dim());
    std::vector<int> k(static_cast<std::size_t>(d));
    for (int e = 0; e <= chain.N; ++e) {
        const auto [lo, hi] = basis->sector_range(e);
        for (std::size_t i = lo; i < hi; ++i) k[i] = e;
    }
    PeripheralSpectrum out;
    for (int delta = -chain.N; delta <= chain.N; ++delta) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index col = 0; col < d; ++col) {
            for (Eigen::Index row = 0; row < d; ++row) {
                if (k[static_cast<std::size_t>(row)] - k[static_cast<std::size_t>(col)] == delta) idx.push_back(row + col * d);
            }
        }
        const auto n = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXcd block(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) block(a, b) = L(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(block, false);
        if (es.info() != Eigen::Success) throw std::runtime_error("peripheral spectrum: eigensolver failed");
        for (Eigen::Index i = 0; i < n; ++i) {
            const cplx ev = es.eigenvalues()[i];
            if (std::abs(ev.real()) < kPeripheralThreshold) out.eigenvalues.push_back(ev);
        }
    }
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](const cplx& a, const cplx& b) {
        return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real();
    });
    out.count = out.eigenvalues.size();
    return out;
}

double dfs_population(const DensityMatrix& rho, const DfsBasis& dfs) {
    if (rho.basis->dim() != dfs.basis->dim()) throw std::invalid_argument("dfs_population: basis mismatch");
    const Eigen::MatrixXcd V = dfs.matrix();
    return (V.adjoint() * rho.entries * V).trace().real();
}

TransientMonitor::TransientMonitor(const DfsBasis& dfs, double threshold) : dark_(dfs.matrix()), threshold_(threshold) {}

void TransientMonitor::operator()(double t, const DensityMatrix& rho) {
    if (rho.entries.rows() != dark_.rows()) throw std::invalid_argument("transient monitor: basis mismatch");
    const double dark = (dark_.adjoint() * rho.entries * dark_).trace().real();
    const double bright = rho.entries.trace().real() - dark;
    times_.push_back(t);
    bright_.push_back(bright);
    if (!cutoff_ && bright < threshold_) cutoff_ = Snapshot{t, rho};
}

const char* to_string(SyncReason reason) {
    switch (reason) {
        case SyncReason::unique_dark_mode: return "unique_dark_mode";
        case SyncReason::conflicting_matrix_elements: return "conflicting_matrix_elements";
        case SyncReason::empty_dfs: return "empty_dfs";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const TransitionTable& table) {
    j = nlohmann::json{{"sites", table.sites}, {"entries", nlohmann::json::array()}};
    for (const auto& tr : table.entries) {
        j["entries"].push_back({{"mu", tr.mu}, {"nu", tr.nu}, {"frequency", tr.frequency}, {"x", tr.x}});
    }
}

void to_json(nlohmann::json& j, const SyncVerdict& v) {
    j = nlohmann::json{{"generic", v.generic},
                       {"constant_C", v.constant_C ? nlohmann::json(*v.constant_C) : nlohmann::json(nullptr)},
                       {"frequencies", v.frequencies},
                       {"reason", to_string(v.reason)},
                       {"conflicts", v.conflicts}};
}

void write_peripheral_csv(std::ostream& os, const PeripheralSpectrum& spec) {
    os << "re,im\n" << std::setprecision(17);
    for (const auto& ev : spec.eigenvalues) os << ev.real() << ',' << ev.imag() << '\n';
}

}  // namespace xxsync
