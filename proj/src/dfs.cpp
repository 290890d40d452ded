#include "xxsync/dfs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace xxsync {

void NoiseSpec::validate(int N) const {
    if (sites.size() != rates.size()) throw std::invalid_argument("noise: sites and rates differ in length");
    std::set<int> seen;
    for (int m : sites) {
        if (m < 1 || m > N) throw std::invalid_argument("noise: site " + std::to_string(m) + " out of range");
        if (!seen.insert(m).second) throw std::invalid_argument("noise: duplicate site " + std::to_string(m));
    }
    for (double g : rates) {
        if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("noise: rates must be positive");
    }
    if (thermal_rates) {
        if (thermal_rates->size() != sites.size()) {
            throw std::invalid_argument("noise: thermal_rates and sites differ in length");
        }
        for (double g : *thermal_rates) {
            if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("noise: thermal rates must be >= 0");
        }
    }
}

bool NoiseSpec::thermal() const {
    return thermal_rates && std::any_of(thermal_rates->begin(), thermal_rates->end(), [](double g) { return g > 0.0; });
}

void to_json(nlohmann::json& j, const DfsReport& r) {
    j = nlohmann::json{{"N", r.N},
                       {"g", r.g},
                       {"r", r.r},
                       {"labels", r.labels},
                       {"sector_dims", r.sector_dims},
                       {"total_dim", r.total_dim},
                       {"generic_sync", r.generic_sync},
                       {"sync_sign", r.sync_sign ? nlohmann::json(*r.sync_sign) : nlohmann::json(nullptr)},
                       {"thermal", r.thermal}};
    if (r.thermal) j["ad_gcd"] = r.ad_gcd;
}

DfsReport gcd_analysis(const NoiseSpec& noise, int N) {
    noise.validate(N);
    DfsReport rep;
    rep.N = N;

    int g = N + 1;
    for (int m : noise.sites) g = std::gcd(g, m);
    rep.ad_gcd = g;

    if (noise.thermal()) {
        rep.thermal = true;
        rep.g = 1;
    } else {
        rep.g = g;
        // Divisibility test per label; must agree with the multiples of (N+1)/g.
        for (int n = 1; n <= N; ++n) {
            const bool dark = std::all_of(noise.sites.begin(), noise.sites.end(),
                                          [&](int m) { return (n * m) % (N + 1) == 0; });
            if (dark) rep.labels.push_back(n);
        }
        if (static_cast<int>(rep.labels.size()) != g - 1) {
            throw std::logic_error("gcd_analysis: divisibility count disagrees with gcd");
        }
    }

    rep.r = rep.g - 1;
    for (int k = 0; k <= rep.r; ++k) rep.sector_dims.push_back(binomial(rep.r, k));
    rep.total_dim = std::uint64_t{1} << rep.r;
    rep.generic_sync = rep.g == 2;
    if (rep.generic_sync) {
        const int alpha = (N + 1) / 2;
        rep.sync_sign = (alpha % 2 == 1) ? 1 : -1;
    }
    return rep;
}

ModeProfile single_excitation_mode(int n, const ChainSpec& chain) {
    chain.validate();
    const int N = chain.N;
    if (n < 1 || n > N) throw std::invalid_argument("mode label " + std::to_string(n) + " out of range");
    const int period = 2 * (N + 1);
    const double norm = std::sqrt(2.0 / (N + 1));
    ModeProfile p;
    p.amplitudes.resize(static_cast<std::size_t>(N));
    for (int j = 1; j <= N; ++j) {
        const int phase = (n * j) % period;
        p.amplitudes[static_cast<std::size_t>(j - 1)] =
            (phase % (N + 1) == 0) ? 0.0 : norm * std::sin(std::numbers::pi * phase / (N + 1));
    }
    p.energy = chain.omega + 2.0 * chain.J * std::cos(std::numbers::pi * n / (N + 1));
    return p;
}

SlaterState slater_state(const std::vector<int>& labels, const ChainSpec& chain, const BasisPtr& basis) {
    const int k = static_cast<int>(labels.size());
    if (std::set<int>(labels.begin(), labels.end()).size() != labels.size()) {
        throw std::invalid_argument("slater_state: duplicate labels");
    }
    if (basis->N() != chain.N) throw std::invalid_argument("slater_state: basis built for a different N");
    if (!basis->has_sector(k)) throw std::invalid_argument("slater_state: sector " + std::to_string(k) + " missing");

    std::vector<ModeProfile> modes;
    SlaterState out;
    for (int a : labels) {
        modes.push_back(single_excitation_mode(a, chain));
        out.energy += modes.back().energy;
    }

    out.vector = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->dim()));
    const auto [first, last] = basis->sector_range(k);
    if (k == 0) {
        out.vector[static_cast<Eigen::Index>(first)] = 1.0;
        return out;
    }

    Eigen::MatrixXd m(k, k);
    std::vector<int> occupied(static_cast<std::size_t>(k));
    for (std::size_t i = first; i < last; ++i) {
        const BasisState s = basis->state(i);
        int c = 0;
        for (int site = 1; site <= chain.N; ++site) {
            if (s.occupied(site)) occupied[static_cast<std::size_t>(c++)] = site;
        }
        // Rows: modes in the given label order; columns: occupied sites ascending.
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) {
                m(a, b) = modes[static_cast<std::size_t>(a)].amplitudes[static_cast<std::size_t>(occupied[static_cast<std::size_t>(b)] - 1)];
            }
        }
        out.vector[static_cast<Eigen::Index>(i)] = k == 1 ? m(0, 0) : m.determinant();
    }
    const double nrm = out.vector.norm();
    if (nrm < 1e-14) throw std::logic_error("slater_state: vanishing determinant state");
    out.vector /= nrm;
    return out;
}

Eigen::MatrixXcd DfsBasis::matrix() const {
    Eigen::MatrixXcd v(static_cast<Eigen::Index>(basis->dim()), static_cast<Eigen::Index>(states.size()));
    for (std::size_t i = 0; i < states.size(); ++i) v.col(static_cast<Eigen::Index>(i)) = states[i].vector;
    return v;
}

DfsBasis build_dfs_basis(const DfsReport& report, const ChainSpec& chain, const BasisPtr& basis,
                         bool allow_truncation) {
    if (basis->N() != chain.N || report.N != chain.N) throw std::invalid_argument("dfs basis: N mismatch");
    const int kmax = basis->kmax();
    if (kmax < report.r && !allow_truncation) {
        throw std::invalid_argument("dfs basis: basis truncated at sector " + std::to_string(kmax) +
                                    " below r = " + std::to_string(report.r));
    }
    if (report.r > 20) throw std::invalid_argument("dfs basis: r too large to enumerate");
    const int top = std::min(kmax, report.r);
    for (int k = 0; k <= top; ++k) {
        if (!basis->has_sector(k)) throw std::invalid_argument("dfs basis: basis lacks sector " + std::to_string(k));
    }

    DfsBasis dfs{report, chain, basis, {}, kmax < report.r};
    const auto r = static_cast<unsigned>(report.r);
    for (int k = 0; k <= top; ++k) {
        // Subsets of size k in lexicographic order of their label lists.
        std::vector<bool> pick(r, false);
        std::fill(pick.begin(), pick.begin() + k, true);
        do {
            std::vector<int> labels;
            for (unsigned i = 0; i < r; ++i) {
                if (pick[i]) labels.push_back(report.labels[i]);
            }
            SlaterState s = slater_state(labels, chain, basis);
            dfs.states.push_back({labels, k, std::move(s.vector), s.energy});
        } while (std::prev_permutation(pick.begin(), pick.end()));
    }
    return dfs;
}

DarknessReport verify_darkness(const DfsBasis& dfs, const NoiseSpec& noise, const SparseOperator& H) {
    const auto& basis = dfs.basis;
    if (H.domain->dim() != basis->dim()) throw std::invalid_argument("verify_darkness: H on a different basis");

    std::vector<SparseOperator> lowering;
    for (int m : noise.sites) lowering.push_back(build_jump_operator(m, basis, JumpKind::lowering));
    const bool thermal = noise.thermal();

    DarknessReport rep;
    for (const auto& d : dfs.states) {
        double jump = 0.0;
        for (const auto& L : lowering) jump = std::max(jump, (L.matrix * d.vector).norm());
        if (thermal) {
            // ||sigma_+^{(m)} |D>||^2 is the weight on configurations with site m empty;
            // evaluated directly so the top sector needs no target.
            for (std::size_t a = 0; a < noise.sites.size(); ++a) {
                if ((*noise.thermal_rates)[a] <= 0.0) continue;
                double w = 0.0;
                for (std::size_t i = 0; i < basis->dim(); ++i) {
                    if (!basis->state(i).occupied(noise.sites[a])) w += std::norm(d.vector[static_cast<Eigen::Index>(i)]);
                }
                jump = std::max(jump, std::sqrt(w));
            }
        }
        const double energy = (H.matrix * d.vector - d.energy * d.vector).norm();
        rep.jump_residuals.push_back(jump);
        rep.energy_residuals.push_back(energy);
        rep.max_jump_residual = std::max(rep.max_jump_residual, jump);
        rep.max_energy_residual = std::max(rep.max_energy_residual, energy);
    }
    rep.passed = rep.max_jump_residual <= 1e-10 && rep.max_energy_residual <= 1e-9;
    return rep;
}

}  // namespace xxsync
