// dfs.hpp: decoherence-free subspace of the XX chain under amplitude damping.
//
// A single-excitation eigenmode phi_n is dark iff n * m_a is divisible by N+1 for
// every noise site m_a. The dark labels are the multiples of (N+1)/g with
// g = gcd(m_1, ..., m_q, N+1); multi-excitation dark states are Slater
// determinants of distinct dark modes with additive energies.

#pragma once

#include "xxsync/hilbert.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace xxsync {

struct NoiseSpec {
    std::vector<int> sites;
    std::vector<double> rates;
    // Raising-operator strengths per site (finite-temperature amplitude damping).
    std::optional<std::vector<double>> thermal_rates;

    void validate(int N) const;
    bool thermal() const;
    bool operator==(const NoiseSpec&) const = default;
};

struct DfsReport {
    int N{0};
    int g{1};
    int r{0};
    std::vector<int> labels;
    std::vector<std::uint64_t> sector_dims;
    std::uint64_t total_dim{1};
    bool generic_sync{false};
    std::optional<int> sync_sign;
    // Finite-temperature noise: no non-trivial DFS; g is reported as 1 and the
    // bare arithmetic gcd is kept in ad_gcd.
    bool thermal{false};
    int ad_gcd{1};
};

void to_json(nlohmann::json& j, const DfsReport& r);

DfsReport gcd_analysis(const NoiseSpec& noise, int N);

struct ModeProfile {
    std::vector<double> amplitudes;  // phi_n(1..N), index j-1
    double energy{0.0};
};

// phi_n(j) = sqrt(2/(N+1)) sin(n j pi/(N+1)), E_n = omega + 2 J cos(n pi/(N+1)).
// Nodes (n j divisible by N+1) evaluate to exactly 0.
ModeProfile single_excitation_mode(int n, const ChainSpec& chain);

struct SlaterState {
    Eigen::VectorXcd vector;  // over the supplied basis, nonzero only in sector k
    double energy{0.0};
};

// Determinant state over the ordered label list. Swapping two labels flips the
// overall sign; the result is normalized to unit norm.
SlaterState slater_state(const std::vector<int>& labels, const ChainSpec& chain, const BasisPtr& basis);

struct DfsState {
    std::vector<int> labels;  // ascending
    int excitations{0};
    Eigen::VectorXcd vector;
    double energy{0.0};
};

struct DfsBasis {
    DfsReport report;
    ChainSpec chain;
    BasisPtr basis;
    // Ordered by excitation number, then lexicographically by label set; the
    // ground state |G> is always states[0].
    std::vector<DfsState> states;

    // Column matrix of all dark vectors.
    Eigen::MatrixXcd matrix() const;
    // Excitations covered: min(r, basis kmax) unless built untruncated.
    bool truncated{false};
};

// Enumerates every subset of the dark labels. When the basis kmax is below r
// the call throws unless allow_truncation is set, in which case only subsets
// with at most kmax labels are built.
DfsBasis build_dfs_basis(const DfsReport& report, const ChainSpec& chain, const BasisPtr& basis,
                         bool allow_truncation = false);

struct DarknessReport {
    double max_jump_residual{0.0};
    double max_energy_residual{0.0};
    bool passed{false};
    std::vector<double> jump_residuals;    // per dark state
    std::vector<double> energy_residuals;  // per dark state
};

// Checks ||L_a |D>|| for every jump operator (lowering, and raising when the
// noise is thermal) and ||H|D> - E_D|D>||.
DarknessReport verify_darkness(const DfsBasis& dfs, const NoiseSpec& noise, const SparseOperator& H);

}  // namespace xxsync
