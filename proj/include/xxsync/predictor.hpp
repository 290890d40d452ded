// predictor.hpp: asymptotic dynamics inside the decoherence-free subspace.
//
// Once bright components have decayed, <sigma_x^{(k)}(t)> reduces to
//   2 Re sum_{N_nu = N_mu + 1} rho_inf(nu, mu) X_k(mu, nu) exp(-i (E_nu - E_mu)(t - t_ref))
// with X_k(mu, nu) = <mu| sigma_-^{(k)} |nu>.

#pragma once

#include "xxsync/dfs.hpp"
#include "xxsync/dynamics.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <vector>

namespace xxsync {

struct Transition {
    std::size_t mu{0};  // lower state (index into DfsBasis::states)
    std::size_t nu{0};  // upper state, one more excitation
    double frequency{0.0};  // E_nu - E_mu (angular)
    std::vector<double> x;  // per table site
};

struct TransitionTable {
    std::vector<int> sites;
    std::vector<Transition> entries;

    // Column of x for a given site; throws if the site is not tabulated.
    std::size_t site_column(int site) const;
};

TransitionTable transition_table(const DfsBasis& dfs, const std::vector<int>& sites);

enum class AsymptoticSource { analytic, empirical };

struct AsymptoticState {
    Eigen::MatrixXcd coherences;  // rho_inf over DfsBasis::states
    AsymptoticSource source{AsymptoticSource::analytic};
    double t_ref{0.0};  // time at which the closed-form clock starts
};

class AnalyticUnavailable : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Analytic rho_inf: the dark block of the initial state, plus the decayed
// bright weight fed into |G><G|. Valid only for initial support in sectors 0..1
// under non-thermal noise; otherwise throws AnalyticUnavailable.
AsymptoticState asymptotic_state_analytic(const DensityMatrix& rho0, const DfsBasis& dfs);

// Empirical rho_inf = Pi rho(T*) Pi expressed in the dark basis, clock at T*.
AsymptoticState asymptotic_state_empirical(const Snapshot& snapshot, const DfsBasis& dfs);

std::vector<double> closed_form_series(const AsymptoticState& state, const TransitionTable& table, int site,
                                       const std::vector<double>& times);

enum class SyncReason { unique_dark_mode, conflicting_matrix_elements, empty_dfs };

struct SyncVerdict {
    bool generic{false};
    std::optional<int> constant_C;
    std::vector<double> frequencies;  // angular, one per participating transition
    SyncReason reason{SyncReason::empty_dfs};
    // Pairs of table entries at the same frequency whose edge ratios X_1 / X_N
    // disagree; either both cannot hold with one constant C.
    std::vector<std::pair<std::size_t, std::size_t>> conflicts;
};

SyncVerdict classify_synchronization(const DfsReport& report, const TransitionTable& table);

struct FrequencyAmplitude {
    double frequency{0.0};
    double amplitude{0.0};
    bool degenerate{false};  // amplitude below 1e-8
};

// Oscillation amplitude per distinct frequency at one site for a given rho_inf.
std::vector<FrequencyAmplitude> frequency_amplitudes(const AsymptoticState& state, const TransitionTable& table,
                                                     int site);

// 4 |rho_inf(D, D)| / (N + 1); defined only for g == 2.
double asymptotic_concurrence(const AsymptoticState& state, const DfsReport& report);

struct PeripheralSpectrum {
    std::vector<cplx> eigenvalues;  // |Re| < threshold, sorted by imag then real
    std::size_t count{0};
};

inline constexpr int kMaxOracleSites = 6;
inline constexpr double kPeripheralThreshold = 1e-9;

// Dense 4^N Liouvillian, diagonalized block by block in k_row - k_col.
PeripheralSpectrum liouvillian_peripheral_spectrum(const ChainSpec& chain, const NoiseSpec& noise);

// Column-stacked superoperator: vec(rho') = L vec(rho).
Eigen::MatrixXcd assemble_liouvillian(const SparseOperator& H, const std::vector<Jump>& jumps);

// Dark population Tr[Pi rho Pi] for the DFS states living in rho's basis.
double dfs_population(const DensityMatrix& rho, const DfsBasis& dfs);

// Observer that tracks the bright population and keeps the first state whose
// bright population falls below the threshold. That time is the transient
// cutoff T*.
class TransientMonitor {
public:
    TransientMonitor(const DfsBasis& dfs, double threshold);

    void operator()(double t, const DensityMatrix& rho);

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& bright_population() const { return bright_; }
    std::optional<Snapshot> cutoff() const { return cutoff_; }
    double threshold() const { return threshold_; }

private:
    Eigen::MatrixXcd dark_;
    double threshold_;
    std::vector<double> times_;
    std::vector<double> bright_;
    std::optional<Snapshot> cutoff_;
};

// Bright-population threshold defining T*. With bright weight p the coherent
// leakage into <sigma_x> is at most 2 sqrt(p) + p, so 1e-9 keeps the
// closed-form residual below 1e-4.
inline constexpr double kDefaultBrightThreshold = 1e-9;

void to_json(nlohmann::json& j, const TransitionTable& table);
void to_json(nlohmann::json& j, const SyncVerdict& verdict);
const char* to_string(SyncReason reason);

void write_peripheral_csv(std::ostream& os, const PeripheralSpectrum& spec);

}  // namespace xxsync
