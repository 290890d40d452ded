// dynamics.hpp: GKLS time integration on a sector-truncated density matrix.

#pragma once

#include "xxsync/dfs.hpp"
#include "xxsync/hilbert.hpp"

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace xxsync {

enum class Method { rk4, adaptive_rk45 };

struct IntegratorConfig {
    double dt{0.05};
    double t_max{100.0};
    int record_stride{10};
    Method method{Method::rk4};
    double rel_tol{1e-8};
    double abs_tol{1e-10};
    std::vector<double> snapshot_times;
    // A positivity check runs every this many recorded samples and at the end.
    int positivity_check_every{200};

    void validate() const;
    double record_interval() const { return dt * record_stride; }
    bool operator==(const IntegratorConfig&) const = default;
};

struct Jump {
    SparseOperator op;
    double rate{0.0};
};

// rho' = -i[H, rho] + sum_i rate_i (L_i rho L_i^dag - 1/2 {L_i^dag L_i, rho}).
DensityMatrix lindblad_rhs(const DensityMatrix& rho, const SparseOperator& H, const std::vector<Jump>& jumps);

// Precomputed generator: K = H - i/2 sum rate L^dag L, so that
// rho' = -i (K rho - rho K^dag) + sum rate L rho L^dag.
class LindbladGenerator {
public:
    LindbladGenerator(const SparseOperator& H, std::vector<Jump> jumps);

    void apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const;
    const BasisPtr& basis() const { return basis_; }

private:
    BasisPtr basis_;
    SparseMatrix K_;
    SparseMatrix K_adj_;
    std::vector<SparseMatrix> L_;
    std::vector<SparseMatrix> L_adj_;
    std::vector<double> rates_;
};

// Lowering (and, when thermal, raising) jump operators for the noise sites.
std::vector<Jump> build_jumps(const NoiseSpec& noise, const BasisPtr& basis);

// Smallest basis closed under the dynamics for an initial state with the given
// excitation support: sectors 0..support, or the full space when thermal.
BasisPtr dynamics_basis(int N, int excitation_support, const NoiseSpec& noise);

// Thermal noise needs the full 2^N space; larger chains are refused.
inline constexpr int kMaxThermalSites = 14;

struct PhysicalityReport {
    double trace{0.0};
    double trace_deficit{0.0};  // 1 - Re Tr rho
    double hermiticity_residual{0.0};
    double min_eigenvalue{0.0};
    bool passed{false};
};

PhysicalityReport physicality_check(const DensityMatrix& rho, double tol);

struct Snapshot {
    double time{0.0};
    DensityMatrix rho;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<int> sites;
    // sigma_x[i][s] = <sigma_x^{(sites[s])}> at times[i]
    std::vector<std::vector<double>> sigma_x;
    std::vector<double> trace_drift;
    std::vector<Snapshot> snapshots;
    DensityMatrix final_state;
    double min_eigenvalue_seen{0.0};

    // Column s as a plain series.
    std::vector<double> series(int site) const;
};

class PhysicalityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Called at every recorded time with the current state.
using Observer = std::function<void(double, const DensityMatrix&)>;

// Integrates from t = 0 to t_max. Aborts with PhysicalityError when the trace
// drifts by more than 1e-6 or a sampled minimum eigenvalue drops below
// -100 * abs_tol.
Trajectory evolve(const DensityMatrix& rho0, const ChainSpec& chain, const NoiseSpec& noise,
                  const IntegratorConfig& config, const std::vector<int>& sites,
                  const Observer& observer = {});

// Header: t,sx_<site>...,trace_drift
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// Binary snapshot layout, all little-endian:
//   char[8]  magic "XXSNAP01"
//   uint32   N
//   uint32   number of sectors S
//   uint32   sectors[S]
//   uint64   dim
//   float64  time
//   uint32   masks[dim]           (basis descriptor, basis order)
//   float64  entries[dim*dim*2]   (row-major, re/im pairs)
void write_snapshot(std::ostream& os, const Snapshot& snap);
Snapshot read_snapshot(std::istream& is);

}  // namespace xxsync
