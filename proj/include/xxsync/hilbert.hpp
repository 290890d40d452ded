// hilbert.hpp: excitation-sector bases and sparse operators for the open XX chain.
//
// Basis states are occupation bitmasks: bit (j-1) set means site j is excited.
// The Hamiltonian is stored with the ground-state energy shifted to zero, so the
// diagonal on sector k is omega * k and only nearest-neighbour hopping J remains
// off the diagonal.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

namespace xxsync {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

// Largest chain the 32-bit occupation mask supports.
inline constexpr int kMaxSites = 31;

struct ChainSpec {
    int N{2};
    double omega{0.0};
    double J{0.0};

    // Throws std::invalid_argument when N < 2 or the couplings are not finite.
    void validate() const;
    bool operator==(const ChainSpec&) const = default;
};

class BasisState {
public:
    constexpr BasisState() = default;
    constexpr explicit BasisState(std::uint32_t mask) : mask_(mask) {}

    constexpr std::uint32_t mask() const { return mask_; }
    int excitations() const;
    // 1-based site index.
    constexpr bool occupied(int site) const { return (mask_ >> (site - 1)) & 1U; }
    constexpr BasisState flipped(int site) const { return BasisState(mask_ ^ (1U << (site - 1))); }

    constexpr auto operator<=>(const BasisState&) const = default;

private:
    std::uint32_t mask_{0};
};

class SectorBasis {
public:
    // Sectors must be distinct and within 0..N; they are sorted on construction.
    SectorBasis(int N, std::vector<int> sectors);

    int N() const { return N_; }
    const std::vector<int>& sectors() const { return sectors_; }
    const std::vector<BasisState>& states() const { return states_; }
    std::size_t dim() const { return states_.size(); }
    int kmax() const { return sectors_.back(); }
    int kmin() const { return sectors_.front(); }
    bool has_sector(int k) const;

    const BasisState& state(std::size_t i) const { return states_[i]; }
    // Dense index of a state, or -1 when the state lies outside the basis.
    std::ptrdiff_t index_of(BasisState s) const;
    // Half-open index range [first, last) occupied by sector k.
    std::pair<std::size_t, std::size_t> sector_range(int k) const;

private:
    int N_;
    std::vector<int> sectors_;
    std::vector<BasisState> states_;
    std::vector<std::size_t> offsets_;
    std::unordered_map<std::uint32_t, std::size_t> index_;
};

using BasisPtr = std::shared_ptr<const SectorBasis>;

// Basis covering sectors 0..kmax, bitmask-increasing within each sector.
BasisPtr enumerate_sector(int N, int kmax);
// Basis covering an explicit list of sectors.
BasisPtr enumerate_sectors(int N, std::vector<int> sectors);

struct DensityMatrix {
    BasisPtr basis;
    Eigen::MatrixXcd entries;

    DensityMatrix() = default;
    DensityMatrix(BasisPtr b, Eigen::MatrixXcd m);

    cplx trace() const { return entries.trace(); }
};

struct SparseOperator {
    BasisPtr domain;
    BasisPtr codomain;
    // Change in excitation number produced by the operator (0, -1 or +1).
    // Not meaningful for sigma_x, which mixes -1 and +1 (reported as 0).
    int delta_excitation{0};
    SparseMatrix matrix;
};

enum class JumpKind { lowering, raising };

SparseOperator build_hamiltonian(const ChainSpec& chain, const BasisPtr& basis);

// sigma_-^{(site)} or sigma_+^{(site)} acting within `basis`.
// Lowering requires sector k-1 for every included k > 0; raising requires k+1
// for every included k < N. Either violation throws std::invalid_argument.
SparseOperator build_jump_operator(int site, const BasisPtr& basis, JumpKind kind);

// sigma_+ + sigma_- at `site`, projected onto the basis. Matrix elements that
// would leave the basis through the top sector are dropped.
SparseOperator build_sigma_x(int site, const BasisPtr& basis);

// Amplitudes (a0, a1) of a single qubit on |0>, |1>.
struct QubitState {
    cplx zero{1.0};
    cplx one{0.0};

    static QubitState ground() { return {1.0, 0.0}; }
    static QubitState excited() { return {0.0, 1.0}; }
    static QubitState plus();
    static QubitState minus();
};

// Pure product state |q_1> (x) ... (x) |q_N> embedded in the basis. Throws when
// the number of qubits with a nonzero excited amplitude exceeds the basis kmax.
DensityMatrix embed_product_state(const std::vector<QubitState>& qubits, const BasisPtr& basis);

// Same product state as a ket over the basis.
Eigen::VectorXcd product_state_vector(const std::vector<QubitState>& qubits, const BasisPtr& basis);

// Number of qubits with nonzero excited amplitude.
int excitation_support(const std::vector<QubitState>& qubits);

// Tr[rho * op] for an operator on the same basis.
cplx expectation(const DensityMatrix& rho, const SparseOperator& op);

std::uint64_t binomial(int n, int k);

}  // namespace xxsync
