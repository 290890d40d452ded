#include "xxsync/hilbert.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace xxsync {

namespace {

using Triplet = Eigen::Triplet<cplx>;

void require_site(int site, int N) {
    if (site < 1 || site > N) {
        throw std::invalid_argument("site " + std::to_string(site) + " out of range 1.." +
                                    std::to_string(N));
    }
}

SparseMatrix from_triplets(std::size_t dim, const std::vector<Triplet>& triplets) {
    SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

// Gosper's hack: next integer with the same popcount.
std::uint32_t next_same_popcount(std::uint32_t v) {
    const std::uint32_t t = v | (v - 1);
    return (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
}

}  // namespace

void ChainSpec::validate() const {
    if (N < 2) throw std::invalid_argument("chain length N must be >= 2");
    if (N > kMaxSites) throw std::invalid_argument("chain length N exceeds " + std::to_string(kMaxSites));
    if (!std::isfinite(omega) || !std::isfinite(J)) {
        throw std::invalid_argument("omega and J must be finite");
    }
}

int BasisState::excitations() const { return std::popcount(mask_); }

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

SectorBasis::SectorBasis(int N, std::vector<int> sectors) : N_(N), sectors_(std::move(sectors)) {
    if (N < 1 || N > kMaxSites) throw std::invalid_argument("basis: N out of range");
    if (sectors_.empty()) throw std::invalid_argument("basis: no sectors requested");
    std::sort(sectors_.begin(), sectors_.end());
    if (std::adjacent_find(sectors_.begin(), sectors_.end()) != sectors_.end()) {
        throw std::invalid_argument("basis: duplicate sector");
    }
    if (sectors_.front() < 0 || sectors_.back() > N) {
        throw std::invalid_argument("basis: sector outside 0..N");
    }

    std::size_t total = 0;
    for (int k : sectors_) total += binomial(N, k);
    states_.reserve(total);
    index_.reserve(total);

    for (int k : sectors_) {
        offsets_.push_back(states_.size());
        if (k == 0) {
            states_.emplace_back(0U);
            continue;
        }
        const std::uint32_t last = ((1ULL << k) - 1) << (N - k);
        for (std::uint32_t v = (1ULL << k) - 1;; v = next_same_popcount(v)) {
            states_.emplace_back(v);
            if (v == last) break;
        }
    }
    offsets_.push_back(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i].mask(), i);
}

bool SectorBasis::has_sector(int k) const {
    return std::binary_search(sectors_.begin(), sectors_.end(), k);
}

std::ptrdiff_t SectorBasis::index_of(BasisState s) const {
    auto it = index_.find(s.mask());
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::pair<std::size_t, std::size_t> SectorBasis::sector_range(int k) const {
    auto it = std::lower_bound(sectors_.begin(), sectors_.end(), k);
    if (it == sectors_.end() || *it != k) throw std::out_of_range("basis: sector not present");
    const auto pos = static_cast<std::size_t>(it - sectors_.begin());
    return {offsets_[pos], offsets_[pos + 1]};
}

BasisPtr enumerate_sector(int N, int kmax) {
    if (kmax < 0 || kmax > N) {
        throw std::invalid_argument("kmax " + std::to_string(kmax) + " outside 0..N");
    }
    std::vector<int> ks(static_cast<std::size_t>(kmax) + 1);
    for (int k = 0; k <= kmax; ++k) ks[static_cast<std::size_t>(k)] = k;
    return std::make_shared<const SectorBasis>(N, std::move(ks));
}

BasisPtr enumerate_sectors(int N, std::vector<int> sectors) {
    return std::make_shared<const SectorBasis>(N, std::move(sectors));
}

DensityMatrix::DensityMatrix(BasisPtr b, Eigen::MatrixXcd m) : basis(std::move(b)), entries(std::move(m)) {
    const auto d = static_cast<Eigen::Index>(basis->dim());
    if (entries.rows() != d || entries.cols() != d) {
        throw std::invalid_argument("density matrix size does not match basis");
    }
}

SparseOperator build_hamiltonian(const ChainSpec& chain, const BasisPtr& basis) {
    chain.validate();
    if (basis->N() != chain.N) throw std::invalid_argument("hamiltonian: basis built for a different N");

    std::vector<Triplet> t;
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        const BasisState s = basis->state(i);
        const auto ii = static_cast<Eigen::Index>(i);
        if (s.excitations() > 0) t.emplace_back(ii, ii, chain.omega * s.excitations());
        for (int j = 1; j < chain.N; ++j) {
            // Hop only when exactly one of (j, j+1) is occupied; emit the upper
            // element and its mirror so H is symmetric by construction.
            if (s.occupied(j) == s.occupied(j + 1)) continue;
            const BasisState target = s.flipped(j).flipped(j + 1);
            const auto k = basis->index_of(target);
            if (k < 0 || static_cast<std::size_t>(k) < i) continue;
            t.emplace_back(ii, k, chain.J);
            t.emplace_back(k, ii, chain.J);
        }
    }
    return {basis, basis, 0, from_triplets(basis->dim(), t)};
}

SparseOperator build_jump_operator(int site, const BasisPtr& basis, JumpKind kind) {
    const int N = basis->N();
    require_site(site, N);
    const bool lowering = kind == JumpKind::lowering;
    for (int k : basis->sectors()) {
        if (lowering && k > 0 && !basis->has_sector(k - 1)) {
            throw std::invalid_argument("lowering operator: sector " + std::to_string(k - 1) + " missing");
        }
        if (!lowering && k < N && !basis->has_sector(k + 1)) {
            throw std::invalid_argument("raising operator: sector " + std::to_string(k + 1) + " missing");
        }
    }

    std::vector<Triplet> t;
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        const BasisState s = basis->state(i);
        if (s.occupied(site) != lowering) continue;
        const auto row = basis->index_of(s.flipped(site));
        t.emplace_back(row, static_cast<Eigen::Index>(i), 1.0);
    }
    return {basis, basis, lowering ? -1 : +1, from_triplets(basis->dim(), t)};
}

SparseOperator build_sigma_x(int site, const BasisPtr& basis) {
    require_site(site, basis->N());
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        const auto row = basis->index_of(basis->state(i).flipped(site));
        if (row >= 0) t.emplace_back(row, static_cast<Eigen::Index>(i), 1.0);
    }
    return {basis, basis, 0, from_triplets(basis->dim(), t)};
}

QubitState QubitState::plus() {
    const double a = 1.0 / std::sqrt(2.0);
    return {a, a};
}

QubitState QubitState::minus() {
    const double a = 1.0 / std::sqrt(2.0);
    return {a, -a};
}

int excitation_support(const std::vector<QubitState>& qubits) {
    return static_cast<int>(std::count_if(qubits.begin(), qubits.end(),
                                          [](const QubitState& q) { return q.one != 0.0; }));
}

Eigen::VectorXcd product_state_vector(const std::vector<QubitState>& qubits, const BasisPtr& basis) {
    const int N = basis->N();
    if (static_cast<int>(qubits.size()) != N) {
        throw std::invalid_argument("product state: expected " + std::to_string(N) + " qubit states");
    }
    for (const auto& q : qubits) {
        const double norm = std::norm(q.zero) + std::norm(q.one);
        if (std::abs(norm - 1.0) > 1e-10) throw std::invalid_argument("product state: qubit state not normalized");
    }
    const int support = excitation_support(qubits);
    for (int k = 0; k <= support; ++k) {
        if (!basis->has_sector(k)) {
            throw std::invalid_argument("product state: excitation support " + std::to_string(support) +
                                        " exceeds basis truncation (sector " + std::to_string(k) +
                                        " missing)");
        }
    }

    Eigen::VectorXcd psi(static_cast<Eigen::Index>(basis->dim()));
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        const BasisState s = basis->state(i);
        cplx amp = 1.0;
        for (int j = 1; j <= N && amp != 0.0; ++j) {
            const auto& q = qubits[static_cast<std::size_t>(j - 1)];
            amp *= s.occupied(j) ? q.one : q.zero;
        }
        psi[static_cast<Eigen::Index>(i)] = amp;
    }
    return psi;
}

DensityMatrix embed_product_state(const std::vector<QubitState>& qubits, const BasisPtr& basis) {
    const Eigen::VectorXcd psi = product_state_vector(qubits, basis);
    return DensityMatrix(basis, psi * psi.adjoint());
}

cplx expectation(const DensityMatrix& rho, const SparseOperator& op) {
    if (rho.basis.get() != op.domain.get() && rho.basis->dim() != op.domain->dim()) {
        throw std::invalid_argument("expectation: basis mismatch");
    }
    // Tr[rho A] = sum_{r,c} A(r,c) rho(c,r)
    cplx acc = 0.0;
    for (Eigen::Index r = 0; r < op.matrix.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(op.matrix, r); it; ++it) {
            acc += it.value() * rho.entries(it.col(), r);
        }
    }
    return acc;
}

}  // namespace xxsync
