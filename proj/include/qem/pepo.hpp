#pragma once

// Superoperators of 2D circuits as PEPOs and the variational PEPO inverse. Qubit (r, c) has index
// r * cols + c; the dense forms use that order with qubit 0 most significant.

#include "qem/channels.hpp"
#include "qem/circuit.hpp"
#include "qem/dense.hpp"
#include "qem/grid.hpp"
#include "qem/inverse.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qem {

/// Grid of site tensors shaped (up, down, left, right, out, in).
class Pepo {
  public:
    Pepo() = default;
    Pepo(int rows, int cols, std::vector<Tensor> sites);

    static Pepo identity(int rows, int cols);
    /// Bond-1 PEPO from 4x4 local maps in row-major qubit order.
    static Pepo product(int rows, int cols, const std::vector<Mat> &local);

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    [[nodiscard]] int n_qubits() const { return rows_ * cols_; }

    Tensor       &site(int r, int c) { return sites_[static_cast<size_t>(r * cols_ + c)]; }
    const Tensor &site(int r, int c) const { return sites_[static_cast<size_t>(r * cols_ + c)]; }

    /// Bond between (r, c) and (r, c + 1) / (r + 1, c).
    [[nodiscard]] Index bond_right(int r, int c) const { return site(r, c).dim(3); }
    [[nodiscard]] Index bond_down(int r, int c) const { return site(r, c).dim(1); }
    [[nodiscard]] Index max_bond() const;

    void validate() const;

  private:
    int                 rows_ = 0;
    int                 cols_ = 0;
    std::vector<Tensor> sites_;
};

struct Gate2D {
    GateKind                 gate = GateKind::Z;
    int                      q0   = 0;  // control for CNOT
    int                      q1   = -1; // target; -1 for single-qubit gates
    std::optional<NoiseSpec> noise;
};

struct Circuit2D {
    int                              rows = 0;
    int                              cols = 0;
    std::uint64_t                    seed = 0;
    std::vector<std::vector<Gate2D>> layers;

    [[nodiscard]] int depth() const { return static_cast<int>(layers.size()); }
    [[nodiscard]] int n_qubits() const { return rows * cols; }
};

/// Odd layers (1-based) hold CNOTs on neighbouring pairs, alternating between horizontal and vertical
/// pairs, with the pair offset shifted on every second layer of each direction. Even layers draw one
/// gate from {Z, H, S, T} per qubit. Noise follows the family profile of `noise` (eps1 = eps2 / 10 by
/// default).
Circuit2D generate_test_circuit_2d(int rows, int cols, int depth, std::uint64_t seed, const NoiseProfile &noise);

Circuit2D strip_noise(const Circuit2D &c);

/// Layer-by-layer absorption; each touched link is recompressed to `max_bond` (<= 0: uncapped).
Pepo pepo_from_circuit_2d(const Circuit2D &c, Index max_bond = 0, double cutoff = kDefaultCutoff);

/// Dense oracle by gate-by-gate composition (n <= 6).
DenseSuperOp compile_dense_2d(const Circuit2D &c);

/// Full contraction into a dense superoperator (n <= 6).
DenseSuperOp pepo_to_dense(const Pepo &p);

/// Site-wise a * b (b acts first); bonds multiply.
Pepo multiply(const Pepo &a, const Pepo &b);
Pepo dagger(const Pepo &p);

/// Recompresses every link by an SVD of the link matrix between its two QR-reduced neighbours.
/// Without truncation this only changes the gauge.
TruncationReport compress_links(Pepo &p, Index max_bond, double cutoff = kDefaultCutoff);

/// Tr[a b^dagger] = sum a * conj(b) by boundary contraction.
cplx inner(const Pepo &a, const Pepo &b, const BoundaryContractionConfig &cfg);
double relative_distance_pepo(const Pepo &a, const Pepo &b, const BoundaryContractionConfig &cfg);
double trace_infidelity_pepo(const Pepo &p, const BoundaryContractionConfig &cfg);

/// Row-vs-column disagreement of the norm network Tr[p p^dagger].
double norm_self_consistency(const Pepo &p, const BoundaryContractionConfig &cfg);

struct PepoInverseReport : InverseReport {
    std::vector<double> distance_history; // D(X U, 1) after every sweep, entry 0 for the initial guess
    double              boundary_discarded = 0.0;
};

/// Dagger of u with links compressed to `bond`.
Pepo initial_inverse_guess(const Pepo &u, Index bond);

/// Alternating least squares on e = Tr[X W X^dagger] - 2 Re Tr[X U] + 4^n over the sites in row-major
/// order; environments come from boundary contraction of the fused networks. Site matrices are
/// symmetrized and their negative eigenvalues clipped before the solve.
std::pair<Pepo, PepoInverseReport> pepo_inverse(const Pepo &u, Index bond, const BoundaryContractionConfig &cfg,
                                                int max_sweeps = 15, double tol = 1e-12);

} // namespace qem
