#pragma once

// Alternating least-squares fit of an MPO X to the inverse of a target MPO U, minimizing
// e = ||X U - 1||_F^2 = Tr[X W X^dagger] - 2 Re Tr[X U] + 4^n with W = U U^dagger.
//
// For site j with the other sites fixed, e restricted to X_j is sum_t x_t^dagger G x_t - 2 Re(K_t . x_t) + C,
// where x_t is the slice of X_j at output index t, grouped as (left, in, right). The full quadratic-form
// matrix is M = 1_t (x) G and the linear term is N = conj(K).

#include "qem/mpo.hpp"

#include <cstdint>
#include <vector>

namespace qem {

struct InverseOptions {
    Index         bond_dim     = 5;
    int           max_sweeps   = 20;
    double        tol          = 1e-15; // on the change of e / 4^n between sweeps
    double        solve_cutoff = 1e-12; // relative eigenvalue cutoff of the per-site solve
    double        w_cutoff     = 1e-14; // compression cutoff for W = U U^dagger
    bool          random_init  = false;
    std::uint64_t seed         = 0;
};

struct InverseReport {
    bool                converged   = false;
    double              final_error = 0.0; // e = ||X U - 1||_F^2
    int                 sweeps_used = 0;
    double              normalization = 1.0;     // C = 4^n; histories are e / C
    std::vector<double> error_history;           // entry 0 is the initial guess, then one per sweep
    std::vector<double> site_errors;             // after every site update
    std::vector<double> trace_infidelity_history; // of X, same indexing as error_history
};

class InverseWorkspace {
  public:
    InverseWorkspace(const Mpo &target, Mpo guess, double w_cutoff = 1e-14);

    [[nodiscard]] int        size() const { return guess_.size(); }
    [[nodiscard]] const Mpo &target() const { return target_; }
    [[nodiscard]] const Mpo &guess() const { return guess_; }
    [[nodiscard]] double     normalization() const { return c_; }

    /// Local Gram matrix G of site j, dimension (left * 4 * right).
    Mat local_gram(int site);
    /// Full quadratic-form matrix M = 1_t (x) G over the site tensor in storage order (left, out, in, right).
    Mat environment_M(int site);
    /// Linear term N over the site tensor in storage order.
    Vec environment_N(int site);

    /// Solves site j exactly and returns e after the update (absolute).
    double update_site(int site, double solve_cutoff = 1e-12);
    /// Moves the gauge center from j to j+1 (QR) or j-1 (LQ); the represented operator is unchanged.
    void shift_right(int site);
    void shift_left(int site);

    /// e evaluated on the canonicalized difference chain X U - 1.
    [[nodiscard]] double error() const;

    [[nodiscard]] int iteration_count() const { return iterations_; }
    [[nodiscard]] double last_error() const { return last_error_; }

  private:
    void   invalidate(int site);
    const Tensor &left_quad(int site);
    const Tensor &right_quad(int site);
    const Tensor &left_lin(int site);
    const Tensor &right_lin(int site);
    Tensor        linear_site(int site);

    Mpo                 target_;
    Mpo                 w_;
    Mpo                 guess_;
    double              c_ = 1.0;
    std::vector<Tensor> ql_, qr_, ll_, rl_;
    int                 ql_valid_ = 0;  // ql_[k] valid for k <= ql_valid_
    int                 qr_valid_ = 0;  // qr_[k] valid for k >= qr_valid_
    int                 ll_valid_ = 0;
    int                 rl_valid_ = 0;
    int                 iterations_ = 0;
    double              last_error_ = 0.0;
};

/// Minimum-norm least-squares solution of M x = N for Hermitian PSD M (spectral cutoff).
Vec solve_site(const Mat &m, const Vec &n, double rel_cutoff = 1e-12);

/// Dagger of u truncated to bond_dim, right-canonical, with bonds padded to
/// min(bond_dim, largest admissible) by orthonormal completion.
Mpo initial_inverse_guess(const Mpo &u, Index bond_dim);

std::pair<Mpo, InverseReport> mpo_inverse(const Mpo &u, const InverseOptions &opt);
std::pair<Mpo, InverseReport> mpo_inverse(const Mpo &u, Index bond_dim, int max_sweeps = 20, double tol = 1e-15);

} // namespace qem
