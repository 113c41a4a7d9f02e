#pragma once

// Matrix product superoperators, vectorized-state MPS and LPDOs.
//
// Storage order: an MPO site is held as (left, out, in, right) with out/in of dimension 4 each; the
// accessor `Mpo::at(j, l, r, t, s)` uses the (left, right, out, in) order of the textbook notation.
// A VecStateMps site is (left, 4, right) and an Lpdo site is (left, kraus, out, in, right) with
// out/in of dimension 2.

#include "qem/chain.hpp"
#include "qem/dense.hpp"

#include <utility>
#include <vector>

namespace qem {

inline constexpr double kDefaultCutoff = 1e-14;

class Mpo {
  public:
    Mpo() = default;
    explicit Mpo(Sites sites);

    static Mpo identity(int n);
    /// Product MPO from per-site 4x4 superoperators.
    static Mpo product(const std::vector<Mat> &local);
    /// Exact MPO of a dense superoperator via sequential SVDs (cutoff relative per cut).
    static Mpo from_dense(const DenseSuperOp &op, double cutoff = kDefaultCutoff);

    [[nodiscard]] int           size() const { return static_cast<int>(sites_.size()); }
    [[nodiscard]] const Tensor &site(int j) const { return sites_[static_cast<size_t>(j)]; }
    Tensor                     &site(int j) { return sites_[static_cast<size_t>(j)]; }
    [[nodiscard]] const Sites  &sites() const { return sites_; }
    Sites                      &sites() { return sites_; }

    /// Bond between site j and j+1.
    [[nodiscard]] Index              bond(int j) const;
    [[nodiscard]] std::vector<Index> bonds() const;
    [[nodiscard]] Index              max_bond() const;

    [[nodiscard]] const cplx &at(int j, Index l, Index r, Index t, Index s) const { return site(j)(l, t, s, r); }
    cplx                     &at(int j, Index l, Index r, Index t, Index s) { return site(j)(l, t, s, r); }

    /// Checks adjacent-bond agreement, boundary bonds of 1 and 4x4 physical legs.
    void validate() const;

  private:
    Sites sites_;
};

class VecStateMps {
  public:
    VecStateMps() = default;
    explicit VecStateMps(Sites sites);

    static VecStateMps zero_product(int n);
    static VecStateMps from_dense(const DenseState &state, double cutoff = kDefaultCutoff);

    [[nodiscard]] int           size() const { return static_cast<int>(sites_.size()); }
    [[nodiscard]] const Tensor &site(int j) const { return sites_[static_cast<size_t>(j)]; }
    Tensor                     &site(int j) { return sites_[static_cast<size_t>(j)]; }
    [[nodiscard]] const Sites  &sites() const { return sites_; }
    Sites                      &sites() { return sites_; }
    [[nodiscard]] Index         max_bond() const;

  private:
    Sites sites_;
};

class Lpdo {
  public:
    Lpdo() = default;
    explicit Lpdo(Sites sites);

    [[nodiscard]] int           size() const { return static_cast<int>(sites_.size()); }
    [[nodiscard]] const Tensor &site(int j) const { return sites_[static_cast<size_t>(j)]; }
    [[nodiscard]] const Sites  &sites() const { return sites_; }
    /// Bond between site j and j+1.
    [[nodiscard]] Index bond(int j) const;

  private:
    Sites sites_;
};

/// Site-wise contraction of the Lpdo with its conjugate over the Kraus index.
Mpo lpdo_to_mpo(const Lpdo &l);

DenseSuperOp mpo_to_dense(const Mpo &m);
DenseState   mps_to_dense(const VecStateMps &s);

/// Site-wise conjugate transpose (Hermitian conjugate of the superoperator).
Mpo dagger(const Mpo &m);

/// Exact composition a * b (b acts first); bonds multiply.
Mpo multiply(const Mpo &a, const Mpo &b);

/// layer * target (layer acts after target), built with a zip-up and compressed.
std::pair<Mpo, TruncationReport>         apply_mpo_layer(const Mpo &target, const Mpo &layer, Index max_bond,
                                                         double cutoff = kDefaultCutoff);
std::pair<VecStateMps, TruncationReport> apply_mpo_layer(const VecStateMps &target, const Mpo &layer, Index max_bond,
                                                         double cutoff = kDefaultCutoff);

/// Tr[a b^dagger].
cplx   inner(const Mpo &a, const Mpo &b);
cplx   inner(const VecStateMps &a, const VecStateMps &b);
double norm_sq(const Mpo &a);
double relative_distance_mpo(const Mpo &a, const Mpo &b);
double state_distance(const VecStateMps &a, const VecStateMps &b);

/// Operator trace Tr[m].
cplx trace(const Mpo &m);

/// Mixed-canonical SVD truncation; `max_bond <= 0` means unbounded.
std::pair<Mpo, TruncationReport> truncate(const Mpo &m, Index max_bond, double cutoff = kDefaultCutoff);
void                             canonicalize(Mpo &m, int center);

/// |<<1| - <<1| m|^2, <<1| normalized to unit length.
double trace_infidelity_mpo(const Mpo &m);

/// <<1|rho>> of a vectorized state.
cplx state_trace(const VecStateMps &s);

/// Applies a 4x4 map to site q (TEBD-style, no bond change).
void apply_one_site(VecStateMps &s, const Mat &g4, int q);
/// Applies a 16x16 map to sites (q, q+1) and splits with an SVD; returns the discarded weight.
/// Expects the orthogonality center on q and leaves it on q+1.
double apply_two_site(VecStateMps &s, const Mat &g16, int q, Index max_bond, double cutoff);

} // namespace qem
