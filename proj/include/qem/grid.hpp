#pragma once

// Approximate contraction of closed 2D tensor networks on an open rectangular grid. Every site tensor
// is shaped (up, down, left, right); boundary legs have dimension 1. Rows are absorbed into a
// boundary MPS from the top and from the bottom, and row environments close the network around a
// single site.

#include "qem/chain.hpp"
#include "qem/tensor.hpp"

#include <vector>

namespace qem {

struct BoundaryContractionConfig {
    Index  chi    = 0; // boundary-MPS bond cap; <= 0 selects the square of the largest network link
    double cutoff = 1e-14;
};

struct TensorGrid {
    int                 rows = 0;
    int                 cols = 0;
    std::vector<Tensor> sites; // row-major

    TensorGrid() = default;
    TensorGrid(int rows, int cols);

    Tensor       &at(int r, int c) { return sites[static_cast<size_t>(r * cols + c)]; }
    const Tensor &at(int r, int c) const { return sites[static_cast<size_t>(r * cols + c)]; }

    /// Largest leg dimension in the network.
    [[nodiscard]] Index max_link() const;
    /// Same network with rows and columns exchanged.
    [[nodiscard]] TensorGrid transposed() const;
    /// Throws when neighbouring legs disagree or a boundary leg is not 1.
    void validate() const;
};

/// Effective chi for a network: cfg.chi when positive, else max_link^2.
Index effective_chi(const TensorGrid &grid, const BoundaryContractionConfig &cfg);

class GridContraction {
  public:
    GridContraction(TensorGrid grid, const BoundaryContractionConfig &cfg);

    [[nodiscard]] const TensorGrid &grid() const { return grid_; }
    [[nodiscard]] Index             chi() const { return chi_; }

    /// Replaces one site; cached boundaries depending on it are dropped.
    void set_site(int r, int c, Tensor t);

    /// Value of the closed network.
    cplx value();
    /// Network with site (r, c) removed, shaped like the site (up, down, left, right).
    Tensor environment(int r, int c);

    /// Total squared singular-value weight discarded by boundary truncations so far.
    [[nodiscard]] double discarded() const { return discarded_; }

  private:
    const Sites &top(int r);
    const Sites &bottom(int r);
    void         prepare_row(int r);

    TensorGrid         grid_;
    Index              chi_    = 1;
    double             cutoff_ = 1e-14;
    std::vector<Sites> top_;    // top_[r]: rows < r, physical legs = up legs of row r
    std::vector<Sites> bottom_; // bottom_[r]: rows > r, physical legs = down legs of row r
    int                top_valid_    = 0; // top_[k] valid for k <= top_valid_
    int                bottom_valid_ = 0; // bottom_[k] valid for k >= bottom_valid_
    int                row_          = -1;
    std::vector<Tensor> left_, right_;    // row environments (top bond, row bond, bottom bond)
    int                left_valid_  = 0;  // left_[k] valid for k <= left_valid_
    int                right_valid_ = 0;  // right_[k] valid for k >= right_valid_
    double             discarded_   = 0.0;
};

/// One-shot contraction of the grid value.
cplx contract_grid(const TensorGrid &grid, const BoundaryContractionConfig &cfg);

/// Relative disagreement |v_rows - v_cols| / max(|v_rows|, |v_cols|) between contracting along rows and
/// along columns.
double contraction_self_consistency(const TensorGrid &grid, const BoundaryContractionConfig &cfg);

} // namespace qem
