#pragma once

// Algorithms shared by every open-boundary matrix-product chain. A site tensor is shaped
// (left, physical..., right); the physical axes are treated as one grouped index.

#include "qem/tensor.hpp"

#include <functional>
#include <vector>

namespace qem {

using Sites = std::vector<Tensor>;

struct TruncationReport {
    std::vector<double> discarded; // squared singular values dropped at bond j (between site j and j+1)
    [[nodiscard]] double total() const;
};

namespace chain {

Index left_dim(const Tensor &site);
Index right_dim(const Tensor &site);
Index phys_dim(const Tensor &site);

/// QR/LQ sweeps leaving sites left of `center` left-isometric and right of it right-isometric.
void canonicalize(Sites &sites, int center);

/// Single gauge steps: QR moves the center from j to j+1, LQ from j to j-1.
void move_center_right(Sites &sites, size_t j);
void move_center_left(Sites &sites, size_t j);

/// Right-to-left SVD sweep on a chain that is already left-canonical (center at the last site).
/// Leaves the chain right-canonical with the center on site 0.
TruncationReport truncate_left_canonical(Sites &sites, Index max_bond, double cutoff);

/// Mixed-canonical SVD truncation; `max_bond <= 0` means unbounded.
TruncationReport truncate(Sites &sites, Index max_bond, double cutoff);

/// Zip-up construction: `site_at(j)` returns the uncompressed j-th site of a product chain. Each
/// site is absorbed into the running left factor and QR-split as it is produced, then the chain is
/// compressed with a right-to-left SVD sweep.
TruncationReport zip_up(Sites &out, size_t n_sites, const std::function<Tensor(size_t)> &site_at, Index max_bond,
                        double cutoff);

/// sum over all physical indices of a * conj(b).
cplx overlap(const Sites &a, const Sites &b);

/// Sites of a - b (bonds add). Both chains must share physical shapes.
Sites difference(const Sites &a, const Sites &b);

/// ||a - b||^2 evaluated on the left-canonicalized difference chain, which avoids the cancellation
/// of the inner-product expansion when the distance is small.
double distance_sq(const Sites &a, const Sites &b);

/// Isometry residual of site j: || Q^dagger Q - 1 ||_F for the left (left == true) or right grouping.
double isometry_residual(const Tensor &site, bool left);

} // namespace chain
} // namespace qem
