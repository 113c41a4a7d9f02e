#include "qem/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qem {

namespace {

Tensor ones3() { return Tensor({1, 1, 1}, {cplx(1.0)}); }

Sites trivial_boundary(const TensorGrid &g, int r, bool up) {
    Sites out;
    for(int c = 0; c < g.cols; ++c) {
        const Index p = g.at(r, c).dim(up ? 0 : 1);
        if(p != 1) throw std::logic_error("grid: open boundary leg");
        out.push_back(ones3());
    }
    return out;
}

// (a, u, a') x (u, d, l, r) -> (a l, d, a' r)
Tensor absorb_down(const Tensor &b, const Tensor &t) {
    Tensor x = einsum(b, {0, 1, 2}, t, {1, 3, 4, 5}, {0, 4, 3, 2, 5});
    return x.reshaped({b.dim(0) * t.dim(2), t.dim(1), b.dim(2) * t.dim(3)});
}

// (c, d, c') x (u, d, l, r) -> (c l, u, c' r)
Tensor absorb_up(const Tensor &b, const Tensor &t) {
    Tensor x = einsum(b, {0, 1, 2}, t, {3, 1, 4, 5}, {0, 4, 3, 2, 5});
    return x.reshaped({b.dim(0) * t.dim(2), t.dim(0), b.dim(2) * t.dim(3)});
}

} // namespace

TensorGrid::TensorGrid(int r, int c) : rows(r), cols(c), sites(static_cast<size_t>(r * c)) {
    if(r < 1 || c < 1) throw std::invalid_argument("TensorGrid: empty grid");
}

Index TensorGrid::max_link() const {
    Index m = 1;
    for(const auto &t : sites)
        for(Index d : t.dims()) m = std::max(m, d);
    return m;
}

TensorGrid TensorGrid::transposed() const {
    TensorGrid g(cols, rows);
    for(int r = 0; r < rows; ++r)
        for(int c = 0; c < cols; ++c) g.at(c, r) = permute(at(r, c), {2, 3, 0, 1});
    return g;
}

void TensorGrid::validate() const {
    if(static_cast<int>(sites.size()) != rows * cols) throw std::invalid_argument("TensorGrid: wrong site count");
    for(int r = 0; r < rows; ++r)
        for(int c = 0; c < cols; ++c) {
            const Tensor &t = at(r, c);
            if(t.rank() != 4) throw std::invalid_argument("TensorGrid: sites must be rank 4");
            if(r == 0 && t.dim(0) != 1) throw std::invalid_argument("TensorGrid: top boundary leg must be 1");
            if(r == rows - 1 && t.dim(1) != 1) throw std::invalid_argument("TensorGrid: bottom boundary leg must be 1");
            if(c == 0 && t.dim(2) != 1) throw std::invalid_argument("TensorGrid: left boundary leg must be 1");
            if(c == cols - 1 && t.dim(3) != 1) throw std::invalid_argument("TensorGrid: right boundary leg must be 1");
            if(r + 1 < rows && t.dim(1) != at(r + 1, c).dim(0)) throw std::invalid_argument("TensorGrid: vertical leg mismatch");
            if(c + 1 < cols && t.dim(3) != at(r, c + 1).dim(2)) throw std::invalid_argument("TensorGrid: horizontal leg mismatch");
        }
}

Index effective_chi(const TensorGrid &grid, const BoundaryContractionConfig &cfg) {
    if(cfg.chi > 0) return cfg.chi;
    const Index d = grid.max_link();
    return d * d;
}

GridContraction::GridContraction(TensorGrid grid, const BoundaryContractionConfig &cfg)
    : grid_(std::move(grid)), chi_(effective_chi(grid_, cfg)), cutoff_(cfg.cutoff) {
    grid_.validate();
    top_.resize(static_cast<size_t>(grid_.rows));
    bottom_.resize(static_cast<size_t>(grid_.rows));
    top_[0]                            = trivial_boundary(grid_, 0, true);
    bottom_.back()                     = trivial_boundary(grid_, grid_.rows - 1, false);
    top_valid_                         = 0;
    bottom_valid_                      = grid_.rows - 1;
}

void GridContraction::set_site(int r, int c, Tensor t) {
    const Tensor &old = grid_.at(r, c);
    if(t.dims() != old.dims()) throw std::invalid_argument("GridContraction::set_site: shape change");
    grid_.at(r, c) = std::move(t);
    top_valid_     = std::min(top_valid_, r);
    bottom_valid_  = std::max(bottom_valid_, r);
    if(r != row_) {
        row_ = -1;
    } else {
        left_valid_  = std::min(left_valid_, c);
        right_valid_ = std::max(right_valid_, c + 1);
    }
}

const Sites &GridContraction::top(int r) {
    while(top_valid_ < r) {
        const int    k    = top_valid_;
        const Sites &prev = top_[static_cast<size_t>(k)];
        Sites        next;
        const auto   rep = chain::zip_up(
            next, static_cast<size_t>(grid_.cols),
            [&](size_t c) { return absorb_down(prev[c], grid_.at(k, static_cast<int>(c))); }, chi_, cutoff_);
        discarded_ += rep.total();
        top_[static_cast<size_t>(k + 1)] = std::move(next);
        ++top_valid_;
    }
    return top_[static_cast<size_t>(r)];
}

const Sites &GridContraction::bottom(int r) {
    while(bottom_valid_ > r) {
        const int    k    = bottom_valid_;
        const Sites &prev = bottom_[static_cast<size_t>(k)];
        Sites        next;
        const auto   rep = chain::zip_up(
            next, static_cast<size_t>(grid_.cols),
            [&](size_t c) { return absorb_up(prev[c], grid_.at(k, static_cast<int>(c))); }, chi_, cutoff_);
        discarded_ += rep.total();
        bottom_[static_cast<size_t>(k - 1)] = std::move(next);
        --bottom_valid_;
    }
    return bottom_[static_cast<size_t>(r)];
}

void GridContraction::prepare_row(int r) {
    if(r == row_) return;
    top(r);
    bottom(r);
    row_ = r;
    left_.assign(static_cast<size_t>(grid_.cols + 1), Tensor());
    right_.assign(static_cast<size_t>(grid_.cols + 1), Tensor());
    left_[0]                                 = ones3();
    right_[static_cast<size_t>(grid_.cols)] = ones3();
    left_valid_                              = 0;
    right_valid_                             = grid_.cols;
}

Tensor GridContraction::environment(int r, int c) {
    if(r < 0 || r >= grid_.rows || c < 0 || c >= grid_.cols) throw std::out_of_range("GridContraction::environment");
    prepare_row(r);
    const Sites &tp = top_[static_cast<size_t>(r)];
    const Sites &bt = bottom_[static_cast<size_t>(r)];
    while(left_valid_ < c) {
        const int k  = left_valid_;
        Tensor    x1 = einsum(left_[static_cast<size_t>(k)], {0, 1, 2}, tp[static_cast<size_t>(k)], {0, 3, 4}, {1, 2, 3, 4});
        Tensor    x2 = einsum(x1, {1, 2, 3, 4}, grid_.at(r, k), {3, 5, 1, 6}, {2, 4, 5, 6});
        left_[static_cast<size_t>(k + 1)] = einsum(x2, {2, 4, 5, 6}, bt[static_cast<size_t>(k)], {2, 5, 7}, {4, 6, 7});
        ++left_valid_;
    }
    while(right_valid_ > c + 1) {
        const int k  = right_valid_ - 1;
        Tensor    x1 = einsum(tp[static_cast<size_t>(k)], {0, 1, 2}, right_[static_cast<size_t>(k + 1)], {2, 3, 4}, {0, 1, 3, 4});
        Tensor    x2 = einsum(x1, {0, 1, 3, 4}, grid_.at(r, k), {1, 5, 6, 3}, {0, 6, 4, 5});
        right_[static_cast<size_t>(k)] = einsum(x2, {0, 6, 4, 5}, bt[static_cast<size_t>(k)], {7, 5, 4}, {0, 6, 7});
        --right_valid_;
    }
    const Tensor &l  = left_[static_cast<size_t>(c)];
    const Tensor &rt = right_[static_cast<size_t>(c + 1)];
    Tensor        y1 = einsum(l, {0, 1, 2}, tp[static_cast<size_t>(c)], {0, 3, 4}, {1, 2, 3, 4});
    Tensor        y2 = einsum(y1, {1, 2, 3, 4}, rt, {4, 5, 6}, {1, 2, 3, 5, 6});
    return einsum(y2, {1, 2, 3, 5, 6}, bt[static_cast<size_t>(c)], {2, 7, 6}, {3, 7, 1, 5});
}

cplx GridContraction::value() {
    const int    r   = row_ >= 0 ? row_ : 0;
    const Tensor env = environment(r, 0);
    const Tensor &t  = grid_.at(r, 0);
    cplx          v  = 0.0;
    for(Index i = 0; i < t.size(); ++i) v += env[i] * t[i];
    return v;
}

cplx contract_grid(const TensorGrid &grid, const BoundaryContractionConfig &cfg) {
    GridContraction gc(grid, cfg);
    return gc.value();
}

double contraction_self_consistency(const TensorGrid &grid, const BoundaryContractionConfig &cfg) {
    const cplx   a = contract_grid(grid, cfg);
    const cplx   b = contract_grid(grid.transposed(), cfg);
    const double m = std::max(std::abs(a), std::abs(b));
    return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

} // namespace qem
