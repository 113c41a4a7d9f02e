#include "qem/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qem {

Index product(const std::vector<Index> &dims, size_t begin, size_t end) {
    end     = std::min(end, dims.size());
    Index p = 1;
    for(size_t i = begin; i < end; ++i) p *= dims[i];
    return p;
}

Tensor::Tensor(std::vector<Index> dims) : dims_(std::move(dims)), data_(static_cast<size_t>(product(dims_)), cplx{0.0}) {}

Tensor::Tensor(std::vector<Index> dims, std::vector<cplx> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if(static_cast<Index>(data_.size()) != product(dims_)) throw std::invalid_argument("Tensor: data size does not match dims");
}

Index Tensor::offset(std::initializer_list<Index> idx) const {
    Index off  = 0;
    size_t axis = 0;
    for(auto i : idx) off = off * dims_[axis++] + i;
    return off;
}

Tensor Tensor::reshaped(std::vector<Index> dims) const & {
    Tensor t = *this;
    return std::move(t).reshaped(std::move(dims));
}

Tensor Tensor::reshaped(std::vector<Index> dims) && {
    if(product(dims) != size()) throw std::invalid_argument("Tensor::reshaped: element count mismatch");
    dims_ = std::move(dims);
    return std::move(*this);
}

Eigen::Map<RowMat> Tensor::matrix(int split) {
    auto s = static_cast<size_t>(split);
    return {data_.data(), product(dims_, 0, s), product(dims_, s)};
}

Eigen::Map<const RowMat> Tensor::matrix(int split) const {
    auto s = static_cast<size_t>(split);
    return {data_.data(), product(dims_, 0, s), product(dims_, s)};
}

Tensor Tensor::conj() const {
    Tensor t = *this;
    for(auto &x : t.data_) x = std::conj(x);
    return t;
}

double Tensor::norm() const {
    double s = 0;
    for(const auto &x : data_) s += std::norm(x);
    return std::sqrt(s);
}

Tensor &Tensor::operator*=(cplx s) {
    for(auto &x : data_) x *= s;
    return *this;
}

Tensor &Tensor::operator+=(const Tensor &other) {
    if(other.dims_ != dims_) throw std::invalid_argument("Tensor::operator+=: shape mismatch");
    for(size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor Tensor::from_matrix(const Eigen::Ref<const Mat> &m, std::vector<Index> dims) {
    Tensor t(std::move(dims));
    if(t.size() != m.size()) throw std::invalid_argument("Tensor::from_matrix: element count mismatch");
    Eigen::Map<RowMat>(t.data(), m.rows(), m.cols()) = m;
    return t;
}

Tensor permute(const Tensor &t, const std::vector<int> &perm) {
    const int r = t.rank();
    if(static_cast<int>(perm.size()) != r) throw std::invalid_argument("permute: rank mismatch");
    bool identity = true;
    for(int i = 0; i < r; ++i) identity = identity && perm[static_cast<size_t>(i)] == i;
    if(identity) return t;

    std::vector<Index> src_stride(static_cast<size_t>(r), 1);
    for(int i = r - 2; i >= 0; --i) src_stride[static_cast<size_t>(i)] = src_stride[static_cast<size_t>(i + 1)] * t.dim(i + 1);

    std::vector<Index> dims(static_cast<size_t>(r)), stride(static_cast<size_t>(r));
    for(size_t i = 0; i < static_cast<size_t>(r); ++i) {
        dims[i]   = t.dim(perm[i]);
        stride[i] = src_stride[static_cast<size_t>(perm[i])];
    }
    Tensor out(dims);
    if(out.size() == 0) return out;

    const Index inner_dim    = dims.back();
    const Index inner_stride = stride.back();
    std::vector<Index> counter(static_cast<size_t>(r), 0);
    const cplx *src = t.data();
    cplx       *dst = out.data();
    Index       base = 0;
    const Index outer = out.size() / inner_dim;
    for(Index o = 0; o < outer; ++o) {
        for(Index i = 0; i < inner_dim; ++i) *dst++ = src[base + i * inner_stride];
        // advance the multi-index over all but the last axis
        for(int ax = r - 2; ax >= 0; --ax) {
            auto a = static_cast<size_t>(ax);
            base += stride[a];
            if(++counter[a] < dims[a]) break;
            base -= stride[a] * dims[a];
            counter[a] = 0;
        }
    }
    return out;
}

Tensor contract(const Tensor &a, const std::vector<int> &axes_a, const Tensor &b, const std::vector<int> &axes_b) {
    if(axes_a.size() != axes_b.size()) throw std::invalid_argument("contract: axis count mismatch");
    std::vector<bool> used_a(static_cast<size_t>(a.rank()), false), used_b(static_cast<size_t>(b.rank()), false);
    Index             k = 1;
    for(size_t i = 0; i < axes_a.size(); ++i) {
        if(a.dim(axes_a[i]) != b.dim(axes_b[i]))
            throw std::invalid_argument("contract: dimension mismatch on axis pair " + std::to_string(i));
        used_a[static_cast<size_t>(axes_a[i])] = true;
        used_b[static_cast<size_t>(axes_b[i])] = true;
        k *= a.dim(axes_a[i]);
    }
    std::vector<int>   pa, pb;
    std::vector<Index> out_dims;
    for(int i = 0; i < a.rank(); ++i)
        if(!used_a[static_cast<size_t>(i)]) {
            pa.push_back(i);
            out_dims.push_back(a.dim(i));
        }
    pa.insert(pa.end(), axes_a.begin(), axes_a.end());
    pb = axes_b;
    for(int i = 0; i < b.rank(); ++i)
        if(!used_b[static_cast<size_t>(i)]) {
            pb.push_back(i);
            out_dims.push_back(b.dim(i));
        }

    const Tensor ap = permute(a, pa);
    const Tensor bp = permute(b, pb);
    const Index  m  = ap.size() / std::max<Index>(k, 1);
    const Index  n  = bp.size() / std::max<Index>(k, 1);
    Tensor       out(out_dims);
    if(k == 0) return out;
    Eigen::Map<const RowMat> am(ap.data(), m, k);
    Eigen::Map<const RowMat> bm(bp.data(), k, n);
    Eigen::Map<RowMat>       om(out.data(), m, n);
    om.noalias() = am * bm;
    return out;
}

Tensor einsum(const Tensor &a, const std::vector<int> &la, const Tensor &b, const std::vector<int> &lb,
              const std::vector<int> &out) {
    if(static_cast<int>(la.size()) != a.rank() || static_cast<int>(lb.size()) != b.rank())
        throw std::invalid_argument("einsum: label count does not match rank");
    std::vector<int> ax_a, ax_b, free_labels;
    for(size_t i = 0; i < la.size(); ++i) {
        auto it = std::find(lb.begin(), lb.end(), la[i]);
        if(it != lb.end()) {
            ax_a.push_back(static_cast<int>(i));
            ax_b.push_back(static_cast<int>(it - lb.begin()));
        } else {
            free_labels.push_back(la[i]);
        }
    }
    for(int l : lb)
        if(std::find(la.begin(), la.end(), l) == la.end()) free_labels.push_back(l);
    if(free_labels.size() != out.size()) throw std::invalid_argument("einsum: output labels do not match free labels");
    Tensor           c = contract(a, ax_a, b, ax_b);
    std::vector<int> perm;
    for(int l : out) {
        auto it = std::find(free_labels.begin(), free_labels.end(), l);
        if(it == free_labels.end()) throw std::invalid_argument("einsum: unknown output label");
        perm.push_back(static_cast<int>(it - free_labels.begin()));
    }
    return permute(c, perm);
}

Tensor fuse(const Tensor &t, const std::vector<int> &groups) {
    std::vector<Index> dims;
    size_t             axis = 0;
    for(int g : groups) {
        Index d = 1;
        for(int i = 0; i < g; ++i) d *= t.dim(static_cast<int>(axis++));
        dims.push_back(d);
    }
    if(static_cast<int>(axis) != t.rank()) throw std::invalid_argument("fuse: groups do not cover all axes");
    return t.reshaped(std::move(dims));
}

} // namespace qem
