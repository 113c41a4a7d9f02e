#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace qem {

using cplx   = std::complex<double>;
using Index  = Eigen::Index;
using Mat    = Eigen::MatrixXcd;
using Vec    = Eigen::VectorXcd;
using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense complex tensor with row-major storage (last index fastest).
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<Index> dims);
    Tensor(std::vector<Index> dims, std::vector<cplx> data);

    [[nodiscard]] int                       rank() const { return static_cast<int>(dims_.size()); }
    [[nodiscard]] Index                     dim(int axis) const { return dims_[static_cast<size_t>(axis)]; }
    [[nodiscard]] const std::vector<Index> &dims() const { return dims_; }
    [[nodiscard]] Index                     size() const { return static_cast<Index>(data_.size()); }
    [[nodiscard]] bool                      empty() const { return data_.empty(); }

    cplx                                  *data() { return data_.data(); }
    [[nodiscard]] const cplx              *data() const { return data_.data(); }
    [[nodiscard]] const std::vector<cplx> &storage() const { return data_; }

    cplx       &operator[](Index flat) { return data_[static_cast<size_t>(flat)]; }
    const cplx &operator[](Index flat) const { return data_[static_cast<size_t>(flat)]; }

    template<typename... I>
    cplx &operator()(I... idx) {
        return data_[static_cast<size_t>(offset({static_cast<Index>(idx)...}))];
    }
    template<typename... I>
    const cplx &operator()(I... idx) const {
        return data_[static_cast<size_t>(offset({static_cast<Index>(idx)...}))];
    }

    [[nodiscard]] Index offset(std::initializer_list<Index> idx) const;

    /// Same data under new dimensions; the element count must match.
    [[nodiscard]] Tensor reshaped(std::vector<Index> dims) const &;
    [[nodiscard]] Tensor reshaped(std::vector<Index> dims) &&;

    /// Row-major matrix view grouping axes [0, split) into rows.
    Eigen::Map<RowMat>                     matrix(int split);
    [[nodiscard]] Eigen::Map<const RowMat> matrix(int split) const;

    [[nodiscard]] Tensor conj() const;
    [[nodiscard]] double norm() const;
    Tensor              &operator*=(cplx s);
    Tensor              &operator+=(const Tensor &other);

    static Tensor from_matrix(const Eigen::Ref<const Mat> &m, std::vector<Index> dims);

  private:
    std::vector<Index> dims_;
    std::vector<cplx>  data_;
};

Index product(const std::vector<Index> &dims, size_t begin = 0, size_t end = static_cast<size_t>(-1));

/// Axis permutation: result.dim(i) == t.dim(perm[i]).
Tensor permute(const Tensor &t, const std::vector<int> &perm);

/// Sums over the paired axes; result holds the free axes of `a` (in order) followed by those of `b`.
Tensor contract(const Tensor &a, const std::vector<int> &axes_a, const Tensor &b, const std::vector<int> &axes_b);

/// Label-based contraction. Labels shared by `a` and `b` are summed; `out` lists the result order and
/// must name every unshared label exactly once.
Tensor einsum(const Tensor &a, const std::vector<int> &la, const Tensor &b, const std::vector<int> &lb,
              const std::vector<int> &out);

/// Fuses consecutive axes. `groups` gives the number of axes in each output axis.
Tensor fuse(const Tensor &t, const std::vector<int> &groups);

} // namespace qem
