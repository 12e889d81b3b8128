#pragma once

#include <Eigen/Core>

#include <string>

#include "pnpunmix/error.hpp"

namespace pnpunmix {

using Index = Eigen::Index;

namespace detail {
inline std::string shapeString(Index a, Index b, Index c) {
  return std::to_string(a) + "x" + std::to_string(b) + "x" + std::to_string(c);
}
}  // namespace detail

/// Hyperspectral volume of `bands` planes, each `rows` x `cols`.
///
/// Storage is band-major; inside a band the spatial plane is column-major,
/// so element (b, m, k) sits at b * rows * cols + k * rows + m and each band
/// is one contiguous Eigen-compatible plane.
template <typename Scalar>
class BasicHsiCube {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicHsiCube() = default;

  BasicHsiCube(Index bands, Index rows, Index cols)
      : bands_(bands), rows_(rows), cols_(cols),
        data_(Vector::Zero(checkedSize(bands, rows, cols))) {}

  BasicHsiCube(Index bands, Index rows, Index cols, Vector data)
      : bands_(bands), rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checkedSize(bands, rows, cols)) {
      throw ShapeError("cube data length " + std::to_string(data_.size()) +
                       " does not match " +
                       detail::shapeString(bands, rows, cols));
    }
    if (!data_.allFinite()) {
      throw ComputeError("cube data contains non-finite values");
    }
  }

  Index bands() const { return bands_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index pixels() const { return rows_ * cols_; }
  Index size() const { return data_.size(); }

  Scalar operator()(Index b, Index m, Index k) const {
    return data_[b * pixels() + k * rows_ + m];
  }
  Scalar& operator()(Index b, Index m, Index k) {
    return data_[b * pixels() + k * rows_ + m];
  }

  Eigen::Map<const Plane> band(Index b) const {
    return Eigen::Map<const Plane>(data_.data() + b * pixels(), rows_, cols_);
  }
  Eigen::Map<Plane> band(Index b) {
    return Eigen::Map<Plane>(data_.data() + b * pixels(), rows_, cols_);
  }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  bool allFinite() const { return data_.allFinite(); }

  template <typename Other>
  BasicHsiCube<Other> cast() const {
    return BasicHsiCube<Other>(bands_, rows_, cols_,
                               data_.template cast<Other>());
  }

  bool sameShape(const BasicHsiCube& other) const {
    return bands_ == other.bands_ && rows_ == other.rows_ &&
           cols_ == other.cols_;
  }

  friend bool operator==(const BasicHsiCube& a, const BasicHsiCube& b) {
    return a.sameShape(b) && a.data_ == b.data_;
  }

  std::string shapeString() const {
    return detail::shapeString(bands_, rows_, cols_);
  }

 private:
  static Index checkedSize(Index bands, Index rows, Index cols) {
    if (bands < 1 || rows < 1 || cols < 1) {
      throw ShapeError("cube dimensions must be positive, got " +
                       detail::shapeString(bands, rows, cols));
    }
    return bands * rows * cols;
  }

  Index bands_ = 0;
  Index rows_ = 0;
  Index cols_ = 0;
  Vector data_;
};

/// Channels x pixels matrix, one column per pixel. Pixel n corresponds to
/// spatial position (m, k) with n = k * spatialRows + m.
template <typename Scalar>
struct BasicPixelMatrix {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix values;
  Index spatialRows = 0;
  Index spatialCols = 0;

  BasicPixelMatrix() = default;

  BasicPixelMatrix(Matrix v, Index rows, Index cols)
      : values(std::move(v)), spatialRows(rows), spatialCols(cols) {
    if (rows < 1 || cols < 1 || values.cols() != rows * cols ||
        values.rows() < 1) {
      throw ShapeError("pixel matrix with " + std::to_string(values.cols()) +
                       " columns cannot cover a " + std::to_string(rows) +
                       "x" + std::to_string(cols) + " grid");
    }
  }

  Index channels() const { return values.rows(); }
  Index pixels() const { return values.cols(); }

  bool sameShape(const BasicPixelMatrix& other) const {
    return values.rows() == other.values.rows() &&
           values.cols() == other.values.cols() &&
           spatialRows == other.spatialRows && spatialCols == other.spatialCols;
  }

  std::string shapeString() const {
    return detail::shapeString(channels(), spatialRows, spatialCols);
  }

  friend bool operator==(const BasicPixelMatrix& a, const BasicPixelMatrix& b) {
    return a.sameShape(b) && a.values == b.values;
  }
};

using HsiCube = BasicHsiCube<double>;
using PixelMatrix = BasicPixelMatrix<double>;

/// Reshape a channels x pixels matrix into a cube. Lossless.
template <typename Scalar>
BasicHsiCube<Scalar> fold(const BasicPixelMatrix<Scalar>& matrix) {
  using Matrix = typename BasicPixelMatrix<Scalar>::Matrix;
  if (matrix.values.cols() != matrix.spatialRows * matrix.spatialCols ||
      matrix.values.cols() == 0) {
    throw ShapeError("fold: " + std::to_string(matrix.values.cols()) +
                     " pixels do not form a " +
                     std::to_string(matrix.spatialRows) + "x" +
                     std::to_string(matrix.spatialCols) + " grid");
  }
  BasicHsiCube<Scalar> cube(matrix.channels(), matrix.spatialRows,
                            matrix.spatialCols);
  // Band-major storage of the cube is the column-major storage of the
  // pixels x channels transpose.
  Eigen::Map<Matrix>(cube.data().data(), matrix.pixels(), matrix.channels()) =
      matrix.values.transpose();
  return cube;
}

/// Inverse of fold.
template <typename Scalar>
BasicPixelMatrix<Scalar> unfold(const BasicHsiCube<Scalar>& cube) {
  using Matrix = typename BasicPixelMatrix<Scalar>::Matrix;
  Matrix values = Eigen::Map<const Matrix>(cube.data().data(), cube.pixels(),
                                           cube.bands())
                      .transpose();
  return BasicPixelMatrix<Scalar>(std::move(values), cube.rows(), cube.cols());
}

/// Pixel index of spatial position (m, k) in a grid with `rows` rows.
constexpr Index pixelIndex(Index m, Index k, Index rows) { return k * rows + m; }

}  // namespace pnpunmix
