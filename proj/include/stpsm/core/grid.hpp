#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stpsm/core/errors.hpp"

namespace stpsm {

/// Dense subjects-by-timepoints container, stored subject-major.
template <typename T>
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(int rows, int cols) : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows) * cols) {
    if (rows < 0 || cols < 0) throw InvalidArgument("negative grid extent");
  }
  Grid2D(int rows, int cols, const T& fill)
      : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw InvalidArgument("negative grid extent");
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }

  T& at(int n, int t) { return cells_[checked_index(n, t)]; }
  const T& at(int n, int t) const { return cells_[checked_index(n, t)]; }

  T& operator()(int n, int t) { return cells_[static_cast<std::size_t>(n) * cols_ + t]; }
  const T& operator()(int n, int t) const { return cells_[static_cast<std::size_t>(n) * cols_ + t]; }

  std::size_t flat_index(int n, int t) const { return checked_index(n, t); }

  auto begin() noexcept { return cells_.begin(); }
  auto end() noexcept { return cells_.end(); }
  auto begin() const noexcept { return cells_.begin(); }
  auto end() const noexcept { return cells_.end(); }

  std::vector<T>& cells() noexcept { return cells_; }
  const std::vector<T>& cells() const noexcept { return cells_; }

 private:
  std::size_t checked_index(int n, int t) const {
    if (n < 0 || n >= rows_ || t < 0 || t >= cols_)
      throw IndexOutOfRange("cell (" + std::to_string(n) + ", " + std::to_string(t) + ") outside " +
                            std::to_string(rows_) + "x" + std::to_string(cols_) + " grid");
    return static_cast<std::size_t>(n) * cols_ + t;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> cells_;
};

}  // namespace stpsm
