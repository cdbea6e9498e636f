#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace oamspdc {

// Dense (2N+1)x(2N+1) array addressed by OAM indices (l_s, l_i) in [-N, N]^2.
// Storage is row-major with l_s selecting the row.
template <class T>
class ModeArray {
 public:
  ModeArray() = default;
  explicit ModeArray(int n_max, T fill = T{})
      : n_max_(n_max), data_(static_cast<std::size_t>(side(n_max)) * side(n_max), fill) {
    assert(n_max >= 0);
  }

  static constexpr int side(int n_max) noexcept { return 2 * n_max + 1; }

  int n_max() const noexcept { return n_max_; }
  int side() const noexcept { return side(n_max_); }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int l_s, int l_i) noexcept { return data_[offset(l_s, l_i)]; }
  const T& operator()(int l_s, int l_i) const noexcept { return data_[offset(l_s, l_i)]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const ModeArray&, const ModeArray&) = default;

 private:
  std::size_t offset(int l_s, int l_i) const noexcept {
    assert(l_s >= -n_max_ && l_s <= n_max_ && l_i >= -n_max_ && l_i <= n_max_);
    return static_cast<std::size_t>(l_s + n_max_) * static_cast<std::size_t>(side()) +
           static_cast<std::size_t>(l_i + n_max_);
  }

  int n_max_ = 0;
  std::vector<T> data_ = std::vector<T>(1);
};

}  // namespace oamspdc
