#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace ambitlab::detail {

/// In-place complex FFT of fixed shape. Plans are created under a global lock;
/// executing an existing plan on caller-owned buffers is thread-safe.
class FftPlan {
public:
  explicit FftPlan(std::vector<int> dims);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  /// X_k = sum_j x_j exp(-2 pi i jk/N), unnormalized.
  void forward(std::complex<double>* data) const;
  /// x_j = sum_k X_k exp(+2 pi i jk/N), unnormalized.
  void backward(std::complex<double>* data) const;

  std::size_t size() const { return size_; }
  const std::vector<int>& dims() const { return dims_; }

private:
  std::vector<int> dims_;
  std::size_t size_ = 0;
  void* forward_ = nullptr;
  void* backward_ = nullptr;
};

/// Plan cache keyed by shape.
std::shared_ptr<const FftPlan> shared_plan(const std::vector<int>& dims);

}  // namespace ambitlab::detail
