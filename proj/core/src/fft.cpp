#include "fft.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace ambitlab::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FftPlan::FftPlan(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) {
    throw std::invalid_argument("FftPlan: empty shape");
  }
  size_ = 1;
  for (int n : dims_) {
    if (n <= 0) {
      throw std::invalid_argument("FftPlan: nonpositive extent");
    }
    size_ *= static_cast<std::size_t>(n);
  }
  std::lock_guard lock(planner_mutex());
  auto* buf = fftw_alloc_complex(size_);
  if (buf == nullptr) {
    throw std::bad_alloc();
  }
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int rank = static_cast<int>(dims_.size());
  forward_ = fftw_plan_dft(rank, dims_.data(), buf, buf, FFTW_FORWARD, flags);
  backward_ = fftw_plan_dft(rank, dims_.data(), buf, buf, FFTW_BACKWARD, flags);
  fftw_free(buf);
  if (forward_ == nullptr || backward_ == nullptr) {
    throw std::runtime_error("FftPlan: planner failed");
  }
}

FftPlan::~FftPlan() {
  std::lock_guard lock(planner_mutex());
  if (forward_ != nullptr) {
    fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  }
  if (backward_ != nullptr) {
    fftw_destroy_plan(static_cast<fftw_plan>(backward_));
  }
}

void FftPlan::forward(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(forward_), p, p);
}

void FftPlan::backward(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(backward_), p, p);
}

std::shared_ptr<const FftPlan> shared_plan(const std::vector<int>& dims) {
  static std::mutex cache_mutex;
  static std::map<std::vector<int>, std::shared_ptr<const FftPlan>> cache;
  std::lock_guard lock(cache_mutex);
  auto it = cache.find(dims);
  if (it != cache.end()) {
    return it->second;
  }
  auto plan = std::make_shared<const FftPlan>(dims);
  cache.emplace(dims, plan);
  return plan;
}

}  // namespace ambitlab::detail
