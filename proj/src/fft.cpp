#include "nsbl/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>

namespace nsbl {

namespace {
// the FFTW planner is not reentrant
std::mutex planner_mutex;
}  // namespace

struct FftEngine::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

FftEngine::FftEngine(const TorusGrid& g) : grid_(g), impl_(std::make_unique<Impl>()) {
  g.validate();
  std::lock_guard lock(planner_mutex);
  impl_->real = fftw_alloc_real(g.real_size());
  impl_->spec = fftw_alloc_complex(g.spec_size());
  // ESTIMATE keeps plans (and hence results) independent of timing noise
  impl_->r2c = fftw_plan_dft_r2c_3d(g.n, g.n, g.n, impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->c2r = fftw_plan_dft_c2r_3d(g.n, g.n, g.n, impl_->spec, impl_->real, FFTW_ESTIMATE);
}

FftEngine::~FftEngine() {
  std::lock_guard lock(planner_mutex);
  fftw_destroy_plan(impl_->r2c);
  fftw_destroy_plan(impl_->c2r);
  fftw_free(impl_->real);
  fftw_free(impl_->spec);
}

void FftEngine::forward(const RealArray& in, SpectralArray& out) {
  if (std::size_t(in.size()) != grid_.real_size()) throw ShapeMismatch("real data does not match grid");
  std::memcpy(impl_->real, in.data(), sizeof(double) * grid_.real_size());
  fftw_execute(impl_->r2c);
  out.resize(Eigen::Index(grid_.spec_size()));
  const double s = 1.0 / double(grid_.real_size());
  for (std::size_t i = 0; i < grid_.spec_size(); ++i)
    out[Eigen::Index(i)] = Complex(impl_->spec[i][0] * s, impl_->spec[i][1] * s);
}

void FftEngine::inverse(const SpectralArray& in, RealArray& out) {
  if (std::size_t(in.size()) != grid_.spec_size()) throw ShapeMismatch("spectral data does not match grid");
  // c2r overwrites its input, so always go through the owned buffer
  std::memcpy(impl_->spec, in.data(), sizeof(fftw_complex) * grid_.spec_size());
  fftw_execute(impl_->c2r);
  out.resize(Eigen::Index(grid_.real_size()));
  std::memcpy(out.data(), impl_->real, sizeof(double) * grid_.real_size());
}

FftEngine& fft_for(const TorusGrid& g) {
  thread_local std::map<int, std::unique_ptr<FftEngine>> cache;
  auto& slot = cache[g.n];
  if (!slot) slot = std::make_unique<FftEngine>(TorusGrid(g.n, g.L, g.N));
  return *slot;
}

}  // namespace nsbl
