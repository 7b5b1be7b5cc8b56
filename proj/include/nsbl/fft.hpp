#pragma once

#include <memory>

#include "nsbl/fields.hpp"

namespace nsbl {

/// FFTW-backed real<->half-spectrum transforms for one grid size. Owns its
/// aligned buffers and plans; not shareable between threads, but any number
/// of engines may run concurrently (planning is serialized internally).
class FftEngine {
 public:
  explicit FftEngine(const TorusGrid& g);
  ~FftEngine();
  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;

  const TorusGrid& grid() const { return grid_; }

  /// Forward transform scaled by 1/n^3.
  void forward(const RealArray& in, SpectralArray& out);
  /// Unscaled inverse; inverse(forward(f)) == f.
  void inverse(const SpectralArray& in, RealArray& out);

 private:
  struct Impl;
  TorusGrid grid_;
  std::unique_ptr<Impl> impl_;
};

/// Per-thread engine cache keyed by grid size.
FftEngine& fft_for(const TorusGrid& g);

}  // namespace nsbl
