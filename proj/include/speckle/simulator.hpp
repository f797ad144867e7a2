#pragma once

#include <cstddef>
#include <functional>

#include "speckle/frame_stack.hpp"
#include "speckle/propagation.hpp"
#include "speckle/run_config.hpp"
#include "speckle/sensor.hpp"

namespace speckle {

/// Frame factory for one RunConfig. Every realization is a pure function of
/// (master_seed, frame_index), so frames can be produced in any order and on
/// any number of threads with identical results. All const members are safe
/// to call concurrently.
class SpeckleSimulator {
 public:
  explicit SpeckleSimulator(const RunConfig& config);

  const RunConfig& config() const noexcept { return config_; }
  const SourcePlane& support() const noexcept { return support_; }
  const FarFieldPropagator& propagator() const noexcept { return propagator_; }
  /// Detector with the resolved gain.
  const DetectorSpec& detector() const noexcept { return detector_; }
  /// Ensemble mean of the recorded intensity (both components when unpolarized).
  double mean_intensity() const noexcept { return mean_intensity_; }

  SeedSpec seed(std::size_t frame_index) const noexcept {
    return {config_.master_seed, frame_index};
  }
  /// Detector field of one realization; `orthogonal` gives the second
  /// polarization component.
  ComplexField field(std::size_t frame_index, bool orthogonal = false) const;
  /// Noise-free intensity as recorded under the configured polarization mode.
  Grid<double> intensity(std::size_t frame_index) const;
  Capture frame(std::size_t frame_index) const;
  StackMeta meta() const;

 private:
  RunConfig config_;
  SourcePlane support_;
  FarFieldPropagator propagator_;
  DetectorSpec detector_;
  double mean_intensity_ = 0.0;
};

/// Resolves 0 to the hardware concurrency (at least 1).
std::size_t resolve_threads(std::size_t requested);

/// Runs body(begin, end) over contiguous chunks of [0, count) on up to
/// `threads` workers. The first exception thrown by a worker is rethrown.
void parallel_chunks(std::size_t count, std::size_t threads,
                     const std::function<void(std::size_t, std::size_t)>& body);

struct SimulationSummary {
  std::size_t saturated_frames = 0;
  std::size_t clipped_pixels = 0;
  std::size_t saturation_warnings = 0;
};

/// config.frames frames; output does not depend on the thread count.
FrameStack simulate_stack(const SpeckleSimulator& simulator, std::size_t threads,
                          SimulationSummary* summary = nullptr);

}  // namespace speckle
