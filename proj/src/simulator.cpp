#include "speckle/simulator.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "speckle/error.hpp"

namespace speckle {

namespace {

DetectorSpec resolved_detector(const RunConfig& config, double mean_intensity) {
  DetectorSpec d = config.detector;
  d.gain = config.gain ? *config.gain : auto_gain(config.target_mean_gray, mean_intensity);
  return d;
}

double recorded_mean(const RunConfig& config, const SourcePlane& support) {
  const double single = expected_mean_intensity(support.subsource_count_active, support.pitch,
                                                config.fiber.wavelength, config.detector.distance_z);
  return config.polarization == PolarizationMode::UnpolarizedSum ? 2.0 * single : single;
}

}  // namespace

SpeckleSimulator::SpeckleSimulator(const RunConfig& config)
    : config_((validate(config), config)),
      support_(build_support(config.geometry, config.fiber)),
      propagator_(support_, config.detector, config.far_field),
      mean_intensity_(recorded_mean(config, support_)) {
  detector_ = resolved_detector(config_, mean_intensity_);
}

ComplexField SpeckleSimulator::field(std::size_t frame_index, bool orthogonal) const {
  SourcePlane plane = support_;
  randomize_phases_inplace(plane, seed(frame_index), orthogonal);
  return propagator_.propagate(plane);
}

Grid<double> SpeckleSimulator::intensity(std::size_t frame_index) const {
  const ComplexField first = field(frame_index);
  if (config_.polarization == PolarizationMode::SinglePol) {
    return polarized_intensity(first, nullptr, PolarizationMode::SinglePol);
  }
  const ComplexField second = field(frame_index, true);
  return polarized_intensity(first, &second, PolarizationMode::UnpolarizedSum);
}

Capture SpeckleSimulator::frame(std::size_t frame_index) const {
  return capture(intensity(frame_index), detector_, config_.noise, seed(frame_index));
}

StackMeta SpeckleSimulator::meta() const {
  StackMeta m;
  m.fiber = config_.fiber;
  m.geometry = config_.geometry;
  m.geometry.lattice_pitch = support_.pitch;
  m.detector = detector_;
  m.noise = config_.noise;
  m.polarization = config_.polarization;
  m.master_seed = config_.master_seed;
  m.created_utc = config_.created_utc;
  m.frame_interval_s = config_.frame_interval_s;
  m.exposure_time_s = config_.exposure_time_s;
  // Analysis defaults travel with the stack so later subcommands can pick them up.
  if (config_.g2_x0) m.extra["analysis.g2_x0"] = std::to_string(*config_.g2_x0);
  if (config_.g2_max_offset) m.extra["analysis.g2_max_offset"] = std::to_string(*config_.g2_max_offset);
  if (config_.g2_stationary) m.extra["analysis.g2_stationary"] = "true";
  if (config_.fit_model) {
    m.extra["analysis.fit_model"] = *config_.fit_model == G2Model::TwoTLS ? "two" : "one";
  }
  return m;
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_chunks(std::size_t count, std::size_t threads,
                     const std::function<void(std::size_t, std::size_t)>& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    body(0, count);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = count * t / threads;
    const std::size_t end = count * (t + 1) / threads;
    workers.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

FrameStack simulate_stack(const SpeckleSimulator& simulator, std::size_t threads,
                          SimulationSummary* summary) {
  const std::size_t count = simulator.config().frames;
  FrameStack stack;
  stack.meta = simulator.meta();
  stack.frames.resize(count);
  std::vector<std::size_t> clipped(count, 0);
  std::vector<char> warned(count, 0);
  parallel_chunks(count, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Capture c = simulator.frame(i);
      clipped[i] = c.clipped_pixels;
      warned[i] = c.saturation_warning();
      stack.frames[i] = std::move(c.frame);
    }
  });
  if (summary) {
    *summary = {};
    for (std::size_t i = 0; i < count; ++i) {
      summary->saturated_frames += stack.frames[i].saturation_flag ? 1 : 0;
      summary->clipped_pixels += clipped[i];
      summary->saturation_warnings += warned[i] ? 1 : 0;
    }
  }
  return stack;
}

}  // namespace speckle
