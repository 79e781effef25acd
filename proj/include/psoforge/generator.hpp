#pragma once

#include "psoforge/features.hpp"
#include "psoforge/types.hpp"
#include "psoforge/world.hpp"

#include <cstdint>
#include <vector>

namespace psoforge {

struct NoiseSchedule {
  int n_steps = 64;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
};

struct GuidanceConfig {
  double strength = 1.2;
  double decrement = 0.1;
  double floor = 0.0;
};

struct Candidate {
  Vector x_prime;
  std::int64_t source_record_id = -1;
  double guidance_used = 0.0;
  std::uint64_t init_noise_seed = 0;
};

/// Karras-style power schedule: strictly decreasing sigmas with a terminal 0
/// appended; n_steps == 1 degenerates to [sigma_max, 0].
std::vector<double> sigma_schedule(const NoiseSchedule& cfg);

/// Posterior mean E[x0 | x_t = x] of the Gaussian mixture observed at noise
/// level sigma. Mixture responsibilities and the conditional compatibility
/// weighting share one precomputed kernel so the hot sampling path and the
/// single-vector entry points below run through identical arithmetic.
class MixtureDenoiser {
 public:
  MixtureDenoiser(const World& world, const ExtractorSpec& pc_spec);
  /// Variant for conditioning on classifier outputs instead of the
  /// pseudo-condition extractor: rows of condition_targets are the
  /// normalized condition vectors of the component means.
  MixtureDenoiser(const World& world, Matrix condition_targets);

  /// Log compatibility of every component with the condition vector c_s.
  Vector log_compat(const Vector& c_s, double kernel_width) const;

  Vector denoise(const Vector& x, double sigma) const;
  Vector denoise_conditional(const Vector& x, double sigma,
                             const Vector& log_compat,
                             bool* underflow = nullptr) const;
  Vector denoise_guided(const Vector& x, double sigma, const Vector& log_compat,
                        double strength) const;

  /// Euler integration of the probability-flow ODE for a batch of initial
  /// noise columns. Columns evolve independently; pass log_compat == nullptr
  /// (or strength == 0) for unconditional sampling.
  Matrix integrate(const Matrix& init_noise, const std::vector<double>& sigmas,
                   const Vector* log_compat, double strength) const;

  int dim() const { return static_cast<int>(means_.cols()); }

 private:
  Matrix means_;             // K x d
  Vector log_weights_;       // K
  Vector mean_sq_norms_;     // K
  Matrix condition_targets_; // K x m
  double cluster_var_ = 0.0;

  /// Responsibilities for a column of logits; underflow falls back to base.
  void responsibilities(const Vector& base_logits, const Vector* log_compat,
                        Vector& gamma, bool* underflow) const;
};

Vector gmm_denoise(const Vector& x, double sigma, const World& world);
Vector conditional_denoise(const Vector& x, double sigma, const Vector& c_s,
                           const World& world, const ExtractorSpec& pc_spec,
                           double kernel_width, bool* underflow = nullptr);
Vector guided_denoise(const Vector& x, double sigma, const Vector& c_s,
                      double strength, const World& world,
                      const ExtractorSpec& pc_spec, double kernel_width);

/// One probability-flow sample from initial noise sigma_max * eps(seed).
Vector sample_one(const Vector& c_s, double strength,
                  const NoiseSchedule& schedule, const World& world,
                  const ExtractorSpec& pc_spec, double kernel_width,
                  std::uint64_t seed);

/// A batch of candidates with per-candidate seeds derived from one stream;
/// candidate j of batch seed s reproduces sample_one with seed stream j.
std::vector<Candidate> sample_batch(const Vector& c_s, double strength,
                                    int batch, const NoiseSchedule& schedule,
                                    const World& world,
                                    const ExtractorSpec& pc_spec,
                                    double kernel_width, std::uint64_t seed,
                                    std::int64_t source_record_id = -1);

/// Batch sampling against a prebuilt denoiser (hot path for the pipeline).
std::vector<Candidate> sample_batch(const MixtureDenoiser& denoiser,
                                    const Vector* log_compat, double strength,
                                    int batch, const std::vector<double>& sigmas,
                                    std::uint64_t seed,
                                    std::int64_t source_record_id = -1);

}  // namespace psoforge
