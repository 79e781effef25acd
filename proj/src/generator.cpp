#include "psoforge/generator.hpp"

#include "psoforge/errors.hpp"
#include "psoforge/rng.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace psoforge {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::vector<double> sigma_schedule(const NoiseSchedule& cfg) {
  if (cfg.n_steps < 1) throw ConfigError("schedule: n_steps must be >= 1");
  if (!(cfg.sigma_max > cfg.sigma_min) || !(cfg.sigma_min > 0.0))
    throw ConfigError("schedule: need sigma_max > sigma_min > 0");
  if (cfg.rho <= 0.0) throw ConfigError("schedule: rho must be > 0");

  std::vector<double> sigmas;
  sigmas.reserve(cfg.n_steps + 1);
  if (cfg.n_steps == 1) {
    sigmas.push_back(cfg.sigma_max);
    sigmas.push_back(0.0);
    return sigmas;
  }
  const double inv_rho = 1.0 / cfg.rho;
  const double hi = std::pow(cfg.sigma_max, inv_rho);
  const double lo = std::pow(cfg.sigma_min, inv_rho);
  for (int i = 0; i < cfg.n_steps; ++i) {
    if (i == 0) {
      sigmas.push_back(cfg.sigma_max);  // exact endpoints
    } else if (i == cfg.n_steps - 1) {
      sigmas.push_back(cfg.sigma_min);
    } else {
      const double t = static_cast<double>(i) / (cfg.n_steps - 1);
      sigmas.push_back(std::pow(hi + t * (lo - hi), cfg.rho));
    }
  }
  sigmas.push_back(0.0);
  return sigmas;
}

MixtureDenoiser::MixtureDenoiser(const World& world, const ExtractorSpec& pc_spec)
    : MixtureDenoiser(world, pseudo_condition_rows(world.means, pc_spec)) {}

MixtureDenoiser::MixtureDenoiser(const World& world, Matrix condition_targets)
    : means_(world.means),
      condition_targets_(std::move(condition_targets)),
      cluster_var_(world.cluster_std * world.cluster_std) {
  const int k = world.n_identities();
  log_weights_.resize(k);
  for (int i = 0; i < k; ++i) log_weights_[i] = std::log(world.weights[i]);
  mean_sq_norms_ = means_.rowwise().squaredNorm();
}

Vector MixtureDenoiser::log_compat(const Vector& c_s, double kernel_width) const {
  if (condition_targets_.rows() != means_.rows())
    throw ConfigError("denoiser: no condition targets available");
  if (!(kernel_width > 0.0))
    throw ConfigError("denoiser: kernel_width must be > 0");
  const double inv = 1.0 / (2.0 * kernel_width * kernel_width);
  return (-inv) *
         (condition_targets_.rowwise() - c_s.transpose()).rowwise().squaredNorm();
}

void MixtureDenoiser::responsibilities(const Vector& base_logits,
                                       const Vector* log_compat, Vector& gamma,
                                       bool* underflow) const {
  if (underflow) *underflow = false;
  if (log_compat) {
    Vector logits = base_logits + *log_compat;
    const double m = logits.maxCoeff();
    if (m > kNegInf) {
      gamma = (logits.array() - m).exp();
      gamma /= gamma.sum();
      return;
    }
    if (underflow) *underflow = true;
  }
  const double m = base_logits.maxCoeff();
  gamma = (base_logits.array() - m).exp();
  gamma /= gamma.sum();
}

Vector MixtureDenoiser::denoise(const Vector& x, double sigma) const {
  if (sigma == 0.0) return x;
  const double s2 = cluster_var_ + sigma * sigma;
  Vector logits = (means_ * x - 0.5 * mean_sq_norms_) / s2 + log_weights_;
  Vector gamma;
  responsibilities(logits, nullptr, gamma, nullptr);
  const Vector mu_bar = means_.transpose() * gamma;
  return (cluster_var_ * x + sigma * sigma * mu_bar) / s2;
}

Vector MixtureDenoiser::denoise_conditional(const Vector& x, double sigma,
                                            const Vector& log_compat,
                                            bool* underflow) const {
  if (sigma == 0.0) return x;
  const double s2 = cluster_var_ + sigma * sigma;
  Vector logits = (means_ * x - 0.5 * mean_sq_norms_) / s2 + log_weights_;
  Vector gamma;
  responsibilities(logits, &log_compat, gamma, underflow);
  const Vector mu_bar = means_.transpose() * gamma;
  return (cluster_var_ * x + sigma * sigma * mu_bar) / s2;
}

Vector MixtureDenoiser::denoise_guided(const Vector& x, double sigma,
                                       const Vector& log_compat,
                                       double strength) const {
  // w = 0 and w = 1 reproduce the pure denoisers bit-exactly.
  if (strength == 0.0) return denoise(x, sigma);
  if (strength == 1.0) return denoise_conditional(x, sigma, log_compat);
  const Vector d_u = denoise(x, sigma);
  const Vector d_c = denoise_conditional(x, sigma, log_compat);
  return d_u + strength * (d_c - d_u);
}

Matrix MixtureDenoiser::integrate(const Matrix& init_noise,
                                  const std::vector<double>& sigmas,
                                  const Vector* log_compat,
                                  double strength) const {
  if (sigmas.size() < 2) throw ConfigError("integrate: schedule too short");
  const int b = static_cast<int>(init_noise.cols());
  const double s0sq = cluster_var_;
  Matrix x = sigmas.front() * init_noise;

  const bool use_cond = strength != 0.0 && log_compat != nullptr;
  const bool use_uncond = strength != 1.0 || !use_cond;
  Vector compat;
  if (use_cond && use_uncond) compat = log_compat->array().exp();

  auto softmax_cols = [](Matrix& l) {
    const Eigen::RowVectorXd colmax = l.colwise().maxCoeff();
    l.rowwise() -= colmax;
    l = l.array().exp();
    const Eigen::RowVectorXd sums = l.colwise().sum();
    l.array().rowwise() /= sums.array();
  };

  Matrix logits, gamma_u, gamma_c;
  // Guided denoised batch at one noise level. Mixing the responsibilities
  // before the mean product gives the same combiner:
  // D_u + w (D_c - D_u) = (s0^2 x + sigma^2 means^T (g_u + w (g_c - g_u))) / s2.
  auto denoised = [&](const Matrix& state, double sigma) -> Matrix {
    const double sig2 = sigma * sigma;
    const double s2 = s0sq + sig2;
    logits = (means_ * state) / s2;  // K x b
    const Vector base = log_weights_ - (0.5 / s2) * mean_sq_norms_;
    logits.colwise() += base;

    const Matrix* resp = nullptr;
    if (use_cond && use_uncond) {
      gamma_u = logits;
      softmax_cols(gamma_u);
      // softmax(l + lc) = normalize(softmax(l) .* exp(lc)); reuses the
      // exponentials above.
      gamma_c = gamma_u.array().colwise() * compat.array();
      for (Eigen::Index j = 0; j < b; ++j) {
        const double sum = gamma_c.col(j).sum();
        if (sum > 0.0) {
          gamma_c.col(j) /= sum;
          continue;
        }
        Vector shifted = logits.col(j) + *log_compat;
        const double m = shifted.maxCoeff();
        if (m == kNegInf) {
          // All compatibilities underflowed: fall back to unconditional.
          gamma_c.col(j) = gamma_u.col(j);
        } else {
          // The shared exponentials underflowed even though compatibilities
          // exist; recompute this column in log space.
          shifted = (shifted.array() - m).exp();
          gamma_c.col(j) = shifted / shifted.sum();
        }
      }
      gamma_c = gamma_u + strength * (gamma_c - gamma_u);
      resp = &gamma_c;
    } else if (use_cond) {
      gamma_c = logits;
      gamma_c.colwise() += *log_compat;
      for (Eigen::Index j = 0; j < b; ++j)
        if (gamma_c.col(j).maxCoeff() == kNegInf) gamma_c.col(j) = logits.col(j);
      softmax_cols(gamma_c);
      resp = &gamma_c;
    } else {
      softmax_cols(logits);
      resp = &logits;
    }
    return (s0sq * state + sig2 * (means_.transpose() * (*resp))) / s2;
  };

  // Heun integration: a plain Euler predictor would bias the terminal spread
  // by several percent at the default step count, so each step (except the
  // final one to sigma = 0) applies the trapezoidal corrector.
  Matrix slope, x_pred;
  for (std::size_t i = 0; i + 1 < sigmas.size(); ++i) {
    const double sigma = sigmas[i];
    const double sigma_next = sigmas[i + 1];
    const double h = sigma_next - sigma;
    slope = (x - denoised(x, sigma)) / sigma;
    if (sigma_next == 0.0) {
      x += h * slope;
    } else {
      x_pred = x + h * slope;
      x += (0.5 * h) * (slope + (x_pred - denoised(x_pred, sigma_next)) / sigma_next);
    }
    if (!x.allFinite())
      throw SamplerDivergence(static_cast<int>(i),
                              "sampler diverged at step " + std::to_string(i));
  }
  return x;
}

Vector gmm_denoise(const Vector& x, double sigma, const World& world) {
  MixtureDenoiser den(world, Matrix());
  return den.denoise(x, sigma);
}

Vector conditional_denoise(const Vector& x, double sigma, const Vector& c_s,
                           const World& world, const ExtractorSpec& pc_spec,
                           double kernel_width, bool* underflow) {
  MixtureDenoiser den(world, pc_spec);
  return den.denoise_conditional(x, sigma, den.log_compat(c_s, kernel_width),
                                 underflow);
}

Vector guided_denoise(const Vector& x, double sigma, const Vector& c_s,
                      double strength, const World& world,
                      const ExtractorSpec& pc_spec, double kernel_width) {
  MixtureDenoiser den(world, pc_spec);
  return den.denoise_guided(x, sigma, den.log_compat(c_s, kernel_width),
                            strength);
}

Vector sample_one(const Vector& c_s, double strength,
                  const NoiseSchedule& schedule, const World& world,
                  const ExtractorSpec& pc_spec, double kernel_width,
                  std::uint64_t seed) {
  MixtureDenoiser den(world, pc_spec);
  const std::vector<double> sigmas = sigma_schedule(schedule);
  Rng rng(derive_seed(seed, "sampler.init"));
  Matrix eps = rng.normal_vector(world.dim());
  if (strength == 0.0) return den.integrate(eps, sigmas, nullptr, 0.0).col(0);
  const Vector lc = den.log_compat(c_s, kernel_width);
  return den.integrate(eps, sigmas, &lc, strength).col(0);
}

std::vector<Candidate> sample_batch(const MixtureDenoiser& denoiser,
                                    const Vector* log_compat, double strength,
                                    int batch, const std::vector<double>& sigmas,
                                    std::uint64_t seed,
                                    std::int64_t source_record_id) {
  if (batch < 1) throw ConfigError("sample_batch: batch must be >= 1");
  const int d = denoiser.dim();
  Matrix eps(d, batch);
  std::vector<std::uint64_t> seeds(batch);
  for (int j = 0; j < batch; ++j) {
    seeds[j] = derive_seed(seed, "batch", static_cast<std::uint64_t>(j));
    Rng rng(derive_seed(seeds[j], "sampler.init"));
    eps.col(j) = rng.normal_vector(d);
  }
  const Matrix out = denoiser.integrate(eps, sigmas, log_compat, strength);
  std::vector<Candidate> candidates(batch);
  for (int j = 0; j < batch; ++j) {
    candidates[j].x_prime = out.col(j);
    candidates[j].source_record_id = source_record_id;
    candidates[j].guidance_used = strength;
    candidates[j].init_noise_seed = seeds[j];
  }
  return candidates;
}

std::vector<Candidate> sample_batch(const Vector& c_s, double strength,
                                    int batch, const NoiseSchedule& schedule,
                                    const World& world,
                                    const ExtractorSpec& pc_spec,
                                    double kernel_width, std::uint64_t seed,
                                    std::int64_t source_record_id) {
  MixtureDenoiser den(world, pc_spec);
  const std::vector<double> sigmas = sigma_schedule(schedule);
  if (strength == 0.0)
    return sample_batch(den, nullptr, 0.0, batch, sigmas, seed, source_record_id);
  const Vector lc = den.log_compat(c_s, kernel_width);
  return sample_batch(den, &lc, strength, batch, sigmas, seed, source_record_id);
}

}  // namespace psoforge
