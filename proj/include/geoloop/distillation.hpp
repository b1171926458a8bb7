#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "geoloop/rng.hpp"

namespace geoloop {

using Vec = Eigen::VectorXd;

// Fixed 4-step denoising trajectory with linear (rectified-flow-style)
// interpolation coefficients: alpha_t = 1 - t/1000, sigma_t = t/1000, so
// alpha_t + sigma_t = 1 for every t.
struct Schedule {
  std::vector<double> steps = {1000.0, 750.0, 500.0, 250.0, 0.0};

  static constexpr double t_max = 1000.0;
  static double alpha(double t) { return 1.0 - t / t_max; }
  static double sigma(double t) { return t / t_max; }
  int generator_calls() const { return static_cast<int>(steps.size()) - 1; }
};

// z_t = alpha_t * x0 + sigma_t * eps. Throws SchemaError for t outside
// [0, 1000].
double noisify(double x0, double t, double eps);
Vec noisify(const Vec& x0, double t, const Vec& eps);

struct GaussianModel {
  double mean = 0.0;
  double stddev = 1.0;
};

// MMSE denoiser for x0 ~ N(mean, stddev^2), eps ~ N(0,1) under the linear
// noising:
//   E[x0 | z_t] = (alpha * sd^2 * z + sigma^2 * mean) / (alpha^2 * sd^2 + sigma^2).
// At t = 0 this reduces to the identity.
double gaussian_posterior_mean(double z, double t, const GaussianModel& model);
Vec gaussian_posterior_mean(const Vec& z, double t, const GaussianModel& model);

// Denoised predictions from the student, teacher and critic plus the
// pseudo-regression knobs.
struct DistillState {
  Vec student_pred;  // x̂ from the student
  Vec teacher_pred;  // x̂ from the frozen teacher
  Vec critic_pred;   // x̂ from the critic
  double eta = 1.0;
  double sigma_norm = 1.0;
};

// Gradient of the pseudo-regression generator loss w.r.t. the student
// prediction. With the stop-gradient target x̂_student + eta*(teacher -
// critic)/sigma_norm this is exactly -eta*(teacher - critic)/sigma_norm.
Vec dmd_generator_gradient(const DistillState& state);

// 0.5 * || x̂_student - sg(target) ||^2, with the target held fixed.
double dmd_generator_loss(const DistillState& state);

// Mean over elements of the squared denoising residual.
double critic_loss(const Vec& critic_pred, const Vec& x_clean);

enum class NoiseMode {
  kStochastic,     // fresh noise at every re-noising step
  kDeterministic,  // reuse the initial noise at every step
};

using GeneratorFn = std::function<Vec(const Vec& z_t, double t)>;

struct SampleStep {
  double t = 0.0;
  Vec z;      // the noisy input handed to the generator
  Vec x_hat;  // the generator's prediction at this step
};

// Runs the schedule: exactly one generator call per nonzero step
// (t = 1000, 750, 500, 250), re-noising the prediction to the next level in
// between. Returns the final prediction; the per-step trajectory lands in
// *trajectory when non-null.
Vec sample_4step(const GeneratorFn& generator, const Schedule& schedule,
                 const Vec& z_init, NoiseMode mode, Rng& rng,
                 std::vector<SampleStep>* trajectory = nullptr);

enum class TimeSampling {
  kDiscreteSteps,  // t drawn from the schedule's nonzero steps
  kUniform,        // t ~ U(0, 1000]
};

struct ToyTrainConfig {
  int iterations = 2000;
  int batch_size = 64;
  double eta = 1.0;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  TimeSampling time_sampling = TimeSampling::kDiscreteSteps;
  // 0 selects the default per-batch normalizer mean|teacher - critic| + 1e-8;
  // any positive value is used as a constant sigma_norm.
  double sigma_norm_const = 0.0;
  // The analytic critic tracks the student's law; refreshing every n > 1
  // steps emulates a stale critic.
  int critic_refresh_every = 1;
  double convergence_tol = 0.05;
  double divergence_limit = 1e3;
};

struct TrainCurvePoint {
  int iteration = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double generator_loss = 0.0;
  double critic_loss = 0.0;
};

struct ToyTrainResult {
  double mean_final = 0.0;
  double stddev_final = 0.0;
  bool converged = false;
  bool aborted = false;  // divergence guard tripped
  std::vector<TrainCurvePoint> curve;
};

// Alternating DMD toy trainer on an affine one-step generator
// x = m + s * xi, with analytic Gaussian teacher and critic. The critic's
// model is the student's current law, so at the fixed point (m, s) =
// (teacher.mean, teacher.stddev) the generator gradient vanishes identically.
ToyTrainResult toy_dmd_train(const GaussianModel& teacher, double mean_init,
                             double stddev_init, const ToyTrainConfig& config);

// CSV: iter,m,s,gen_loss,critic_loss
void save_train_curve_csv(const std::string& path, const ToyTrainResult& result);
// JSON: {m_final, s_final, converged}
void save_train_summary_json(const std::string& path,
                             const ToyTrainResult& result);

}  // namespace geoloop
