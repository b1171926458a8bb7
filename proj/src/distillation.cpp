#include "geoloop/distillation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "geoloop/errors.hpp"
#include "geoloop/json_io.hpp"

namespace geoloop {

namespace {

void check_t(double t) {
  if (!(t >= 0.0 && t <= Schedule::t_max)) {
    throw SchemaError("noising time t=" + std::to_string(t) +
                      " outside [0, 1000]");
  }
}

}  // namespace

double noisify(double x0, double t, double eps) {
  check_t(t);
  return Schedule::alpha(t) * x0 + Schedule::sigma(t) * eps;
}

Vec noisify(const Vec& x0, double t, const Vec& eps) {
  check_t(t);
  if (x0.size() != eps.size()) throw SchemaError("noisify: shape mismatch");
  return Schedule::alpha(t) * x0 + Schedule::sigma(t) * eps;
}

double gaussian_posterior_mean(double z, double t, const GaussianModel& model) {
  check_t(t);
  if (!(model.stddev > 0.0)) {
    throw SchemaError("gaussian_posterior_mean: stddev must be positive");
  }
  const double a = Schedule::alpha(t);
  const double s = Schedule::sigma(t);
  const double var = model.stddev * model.stddev;
  return (a * var * z + s * s * model.mean) / (a * a * var + s * s);
}

Vec gaussian_posterior_mean(const Vec& z, double t, const GaussianModel& model) {
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out[i] = gaussian_posterior_mean(z[i], t, model);
  }
  return out;
}

Vec dmd_generator_gradient(const DistillState& state) {
  if (!(state.sigma_norm > 0.0)) {
    throw SchemaError("dmd_generator_gradient: sigma_norm must be positive");
  }
  if (state.teacher_pred.size() != state.critic_pred.size() ||
      state.teacher_pred.size() != state.student_pred.size()) {
    throw SchemaError("dmd_generator_gradient: shape mismatch");
  }
  return -(state.eta / state.sigma_norm) *
         (state.teacher_pred - state.critic_pred);
}

double dmd_generator_loss(const DistillState& state) {
  const Vec residual = dmd_generator_gradient(state);
  return 0.5 * residual.squaredNorm();
}

double critic_loss(const Vec& critic_pred, const Vec& x_clean) {
  if (critic_pred.size() != x_clean.size()) {
    throw SchemaError("critic_loss: shape mismatch");
  }
  return (critic_pred - x_clean).squaredNorm() /
         static_cast<double>(critic_pred.size());
}

Vec sample_4step(const GeneratorFn& generator, const Schedule& schedule,
                 const Vec& z_init, NoiseMode mode, Rng& rng,
                 std::vector<SampleStep>* trajectory) {
  if (schedule.steps.size() < 2 || schedule.steps.back() != 0.0) {
    throw SchemaError("sample_4step: schedule must end at t=0");
  }
  Vec z = z_init;
  Vec x_hat;
  for (int k = 0; k + 1 < static_cast<int>(schedule.steps.size()); ++k) {
    const double t = schedule.steps[static_cast<std::size_t>(k)];
    x_hat = generator(z, t);
    if (trajectory) trajectory->push_back({t, z, x_hat});
    const double t_next = schedule.steps[static_cast<std::size_t>(k) + 1];
    if (t_next > 0.0) {
      Vec eps;
      if (mode == NoiseMode::kDeterministic) {
        eps = z_init;  // reuse the initial noise
      } else {
        eps.resize(x_hat.size());
        for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
      }
      z = noisify(x_hat, t_next, eps);
    }
  }
  return x_hat;
}

ToyTrainResult toy_dmd_train(const GaussianModel& teacher, double mean_init,
                             double stddev_init, const ToyTrainConfig& config) {
  if (!(stddev_init > 0.0)) {
    throw SchemaError("toy_dmd_train: initial stddev must be positive");
  }
  if (config.batch_size < 1 || config.iterations < 0) {
    throw SchemaError("toy_dmd_train: bad batch size or iteration count");
  }
  Rng rng = Rng(config.seed).substream("dmd_toy_trainer");
  const Schedule schedule;
  const std::size_t n_steps = schedule.steps.size() - 1;  // nonzero steps

  double m = mean_init;
  double s = stddev_init;
  GaussianModel critic_model{m, s};

  ToyTrainResult result;
  result.curve.reserve(static_cast<std::size_t>(config.iterations));

  for (int iter = 0; iter < config.iterations; ++iter) {
    if (config.critic_refresh_every <= 1 ||
        iter % config.critic_refresh_every == 0) {
      critic_model = GaussianModel{m, std::max(s, 1e-6)};
    }

    const int batch = config.batch_size;
    std::vector<double> xi(batch), diff(batch), x_clean(batch), critic_pred(batch);
    double sigma_norm = config.sigma_norm_const;
    double abs_diff_sum = 0.0;
    double critic_loss_sum = 0.0;

    for (int b = 0; b < batch; ++b) {
      xi[b] = rng.normal();
      const double x = m + s * xi[b];  // student sample = its x̂ prediction
      double t;
      if (config.time_sampling == TimeSampling::kDiscreteSteps) {
        t = schedule.steps[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(n_steps) - 1))];
      } else {
        t = rng.uniform(0.0, Schedule::t_max);
      }
      const double eps = rng.normal();
      const double z = noisify(x, t, eps);
      const double teacher_pred = gaussian_posterior_mean(z, t, teacher);
      critic_pred[b] = gaussian_posterior_mean(z, t, critic_model);
      diff[b] = teacher_pred - critic_pred[b];
      abs_diff_sum += std::abs(diff[b]);
      x_clean[b] = x;
      const double cr = critic_pred[b] - x;
      critic_loss_sum += cr * cr;
    }
    if (sigma_norm <= 0.0) {
      sigma_norm = abs_diff_sum / batch + 1e-8;
    }

    // Chain rule through the affine generator: d x̂/dm = 1, d x̂/ds = xi.
    double grad_m = 0.0, grad_s = 0.0, gen_loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      const double g = -config.eta * diff[b] / sigma_norm;
      grad_m += g;
      grad_s += g * xi[b];
      gen_loss += 0.5 * g * g;
    }
    grad_m /= batch;
    grad_s /= batch;
    gen_loss /= batch;

    m -= config.learning_rate * grad_m;
    s -= config.learning_rate * grad_s;
    s = std::max(s, 1e-6);

    result.curve.push_back(
        {iter, m, s, gen_loss, critic_loss_sum / batch});

    if (std::abs(m) > config.divergence_limit || s > config.divergence_limit) {
      result.aborted = true;
      break;
    }
  }

  result.mean_final = m;
  result.stddev_final = s;
  result.converged = !result.aborted &&
                     std::abs(m - teacher.mean) < config.convergence_tol &&
                     std::abs(s - teacher.stddev) < config.convergence_tol;
  return result;
}

void save_train_curve_csv(const std::string& path, const ToyTrainResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(12);
  out << "iter,m,s,gen_loss,critic_loss\n";
  for (const TrainCurvePoint& p : result.curve) {
    out << p.iteration << "," << p.mean << "," << p.stddev << ","
        << p.generator_loss << "," << p.critic_loss << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_train_summary_json(const std::string& path,
                             const ToyTrainResult& result) {
  Json j;
  j["m_final"] = result.mean_final;
  j["s_final"] = result.stddev_final;
  j["converged"] = result.converged;
  save_json_file(path, j);
}

}  // namespace geoloop
