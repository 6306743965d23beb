#include "flowbench/flow/train.hpp"

#include <cmath>
#include <numbers>

namespace flowbench {

double cosine_warm_restart_lr(long step, long total_steps, double base_lr) {
  if (total_steps < 1 || step < 0 || step >= total_steps)
    throw InvalidArgument("lr step " + std::to_string(step) + " outside [0, " +
                          std::to_string(total_steps) + ")");
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

AdamW::AdamW(const TrainConfig& config, const std::vector<ParamBlock>& params)
    : params_(params),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.eps),
      weight_decay_(config.weight_decay) {
  for (const auto& p : params_) {
    m_.emplace_back(p.values.size(), 0.0);
    v_.emplace_back(p.values.size(), 0.0);
  }
}

void AdamW::step(const std::vector<ParamBlock>& grads, double lr) {
  if (grads.size() != params_.size()) throw DimMismatch("gradient blocks do not match parameters");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step_size = lr / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);
  for (std::size_t b = 0; b < params_.size(); ++b) {
    std::span<double> p = params_[b].values;
    std::span<const double> g = grads[b].values;
    if (g.size() != p.size()) throw DimMismatch("gradient block size does not match parameter");
    std::vector<double>& m = m_[b];
    std::vector<double>& v = v_[b];
    const double shrink = params_[b].decay ? 1.0 - lr * weight_decay_ : 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= shrink;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= step_size * m[i] / (std::sqrt(v[i]) / sqrt_bc2 + eps_);
    }
  }
}

LossHistory train_flow(FlowModel& model, const Matrix& x, const TrainConfig& config) {
  config.validate();
  if (x.rows() < 2) throw NotEnoughRows("training needs at least 2 rows");
  const Matrix xp = pad_input(model, x);
  const Index n = xp.rows();
  const Index bs = std::min<Index>(config.batch_size, n);
  const long per_epoch = static_cast<long>((n + bs - 1) / bs);
  const long total = per_epoch * config.epochs;

  LossHistory hist;
  if (config.epochs == 0) return hist;

  std::vector<ParamBlock> params = parameter_blocks(model);
  AdamW opt(config, params);
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Matrix batch;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<Index> perm = random_permutation(shuffle_rng, n);
    double loss_sum = 0.0;
    const double epoch_lr = cosine_warm_restart_lr(step, total, config.learning_rate);
    for (Index start = 0; start < n; start += bs) {
      const Index m = std::min(bs, n - start);
      batch.resize(m, xp.cols());
      for (Index r = 0; r < m; ++r) batch.row(r) = xp.row(perm[static_cast<std::size_t>(start + r)]);
      NllGradient ng;
      try {
        ng = nll_and_gradient(model, batch);
      } catch (const NonFiniteActivation& e) {
        throw DivergedLoss(std::string(e.what()) + " at epoch " + std::to_string(epoch), hist);
      }
      if (!std::isfinite(ng.loss))
        throw DivergedLoss("loss is not finite at epoch " + std::to_string(epoch), hist);
      loss_sum += ng.loss * static_cast<double>(m);
      opt.step(parameter_blocks(ng.gradient), cosine_warm_restart_lr(step, total, config.learning_rate));
      ++step;
    }
    hist.nll.push_back(loss_sum / static_cast<double>(n));
    hist.learning_rate.push_back(epoch_lr);
  }
  model.config = config;
  return hist;
}

TrainResult train_flow(FlowKind kind, const Matrix& x, const TrainConfig& config) {
  if (x.cols() < 1) throw EmptyDataset("training matrix has no columns");
  Rng rng(derive_seed(config.seed, 0));
  TrainResult r{build_flow(kind, x.cols(), config, rng), {}};
  r.history = train_flow(r.model, x, config);
  return r;
}

}  // namespace flowbench
