#include "avs/training.hpp"

#include <cmath>
#include <sstream>

#include "avs/errors.hpp"
#include "avs/objective.hpp"

namespace avs::training {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
    nn::Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    return order;
}

Trainer::Trainer(AutrModel& model, const RunConfig& cfg)
    : model_(model), cfg_(cfg), params_(model.trainable_parameters()) {
    cfg_.validate();
    for (const auto& p : params_) {
        m_.emplace_back(p.var.size(), 0.0);
        v_.emplace_back(p.var.size(), 0.0);
    }
}

std::uint64_t Trainer::scheduled_steps(std::size_t n) const {
    if (cfg_.optim.max_steps > 0) return static_cast<std::uint64_t>(cfg_.optim.max_steps);
    const std::size_t b = static_cast<std::size_t>(cfg_.optim.batch_size);
    return static_cast<std::uint64_t>(cfg_.optim.epochs) * ((n + b - 1) / b);
}

StepLog Trainer::update(const std::vector<data::Sample>& train) {
    const std::size_t n = train.size();
    const std::size_t b = std::min(n, static_cast<std::size_t>(cfg_.optim.batch_size));
    const std::size_t per_epoch = (n + b - 1) / b;
    const int epoch = static_cast<int>(step_ / per_epoch);
    const std::size_t pos = static_cast<std::size_t>(step_ % per_epoch);
    const auto order = epoch_order(n, cfg_.seed, epoch);
    const std::size_t begin = pos * b;
    const std::size_t end = std::min(n, begin + b);

    for (auto& p : params_) p.var.zero_grad();
    StepLog log;
    log.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
        const data::Sample& s = train[order[k]];
        const auto pred = model_.forward(s.inputs);
        objective::LossBreakdown parts;
        const ag::Var loss = objective::training_loss(
            pred, s.target, {s.full_target, s.height, s.width}, cfg_.loss, &parts);
        if (!std::isfinite(parts.total)) {
            throw DivergenceError("non-finite loss at step " + std::to_string(step_ + 1) + " on " + s.id);
        }
        ag::backward(ag::scale(loss, inv));
        log.loss += parts.total * inv;
        log.dice += parts.dice * inv;
        log.focal += parts.focal * inv;
        log.sound += parts.sound * inv;
    }

    ++step_;
    const auto& o = cfg_.optim;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(o.beta1, t);
    const double c2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto w = params_[i].var.mutable_value();
        const auto g = params_[i].var.grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g.empty() ? 0.0 : g[j];
            if (!std::isfinite(gj)) throw DivergenceError("non-finite gradient at step " + std::to_string(step_));
            m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * gj;
            v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * gj * gj;
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            w[j] -= o.lr * (mhat / (std::sqrt(vhat) + o.eps) + o.weight_decay * w[j]);
        }
        round_to_float32(w);
        round_to_float32(m);
        round_to_float32(v);
    }
    log.step = step_;
    return log;
}

TrainResult Trainer::run(const std::vector<data::Sample>& train, std::uint64_t total_steps,
                         const std::function<void(const StepLog&)>& on_step) {
    if (train.empty()) throw Error("training set is empty");
    TrainResult result;
    const nn::ParamList frozen = model_.frozen_parameters();
    result.frozen_checksum_before = parameter_checksum(frozen);
    while (step_ < total_steps) {
        result.log.push_back(update(train));
        if (on_step) on_step(result.log.back());
    }
    result.frozen_checksum_after = parameter_checksum(frozen);
    return result;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ckpt;
    ckpt.config_text = config_text(cfg_);
    ckpt.seed = cfg_.seed;
    ckpt.step = step_;
    export_parameters(model_.parameters(), ckpt);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const int r = params_[i].var.rows(), c = params_[i].var.cols();
        ckpt.tensors.emplace_back("adam.m/" + params_[i].name, Tensor({r, c}, m_[i]));
        ckpt.tensors.emplace_back("adam.v/" + params_[i].name, Tensor({r, c}, v_[i]));
    }
    return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
    nn::ParamList all = model_.parameters();
    import_parameters(ckpt, all);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const Tensor* m = ckpt.find("adam.m/" + params_[i].name);
        const Tensor* v = ckpt.find("adam.v/" + params_[i].name);
        if (m && v && m->size() == m_[i].size() && v->size() == v_[i].size()) {
            m_[i] = m->storage();
            v_[i] = v->storage();
        } else {
            std::fill(m_[i].begin(), m_[i].end(), 0.0);
            std::fill(v_[i].begin(), v_[i].end(), 0.0);
        }
    }
    step_ = ckpt.step;
}

RunConfig config_from_checkpoint(const Checkpoint& ckpt) {
    std::istringstream in(ckpt.config_text);
    return parse_config(in);
}

AutrModel model_from_checkpoint(const Checkpoint& ckpt, RunConfig* cfg_out) {
    const RunConfig cfg = config_from_checkpoint(ckpt);
    AutrModel model(cfg.model, cfg.seed);
    nn::ParamList all = model.parameters();
    import_parameters(ckpt, all);
    if (cfg_out) *cfg_out = cfg;
    return model;
}

}  // namespace avs::training
