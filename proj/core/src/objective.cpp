#include "avs/objective.hpp"

#include <cmath>
#include <string>

#include "avs/errors.hpp"
#include "avs/resample.hpp"

namespace avs::objective {

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_sizes(std::size_t logits, std::size_t target, const char* what) {
    if (logits != target || logits == 0) {
        throw ShapeError(std::string(what) + ": logits (" + std::to_string(logits) +
                         ") and target (" + std::to_string(target) + ") sizes differ");
    }
}

std::size_t plane_size(std::size_t total, int frames) {
    if (frames <= 0 || total % static_cast<std::size_t>(frames) != 0) {
        throw ShapeError("pixel count is not divisible by the frame count");
    }
    return total / static_cast<std::size_t>(frames);
}

}  // namespace

void CostConfig::validate() const {
    if (lambda_dice < 0 || lambda_focal < 0 || lambda_sound < 0) {
        throw ConfigError("cost weights must be non-negative");
    }
    if (!(dice_eps > 0)) throw ConfigError("dice_eps must be positive");
    if (focal_gamma < 0 || focal_alpha < 0 || focal_alpha > 1) {
        throw ConfigError("focal gamma must be >= 0 and alpha in [0, 1]");
    }
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double dice_cost(std::span<const double> logits, std::span<const std::uint8_t> target, int frames,
                 double eps) {
    check_sizes(logits.size(), target.size(), "dice_cost");
    const std::size_t plane = plane_size(logits.size(), frames);
    double cost = 0.0;
    for (int t = 0; t < frames; ++t) {
        double inter = 0.0, psum = 0.0, ysum = 0.0;
        for (std::size_t i = t * plane; i < (t + 1) * plane; ++i) {
            const double p = sigmoid(logits[i]);
            inter += p * target[i];
            psum += p;
            ysum += target[i];
        }
        cost += 1.0 - (2.0 * inter + eps) / (psum + ysum + eps);
    }
    return cost / frames;
}

void dice_cost_grad(std::span<const double> logits, std::span<const std::uint8_t> target,
                    int frames, double eps, std::span<double> grad) {
    check_sizes(logits.size(), target.size(), "dice_cost_grad");
    check_sizes(logits.size(), grad.size(), "dice_cost_grad");
    const std::size_t plane = plane_size(logits.size(), frames);
    for (int t = 0; t < frames; ++t) {
        double inter = 0.0, psum = 0.0, ysum = 0.0;
        for (std::size_t i = t * plane; i < (t + 1) * plane; ++i) {
            const double p = sigmoid(logits[i]);
            inter += p * target[i];
            psum += p;
            ysum += target[i];
        }
        const double num = 2.0 * inter + eps;
        const double den = psum + ysum + eps;
        for (std::size_t i = t * plane; i < (t + 1) * plane; ++i) {
            const double p = sigmoid(logits[i]);
            const double d_dp = -(2.0 * target[i] * den - num) / (den * den);
            grad[i] = d_dp * p * (1.0 - p) / frames;
        }
    }
}

double focal_cost(std::span<const double> logits, std::span<const std::uint8_t> target,
                  double gamma, double alpha) {
    check_sizes(logits.size(), target.size(), "focal_cost");
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double x = logits[i];
        const double p = sigmoid(x);
        if (target[i]) {
            total += alpha * std::pow(1.0 - p, gamma) * softplus(-x);
        } else {
            total += (1.0 - alpha) * std::pow(p, gamma) * softplus(x);
        }
    }
    return total / static_cast<double>(logits.size());
}

void focal_cost_grad(std::span<const double> logits, std::span<const std::uint8_t> target,
                     double gamma, double alpha, std::span<double> grad) {
    check_sizes(logits.size(), target.size(), "focal_cost_grad");
    check_sizes(logits.size(), grad.size(), "focal_cost_grad");
    const double n = static_cast<double>(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double x = logits[i];
        const double p = sigmoid(x);
        double g;
        if (target[i]) {
            // d/dx [alpha (1-p)^g softplus(-x)], with softplus(-x) = -log p
            const double q = 1.0 - p;
            g = -alpha * (gamma * std::pow(q, gamma) * p * softplus(-x) + std::pow(q, gamma) * q);
        } else {
            g = (1.0 - alpha) * (gamma * std::pow(p, gamma) * (1.0 - p) * softplus(x) + std::pow(p, gamma) * p);
        }
        grad[i] = g / n;
    }
}

double sound_cost(double score, int label) { return label ? softplus(-score) : softplus(score); }

double sound_cost_grad(double score, int label) { return sigmoid(score) - (label ? 1.0 : 0.0); }

std::vector<std::uint8_t> prepare_targets(std::span<const BinaryMask> gt, int h, int w) {
    if (gt.empty()) throw ShapeError("prepare_targets: empty ground-truth sequence");
    std::vector<std::uint8_t> out;
    out.reserve(gt.size() * static_cast<std::size_t>(h) * w);
    for (const auto& m : gt) {
        const BinaryMask r = resize_mask(m, h, w, 0.5);
        out.insert(out.end(), r.bits().begin(), r.bits().end());
    }
    return out;
}

MatchResult match(const mask_head::MaskLogits& pred, std::span<const std::uint8_t> target,
                  const CostConfig& cfg) {
    const int nq = pred.queries();
    const std::size_t n = static_cast<std::size_t>(pred.logits.cols());
    check_sizes(n, target.size(), "match");
    MatchResult result;
    result.per_query_costs.resize(static_cast<std::size_t>(nq));
    const auto values = pred.logits.value();
    const auto scores = pred.sounding_scores.value();
    for (int i = 0; i < nq; ++i) {
        const std::span<const double> row(values.data() + i * n, n);
        CostTerms c;
        c.dice = dice_cost(row, target, pred.frames, cfg.dice_eps);
        c.focal = focal_cost(row, target, cfg.focal_gamma, cfg.focal_alpha);
        c.sound = sound_cost(scores[i], 1);
        c.total = cfg.lambda_dice * c.dice + cfg.lambda_focal * c.focal + cfg.lambda_sound * c.sound;
        result.per_query_costs[i] = c;
    }
    int best = 0;
    for (int i = 1; i < nq; ++i) {
        if (result.per_query_costs[i].total < result.per_query_costs[best].total) best = i;
    }
    result.winner_index = best;
    result.total_cost = result.per_query_costs[best].total;
    return result;
}

MatchResult match(const mask_head::MaskLogits& pred, std::span<const BinaryMask> gt,
                  const CostConfig& cfg) {
    return match(pred, prepare_targets(gt, pred.height, pred.width), cfg);
}

namespace {

struct SegTerms {
    double dice = 0.0;
    double focal = 0.0;
    std::vector<double> grad;  // weighted, on the logit grid
};

SegTerms seg_terms(std::span<const double> row, std::span<const std::uint8_t> target, int frames,
                   const CostConfig& cfg) {
    SegTerms t;
    t.dice = dice_cost(row, target, frames, cfg.dice_eps);
    t.focal = focal_cost(row, target, cfg.focal_gamma, cfg.focal_alpha);
    t.grad.assign(row.size(), 0.0);
    std::vector<double> g(row.size());
    dice_cost_grad(row, target, frames, cfg.dice_eps, g);
    for (std::size_t k = 0; k < g.size(); ++k) t.grad[k] += cfg.lambda_dice * g[k];
    focal_cost_grad(row, target, cfg.focal_gamma, cfg.focal_alpha, g);
    for (std::size_t k = 0; k < g.size(); ++k) t.grad[k] += cfg.lambda_focal * g[k];
    return t;
}

SegTerms upsampled_seg_terms(std::span<const double> row, const mask_head::MaskLogits& pred,
                             const FullTarget& full, const CostConfig& cfg) {
    const int frames = pred.frames;
    const std::size_t lo = static_cast<std::size_t>(pred.height) * pred.width;
    const std::size_t hi = static_cast<std::size_t>(full.height) * full.width;
    check_sizes(hi * frames, full.bits.size(), "training_loss");
    std::vector<double> up;
    up.reserve(hi * frames);
    for (int t = 0; t < frames; ++t) {
        const auto plane = resize_bilinear(row.subspan(t * lo, lo), pred.height, pred.width, 1,
                                           full.height, full.width);
        up.insert(up.end(), plane.begin(), plane.end());
    }
    SegTerms t = seg_terms(up, full.bits, frames, cfg);
    std::vector<double> grad;
    grad.reserve(row.size());
    for (int f = 0; f < frames; ++f) {
        const auto plane = resize_bilinear_adjoint(std::span<const double>(t.grad).subspan(f * hi, hi),
                                                   pred.height, pred.width, 1, full.height, full.width);
        grad.insert(grad.end(), plane.begin(), plane.end());
    }
    t.grad = std::move(grad);
    return t;
}

ag::Var assemble_loss(const mask_head::MaskLogits& pred, int star, SegTerms seg,
                      const CostConfig& cfg, LossBreakdown* breakdown) {
    const int nq = pred.queries();
    const std::size_t n = static_cast<std::size_t>(pred.logits.cols());
    const auto scores = pred.sounding_scores.value();
    double sound = 0.0;
    for (int i = 0; i < nq; ++i) sound += sound_cost(scores[i], i == star ? 1 : 0);
    sound /= nq;
    const double total = cfg.lambda_dice * seg.dice + cfg.lambda_focal * seg.focal + cfg.lambda_sound * sound;
    if (breakdown) *breakdown = {seg.dice, seg.focal, sound, total, star};

    std::vector<double> score_grad(static_cast<std::size_t>(nq));
    for (int i = 0; i < nq; ++i) {
        score_grad[i] = cfg.lambda_sound * sound_cost_grad(scores[i], i == star ? 1 : 0) / nq;
    }
    return ag::make_result(
        1, 1, {total}, {pred.logits, pred.sounding_scores},
        [star, n, seg_grad = std::move(seg.grad), score_grad = std::move(score_grad)](ag::Node& self) {
            const double g = self.grad[0];
            ag::Node& pl = *self.parents[0];
            ag::Node& ps = *self.parents[1];
            if (pl.requires_grad) {
                pl.ensure_grad();
                double* dst = pl.grad.data() + static_cast<std::size_t>(star) * n;
                for (std::size_t k = 0; k < n; ++k) dst[k] += g * seg_grad[k];
            }
            if (ps.requires_grad) {
                ps.ensure_grad();
                for (std::size_t i = 0; i < score_grad.size(); ++i) ps.grad[i] += g * score_grad[i];
            }
        });
}

std::span<const double> query_row(const mask_head::MaskLogits& pred, int i) {
    const std::size_t n = static_cast<std::size_t>(pred.logits.cols());
    return pred.logits.value().subspan(static_cast<std::size_t>(i) * n, n);
}

}  // namespace

ag::Var training_loss(const mask_head::MaskLogits& pred, std::span<const std::uint8_t> target,
                      const CostConfig& cfg, LossBreakdown* breakdown) {
    const int star = match(pred, target, cfg).winner_index;
    return assemble_loss(pred, star, seg_terms(query_row(pred, star), target, pred.frames, cfg), cfg,
                         breakdown);
}

ag::Var training_loss(const mask_head::MaskLogits& pred, std::span<const std::uint8_t> target,
                      const FullTarget& full, const CostConfig& cfg, LossBreakdown* breakdown) {
    if (!cfg.full_resolution) return training_loss(pred, target, cfg, breakdown);
    const int star = match(pred, target, cfg).winner_index;
    return assemble_loss(pred, star, upsampled_seg_terms(query_row(pred, star), pred, full, cfg), cfg,
                         breakdown);
}

double training_loss_value(const mask_head::MaskLogits& pred, std::span<const BinaryMask> gt,
                           const CostConfig& cfg) {
    ag::NoGradGuard guard;
    return training_loss(pred, prepare_targets(gt, pred.height, pred.width), cfg).item();
}

}  // namespace avs::objective
