#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avs/autograd.hpp"
#include "avs/core_types.hpp"
#include "avs/mask_head.hpp"

namespace avs::objective {

struct CostConfig {
    double lambda_dice = 1.0;
    double lambda_focal = 2.0;
    double lambda_sound = 1.0;
    double focal_gamma = 2.0;
    double focal_alpha = 0.25;
    double dice_eps = 1.0;
    // Training only: score the matched query's logits bilinearly upsampled to
    // the ground-truth size instead of against the target on the logit grid.
    bool full_resolution = true;

    void validate() const;
};

struct CostTerms {
    double dice = 0.0;
    double focal = 0.0;
    double sound = 0.0;
    double total = 0.0;
};

struct MatchResult {
    int winner_index = 0;
    std::vector<CostTerms> per_query_costs;
    double total_cost = 0.0;  // total of the winner
};

// Logits and targets are [T, H, W] flattened; `frames` splits them into
// equal planes. Dice is computed per frame and averaged.
double dice_cost(std::span<const double> logits, std::span<const std::uint8_t> target, int frames,
                 double eps);
// Writes d(dice_cost)/d(logits) into `grad` (same length as logits).
void dice_cost_grad(std::span<const double> logits, std::span<const std::uint8_t> target,
                    int frames, double eps, std::span<double> grad);

// Mean over pixels of -alpha_t (1 - p_t)^gamma log(p_t).
double focal_cost(std::span<const double> logits, std::span<const std::uint8_t> target,
                  double gamma, double alpha);
void focal_cost_grad(std::span<const double> logits, std::span<const std::uint8_t> target,
                     double gamma, double alpha, std::span<double> grad);

// Binary cross-entropy with logits.
double sound_cost(double score, int label);
double sound_cost_grad(double score, int label);

double softplus(double x);

// Resizes each frame's ground truth to (h, w) at threshold 0.5 and flattens
// to [T, h, w]. Throws ShapeError on an empty sequence.
std::vector<std::uint8_t> prepare_targets(std::span<const BinaryMask> gt, int h, int w);

// Evaluates the weighted cost of every query against one ground truth, with
// the sounding label fixed to 1; lowest total wins, ties to the lowest index.
MatchResult match(const mask_head::MaskLogits& pred, std::span<const std::uint8_t> target,
                  const CostConfig& cfg);
MatchResult match(const mask_head::MaskLogits& pred, std::span<const BinaryMask> gt,
                  const CostConfig& cfg);

struct LossBreakdown {
    double dice = 0.0;
    double focal = 0.0;
    double sound = 0.0;
    double total = 0.0;
    int matched = 0;
};

// Dice and focal on the matched query only; sounding BCE on all queries
// (label 1 for the match, 0 otherwise), averaged over queries. Returns a
// differentiable scalar.
ag::Var training_loss(const mask_head::MaskLogits& pred, std::span<const std::uint8_t> target,
                      const CostConfig& cfg, LossBreakdown* breakdown = nullptr);

// Ground truth at input resolution, [T, height, width] flattened.
struct FullTarget {
    std::span<const std::uint8_t> bits;
    int height = 0;
    int width = 0;
};

// As above, with matching on the logit grid and, when cfg.full_resolution is
// set, dice and focal of the matched query taken at the size of `full`.
ag::Var training_loss(const mask_head::MaskLogits& pred, std::span<const std::uint8_t> target,
                      const FullTarget& full, const CostConfig& cfg,
                      LossBreakdown* breakdown = nullptr);
double training_loss_value(const mask_head::MaskLogits& pred, std::span<const BinaryMask> gt,
                           const CostConfig& cfg);

}  // namespace avs::objective
