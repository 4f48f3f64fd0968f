#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "avs/core_types.hpp"

namespace avs::metrics {

// |pred & gt| / |pred | gt|; 1.0 when both masks are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

// (1 + b2) P R / (b2 P + R). Both empty -> 1, exactly one empty -> 0.
double f_measure(const BinaryMask& pred, const BinaryMask& gt, double beta2 = 1.0);

struct Scores {
    std::vector<double> iou;
    std::vector<double> f;
};

class EvalAccumulator {
public:
    void add(const std::string& cls, double iou_value, double f_value);
    // Frame-averaged scores of one clip.
    void add(const std::string& cls, std::span<const BinaryMask> pred, std::span<const BinaryMask> gt,
             double beta2 = 1.0);

    const Scores& overall() const { return overall_; }
    const std::map<std::string, Scores>& per_class() const { return per_class_; }
    std::size_t size() const { return overall_.iou.size(); }

private:
    Scores overall_;
    std::map<std::string, Scores> per_class_;
};

struct ClassSummary {
    std::size_t samples = 0;
    double mean_iou = 0.0;
    double mean_f = 0.0;
};

struct EvalReport {
    std::size_t samples = 0;
    double mean_iou = 0.0;  // M_J
    double mean_f = 0.0;    // M_F
    std::map<std::string, ClassSummary> per_class;
};

// Overall means are over samples, not over classes. Throws EmptyAccumulator.
EvalReport aggregate(const EvalAccumulator& acc);

std::string report_json(const EvalReport& report, int indent = 2);
// One column per class followed by "mean"; rows M_J and M_F.
std::string report_table(const EvalReport& report);

}  // namespace avs::metrics
