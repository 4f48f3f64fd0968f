#include "avs/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "avs/errors.hpp"

namespace avs::metrics {

namespace {

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0;
};

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw ShapeError("metric masks differ in shape");
    }
    Confusion c;
    const auto p = pred.bits();
    const auto g = gt.bits();
    for (std::size_t i = 0; i < p.size(); ++i) {
        c.tp += p[i] & g[i];
        c.fp += p[i] & (g[i] ^ 1);
        c.fn += (p[i] ^ 1) & g[i];
    }
    return c;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double iou(const BinaryMask& pred, const BinaryMask& gt) {
    const auto c = confusion(pred, gt);
    const std::size_t uni = c.tp + c.fp + c.fn;
    if (uni == 0) return 1.0;
    return static_cast<double>(c.tp) / static_cast<double>(uni);
}

double f_measure(const BinaryMask& pred, const BinaryMask& gt, double beta2) {
    const auto c = confusion(pred, gt);
    const bool pred_empty = c.tp + c.fp == 0;
    const bool gt_empty = c.tp + c.fn == 0;
    if (pred_empty && gt_empty) return 1.0;
    if (pred_empty || gt_empty || c.tp == 0) return 0.0;
    const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return (1.0 + beta2) * precision * recall / (beta2 * precision + recall);
}

void EvalAccumulator::add(const std::string& cls, double iou_value, double f_value) {
    if (!(iou_value >= 0.0 && iou_value <= 1.0 && f_value >= 0.0 && f_value <= 1.0)) {
        throw Error("metric values must lie in [0, 1]");
    }
    overall_.iou.push_back(iou_value);
    overall_.f.push_back(f_value);
    auto& bucket = per_class_[cls];
    bucket.iou.push_back(iou_value);
    bucket.f.push_back(f_value);
}

void EvalAccumulator::add(const std::string& cls, std::span<const BinaryMask> pred,
                          std::span<const BinaryMask> gt, double beta2) {
    if (pred.size() != gt.size() || pred.empty()) throw ShapeError("frame count mismatch in eval");
    double j = 0.0, f = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        j += iou(pred[t], gt[t]);
        f += f_measure(pred[t], gt[t], beta2);
    }
    add(cls, j / static_cast<double>(pred.size()), f / static_cast<double>(pred.size()));
}

EvalReport aggregate(const EvalAccumulator& acc) {
    if (acc.size() == 0) throw EmptyAccumulator("no samples were evaluated");
    EvalReport r;
    r.samples = acc.size();
    r.mean_iou = mean(acc.overall().iou);
    r.mean_f = mean(acc.overall().f);
    for (const auto& [cls, s] : acc.per_class()) {
        r.per_class[cls] = {s.iou.size(), mean(s.iou), mean(s.f)};
    }
    return r;
}

std::string report_json(const EvalReport& report, int indent) {
    nlohmann::ordered_json j;
    j["samples"] = report.samples;
    j["mean"] = {{"M_J", report.mean_iou}, {"M_F", report.mean_f}};
    j["classes"] = nlohmann::ordered_json::object();
    for (const auto& [cls, s] : report.per_class) {
        j["classes"][cls] = {{"samples", s.samples}, {"M_J", s.mean_iou}, {"M_F", s.mean_f}};
    }
    return j.dump(indent);
}

std::string report_table(const EvalReport& report) {
    std::vector<std::string> headers;
    for (const auto& [cls, s] : report.per_class) headers.push_back(cls);
    headers.push_back("mean");
    std::vector<std::size_t> widths;
    for (const auto& h : headers) widths.push_back(std::max<std::size_t>(h.size(), 6));

    std::ostringstream out;
    out << std::left << std::setw(6) << "metric";
    for (std::size_t i = 0; i < headers.size(); ++i) out << "  " << std::right << std::setw(static_cast<int>(widths[i])) << headers[i];
    out << '\n';
    auto row = [&](const char* name, bool use_iou) {
        out << std::left << std::setw(6) << name;
        std::size_t i = 0;
        for (const auto& [cls, s] : report.per_class) {
            out << "  " << std::right << std::setw(static_cast<int>(widths[i++])) << std::fixed
                << std::setprecision(use_iou ? 1 : 3) << (use_iou ? 100.0 * s.mean_iou : s.mean_f);
        }
        out << "  " << std::right << std::setw(static_cast<int>(widths[i])) << std::fixed
            << std::setprecision(use_iou ? 1 : 3) << (use_iou ? 100.0 * report.mean_iou : report.mean_f)
            << '\n';
    };
    row("M_J", true);
    row("M_F", false);
    out << "samples: " << report.samples << '\n';
    return out.str();
}

}  // namespace avs::metrics
