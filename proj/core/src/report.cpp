#include "avs/report.hpp"

#include <cstdio>
#include <iomanip>
#include <json.hpp>
#include <sstream>

namespace avs::report {

using ojson = nlohmann::ordered_json;

namespace {

ojson report_object(const metrics::EvalReport& r) { return ojson::parse(metrics::report_json(r, -1)); }

std::string cell(double v, int precision, int width) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << std::setw(width) << v;
    return os.str();
}

}  // namespace

std::string zero_shot_json(const experiments::ZeroShotResult& r) {
    ojson j;
    j["evaluable_samples"] = r.evaluable;
    j["skipped_samples"] = r.skipped;
    j["skipped_classes"] = r.skipped_classes;
    if (r.report) {
        j["report"] = report_object(*r.report);
    } else {
        j["report"] = nullptr;
        j["note"] = "no evaluation sample shares a class with the training vocabulary";
    }
    return j.dump(2);
}

std::string zero_shot_table(const experiments::ZeroShotResult& r) {
    std::ostringstream out;
    if (r.report) {
        out << metrics::report_table(*r.report);
    } else {
        out << "no evaluable samples (zero class overlap)\n";
    }
    if (r.skipped) out << "skipped " << r.skipped << " samples of unseen classes\n";
    return out.str();
}

std::string sweep_json(const experiments::SweepResult& r) {
    ojson j;
    j["pool_samples"] = r.pool_samples;
    j["val_samples"] = r.val_samples;
    j["test_samples"] = r.test_samples;
    j["rows"] = ojson::array();
    for (const auto& row : r.rows) {
        ojson o;
        o["fraction"] = row.fraction;
        o["arm"] = row.pretrained ? "pretrained" : "scratch";
        o["train_samples"] = row.train_samples;
        o["steps"] = row.steps;
        o["last"] = {{"M_J", row.last.mean_iou}, {"M_F", row.last.mean_f}};
        if (row.best_val) {
            o["best_val"] = {{"M_J", row.best_val->mean_iou}, {"M_F", row.best_val->mean_f}, {"step", row.best_step}};
        } else {
            o["best_val"] = nullptr;
        }
        j["rows"].push_back(o);
    }
    return j.dump(2);
}

std::string sweep_table(const experiments::SweepResult& r) {
    std::ostringstream out;
    out << "fraction |   scratch M_J    M_F |  pretrain M_J    M_F | best-val scratch M_J | best-val pretrain M_J\n";
    for (std::size_t i = 0; i + 1 < r.rows.size(); i += 2) {
        const auto& pre = r.rows[i].pretrained ? r.rows[i] : r.rows[i + 1];
        const auto& scr = r.rows[i].pretrained ? r.rows[i + 1] : r.rows[i];
        char pct[16];
        std::snprintf(pct, sizeof pct, "%7.0f%%", 100.0 * pre.fraction);
        out << pct << " | " << cell(100.0 * scr.last.mean_iou, 1, 12) << ' ' << cell(scr.last.mean_f, 3, 6) << " | "
            << cell(100.0 * pre.last.mean_iou, 1, 12) << ' ' << cell(pre.last.mean_f, 3, 6) << " | ";
        out << (scr.best_val ? cell(100.0 * scr.best_val->mean_iou, 1, 20) : std::string(20, '-')) << " | ";
        out << (pre.best_val ? cell(100.0 * pre.best_val->mean_iou, 1, 21) : std::string(21, '-')) << '\n';
    }
    return out.str();
}

std::string selectivity_json(const experiments::SelectivityResult& r) {
    ojson j;
    j["samples"] = r.samples;
    j["wins"] = r.wins;
    j["rate"] = r.rate();
    double a = 0.0, b = 0.0;
    for (double v : r.sounding_iou) a += v;
    for (double v : r.silent_iou) b += v;
    j["mean_iou_sounding"] = r.samples ? a / static_cast<double>(r.samples) : 0.0;
    j["mean_iou_silent"] = r.samples ? b / static_cast<double>(r.samples) : 0.0;
    return j.dump(2);
}

std::string loss_log_csv(const std::vector<training::StepLog>& log) {
    std::ostringstream out;
    out << "step,epoch,loss,dice,focal,sound\n" << std::setprecision(9);
    for (const auto& s : log) {
        out << s.step << ',' << s.epoch << ',' << s.loss << ',' << s.dice << ',' << s.focal << ',' << s.sound << '\n';
    }
    return out.str();
}

std::string synthesis_json(const synthesis::SynthesisReport& r) {
    ojson j;
    auto stats = [](const synthesis::CollectStats& s) {
        return ojson{{"seen", s.seen}, {"kept", s.kept}, {"unresolved", s.unresolved}, {"malformed", s.malformed}};
    };
    j["visual"] = stats(r.visual);
    j["audio"] = stats(r.audio);
    j["samples"] = r.manifest.samples.size();
    j["train"] = r.manifest.count(synthesis::Split::kTrain);
    j["test"] = r.manifest.count(synthesis::Split::kTest);
    j["class_counts"] = r.manifest.class_counts;
    return j.dump(2);
}

std::string synthesis_table(const synthesis::SynthesisReport& r) {
    std::ostringstream out;
    std::size_t width = 5;
    for (const auto& [cls, n] : r.manifest.class_counts) width = std::max(width, cls.size());
    out << std::left << std::setw(static_cast<int>(width)) << "class" << "  samples\n";
    for (const auto& [cls, n] : r.manifest.class_counts) {
        out << std::left << std::setw(static_cast<int>(width)) << cls << "  " << std::right << std::setw(7) << n << '\n';
    }
    out << std::left << std::setw(static_cast<int>(width)) << "total" << "  " << std::right << std::setw(7)
        << r.manifest.samples.size() << '\n';
    out << "train " << r.manifest.count(synthesis::Split::kTrain) << ", test " << r.manifest.count(synthesis::Split::kTest)
        << "; visual kept " << r.visual.kept << "/" << r.visual.seen << " (unresolved " << r.visual.unresolved
        << ", malformed " << r.visual.malformed << "); audio kept " << r.audio.kept << "/" << r.audio.seen << '\n';
    return out.str();
}

}  // namespace avs::report
