#include "avs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "avs/errors.hpp"
#include "avs/training.hpp"

namespace avs::experiments {

metrics::EvalAccumulator evaluate(const AutrModel& model, const std::vector<data::Sample>& samples, double beta2) {
    metrics::EvalAccumulator acc;
    for (const auto& s : samples) {
        const auto sel = model.predict(s.inputs, s.height, s.width);
        acc.add(s.cls, sel.masks, s.masks, beta2);
    }
    return acc;
}

ZeroShotResult run_zero_shot(const AutrModel& model, const std::vector<std::string>& vocabulary,
                             const std::vector<data::Sample>& eval, double beta2) {
    const std::set<std::string> vocab(vocabulary.begin(), vocabulary.end());
    std::vector<data::Sample> kept;
    std::set<std::string> skipped;
    ZeroShotResult r;
    for (const auto& s : eval) {
        if (vocab.empty() || vocab.count(s.cls)) {
            kept.push_back(s);
        } else {
            skipped.insert(s.cls);
            ++r.skipped;
        }
    }
    r.evaluable = kept.size();
    r.skipped_classes.assign(skipped.begin(), skipped.end());
    if (!kept.empty()) r.report = metrics::aggregate(evaluate(model, kept, beta2));
    return r;
}

std::vector<std::size_t> stratified_subset(const std::vector<data::Sample>& samples, double fraction,
                                           std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fractions must lie in [0, 1]");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].cls].push_back(i);
    nn::Rng rng(seed);
    std::vector<std::size_t> out;
    for (auto& [cls, idx] : by_class) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return samples[a].id < samples[b].id; });
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
        std::size_t take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
        if (fraction > 0.0) take = std::max<std::size_t>(take, 1);
        take = std::min(take, idx.size());
        out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::vector<data::Sample> pick(const std::vector<data::Sample>& all, const std::vector<std::size_t>& idx) {
    std::vector<data::Sample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

std::vector<std::vector<double>> snapshot(const nn::ParamList& params) {
    std::vector<std::vector<double>> out;
    for (const auto& p : params) out.emplace_back(p.var.value().begin(), p.var.value().end());
    return out;
}

void load_snapshot(nn::ParamList& params, const std::vector<std::vector<double>>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::copy(snap[i].begin(), snap[i].end(), params[i].var.mutable_value().begin());
    }
}

SweepRow finetune_arm(const RunConfig& cfg, const Checkpoint* pretrained, double fraction,
                      const std::vector<data::Sample>& pool, const std::vector<data::Sample>& val,
                      const std::vector<data::Sample>& test, const SweepOptions& opts) {
    SweepRow row;
    row.fraction = fraction;
    row.pretrained = pretrained != nullptr;
    AutrModel model(cfg.model, cfg.seed);
    if (pretrained) {
        nn::ParamList all = model.parameters();
        import_parameters(*pretrained, all);
    }
    if (fraction <= 0.0) {
        row.last = metrics::aggregate(evaluate(model, test, cfg.eval.beta2));
        return row;
    }
    const auto train = pick(pool, stratified_subset(pool, fraction, cfg.seed));
    row.train_samples = train.size();
    training::Trainer trainer(model, cfg);
    const std::uint64_t total = trainer.scheduled_steps(train.size());
    row.steps = total;

    nn::ParamList params = model.trainable_parameters();
    const bool track = !val.empty() && opts.val_checks > 0 && total > 0;
    const std::uint64_t every = track ? std::max<std::uint64_t>(1, total / static_cast<std::uint64_t>(opts.val_checks)) : 0;
    double best = -1.0;
    std::vector<std::vector<double>> best_weights;
    auto check = [&](std::uint64_t step) {
        const double score = metrics::aggregate(evaluate(model, val, cfg.eval.beta2)).mean_iou;
        if (score > best) {
            best = score;
            best_weights = snapshot(params);
            row.best_step = step;
        }
    };
    if (track) check(0);
    trainer.run(train, total, [&](const training::StepLog& log) {
        if (track && (log.step % every == 0 || log.step == total)) check(log.step);
    });
    row.last = metrics::aggregate(evaluate(model, test, cfg.eval.beta2));
    if (track) {
        load_snapshot(params, best_weights);
        row.best_val = metrics::aggregate(evaluate(model, test, cfg.eval.beta2));
    }
    return row;
}

}  // namespace

SweepResult run_finetune_sweep(const RunConfig& cfg, const Checkpoint& pretrained,
                               const std::vector<data::Sample>& real_train,
                               const std::vector<data::Sample>& real_test, const SweepOptions& opts) {
    if (real_test.empty()) throw Error("finetune sweep needs evaluation samples");
    for (double f : opts.fractions) {
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in [0, 1]");
    }
    SweepResult result;
    std::vector<data::Sample> pool = real_train;
    std::vector<data::Sample> val;
    if (opts.val_fraction > 0.0) {
        const auto val_idx = stratified_subset(real_train, opts.val_fraction, cfg.seed + 1);
        const std::set<std::size_t> held(val_idx.begin(), val_idx.end());
        pool.clear();
        for (std::size_t i = 0; i < real_train.size(); ++i) {
            (held.count(i) ? val : pool).push_back(real_train[i]);
        }
    }
    result.pool_samples = pool.size();
    result.val_samples = val.size();
    result.test_samples = real_test.size();
    for (double f : opts.fractions) {
        result.rows.push_back(finetune_arm(cfg, &pretrained, f, pool, val, real_test, opts));
        result.rows.push_back(finetune_arm(cfg, nullptr, f, pool, val, real_test, opts));
    }
    return result;
}

std::pair<synthesis::DatasetManifest, synthesis::DatasetManifest> make_openset_split(
    const synthesis::DatasetManifest& manifest, int n_seen, std::uint64_t seed) {
    std::set<std::string> class_set;
    for (const auto& s : manifest.samples) class_set.insert(s.canonical_class);
    std::vector<std::string> classes(class_set.begin(), class_set.end());
    if (n_seen < 1 || n_seen >= static_cast<int>(classes.size())) {
        throw TooFewClasses("open-set split needs 1 <= n_seen < " + std::to_string(classes.size()) +
                            " classes, got n_seen = " + std::to_string(n_seen));
    }
    nn::Rng rng(seed);
    for (std::size_t i = classes.size(); i > 1; --i) std::swap(classes[i - 1], classes[rng.index(i)]);
    const std::set<std::string> seen(classes.begin(), classes.begin() + n_seen);

    std::pair<synthesis::DatasetManifest, synthesis::DatasetManifest> out;
    out.first.seed = out.second.seed = manifest.seed;
    for (const auto& s : manifest.samples) {
        auto& side = seen.count(s.canonical_class) ? out.first : out.second;
        side.samples.push_back(s);
        ++side.class_counts[s.canonical_class];
    }
    return out;
}

SelectivityResult audio_selectivity(const AutrModel& model, const std::vector<data::Sample>& eval,
                                    const std::vector<synthesis::TripletSample>& instances) {
    std::map<std::string, std::vector<const synthesis::TripletSample*>> by_image;
    for (const auto& t : instances) by_image[t.image_uri].push_back(&t);

    SelectivityResult r;
    for (const auto& s : eval) {
        const auto it = by_image.find(s.image_uri);
        if (it == by_image.end()) continue;
        BinaryMask silent(s.height, s.width);
        bool any = false;
        for (const auto* other : it->second) {
            const BinaryMask m = rle_decode(other->mask);
            if (m == s.masks.front()) continue;
            for (int y = 0; y < s.height; ++y) {
                for (int x = 0; x < s.width; ++x) {
                    if (m.at(y, x)) silent.set(y, x, true);
                }
            }
            any = true;
        }
        if (!any) continue;
        const auto sel = model.predict(s.inputs, s.height, s.width);
        const double j_sound = metrics::iou(sel.masks.front(), s.masks.front());
        const double j_silent = metrics::iou(sel.masks.front(), silent);
        r.sounding_iou.push_back(j_sound);
        r.silent_iou.push_back(j_silent);
        ++r.samples;
        if (j_sound > j_silent) ++r.wins;
    }
    return r;
}

}  // namespace avs::experiments
