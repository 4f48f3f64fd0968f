// avs: fixture generation, dataset synthesis, training and evaluation.
#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "avs/checkpoint.hpp"
#include "avs/config.hpp"
#include "avs/dataset.hpp"
#include "avs/errors.hpp"
#include "avs/experiments.hpp"
#include "avs/fixtures.hpp"
#include "avs/report.hpp"
#include "avs/synthesis.hpp"
#include "avs/training.hpp"

namespace fs = std::filesystem;
using namespace avs;

namespace {

bool deterministic_mode() {
    const char* v = std::getenv("AVS_DETERMINISTIC");
    return v && std::string(v) == "1";
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
}

void require_file(const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string(what) + " is not set");
    if (!fs::exists(p)) throw IoError(std::string(what) + " does not exist: " + p.string());
}

RunConfig build_config(const std::string& file, const std::vector<std::string>& overrides) {
    RunConfig cfg = file.empty() ? RunConfig{} : load_config(file);
    for (const auto& o : overrides) apply_override(cfg, o);
    cfg.validate();
    return cfg;
}

std::vector<synthesis::TripletSample> select_split(const synthesis::DatasetManifest& m, const std::string& split) {
    if (split == "all") return m.samples;
    return m.subset(synthesis::parse_split(split));
}

std::vector<std::string> classes_of(const std::vector<synthesis::TripletSample>& samples) {
    std::set<std::string> s;
    for (const auto& t : samples) s.insert(t.canonical_class);
    return {s.begin(), s.end()};
}

void emit(const std::string& json, const std::string& table, const std::string& json_path, bool quiet) {
    if (!json_path.empty()) write_text(json_path, json + "\n");
    if (!quiet) std::cout << table;
    if (json_path.empty()) std::cout << json << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    if (deterministic_mode()) Eigen::setNbThreads(1);

    CLI::App app{"annotation-free audio-visual segmentation toolkit"};
    app.require_subcommand(1);

    // fixtures
    auto* fx = app.add_subcommand("fixtures", "generate a procedural shapes-and-tones corpus");
    std::string fx_out;
    int fx_n = 100;
    std::uint64_t fx_seed = 0;
    std::string fx_style = "synthetic";
    int fx_canvas = 64;
    int fx_min = 1, fx_max = 3;
    int fx_clips = 4;
    bool fx_two = false;
    fx->add_option("--out", fx_out, "output directory")->required();
    fx->add_option("-n,--count", fx_n, "number of images");
    fx->add_option("--seed", fx_seed, "generator seed");
    fx->add_option("--style", fx_style, "synthetic | real")->check(CLI::IsMember({"synthetic", "real"}));
    fx->add_option("--canvas", fx_canvas, "image side in pixels (multiple of 32)");
    fx->add_option("--min-instances", fx_min, "objects per image, lower bound");
    fx->add_option("--max-instances", fx_max, "objects per image, upper bound");
    fx->add_option("--clips-per-class", fx_clips, "audio clips per class");
    fx->add_flag("--two-object", fx_two, "exactly two objects of different classes per image");
    bool fx_random_colors = false;
    fx->add_flag("--random-colors", fx_random_colors, "draw object hues at random instead of per class");

    // synthesize
    auto* sy = app.add_subcommand("synthesize", "compose triplets from visual and audio corpora");
    std::vector<std::string> sy_visual, sy_audio;
    std::string sy_aliases, sy_out, sy_json;
    double sy_test = 0.2;
    std::uint64_t sy_seed = 0;
    sy->add_option("--visual", sy_visual, "visual source, name=path (COCO .json or Open Images .csv)")->required();
    sy->add_option("--audio", sy_audio, "audio source, name=path (.csv)")->required();
    sy->add_option("--aliases", sy_aliases, "alias table (TSV)")->required();
    sy->add_option("--out", sy_out, "manifest path")->required();
    sy->add_option("--test-fraction", sy_test, "held-out share per class");
    sy->add_option("--seed", sy_seed, "composition seed");
    sy->add_option("--report", sy_json, "write the synthesis statistics as JSON");

    // shared run options
    std::string cfg_file;
    std::vector<std::string> overrides;
    auto add_run_options = [&](CLI::App* sub) {
        sub->add_option("-c,--config", cfg_file, "config file");
        sub->add_option("--set", overrides, "override, dotted.key=value (repeatable)");
    };

    // train
    auto* tr = app.add_subcommand("train", "train a model on the train split of a manifest");
    std::string tr_manifest, tr_out, tr_resume, tr_log;
    add_run_options(tr);
    tr->add_option("--manifest", tr_manifest, "training manifest (overrides data.train_manifest)");
    tr->add_option("--out", tr_out, "checkpoint path")->required();
    tr->add_option("--resume", tr_resume, "continue from a checkpoint");
    tr->add_option("--log", tr_log, "loss log CSV (default: <out>.loss.csv)");

    // eval / zero-shot
    std::string ev_ckpt, ev_manifest, ev_split = "test", ev_json;
    bool ev_quiet = false;
    auto add_eval_options = [&](CLI::App* sub) {
        sub->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
        sub->add_option("--manifest", ev_manifest, "evaluation manifest")->required();
        sub->add_option("--split", ev_split, "train | test | all")->check(CLI::IsMember({"train", "test", "all"}));
        sub->add_option("--json", ev_json, "write the JSON report here instead of stdout");
        sub->add_flag("-q,--quiet", ev_quiet, "omit the text table");
    };
    auto* ev = app.add_subcommand("eval", "M_J / M_F of a checkpoint on a manifest split");
    add_eval_options(ev);
    double ev_beta2 = -1.0;
    ev->add_option("--beta2", ev_beta2, "F-measure beta squared (default from the checkpoint config)");
    auto* zs = app.add_subcommand("zero-shot", "evaluate on another domain, restricted to the training vocabulary");
    add_eval_options(zs);

    // finetune-sweep
    auto* fs_cmd = app.add_subcommand("finetune-sweep", "data-efficient finetuning table");
    std::string sw_ckpt, sw_manifest, sw_json;
    std::vector<double> sw_fractions{0.0, 0.1, 0.2, 0.3, 1.0};
    double sw_val = 0.2;
    add_run_options(fs_cmd);
    fs_cmd->add_option("--checkpoint", sw_ckpt, "pretrained checkpoint")->required();
    fs_cmd->add_option("--manifest", sw_manifest, "real-domain manifest (train split finetunes, test split evaluates)")->required();
    fs_cmd->add_option("--fractions", sw_fractions, "fractions of the real training pool")->delimiter(',');
    fs_cmd->add_option("--val-fraction", sw_val, "share of real train held back for best-val selection");
    fs_cmd->add_option("--json", sw_json, "write the JSON table here");

    // split-openset
    auto* so = app.add_subcommand("split-openset", "class-disjoint seen/unseen manifests");
    std::string so_manifest, so_seen, so_unseen;
    int so_n = 1;
    std::uint64_t so_seed = 0;
    so->add_option("--manifest", so_manifest, "input manifest")->required();
    so->add_option("--n-seen", so_n, "number of seen classes")->required();
    so->add_option("--seed", so_seed, "split seed");
    so->add_option("--seen-out", so_seen, "seen-class manifest")->required();
    so->add_option("--unseen-out", so_unseen, "unseen-class manifest")->required();

    // config
    auto* cf = app.add_subcommand("config", "print every config key with its default");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fx->parsed()) {
            fixtures::FixtureSpec spec = fx_two ? fixtures::two_object_spec() : fixtures::default_spec();
            spec.style = fixtures::parse_style(fx_style);
            spec.canvas = fx_canvas;
            spec.clips_per_class = fx_clips;
            if (fx_random_colors) fixtures::randomize_colors(spec);
            if (!fx_two) {
                spec.min_instances = fx_min;
                spec.max_instances = fx_max;
            }
            const auto out = fixtures::generate_fixtures(spec, fx_n, fx_seed, fx_out);
            std::cout << "images " << out.images << ", instances " << out.instances << ", clips " << out.clips << '\n'
                      << "visual  " << out.visual_annotations.string() << '\n'
                      << "audio   " << out.audio_annotations.string() << '\n'
                      << "aliases " << out.alias_table.string() << '\n';
        } else if (sy->parsed()) {
            std::vector<synthesis::SourceSpec> vs, as;
            for (const auto& s : sy_visual) vs.push_back(synthesis::parse_source_spec(s));
            for (const auto& s : sy_audio) as.push_back(synthesis::parse_source_spec(s));
            const auto table = ontology::load_alias_table(sy_aliases);
            const auto rep = synthesis::synthesize(vs, as, table, sy_test, sy_seed);
            synthesis::write_manifest(sy_out, rep.manifest);
            if (!sy_json.empty()) write_text(sy_json, report::synthesis_json(rep) + "\n");
            std::cout << report::synthesis_table(rep);
        } else if (tr->parsed()) {
            RunConfig cfg = build_config(cfg_file, overrides);
            if (!tr_manifest.empty()) cfg.data.train_manifest = tr_manifest;
            require_file(cfg.data.train_manifest, "data.train_manifest");
            const auto manifest = synthesis::read_manifest(cfg.data.train_manifest);
            const auto triplets = manifest.subset(synthesis::Split::kTrain);
            if (triplets.empty()) throw Error("manifest has no training samples");
            cfg.data.classes = join_classes(classes_of(triplets));

            AutrModel model(cfg.model, cfg.seed);
            training::Trainer trainer(model, cfg);
            if (!tr_resume.empty()) {
                const Checkpoint ck = load_checkpoint(tr_resume);
                trainer.restore(ck);
            }
            const auto samples = data::load_samples(triplets, model.backbones(), cfg.audio);
            const auto total = trainer.scheduled_steps(samples.size());
            std::cerr << "training on " << samples.size() << " samples for " << total << " steps ("
                      << model.trainable_count() << " trainable parameters)\n";
            const auto result = trainer.run(samples, total, [&](const training::StepLog& s) {
                if (s.step % 50 == 0 || s.step == total) {
                    std::cerr << "step " << s.step << " loss " << s.loss << '\n';
                }
            });
            if (result.frozen_checksum_before != result.frozen_checksum_after) {
                throw Error("frozen backbone parameters changed during training");
            }
            save_checkpoint(tr_out, trainer.checkpoint());
            write_text(tr_log.empty() ? tr_out + ".loss.csv" : tr_log, report::loss_log_csv(result.log));
            std::cout << "saved " << tr_out << " at step " << trainer.step() << '\n';
        } else if (ev->parsed() || zs->parsed()) {
            const Checkpoint ck = load_checkpoint(ev_ckpt);
            RunConfig cfg;
            const AutrModel model = training::model_from_checkpoint(ck, &cfg);
            const auto manifest = synthesis::read_manifest(ev_manifest);
            const auto triplets = select_split(manifest, ev_split);
            const auto samples = data::load_samples(triplets, model.backbones(), cfg.audio);
            if (ev->parsed()) {
                const double beta2 = ev_beta2 > 0.0 ? ev_beta2 : cfg.eval.beta2;
                const auto rep = metrics::aggregate(experiments::evaluate(model, samples, beta2));
                emit(metrics::report_json(rep), metrics::report_table(rep), ev_json, ev_quiet);
            } else {
                const auto r = experiments::run_zero_shot(model, split_classes(cfg.data.classes), samples, cfg.eval.beta2);
                emit(report::zero_shot_json(r), report::zero_shot_table(r), ev_json, ev_quiet);
            }
        } else if (fs_cmd->parsed()) {
            const Checkpoint ck = load_checkpoint(sw_ckpt);
            RunConfig cfg = training::config_from_checkpoint(ck);
            if (!cfg_file.empty()) cfg = load_config(cfg_file, cfg);
            for (const auto& o : overrides) apply_override(cfg, o);
            cfg.validate();
            const auto manifest = synthesis::read_manifest(sw_manifest);
            const Backbones bb = make_toy_backbones(cfg.model);
            data::FeatureCache cache;
            const auto train = data::load_samples(manifest.subset(synthesis::Split::kTrain), bb, cfg.audio, &cache);
            const auto test = data::load_samples(manifest.subset(synthesis::Split::kTest), bb, cfg.audio, &cache);
            experiments::SweepOptions opts;
            opts.fractions = sw_fractions;
            opts.val_fraction = sw_val;
            const auto r = experiments::run_finetune_sweep(cfg, ck, train, test, opts);
            emit(report::sweep_json(r), report::sweep_table(r), sw_json, false);
        } else if (so->parsed()) {
            const auto manifest = synthesis::read_manifest(so_manifest);
            const auto [seen, unseen] = experiments::make_openset_split(manifest, so_n, so_seed);
            synthesis::write_manifest(so_seen, seen);
            synthesis::write_manifest(so_unseen, unseen);
            std::cout << "seen:  " << join_classes(classes_of(seen.samples)) << " (" << seen.samples.size() << " samples)\n"
                      << "unseen: " << join_classes(classes_of(unseen.samples)) << " (" << unseen.samples.size()
                      << " samples)\n";
        } else if (cf->parsed()) {
            for (const auto& k : config_keys()) {
                std::cout << k.key << " = " << k.default_value << "    # " << k.help << '\n';
            }
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << " (line " << e.line() << ")\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
