#include "xfbd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "xfbd/errors.hpp"
#include "xfbd/objects.hpp"

namespace fs = std::filesystem;

namespace xfbd {

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto begin = item.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        const auto end = item.find_last_not_of(" \t");
        items.push_back(item.substr(begin, end - begin + 1));
    }
    return items;
}

}  // namespace

Scene ingest_scene(const std::string& pre_path, const std::string& post_path,
                   const std::string& label_path,
                   const std::optional<std::string>& secondary_pre_path,
                   const std::string& scene_id) {
    Scene scene;
    scene.scene_id = scene_id.empty() ? fs::path(label_path).stem().string() : scene_id;
    scene.pre = read_png(pre_path);
    scene.post = read_png(post_path);
    if (!scene.pre.same_shape(scene.post))
        throw DimensionMismatch(scene.scene_id + ": pre and post images differ in shape");

    scene.annotation = annotation_from_json(read_text_file(label_path), scene.scene_id,
                                            scene.pre.width, scene.pre.height);
    if (scene.annotation.width != scene.pre.width ||
        scene.annotation.height != scene.pre.height) {
        scene.annotation.warnings.push_back("label metadata dimensions disagree with imagery; "
                                            "using image dimensions");
        scene.annotation.width = scene.pre.width;
        scene.annotation.height = scene.pre.height;
        clamp_annotation(scene.annotation);
    }

    if (secondary_pre_path) {
        scene.secondary_pre = read_png(*secondary_pre_path);
        if (!scene.secondary_pre->same_shape(scene.pre))
            throw DimensionMismatch(scene.scene_id +
                                    ": secondary pre-image differs in shape from the pre-image");
    }
    return scene;
}

std::vector<BuildingPolygon> select_blend_candidates(const Scene& scene,
                                                     const CandidatePolicy& policy) {
    std::vector<BuildingPolygon> candidates;
    for (const auto& building : scene.annotation.buildings) {
        if (!policy.eligible_classes.count(building.label)) continue;
        if (policy.exclude_uids.count(building.uid)) continue;
        int area = 0;
        raster_footprint_bbox(building, scene.annotation.width, scene.annotation.height, &area);
        if (area < policy.min_pixels) continue;
        try {
            make_blend_region(building, scene.annotation.width, scene.annotation.height,
                              policy.dilation_px);
        } catch (const RegionTouchesBorder&) {
            continue;
        } catch (const EmptyPolygon&) {
            continue;
        }
        candidates.push_back(building);
    }
    return candidates;
}

Sample generate_sample(const Scene& scene, const std::string& building_uid,
                       const BlendConfig& blend_config) {
    if (!scene.secondary_pre)
        throw MissingSecondaryPre(scene.scene_id + ": no secondary pre-image");

    const BuildingPolygon* building = nullptr;
    for (const auto& b : scene.annotation.buildings)
        if (b.uid == building_uid) building = &b;
    if (!building) throw Error(scene.scene_id + ": no building with uid " + building_uid);
    if (building->label != DamageClass::MinorDamage &&
        building->label != DamageClass::MajorDamage && building->label != DamageClass::Destroyed)
        throw Error(scene.scene_id + ": building " + building_uid +
                    " is not damaged and cannot be blended");

    Sample sample;
    sample.sample_id = scene.scene_id + "__" + building_uid;
    sample.blended_uid = building_uid;
    sample.blended_label = building->label;
    sample.pre = *scene.secondary_pre;

    const BlendRegion region = make_blend_region(*building, scene.annotation.width,
                                                 scene.annotation.height, blend_config.dilation_px);
    BlendResult blended = blend(scene.pre, scene.post, region, blend_config);
    sample.post_composite = std::move(blended.composite);
    sample.report = blended.report;

    // Every building except the blended one is re-labeled as undamaged.
    sample.rewritten = scene.annotation;
    sample.rewritten.scene_id = sample.sample_id;
    sample.rewritten.warnings.clear();
    for (auto& b : sample.rewritten.buildings)
        if (b.uid != building_uid) b.label = DamageClass::NoDamage;

    TargetMasks targets = build_target_masks(sample.rewritten);
    sample.target_loc = std::move(targets.loc);
    sample.target_dam = std::move(targets.dam);
    return sample;
}

RunConfig run_config_from(const Config& config) {
    RunConfig run;
    run.input_dir = config.get_string("input_dir", "");
    run.output_dir = config.get_string("output_dir", "");
    run.split = config.get_string("split", "train");
    run.workers = config.get_int("workers", 1);
    run.blend.dilation_px = config.get_int("dilation_px", run.blend.dilation_px);
    run.blend.cg_tolerance = config.get_double("cg_tolerance", run.blend.cg_tolerance);
    run.blend.cg_max_iters = config.get_int("cg_max_iters", run.blend.cg_max_iters);
    run.blend.window_margin_px = config.get_int("window_margin_px", run.blend.window_margin_px);
    run.policy.min_pixels = config.get_int("min_pixels", run.policy.min_pixels);
    run.policy.dilation_px = run.blend.dilation_px;
    if (config.has("eligible_classes")) {
        run.policy.eligible_classes.clear();
        for (const auto& name : split_list(config.get_string("eligible_classes", ""))) {
            bool known = false;
            const DamageClass cls = subtype_from_name(name, &known);
            if (!known) throw IoError("eligible_classes: unknown subtype '" + name + "'");
            run.policy.eligible_classes.insert(cls);
        }
    }
    for (const auto& uid : split_list(config.get_string("exclude_uids", "")))
        run.policy.exclude_uids.insert(uid);
    return run;
}

bool DatasetManifest::has_errors() const {
    return std::any_of(scenes.begin(), scenes.end(),
                       [](const SceneOutcome& s) { return !s.error.empty(); });
}

namespace {

struct SceneWork {
    SceneOutcome outcome;
    std::map<std::string, int> class_counts;
};

void self_check_sample(const std::string& output_dir, const Sample& sample) {
    const std::string base = output_dir + "/" + sample.sample_id;
    const SceneAnnotation labels = annotation_from_json(read_text_file(base + "_label.json"),
                                                        sample.sample_id);
    int damaged = 0;
    std::string damaged_uid;
    for (const auto& b : labels.buildings)
        if (b.label != DamageClass::NoDamage && b.label != DamageClass::Unclassified) {
            ++damaged;
            damaged_uid = b.uid;
        }
    if (damaged != 1 || damaged_uid != sample.blended_uid)
        throw Error(sample.sample_id + ": self-check failed, " + std::to_string(damaged) +
                    " damaged buildings in written labels (want exactly " + sample.blended_uid +
                    ")");

    const ClassMask mask = mask_from_image(read_png(base + "_target.png"));
    const auto code = static_cast<std::uint8_t>(sample.blended_label);
    for (const auto v : mask.data)
        if (v != 0 && v != 1 && v != code)
            throw Error(sample.sample_id + ": self-check failed, target mask value " +
                        std::to_string(v));
}

SceneWork process_scene(const std::string& stem, const RunConfig& config) {
    SceneWork work;
    work.outcome.scene_id = stem;
    const std::string base = config.input_dir + "/" + stem;

    const std::string secondary = base + "_secondary_pre.png";
    if (!fs::exists(secondary)) {
        work.outcome.skipped = "no secondary pre-image";
        return work;
    }
    const Scene scene = ingest_scene(base + "_pre.png", base + "_post.png", base + "_label.json",
                                     secondary, stem);
    for (const auto& candidate : select_blend_candidates(scene, config.policy)) {
        Sample sample = generate_sample(scene, candidate.uid, config.blend);
        const std::string out_base = config.output_dir + "/" + sample.sample_id;
        write_png(sample.pre, out_base + "_pre.png");
        write_png(sample.post_composite, out_base + "_post.png");
        write_png(mask_to_image(sample.target_dam), out_base + "_target.png");
        write_text_file(out_base + "_label.json", annotation_to_json(sample.rewritten));
        self_check_sample(config.output_dir, sample);
        ++work.outcome.samples;
        ++work.class_counts[subtype_name(sample.blended_label)];
    }
    return work;
}

}  // namespace

DatasetManifest generate_dataset(const RunConfig& config) {
    if (!fs::is_directory(config.input_dir))
        throw MissingFile("input_dir does not exist: " + config.input_dir);
    fs::create_directories(config.output_dir);
    {
        // Fail fast when the output location is not writable.
        const std::string probe = config.output_dir + "/.write_probe";
        write_text_file(probe, "");
        fs::remove(probe);
    }

    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(config.input_dir)) {
        const std::string name = entry.path().filename().string();
        constexpr std::string_view kSuffix = "_label.json";
        if (name.size() > kSuffix.size() && name.ends_with(kSuffix))
            stems.push_back(name.substr(0, name.size() - kSuffix.size()));
    }
    std::sort(stems.begin(), stems.end());

    std::vector<SceneWork> works(stems.size());
    const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(stems.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < stems.size(); ++i) {
            try {
                works[i] = process_scene(stems[i], config);
            } catch (const std::exception& e) {
                works[i].outcome.scene_id = stems[i];
                works[i].outcome.error = e.what();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next.fetch_add(1); i < stems.size(); i = next.fetch_add(1)) {
                try {
                    works[i] = process_scene(stems[i], config);
                } catch (const std::exception& e) {
                    works[i].outcome.scene_id = stems[i];
                    works[i].outcome.error = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    DatasetManifest manifest;
    manifest.split = config.split;
    for (const auto& work : works) {
        manifest.scenes.push_back(work.outcome);
        manifest.sample_count += work.outcome.samples;
        if (work.outcome.samples > 0) ++manifest.source_image_count;
        for (const auto& [name, count] : work.class_counts)
            manifest.per_class_counts[name] += count;
    }

    // The manifest must agree with what actually landed on disk.
    int on_disk = 0;
    for (const auto& entry : fs::directory_iterator(config.output_dir))
        if (entry.path().filename().string().ends_with("_label.json")) ++on_disk;
    if (on_disk != manifest.sample_count)
        throw IoError("manifest disagrees with output directory: " +
                      std::to_string(manifest.sample_count) + " samples recorded, " +
                      std::to_string(on_disk) + " label files on disk");

    write_text_file(config.output_dir + "/manifest.json", manifest_to_json(manifest));
    return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::json scenes = nlohmann::json::array();
    for (const auto& outcome : manifest.scenes) {
        nlohmann::json entry = {{"scene_id", outcome.scene_id}, {"samples", outcome.samples}};
        if (!outcome.skipped.empty()) entry["skipped"] = outcome.skipped;
        if (!outcome.error.empty()) entry["error"] = outcome.error;
        scenes.push_back(entry);
    }
    const nlohmann::json doc = {
        {"split", manifest.split},
        {"sample_count", manifest.sample_count},
        {"source_image_count", manifest.source_image_count},
        {"per_class_counts", manifest.per_class_counts},
        {"scenes", scenes},
    };
    return doc.dump(2);
}

namespace {

nlohmann::json counts_json(const F1Counts& counts) {
    return {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn}};
}

nlohmann::json report_json(const EvalReport& report) {
    nlohmann::json pixel_class, object_class, pixel_counts, object_counts;
    for (int c = 1; c <= 4; ++c) {
        const char* name = subtype_name(static_cast<DamageClass>(c));
        pixel_class[name] = report.pixel_class_f1[c - 1];
        object_class[name] = report.object_class_f1[c - 1];
        pixel_counts[name] = counts_json(report.pixel_counts.per_class[c - 1]);
        object_counts[name] = counts_json(report.object_counts.per_class[c - 1]);
    }
    nlohmann::json doc = {
        {"pixel",
         {{"localization_f1", report.pixel_localization_f1},
          {"per_class_f1", pixel_class},
          {"overall_damage_f1", report.overall_damage_f1},
          {"xview2_score", report.xview2}}},
        {"object",
         {{"localization_f1", report.object_localization_f1}, {"per_class_f1", object_class}}},
        {"counts",
         {{"ignored_pixels", report.ignore_count},
          {"pixel_localization", counts_json(report.pixel_counts.localization)},
          {"pixel", pixel_counts},
          {"object_localization", counts_json(report.object_counts.localization)},
          {"object", object_counts}}},
    };
    if (report.has_collapsed) {
        doc["collapsed"] = {{"low_f1", report.collapsed_low_f1},
                            {"high_f1", report.collapsed_high_f1}};
        doc["counts"]["collapsed"] = {{"low", counts_json(report.collapsed_low_counts)},
                                      {"high", counts_json(report.collapsed_high_counts)}};
    }
    return doc;
}

}  // namespace

ScoreRunResult score_run(const std::string& pred_dir, const std::string& gt_dir,
                         const EvalConfig& config) {
    if (!fs::is_directory(gt_dir)) throw MissingFile("gt_dir does not exist: " + gt_dir);
    if (!fs::is_directory(pred_dir)) throw MissingFile("pred_dir does not exist: " + pred_dir);

    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(gt_dir)) {
        const std::string name = entry.path().filename().string();
        constexpr std::string_view kSuffix = "_label.json";
        if (name.size() > kSuffix.size() && name.ends_with(kSuffix))
            stems.push_back(name.substr(0, name.size() - kSuffix.size()));
    }
    std::sort(stems.begin(), stems.end());

    ScoreRunResult result;
    EvalAccumulator accumulator;
    for (const auto& stem : stems) {
        std::string pred_path;
        for (const char* pattern : {"_pred.png", "_target.png", ".png"}) {
            const std::string candidate = pred_dir + "/" + stem + pattern;
            if (fs::exists(candidate)) {
                pred_path = candidate;
                break;
            }
        }
        if (pred_path.empty()) {
            result.errors.push_back(stem + ": no prediction mask found");
            continue;
        }
        try {
            const SceneAnnotation annotation =
                annotation_from_json(read_text_file(gt_dir + "/" + stem + "_label.json"), stem);
            const ClassMask pred = mask_from_image(read_png(pred_path));
            const EvalReport report = evaluate_scene(pred, pred, annotation, config);
            accumulator.add(report);
            result.per_scene.emplace_back(stem, report);
        } catch (const std::exception& e) {
            result.errors.push_back(stem + ": " + e.what());
        }
    }
    result.aggregate = accumulator.finalize();
    return result;
}

std::string report_to_json(const ScoreRunResult& result, const EvalConfig& config) {
    nlohmann::json scenes;
    for (const auto& [stem, report] : result.per_scene) scenes[stem] = report_json(report);
    const nlohmann::json doc = {
        {"config",
         {{"iou_threshold", config.iou_threshold},
          {"connectivity", config.connectivity},
          {"min_area", config.min_area},
          {"collapse", config.collapse}}},
        {"scene_count", result.per_scene.size()},
        {"errors", result.errors},
        {"aggregate", report_json(result.aggregate)},
        {"scenes", scenes},
    };
    return doc.dump(2);
}

std::string report_to_csv(const ScoreRunResult& result) {
    std::ostringstream out;
    out << "scene,pixel_localization_f1,pixel_no_damage_f1,pixel_minor_damage_f1,"
           "pixel_major_damage_f1,pixel_destroyed_f1,overall_damage_f1,xview2_score,"
           "object_localization_f1,object_no_damage_f1,object_minor_damage_f1,"
           "object_major_damage_f1,object_destroyed_f1\n";
    auto row = [&](const std::string& name, const EvalReport& r) {
        out << name << ',' << r.pixel_localization_f1;
        for (const double f : r.pixel_class_f1) out << ',' << f;
        out << ',' << r.overall_damage_f1 << ',' << r.xview2 << ',' << r.object_localization_f1;
        for (const double f : r.object_class_f1) out << ',' << f;
        out << '\n';
    };
    for (const auto& [stem, report] : result.per_scene) row(stem, report);
    row("ALL", result.aggregate);
    return out.str();
}

}  // namespace xfbd
