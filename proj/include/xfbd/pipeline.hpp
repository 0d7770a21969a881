#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xfbd/blend.hpp"
#include "xfbd/config.hpp"
#include "xfbd/geometry.hpp"
#include "xfbd/image.hpp"
#include "xfbd/metrics.hpp"
#include "xfbd/raster.hpp"

namespace xfbd {

struct Scene {
    std::string scene_id;
    ImageBuffer pre;
    ImageBuffer post;
    std::optional<ImageBuffer> secondary_pre;
    SceneAnnotation annotation;
};

/// Loads a pre/post image pair and its label file; the optional secondary
/// pre-image must match the pair's dimensions. Annotation warnings (clamped
/// vertices, rejected geometries) are carried on the annotation.
Scene ingest_scene(const std::string& pre_path, const std::string& post_path,
                   const std::string& label_path,
                   const std::optional<std::string>& secondary_pre_path = std::nullopt,
                   const std::string& scene_id = "");

struct CandidatePolicy {
    std::set<DamageClass> eligible_classes = {DamageClass::MinorDamage, DamageClass::MajorDamage,
                                              DamageClass::Destroyed};
    std::set<std::string> exclude_uids;
    int min_pixels = 16;
    int dilation_px = 2;  // border check uses the same dilation as the blend
};

/// Buildings eligible for blending: damaged label, not excluded, footprint
/// of at least min_pixels, and clear of the image border.
std::vector<BuildingPolygon> select_blend_candidates(const Scene& scene,
                                                     const CandidatePolicy& policy);

struct Sample {
    std::string sample_id;
    ImageBuffer pre;             // the secondary pre-disaster image
    ImageBuffer post_composite;  // pre-image with one damaged building blended in
    ClassMask target_loc;
    ClassMask target_dam;
    std::string blended_uid;
    DamageClass blended_label = DamageClass::NoDamage;
    SceneAnnotation rewritten;  // all buildings no-damage except blended_uid
    SolveReport report;
};

/// Blends the building's post-disaster pixels into the pre-disaster image
/// and rewrites the targets so that only that building stays damaged.
Sample generate_sample(const Scene& scene, const std::string& building_uid,
                       const BlendConfig& blend_config);

struct RunConfig {
    std::string input_dir;
    std::string output_dir;
    std::string split = "train";
    int workers = 1;
    BlendConfig blend;
    CandidatePolicy policy;
};

RunConfig run_config_from(const Config& config);

struct SceneOutcome {
    std::string scene_id;
    int samples = 0;
    std::string skipped;  // non-empty when the scene was skipped (no secondary pre, ...)
    std::string error;    // non-empty when the scene failed
};

struct DatasetManifest {
    std::string split;
    int sample_count = 0;
    int source_image_count = 0;
    std::map<std::string, int> per_class_counts;  // subtype name -> count
    std::vector<SceneOutcome> scenes;

    bool has_errors() const;
};

/// Scans input_dir for scenes (<id>_pre.png, <id>_post.png, <id>_label.json,
/// optional <id>_secondary_pre.png), emits one sample per blend candidate,
/// self-checks every written sample, and writes manifest.json. Scenes
/// without a secondary pre-image are skipped with a logged reason; scene
/// failures are recorded and skipped.
DatasetManifest generate_dataset(const RunConfig& config);

std::string manifest_to_json(const DatasetManifest& manifest);

struct ScoreRunResult {
    EvalReport aggregate;
    std::vector<std::pair<std::string, EvalReport>> per_scene;  // stem -> report
    std::vector<std::string> errors;                            // unpaired stems etc.
};

/// Pairs every <stem>_label.json in gt_dir with a prediction mask in
/// pred_dir (<stem>_pred.png, <stem>_target.png, or <stem>.png, in that
/// order) and micro-aggregates the per-scene reports. Pairing failures are
/// collected as errors.
ScoreRunResult score_run(const std::string& pred_dir, const std::string& gt_dir,
                         const EvalConfig& config);

std::string report_to_json(const ScoreRunResult& result, const EvalConfig& config);
std::string report_to_csv(const ScoreRunResult& result);

}  // namespace xfbd
