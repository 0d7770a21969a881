#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "xfbd/objects.hpp"
#include "xfbd/raster.hpp"

namespace xfbd {

struct F1Counts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;

    F1Counts& operator+=(const F1Counts& other) {
        tp += other.tp;
        fp += other.fp;
        fn += other.fn;
        return *this;
    }
    bool operator==(const F1Counts&) const = default;
};

/// f1 = 2tp / (2tp + fp + fn); vacuously 1 when tp = fp = fn = 0.
double f1_from_counts(const F1Counts& counts);

struct PixelF1Result {
    double f1 = 0.0;
    F1Counts counts;
    long long ignored = 0;
};

/// Confusion counts for one class code over non-ignored pixels. A pixel of
/// class c predicted as anything else (background included) is a FN for c.
PixelF1Result pixel_f1(const ClassMask& pred, const ClassMask& gt, DamageClass cls,
                       const ClassMask* ignore = nullptr);

struct Xview2Score {
    double overall_damage_f1 = 0.0;
    double score = 0.0;
};

/// overall = harmonic mean of the four class F1s (exact zero rule: any zero
/// input gives zero); score = 0.3 * localization + 0.7 * overall.
Xview2Score xview2_score(double loc_f1, const std::array<double, 4>& damage_f1);

/// Two-class view: {NoDamage, MinorDamage} -> Low (1),
/// {MajorDamage, Destroyed} -> High (2), background unchanged.
ClassMask collapse_classes(const ClassMask& mask);
constexpr DamageClass kCollapsedLow = DamageClass::NoDamage;    // code 1
constexpr DamageClass kCollapsedHigh = DamageClass::MinorDamage;  // code 2

struct MatchPair {
    int pred = -1;
    int gt = -1;
    double iou = 0.0;
};

struct MatchAssignment {
    std::vector<MatchPair> pairs;
    std::vector<int> unmatched_predictions;
    std::vector<int> unmatched_ground_truths;
};

/// Greedy one-to-one matching. Predictions are visited by (score desc,
/// area desc, bbox lexicographic); each claims the unmatched ground truth
/// with the highest IoU >= threshold (same class only when class_aware).
MatchAssignment match_detections(const DetectionSet& preds, const DetectionSet& gts,
                                 double iou_threshold, bool class_aware);

struct ObjectF1Result {
    double f1 = 0.0;
    F1Counts counts;
};

/// Localization mode (cls empty): every pair is a TP. Per-class mode:
/// counts restricted to detections of that class (assignment must be
/// class-aware).
ObjectF1Result object_f1(const MatchAssignment& assignment, const DetectionSet& preds,
                         const DetectionSet& gts, std::optional<DamageClass> cls);

struct EvalConfig {
    double iou_threshold = 0.5;
    int connectivity = 8;
    int min_area = 0;
    bool collapse = false;
};

struct LevelCounts {
    F1Counts localization;
    std::array<F1Counts, 4> per_class;  // NoDamage..Destroyed

    LevelCounts& operator+=(const LevelCounts& other) {
        localization += other.localization;
        for (int i = 0; i < 4; ++i) per_class[i] += other.per_class[i];
        return *this;
    }
};

struct EvalReport {
    // pixel level
    double pixel_localization_f1 = 0.0;
    std::array<double, 4> pixel_class_f1{};
    double overall_damage_f1 = 0.0;
    double xview2 = 0.0;
    // object level
    double object_localization_f1 = 0.0;
    std::array<double, 4> object_class_f1{};
    // collapsed (optional)
    bool has_collapsed = false;
    double collapsed_low_f1 = 0.0;
    double collapsed_high_f1 = 0.0;
    // raw counts
    LevelCounts pixel_counts;
    LevelCounts object_counts;
    F1Counts collapsed_low_counts;
    F1Counts collapsed_high_counts;
    long long ignore_count = 0;
};

/// Scores one scene at both levels against the annotation-derived targets.
EvalReport evaluate_scene(const ClassMask& pred_loc, const ClassMask& pred_dam,
                          const SceneAnnotation& gt_annotation, const EvalConfig& config);

/// Micro-average accumulator: counts merge elementwise (a commutative
/// monoid), F1s are recomputed from the sums at finalize.
struct EvalAccumulator {
    LevelCounts pixel_counts;
    LevelCounts object_counts;
    F1Counts collapsed_low_counts;
    F1Counts collapsed_high_counts;
    long long ignore_count = 0;
    bool has_collapsed = false;
    int scenes = 0;

    void add(const EvalReport& report);
    EvalReport finalize() const;
};

}  // namespace xfbd
