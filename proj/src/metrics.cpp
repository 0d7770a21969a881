#include "xfbd/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "xfbd/errors.hpp"

namespace xfbd {

double f1_from_counts(const F1Counts& counts) {
    if (counts.tp == 0 && counts.fp == 0 && counts.fn == 0) return 1.0;
    const double denom = static_cast<double>(2 * counts.tp + counts.fp + counts.fn);
    return denom > 0.0 ? 2.0 * counts.tp / denom : 0.0;
}

PixelF1Result pixel_f1(const ClassMask& pred, const ClassMask& gt, DamageClass cls,
                       const ClassMask* ignore) {
    if (!pred.same_shape(gt)) throw DimensionMismatch("pred and gt masks differ in shape");
    if (ignore && !ignore->same_shape(gt))
        throw DimensionMismatch("ignore mask differs in shape");

    const auto code = static_cast<std::uint8_t>(cls);
    PixelF1Result result;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        if (ignore && ignore->data[i]) {
            ++result.ignored;
            continue;
        }
        const bool in_pred = pred.data[i] == code;
        const bool in_gt = gt.data[i] == code;
        if (in_pred && in_gt)
            ++result.counts.tp;
        else if (in_pred)
            ++result.counts.fp;
        else if (in_gt)
            ++result.counts.fn;
    }
    result.f1 = f1_from_counts(result.counts);
    return result;
}

Xview2Score xview2_score(double loc_f1, const std::array<double, 4>& damage_f1) {
    Xview2Score result;
    double inv_sum = 0.0;
    bool any_zero = false;
    for (const double f : damage_f1) {
        if (f <= 0.0)
            any_zero = true;
        else
            inv_sum += 1.0 / f;
    }
    result.overall_damage_f1 = any_zero ? 0.0 : 4.0 / inv_sum;
    result.score = 0.3 * loc_f1 + 0.7 * result.overall_damage_f1;
    return result;
}

ClassMask collapse_classes(const ClassMask& mask) {
    ClassMask out = mask;
    for (auto& v : out.data) {
        if (v == 1 || v == 2)
            v = static_cast<std::uint8_t>(kCollapsedLow);
        else if (v == 3 || v == 4)
            v = static_cast<std::uint8_t>(kCollapsedHigh);
    }
    return out;
}

MatchAssignment match_detections(const DetectionSet& preds, const DetectionSet& gts,
                                 double iou_threshold, bool class_aware) {
    if (preds.scene_id != gts.scene_id)
        throw SceneMismatch("prediction scene '" + preds.scene_id + "' vs ground truth scene '" +
                            gts.scene_id + "'");

    std::vector<int> order(preds.detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Detection& da = preds.detections[a];
        const Detection& db = preds.detections[b];
        if (da.score != db.score) return da.score > db.score;
        if (da.area != db.area) return da.area > db.area;
        const auto ka = std::tuple(da.bbox.x0, da.bbox.y0, da.bbox.x1, da.bbox.y1, a);
        const auto kb = std::tuple(db.bbox.x0, db.bbox.y0, db.bbox.x1, db.bbox.y1, b);
        return ka < kb;
    });

    MatchAssignment assignment;
    std::vector<bool> gt_taken(gts.detections.size(), false);
    std::vector<bool> pred_matched(preds.detections.size(), false);
    for (const int pi : order) {
        const Detection& pred = preds.detections[pi];
        int best_gt = -1;
        double best_iou = 0.0;
        for (std::size_t gi = 0; gi < gts.detections.size(); ++gi) {
            if (gt_taken[gi]) continue;
            const Detection& gt = gts.detections[gi];
            if (class_aware && gt.label != pred.label) continue;
            const double overlap = iou(pred.bbox, gt.bbox);
            if (overlap < iou_threshold) continue;
            if (overlap > best_iou) {
                best_iou = overlap;
                best_gt = static_cast<int>(gi);
            }
        }
        if (best_gt >= 0) {
            gt_taken[best_gt] = true;
            pred_matched[pi] = true;
            assignment.pairs.push_back(MatchPair{pi, best_gt, best_iou});
        }
    }
    for (std::size_t i = 0; i < preds.detections.size(); ++i)
        if (!pred_matched[i]) assignment.unmatched_predictions.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < gts.detections.size(); ++i)
        if (!gt_taken[i]) assignment.unmatched_ground_truths.push_back(static_cast<int>(i));
    return assignment;
}

ObjectF1Result object_f1(const MatchAssignment& assignment, const DetectionSet& preds,
                         const DetectionSet& gts, std::optional<DamageClass> cls) {
    ObjectF1Result result;
    if (!cls) {
        result.counts.tp = static_cast<long long>(assignment.pairs.size());
        result.counts.fp = static_cast<long long>(assignment.unmatched_predictions.size());
        result.counts.fn = static_cast<long long>(assignment.unmatched_ground_truths.size());
    } else {
        for (const auto& pair : assignment.pairs)
            if (preds.detections[pair.pred].label == *cls) ++result.counts.tp;
        for (const int pi : assignment.unmatched_predictions)
            if (preds.detections[pi].label == *cls) ++result.counts.fp;
        for (const int gi : assignment.unmatched_ground_truths)
            if (gts.detections[gi].label == *cls) ++result.counts.fn;
    }
    result.f1 = f1_from_counts(result.counts);
    return result;
}

EvalReport evaluate_scene(const ClassMask& pred_loc, const ClassMask& pred_dam,
                          const SceneAnnotation& gt_annotation, const EvalConfig& config) {
    if (!pred_loc.same_shape(pred_dam))
        throw DimensionMismatch("prediction masks differ in shape");
    if (pred_loc.width != gt_annotation.width || pred_loc.height != gt_annotation.height)
        throw DimensionMismatch("prediction masks do not match annotation dimensions");

    const TargetMasks targets = build_target_masks(gt_annotation);
    const ClassMask* ignore = targets.unclassified_count > 0 ? &targets.ignore : nullptr;

    EvalReport report;

    const ClassMask pred_binary = pred_loc.binary();
    const PixelF1Result loc = pixel_f1(pred_binary, targets.loc, DamageClass::NoDamage, ignore);
    report.pixel_localization_f1 = loc.f1;
    report.pixel_counts.localization = loc.counts;
    report.ignore_count = loc.ignored;

    std::array<double, 4> class_f1{};
    for (int c = 1; c <= 4; ++c) {
        const PixelF1Result r =
            pixel_f1(pred_dam, targets.dam, static_cast<DamageClass>(c), ignore);
        class_f1[c - 1] = r.f1;
        report.pixel_counts.per_class[c - 1] = r.counts;
    }
    report.pixel_class_f1 = class_f1;
    const Xview2Score score = xview2_score(loc.f1, class_f1);
    report.overall_damage_f1 = score.overall_damage_f1;
    report.xview2 = score.score;

    // Object level: predicted components vs annotation-derived boxes.
    DetectionConfig det_config{config.connectivity, config.min_area};
    const DetectionSet pred_set =
        masks_to_detections(pred_loc, pred_dam, det_config, gt_annotation.scene_id);
    const DetectionSet gt_set = annotation_to_detections(gt_annotation);

    const MatchAssignment loc_match =
        match_detections(pred_set, gt_set, config.iou_threshold, /*class_aware=*/false);
    const ObjectF1Result obj_loc = object_f1(loc_match, pred_set, gt_set, std::nullopt);
    report.object_localization_f1 = obj_loc.f1;
    report.object_counts.localization = obj_loc.counts;

    const MatchAssignment class_match =
        match_detections(pred_set, gt_set, config.iou_threshold, /*class_aware=*/true);
    for (int c = 1; c <= 4; ++c) {
        const ObjectF1Result r =
            object_f1(class_match, pred_set, gt_set, static_cast<DamageClass>(c));
        report.object_class_f1[c - 1] = r.f1;
        report.object_counts.per_class[c - 1] = r.counts;
    }

    if (config.collapse) {
        report.has_collapsed = true;
        const ClassMask pred_collapsed = collapse_classes(pred_dam);
        const ClassMask gt_collapsed = collapse_classes(targets.dam);
        const PixelF1Result low = pixel_f1(pred_collapsed, gt_collapsed, kCollapsedLow, ignore);
        const PixelF1Result high = pixel_f1(pred_collapsed, gt_collapsed, kCollapsedHigh, ignore);
        report.collapsed_low_f1 = low.f1;
        report.collapsed_high_f1 = high.f1;
        report.collapsed_low_counts = low.counts;
        report.collapsed_high_counts = high.counts;
    }
    return report;
}

void EvalAccumulator::add(const EvalReport& report) {
    pixel_counts += report.pixel_counts;
    object_counts += report.object_counts;
    collapsed_low_counts += report.collapsed_low_counts;
    collapsed_high_counts += report.collapsed_high_counts;
    ignore_count += report.ignore_count;
    has_collapsed = has_collapsed || report.has_collapsed;
    ++scenes;
}

EvalReport EvalAccumulator::finalize() const {
    EvalReport report;
    report.pixel_counts = pixel_counts;
    report.object_counts = object_counts;
    report.collapsed_low_counts = collapsed_low_counts;
    report.collapsed_high_counts = collapsed_high_counts;
    report.ignore_count = ignore_count;
    report.has_collapsed = has_collapsed;

    report.pixel_localization_f1 = f1_from_counts(pixel_counts.localization);
    for (int i = 0; i < 4; ++i)
        report.pixel_class_f1[i] = f1_from_counts(pixel_counts.per_class[i]);
    const Xview2Score score = xview2_score(report.pixel_localization_f1, report.pixel_class_f1);
    report.overall_damage_f1 = score.overall_damage_f1;
    report.xview2 = score.score;

    report.object_localization_f1 = f1_from_counts(object_counts.localization);
    for (int i = 0; i < 4; ++i)
        report.object_class_f1[i] = f1_from_counts(object_counts.per_class[i]);

    if (has_collapsed) {
        report.collapsed_low_f1 = f1_from_counts(collapsed_low_counts);
        report.collapsed_high_f1 = f1_from_counts(collapsed_high_counts);
    }
    return report;
}

}  // namespace xfbd
