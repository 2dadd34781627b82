#pragma once

#include <string>
#include <vector>

#include "bidpo/toyworld/detect.hpp"

namespace bidpo {

struct VqaAnswer {
    std::string question;
    double answer = 0.0;  ///< confidence in [0, 1]; the oracle only emits 0 or 1
};

struct VqaResult {
    bool pass = false;
    std::vector<VqaAnswer> answers;
    int detected_objects = 0;
};

namespace detail {

inline void slot_questions(const ObjectSlot& slot, std::size_t slot_index, const DetectedObject* obj,
                           std::vector<VqaAnswer>& out) {
    auto yes = [](bool b) { return b ? 1.0 : 0.0; };
    std::string who = "object " + std::to_string(slot_index + 1);
    if (slot.shape) out.push_back({"is " + who + " a " + to_string(*slot.shape) + "?", yes(obj && obj->shape == slot.shape)});
    if (slot.color) out.push_back({"is " + who + " " + to_string(*slot.color) + "?", yes(obj && obj->color == slot.color)});
    if (slot.texture)
        out.push_back({"is " + who + " " + to_string(*slot.texture) + "?", yes(obj && obj->texture == slot.texture)});
}

inline bool slot_matches(const ObjectSlot& slot, const DetectedObject& o) {
    return (!slot.shape || o.shape == slot.shape) && (!slot.color || o.color == slot.color) &&
           (!slot.texture || o.texture == slot.texture);
}

inline double total(const std::vector<VqaAnswer>& a) {
    double s = 0;
    for (const auto& x : a) s += x.answer;
    return s;
}

}  // namespace detail

/// Answers one question per filled caption slot (attributes, relation,
/// count) against detected objects. Caption objects are matched to detected
/// objects by the injective assignment with the most "yes" answers.
inline VqaResult vqa_answer(const std::vector<DetectedObject>& objs, const Caption& caption) {
    VqaResult res;
    res.detected_objects = static_cast<int>(objs.size());
    const int n = static_cast<int>(objs.size());

    if (caption.count) {
        const ObjectSlot& slot = caption.objects.front();
        std::vector<VqaAnswer> best;
        double best_score = -1;
        for (int i = -1; i < n; ++i) {
            if (i < 0 && n > 0) continue;
            std::vector<VqaAnswer> a;
            detail::slot_questions(slot, 0, i >= 0 ? &objs[static_cast<std::size_t>(i)] : nullptr, a);
            double s = detail::total(a);
            if (s > best_score) best_score = s, best = std::move(a);
        }
        int matching = 0;
        for (const auto& o : objs) matching += detail::slot_matches(slot, o);
        best.push_back({"are there " + std::to_string(*caption.count) + "?", matching == *caption.count ? 1.0 : 0.0});
        res.answers = std::move(best);
    } else {
        const int k = static_cast<int>(caption.objects.size());
        // candidate assignments: slot -> detected index, -1 = unmatched
        std::vector<std::vector<int>> candidates;
        if (k == 1) {
            for (int i = 0; i < n; ++i) candidates.push_back({i});
            if (n == 0) candidates.push_back({-1});
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) candidates.push_back({i, j});
            if (n == 1) candidates.push_back({0, -1}), candidates.push_back({-1, 0});
            if (n == 0) candidates.push_back({-1, -1});
        }
        double best_score = -1;
        for (const auto& assign : candidates) {
            std::vector<VqaAnswer> a;
            for (int s = 0; s < k; ++s) {
                int d = assign[static_cast<std::size_t>(s)];
                detail::slot_questions(caption.objects[static_cast<std::size_t>(s)], static_cast<std::size_t>(s),
                                       d >= 0 ? &objs[static_cast<std::size_t>(d)] : nullptr, a);
            }
            if (caption.relation) {
                bool ok = false;
                if (k == 2 && assign[0] >= 0 && assign[1] >= 0)
                    ok = relation_between(objs[static_cast<std::size_t>(assign[0])].bbox,
                                          objs[static_cast<std::size_t>(assign[1])].bbox) == caption.relation;
                a.push_back({"is object 1 " + to_string(*caption.relation) + " object 2?", ok ? 1.0 : 0.0});
            }
            double s = detail::total(a);
            if (s > best_score) best_score = s, res.answers = std::move(a);
        }
    }
    res.pass = !res.answers.empty();
    for (const auto& a : res.answers) res.pass = res.pass && a.answer >= 0.5;
    return res;
}

inline VqaResult vqa_check(const Image& img, const Caption& caption, const DetectConfig& cfg = {}) {
    return vqa_answer(detect_objects(img, cfg), caption);
}

}  // namespace bidpo
