#pragma once

#include <cmath>
#include <vector>

#include "bidpo/toyworld/scene.hpp"

namespace bidpo {

inline constexpr int kSlotEncodingDim = kShapeCount + kColorCount + kTextureCount;
/// slots | relation | count (1-4) | dimension tag
inline constexpr int kCaptionEncodingDim = kMaxSlots * kSlotEncodingDim + kRelationCount + kMaxCount + kDimensionCount;
inline constexpr int kRelationOffset = kMaxSlots * kSlotEncodingDim;
inline constexpr int kCountOffset = kRelationOffset + kRelationCount;
inline constexpr int kDimensionOffset = kCountOffset + kMaxCount;

/// Concatenated one-hot blocks; an absent slot or attribute is all zeros.
inline std::vector<double> encode_caption(const Caption& caption) {
    validate(caption);
    std::vector<double> v(static_cast<std::size_t>(kCaptionEncodingDim), 0.0);
    auto hot = [&](int offset, int value, int size) {
        if (value < 0 || value >= size) throw VocabularyError("encode_caption: value outside vocabulary");
        v[static_cast<std::size_t>(offset + value)] = 1.0;
    };
    for (std::size_t s = 0; s < caption.objects.size(); ++s) {
        const auto& slot = caption.objects[s];
        int base = static_cast<int>(s) * kSlotEncodingDim;
        if (slot.shape) hot(base, static_cast<int>(*slot.shape), kShapeCount);
        if (slot.color) hot(base + kShapeCount, static_cast<int>(*slot.color), kColorCount);
        if (slot.texture) hot(base + kShapeCount + kColorCount, static_cast<int>(*slot.texture), kTextureCount);
    }
    if (caption.relation) hot(kRelationOffset, static_cast<int>(*caption.relation), kRelationCount);
    if (caption.count) hot(kCountOffset, *caption.count - 1, kMaxCount);
    hot(kDimensionOffset, static_cast<int>(caption.dimension), kDimensionCount);
    return v;
}

/// Sinusoidal embedding of the normalized step 1000 * t / T.
inline std::vector<double> time_embedding(int t, int T, int dim) {
    std::vector<double> e(static_cast<std::size_t>(dim), 0.0);
    const int half = dim / 2;
    const double pos = 1000.0 * t / T;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * i / std::max(half, 1));
        e[static_cast<std::size_t>(i)] = std::sin(pos * freq);
        e[static_cast<std::size_t>(half + i)] = std::cos(pos * freq);
    }
    return e;
}

}  // namespace bidpo
