#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "bidpo/common.hpp"

namespace bidpo {

enum class Shape : std::uint8_t { square, disc, triangle };
enum class Color : std::uint8_t { black, red, green, yellow, blue, magenta, cyan, white };
enum class Texture : std::uint8_t { solid, striped, checker };
enum class Relation : std::uint8_t { left_of, right_of, above, below };

/// Compositional axes a caption or preference pair can exercise.
enum class Dimension : std::uint8_t { color, shape, texture, spatial, numeracy };

inline constexpr int kShapeCount = 3;
inline constexpr int kColorCount = 8;
inline constexpr int kTextureCount = 3;
inline constexpr int kRelationCount = 4;
inline constexpr int kDimensionCount = 5;
inline constexpr int kMaxCount = 4;
inline constexpr int kMaxSlots = 2;

inline constexpr std::array<std::string_view, kShapeCount> kShapeNames{"square", "disc", "triangle"};
inline constexpr std::array<std::string_view, kColorCount> kColorNames{
    "black", "red", "green", "yellow", "blue", "magenta", "cyan", "white"};
inline constexpr std::array<std::string_view, kTextureCount> kTextureNames{"solid", "striped", "checker"};
inline constexpr std::array<std::string_view, kRelationCount> kRelationNames{"left-of", "right-of", "above",
                                                                             "below"};
inline constexpr std::array<std::string_view, kDimensionCount> kDimensionNames{"color", "shape", "texture",
                                                                               "spatial", "numeracy"};

inline constexpr std::array<Dimension, 3> kAttributeDimensions{Dimension::color, Dimension::shape,
                                                               Dimension::texture};
inline constexpr std::array<Dimension, kDimensionCount> kAllDimensions{
    Dimension::color, Dimension::shape, Dimension::texture, Dimension::spatial, Dimension::numeracy};

/// Palette colors are the corners of the RGB cube in [-1,1]^3; background is 0.
/// Any two entries differ by 2 in at least one channel.
inline constexpr std::array<std::array<double, 3>, kColorCount> kPalette{{
    {-1, -1, -1},
    {1, -1, -1},
    {-1, 1, -1},
    {1, 1, -1},
    {-1, -1, 1},
    {1, -1, 1},
    {-1, 1, 1},
    {1, 1, 1},
}};

inline bool is_attribute(Dimension d) {
    return d == Dimension::color || d == Dimension::shape || d == Dimension::texture;
}

inline Relation inverse(Relation r) {
    switch (r) {
        case Relation::left_of: return Relation::right_of;
        case Relation::right_of: return Relation::left_of;
        case Relation::above: return Relation::below;
        case Relation::below: return Relation::above;
    }
    return r;
}

inline bool is_horizontal(Relation r) { return r == Relation::left_of || r == Relation::right_of; }

namespace detail {
template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<E>(i);
    throw VocabularyError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <class E, std::size_t N>
std::string enum_name(E e, const std::array<std::string_view, N>& names, const char* what) {
    auto i = static_cast<std::size_t>(e);
    if (i >= N) throw VocabularyError(std::string("out-of-vocabulary ") + what);
    return std::string(names[i]);
}
}  // namespace detail

inline std::string to_string(Shape v) { return detail::enum_name(v, kShapeNames, "shape"); }
inline std::string to_string(Color v) { return detail::enum_name(v, kColorNames, "color"); }
inline std::string to_string(Texture v) { return detail::enum_name(v, kTextureNames, "texture"); }
inline std::string to_string(Relation v) { return detail::enum_name(v, kRelationNames, "relation"); }
inline std::string to_string(Dimension v) { return detail::enum_name(v, kDimensionNames, "dimension"); }

inline Shape parse_shape(std::string_view s) { return detail::parse_enum<Shape>(s, kShapeNames, "shape"); }
inline Color parse_color(std::string_view s) { return detail::parse_enum<Color>(s, kColorNames, "color"); }
inline Texture parse_texture(std::string_view s) {
    return detail::parse_enum<Texture>(s, kTextureNames, "texture");
}
inline Relation parse_relation(std::string_view s) {
    return detail::parse_enum<Relation>(s, kRelationNames, "relation");
}
inline Dimension parse_dimension_name(std::string_view s) {
    return detail::parse_enum<Dimension>(s, kDimensionNames, "dimension");
}

}  // namespace bidpo
