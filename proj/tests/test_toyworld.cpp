#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "bidpo/toyworld/png_export.hpp"
#include "bidpo/toyworld/region_mask.hpp"
#include "bidpo/toyworld/vqa.hpp"

using namespace bidpo;

namespace {

SceneObject object(Shape s, Color c, Texture t, BBox b) { return SceneObject{s, c, t, b}; }

SceneSpec single(Shape s, Color c, Texture t, BBox b = {2, 3, 6, 6}) {
    SceneSpec scene;
    scene.objects.push_back(object(s, c, t, b));
    return scene;
}

/// Every caption reachable from `c` by changing exactly one filled slot.
std::vector<Caption> single_slot_changes(const Caption& c) {
    std::vector<Caption> out;
    for (std::size_t i = 0; i < c.objects.size(); ++i) {
        const auto& s = c.objects[i];
        if (s.shape)
            for (int v = 0; v < kShapeCount; ++v)
                if (static_cast<Shape>(v) != *s.shape) {
                    Caption e = c;
                    e.objects[i].shape = static_cast<Shape>(v);
                    out.push_back(e);
                }
        if (s.color)
            for (int v = 0; v < kColorCount; ++v)
                if (static_cast<Color>(v) != *s.color) {
                    Caption e = c;
                    e.objects[i].color = static_cast<Color>(v);
                    out.push_back(e);
                }
        if (s.texture)
            for (int v = 0; v < kTextureCount; ++v)
                if (static_cast<Texture>(v) != *s.texture) {
                    Caption e = c;
                    e.objects[i].texture = static_cast<Texture>(v);
                    out.push_back(e);
                }
    }
    if (c.relation)
        for (int v = 0; v < kRelationCount; ++v)
            if (static_cast<Relation>(v) != *c.relation) {
                Caption e = c;
                e.relation = static_cast<Relation>(v);
                out.push_back(e);
            }
    if (c.count)
        for (int v = 1; v <= kMaxCount; ++v)
            if (v != *c.count) {
                Caption e = c;
                e.count = v;
                out.push_back(e);
            }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary and captions
// ---------------------------------------------------------------------------

TEST(Vocab, NamesRoundTrip) {
    for (int i = 0; i < kColorCount; ++i) EXPECT_EQ(parse_color(to_string(static_cast<Color>(i))), static_cast<Color>(i));
    for (int i = 0; i < kRelationCount; ++i) {
        auto r = static_cast<Relation>(i);
        EXPECT_EQ(parse_relation(to_string(r)), r);
        EXPECT_EQ(inverse(inverse(r)), r);
        EXPECT_NE(inverse(r), r);
    }
    EXPECT_THROW(parse_shape("hexagon"), VocabularyError);
    EXPECT_THROW(parse_dimension_name("non-spatial"), VocabularyError);
}

TEST(Vocab, PaletteChannelsSeparated) {
    for (std::size_t a = 0; a < kPalette.size(); ++a)
        for (std::size_t b = a + 1; b < kPalette.size(); ++b) {
            double worst = 0;
            for (int ch = 0; ch < 3; ++ch) worst = std::max(worst, std::abs(kPalette[a][ch] - kPalette[b][ch]));
            EXPECT_GE(worst, 0.5);
        }
}

TEST(Caption, ValidationRules) {
    Caption spatial;
    spatial.dimension = Dimension::spatial;
    spatial.objects = {ObjectSlot{Shape::square, std::nullopt, std::nullopt}};
    EXPECT_THROW(validate(spatial), InvalidRange);  // needs two objects and a relation
    spatial.objects.push_back(ObjectSlot{Shape::disc, std::nullopt, std::nullopt});
    EXPECT_THROW(validate(spatial), InvalidRange);
    spatial.relation = Relation::above;
    EXPECT_NO_THROW(validate(spatial));

    Caption num;
    num.dimension = Dimension::numeracy;
    num.objects = {ObjectSlot{Shape::square, Color::red, std::nullopt}};
    EXPECT_THROW(validate(num), InvalidRange);
    num.count = 5;
    EXPECT_THROW(validate(num), InvalidRange);
    num.count = 3;
    EXPECT_NO_THROW(validate(num));

    Caption color;
    color.dimension = Dimension::color;
    color.objects = {ObjectSlot{Shape::square, std::nullopt, Texture::solid}};
    EXPECT_THROW(validate(color), InvalidRange);  // focus attribute missing
}

TEST(Caption, ContentKeyIgnoresSlotOrder) {
    Caption a;
    a.dimension = Dimension::spatial;
    a.objects = {ObjectSlot{Shape::square, Color::red, Texture::solid}, ObjectSlot{Shape::disc, Color::blue, Texture::solid}};
    a.relation = Relation::left_of;
    Caption b = a;
    std::swap(b.objects[0], b.objects[1]);
    b.relation = Relation::right_of;
    EXPECT_EQ(content_key(a), content_key(b));
    b.relation = Relation::left_of;
    EXPECT_NE(content_key(a), content_key(b));
    EXPECT_EQ(to_text(a), "red solid square left-of blue solid disc");
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

TEST(Render, SolidSquareExact) {
    BBox b{2, 3, 6, 6};
    Image img = render(single(Shape::square, Color::red, Texture::solid, b), 1, 0.0);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c)
            for (int ch = 0; ch < 3; ++ch)
                EXPECT_EQ(img.at(r, c, ch), b.contains(r, c) ? kPalette[1][ch] : 0.0);
}

TEST(Render, DeterministicGivenSeed) {
    auto s = random_scene(3);
    EXPECT_EQ(render(s, 5, 0.05), render(s, 5, 0.05));
    EXPECT_NE(render(s, 5, 0.05), render(s, 6, 0.05));
}

TEST(Render, StripesAlternateRows) {
    BBox b{4, 4, 6, 6};
    Image img = render(single(Shape::square, Color::blue, Texture::striped, b), 1, 0.0);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            EXPECT_EQ(img.at(4 + r, 4 + c, 2), r % 2 == 0 ? 1.0 : 0.4);
    Image chk = render(single(Shape::square, Color::blue, Texture::checker, b), 1, 0.0);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            EXPECT_EQ(chk.at(4 + r, 4 + c, 2), (r + c) % 2 == 0 ? 1.0 : 0.4);
}

TEST(Render, JitterBoundedAndClamped) {
    auto s = random_scene(4);
    Image clean = render(s, 9, 0.0), noisy = render(s, 9, 0.1);
    for (std::size_t i = 0; i < clean.data.size(); ++i) {
        EXPECT_LE(std::abs(clean.data[i] - noisy.data[i]), 0.1 + 1e-15);
        EXPECT_LE(std::abs(noisy.data[i]), 1.0);
    }
}

TEST(Render, RejectsOverflow) {
    EXPECT_THROW(render(single(Shape::disc, Color::red, Texture::solid, {12, 12, 6, 6}), 1, 0.0), InvalidRange);
    EXPECT_THROW(render(single(Shape::disc, Color::red, Texture::solid), 1, -0.1), InvalidRange);
}

TEST(Render, ShapesTouchAllBboxEdges) {
    for (int s = 0; s < kShapeCount; ++s) {
        int top = 0, bottom = 0, left = 0, right = 0;
        for (int i = 0; i < 6; ++i) {
            top += shape_covers(static_cast<Shape>(s), 6, 6, 0, i);
            bottom += shape_covers(static_cast<Shape>(s), 6, 6, 5, i);
            left += shape_covers(static_cast<Shape>(s), 6, 6, i, 0);
            right += shape_covers(static_cast<Shape>(s), 6, 6, i, 5);
        }
        EXPECT_GT(top * bottom * left * right, 0) << "shape " << s;
    }
}

TEST(Layout, ScenesAreValid) {
    for (std::uint64_t seed = 0; seed < 500; ++seed) EXPECT_NO_THROW(validate(random_scene(seed), 16)) << seed;
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

TEST(Detect, RoundTripThousandScenes) {
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        SceneSpec s = random_scene(seed);
        Image img = render(s, derive_seed(seed, 1), 0.05);
        try {
            if (!(detect(img) == s)) ++failures;
        } catch (const DetectionError&) {
            ++failures;
        }
    }
    EXPECT_EQ(failures, 0);
}

TEST(Detect, RoundTripAtMaxJitter) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        SceneSpec s = random_scene(seed + 5000);
        EXPECT_EQ(detect(render(s, seed, 0.1)), s) << seed;
    }
}

TEST(Detect, BlankImageIsEmpty) {
    EXPECT_TRUE(detect(Image(ImageShape{})).objects.empty());
    EXPECT_TRUE(detect_objects(Image(ImageShape{})).empty());
}

TEST(Detect, FieldLargerThanAQuadrantIsNotAnObject) {
    Image img(ImageShape{});
    for (double& v : img.data) v = 0.9;
    EXPECT_TRUE(detect_objects(img).empty());
    // a 8x8 block is still a (squarish) object
    Image blk(ImageShape{});
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) blk.at(r, c, 0) = 0.9;
    EXPECT_EQ(detect_objects(blk).size(), 1u);
}

TEST(Detect, LeftOfFromCentroids) {
    SceneSpec s;
    s.objects = {object(Shape::square, Color::red, Texture::solid, {5, 1, 6, 6}),
                 object(Shape::disc, Color::blue, Texture::solid, {5, 9, 6, 6})};
    s = canonicalize(s);
    SceneSpec d = detect(render(s, 1, 0.0));
    ASSERT_EQ(d.objects.size(), 2u);
    ASSERT_TRUE(d.relation);
    // red square (object 0 after sorting) sits at the smaller column
    EXPECT_EQ(d.objects[0].color, Color::red);
    EXPECT_EQ(*d.relation, Relation::left_of);
}

TEST(Detect, AmbiguousColorThrows) {
    Image img = render(single(Shape::square, Color::red, Texture::solid), 1, 0.0);
    for (int r = 2; r < 8; ++r)
        for (int c = 3; c < 9; ++c) img.at(r, c, 1) = 0.0;  // halfway between red and yellow
    EXPECT_THROW(detect(img), DetectionError);
    auto objs = detect_objects(img);
    ASSERT_EQ(objs.size(), 1u);
    EXPECT_FALSE(objs[0].color);
    EXPECT_TRUE(objs[0].shape);
}

TEST(Detect, NoiseHasNoObjects) {
    Rng rng(3);
    int found = 0;
    for (int i = 0; i < 50; ++i) {
        Image img = gaussian_image(ImageShape{}, rng);
        for (double& v : img.data) v = std::clamp(v, -1.0, 1.0);
        for (const auto& o : detect_objects(img)) found += o.complete();
    }
    EXPECT_LT(found, 5);
}

// ---------------------------------------------------------------------------
// VQA
// ---------------------------------------------------------------------------

TEST(Vqa, OwnCaptionPasses) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        SceneSpec s = random_scene(seed);
        Image img = render(s, seed, 0.05);
        Dimension d = s.count_tag ? Dimension::numeracy : (s.relation ? Dimension::spatial : Dimension::color);
        auto r = vqa_check(img, caption_of(s, d));
        EXPECT_TRUE(r.pass) << seed;
        for (const auto& a : r.answers) EXPECT_EQ(a.answer, 1.0);
    }
}

TEST(Vqa, OneWrongColorFailsOneQuestion) {
    SceneSpec s = single(Shape::triangle, Color::green, Texture::checker);
    Caption c = caption_of(s, Dimension::color);
    c.objects[0].color = Color::white;
    auto r = vqa_check(render(s, 1, 0.05), c);
    EXPECT_FALSE(r.pass);
    int zeros = 0;
    for (const auto& a : r.answers) zeros += a.answer == 0.0;
    EXPECT_EQ(zeros, 1);
}

TEST(Vqa, CountMismatchFailsCountQuestion) {
    Caption two;
    two.dimension = Dimension::numeracy;
    two.objects = {ObjectSlot{Shape::disc, Color::yellow, Texture::solid}};
    two.count = 2;
    SceneSpec s = scene_for(two, 7);
    ASSERT_EQ(s.objects.size(), 2u);
    Caption three = two;
    three.count = 3;
    auto r = vqa_check(render(s, 1, 0.05), three);
    EXPECT_FALSE(r.pass);
    ASSERT_FALSE(r.answers.empty());
    EXPECT_EQ(r.answers.back().answer, 0.0);
    for (std::size_t i = 0; i + 1 < r.answers.size(); ++i) EXPECT_EQ(r.answers[i].answer, 1.0);
}

TEST(Vqa, AnySingleSlotChangeFails) {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        SceneSpec s = random_scene(seed + 77);
        Image img = render(s, seed, 0.05);
        Dimension d = s.count_tag ? Dimension::numeracy : (s.relation ? Dimension::spatial : Dimension::shape);
        Caption c = caption_of(s, d);
        for (const auto& e : single_slot_changes(c)) EXPECT_FALSE(vqa_check(img, e).pass) << to_text(e);
    }
}

TEST(Vqa, BlankImageAnswersZero) {
    Caption c = caption_of(single(Shape::square, Color::red, Texture::solid), Dimension::color);
    auto r = vqa_check(Image(ImageShape{}), c);
    EXPECT_FALSE(r.pass);
    for (const auto& a : r.answers) EXPECT_EQ(a.answer, 0.0);
}

// ---------------------------------------------------------------------------
// Region masks
// ---------------------------------------------------------------------------

TEST(RegionMask, Examples) {
    SceneSpec s = single(Shape::square, Color::red, Texture::solid, {0, 0, 4, 4});
    RegionMask empty = region_mask(s, {}, 1.0, 0.5, 16);
    EXPECT_TRUE(empty.is_uniform());
    EXPECT_EQ(empty.at(0, 0), 0.5);
    RegionMask ones = region_mask(s, {0}, 1.0, 1.0, 16);
    EXPECT_EQ(ones, RegionMask::uniform(16, 1.0));
    RegionMask m = region_mask(s, {0}, 1.0, 0.5, 16);
    EXPECT_EQ(m.sum(), 136.0);
    EXPECT_NO_THROW(validate(m));
    EXPECT_THROW(region_mask(s, {1}, 1.0, 0.5, 16), InvalidRange);
    EXPECT_THROW(region_mask(s, {-1}, 1.0, 0.5, 16), InvalidRange);
}

TEST(RegionMask, TwoLevels) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SceneSpec s = random_scene(seed);
        std::set<int> idx{0};
        RegionMask m = region_mask(s, idx, 1.0, 0.5, 16);
        std::set<double> values(m.weights.begin(), m.weights.end());
        EXPECT_EQ(values.size(), 2u);
        RegionMask all;
        std::set<int> every;
        for (int i = 0; i < static_cast<int>(s.objects.size()); ++i) every.insert(i);
        EXPECT_TRUE(region_mask(s, every, 0.7, 0.7, 16).is_uniform());
    }
}

TEST(Png, WritesFile) {
    auto path = std::filesystem::temp_directory_path() / "bidpo_png_test.png";
    write_png(render(random_scene(1), 1, 0.0), path.string());
    EXPECT_GT(std::filesystem::file_size(path), 50u);
    std::filesystem::remove(path);
    EXPECT_EQ(to_byte(-1.0), 0);
    EXPECT_EQ(to_byte(1.0), 255);
}
