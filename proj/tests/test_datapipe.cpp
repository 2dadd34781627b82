#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "bidpo/datapipe/dataset_io.hpp"
#include "bidpo/datapipe/pipeline.hpp"
#include "bidpo/toyworld/detect.hpp"

using namespace bidpo;

namespace {

ObjectSlot slot(Shape s, Color c, Texture t) { return ObjectSlot{s, c, t}; }

Caption caption(Dimension d, std::vector<ObjectSlot> slots, std::optional<Relation> rel = std::nullopt,
                std::optional<int> count = std::nullopt) {
    return Caption{d, std::move(slots), rel, count};
}

/// Cells covered by any object bbox of either scene.
std::vector<bool> object_cells(const PreferencePair& p) {
    const int g = p.x0_w.shape.grid;
    std::vector<bool> on(static_cast<std::size_t>(g * g), false);
    for (const auto* s : {&p.scene_w, &p.scene_l})
        for (const auto& o : s->objects)
            for (int r = 0; r < g; ++r)
                for (int c = 0; c < g; ++c)
                    if (o.bbox.contains(r, c)) on[static_cast<std::size_t>(r * g + c)] = true;
    return on;
}

double max_background_diff(const PreferencePair& p) {
    const int g = p.x0_w.shape.grid, ch = p.x0_w.shape.channels;
    auto on = object_cells(p);
    double worst = 0;
    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c) {
            if (on[static_cast<std::size_t>(r * g + c)]) continue;
            for (int k = 0; k < ch; ++k) worst = std::max(worst, std::abs(p.x0_w.at(r, c, k) - p.x0_l.at(r, c, k)));
        }
    return worst;
}

PipelineResult small_pipeline(int per_dim, std::uint64_t seed, double corruption = 0.0) {
    PipelineConfig cfg;
    cfg.count_per_dim = per_dim;
    cfg.seed = seed;
    cfg.corruption_rate = corruption;
    return run_pipeline(cfg);
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("bidpo_test_" + name);
}

}  // namespace

// --- grammar ---------------------------------------------------------------

TEST(SampleCaption, ColorFrequenciesUniform) {
    const int n = 10000;
    std::array<int, kColorCount> hits{};
    for (int i = 0; i < n; ++i) {
        auto c = sample_caption(Dimension::color, derive_seed(2024, static_cast<std::uint64_t>(i)));
        ++hits[static_cast<std::size_t>(*c.objects[0].color)];
    }
    const double p = 1.0 / kColorCount, mean = n * p, sigma = std::sqrt(n * p * (1 - p));
    double chi2 = 0;
    for (int h : hits) {
        EXPECT_LE(std::abs(h - mean), 3 * sigma);
        chi2 += (h - mean) * (h - mean) / mean;
    }
    EXPECT_LT(chi2, 24.32);  // chi-square, 7 dof, p = 0.001
}

TEST(SampleCaption, SpatialHasTwoObjectsAndRelation) {
    for (int i = 0; i < 2000; ++i) {
        auto c = sample_caption(Dimension::spatial, static_cast<std::uint64_t>(i));
        ASSERT_EQ(c.objects.size(), 2u);
        ASSERT_TRUE(c.relation.has_value());
        ASSERT_FALSE(c.count.has_value());
    }
}

TEST(SampleCaption, Deterministic) {
    for (Dimension d : kAllDimensions) EXPECT_EQ(sample_caption(d, 99), sample_caption(d, 99));
}

TEST(SampleCaption, EveryDrawValidAndTaggedWithItsDimension) {
    for (Dimension d : kAllDimensions)
        for (int i = 0; i < 500; ++i) {
            auto c = sample_caption(d, static_cast<std::uint64_t>(i));
            EXPECT_NO_THROW(validate(c));
            EXPECT_EQ(parse_dimension(c), d);
        }
}

TEST(SampleCaption, UnsupportedDimensionThrows) {
    EXPECT_THROW(sample_caption(static_cast<Dimension>(9), 1), VocabularyError);
}

TEST(Grammar, EnumerationSizes) {
    // 72 full slots; ordered pairs with distinct shapes: 72 * 48.
    EXPECT_EQ(enumerate_captions(Dimension::color).size(), 72u + 72u * 48u);
    EXPECT_EQ(enumerate_captions(Dimension::texture).size(), 72u + 72u * 48u);
    EXPECT_EQ(enumerate_captions(Dimension::spatial).size(), 72u * 48u * 4u);
    EXPECT_EQ(enumerate_captions(Dimension::numeracy).size(), 72u * 4u);
    // shape: distinct shapes and not both color and texture equal
    EXPECT_EQ(enumerate_captions(Dimension::shape).size(), 72u + 72u * 48u - 72u * 2u);
    for (Dimension d : kAllDimensions) {
        auto all = enumerate_captions(d);
        std::set<std::string> keys;
        for (const auto& c : all) keys.insert(to_text(c));
        EXPECT_EQ(keys.size(), all.size()) << to_string(d);
    }
}

TEST(ParseDimension, PriorityLadder) {
    auto rel = caption(Dimension::color,
                       {slot(Shape::square, Color::red, Texture::solid), slot(Shape::disc, Color::blue, Texture::solid)},
                       Relation::left_of);
    EXPECT_EQ(parse_dimension(rel), Dimension::spatial);
    auto cnt = caption(Dimension::texture, {slot(Shape::disc, Color::green, Texture::striped)}, std::nullopt, 3);
    EXPECT_EQ(parse_dimension(cnt), Dimension::numeracy);
    Caption only_color{Dimension::shape, {ObjectSlot{std::nullopt, Color::red, std::nullopt}}, {}, {}};
    EXPECT_EQ(parse_dimension(only_color), Dimension::color);
    Caption only_shape{Dimension::color, {ObjectSlot{Shape::triangle, std::nullopt, std::nullopt}}, {}, {}};
    EXPECT_EQ(parse_dimension(only_shape), Dimension::shape);
    Caption tex_shape{Dimension::color, {ObjectSlot{Shape::triangle, std::nullopt, Texture::checker}}, {}, {}};
    EXPECT_EQ(parse_dimension(tex_shape), Dimension::texture);
}

// --- editing ---------------------------------------------------------------

TEST(EditCaption, RedSquareBlueDisc) {
    auto c = caption(Dimension::color,
                     {slot(Shape::square, Color::red, Texture::solid), slot(Shape::disc, Color::blue, Texture::solid)});
    auto edits = edit_caption(c, 5);
    ASSERT_EQ(edits.size(), 4u);
    auto with = [&](Color a, Color b) {
        Caption e = c;
        e.objects[0].color = a;
        e.objects[1].color = b;
        return e;
    };
    std::map<EditKind, CaptionEdit> by_kind;
    for (const auto& e : edits) by_kind[e.kind] = e;
    EXPECT_EQ(by_kind.at(EditKind::swap).caption, with(Color::blue, Color::red));
    EXPECT_EQ(by_kind.at(EditKind::swap).edited_object_indices, (std::set<int>{0, 1}));
    EXPECT_EQ(by_kind.at(EditKind::replace_forward).caption, with(Color::red, Color::red));
    EXPECT_EQ(by_kind.at(EditKind::replace_forward).edited_object_indices, (std::set<int>{1}));
    EXPECT_EQ(by_kind.at(EditKind::replace_backward).caption, with(Color::blue, Color::blue));
    EXPECT_EQ(by_kind.at(EditKind::replace_backward).edited_object_indices, (std::set<int>{0}));
    const auto& prim = by_kind.at(EditKind::primary);
    ASSERT_EQ(prim.edited_object_indices.size(), 1u);
    int s = *prim.edited_object_indices.begin();
    auto col = *prim.caption.objects[static_cast<std::size_t>(s)].color;
    EXPECT_NE(col, Color::red);
    EXPECT_NE(col, Color::blue);
}

TEST(EditCaption, OneObjectGivesOneEdit) {
    auto c = caption(Dimension::color, {slot(Shape::disc, Color::green, Texture::checker)});
    auto edits = edit_caption(c, 3);
    ASSERT_EQ(edits.size(), 1u);
    EXPECT_NE(edits[0].caption.objects[0].color, Color::green);
    EXPECT_EQ(edits[0].caption.objects[0].shape, Shape::disc);
    EXPECT_EQ(edits[0].caption.objects[0].texture, Texture::checker);
}

TEST(EditCaption, SpatialRelationFlipped) {
    auto c = caption(Dimension::spatial,
                     {slot(Shape::square, Color::red, Texture::solid), slot(Shape::disc, Color::blue, Texture::solid)},
                     Relation::left_of);
    auto edits = edit_caption(c, 1);
    ASSERT_EQ(edits.size(), 1u);
    EXPECT_EQ(edits[0].caption.relation, Relation::right_of);
    EXPECT_EQ(edits[0].caption.objects, c.objects);
    c.relation = Relation::above;
    EXPECT_EQ(edit_caption(c, 1)[0].caption.relation, Relation::below);
}

TEST(EditCaption, NumeracyCountRedrawn) {
    for (int n = 1; n <= kMaxCount; ++n)
        for (std::uint64_t s = 0; s < 20; ++s) {
            auto c = caption(Dimension::numeracy, {slot(Shape::square, Color::red, Texture::solid)}, std::nullopt, n);
            auto e = edit_caption(c, s);
            ASSERT_EQ(e.size(), 1u);
            EXPECT_NE(*e[0].caption.count, n);
            EXPECT_GE(*e[0].caption.count, 1);
            EXPECT_LE(*e[0].caption.count, kMaxCount);
        }
}

// Property over random grammar captions: edits are valid, pairwise distinct,
// differ from the input, keep the dimension, and two-object captions with
// distinct focus values get exactly four.
TEST(EditCaption, PropertyOverGrammar) {
    for (Dimension d : kAllDimensions)
        for (std::uint64_t i = 0; i < 1500; ++i) {
            auto c = sample_caption(d, derive_seed(i, 7));
            auto edits = edit_caption(c, i);
            std::set<std::string> seen;
            for (const auto& e : edits) {
                ASSERT_NO_THROW(validate(e.caption));
                ASSERT_NE(e.caption, c);
                ASSERT_EQ(parse_dimension(e.caption), d);
                ASSERT_TRUE(seen.insert(to_text(e.caption)).second);
                ASSERT_FALSE(e.edited_object_indices.empty());
            }
            std::size_t want = 1;
            if (is_attribute(d) && c.objects.size() == 2) {
                const auto &a = c.objects[0], &b = c.objects[1];
                bool distinct = d == Dimension::color     ? a.color != b.color
                                : d == Dimension::shape   ? a.shape != b.shape
                                                          : a.texture != b.texture;
                if (distinct) want = 4;
            }
            ASSERT_EQ(edits.size(), want) << to_text(c);
        }
}

TEST(EditKind, NamesRoundTrip) {
    for (auto k : {EditKind::primary, EditKind::swap, EditKind::replace_forward, EditKind::replace_backward})
        EXPECT_EQ(parse_edit_kind(to_string(k)), k);
    EXPECT_THROW(parse_edit_kind("mirror"), VocabularyError);
}

// --- pair construction -----------------------------------------------------

TEST(BuildPair, ColorEditBackgroundDiffersOnlyByJitter) {
    auto c = caption(Dimension::color,
                     {slot(Shape::square, Color::red, Texture::solid), slot(Shape::disc, Color::blue, Texture::striped)});
    for (double jitter : {0.0, 0.02, 0.05, 0.1}) {
        for (const auto& e : edit_caption(c, 11)) {
            auto p = build_pair(c, e, 1234, jitter);
            EXPECT_LE(max_background_diff(p), 2 * jitter + 1e-12);
            EXPECT_TRUE(cross_check(p).consistent());
            EXPECT_EQ(p.y_w, c);
            EXPECT_EQ(p.y_l, e.caption);
        }
    }
}

TEST(BuildPair, SpatialFlipExchangesSides) {
    auto a = slot(Shape::square, Color::red, Texture::solid);
    auto b = slot(Shape::disc, Color::blue, Texture::checker);
    for (auto rel : {Relation::left_of, Relation::right_of, Relation::above, Relation::below}) {
        auto c = caption(Dimension::spatial, {a, b}, rel);
        auto e = edit_caption(c, 2)[0];
        auto p = build_pair(c, e, 77, 0.05);
        auto find = [](const SceneSpec& s, const ObjectSlot& q) {
            for (const auto& o : s.objects)
                if (q.matches(o)) return o;
            ADD_FAILURE() << "slot missing from scene";
            return SceneObject{};
        };
        auto aw = find(p.scene_w, a), bw = find(p.scene_w, b);
        auto al = find(p.scene_l, a), bl = find(p.scene_l, b);
        EXPECT_EQ(relation_between(aw.bbox, bw.bbox), rel);
        EXPECT_EQ(relation_between(al.bbox, bl.bbox), inverse(rel));
        // attributes of each object survive the move
        EXPECT_TRUE(aw.same_attributes(al));
        EXPECT_TRUE(bw.same_attributes(bl));
        auto dw = detect(p.x0_w), dl = detect(p.x0_l);
        ASSERT_EQ(dw.objects.size(), 2u);
        ASSERT_EQ(dl.objects.size(), 2u);
        for (std::size_t i = 0; i < 2; ++i) EXPECT_TRUE(dw.objects[i].same_attributes(dl.objects[i]));
    }
}

TEST(BuildPair, NumeracyComponentCounts) {
    auto c = caption(Dimension::numeracy, {slot(Shape::triangle, Color::yellow, Texture::striped)}, std::nullopt, 2);
    Caption three = c;
    three.count = 3;
    auto p = build_pair(c, CaptionEdit{three, {0}, EditKind::primary}, 55, 0.05);
    EXPECT_EQ(detect_objects(p.x0_w).size(), 2u);
    EXPECT_EQ(detect_objects(p.x0_l).size(), 3u);
    EXPECT_EQ(max_background_diff(p) <= 0.1 + 1e-12, true);
}

TEST(BuildPair, MasksCoverEditedSlots) {
    auto c = caption(Dimension::color,
                     {slot(Shape::square, Color::red, Texture::solid), slot(Shape::disc, Color::blue, Texture::solid)});
    for (const auto& e : edit_caption(c, 4)) {
        auto p = build_pair(c, e, 9, 0.05);
        auto boxes = make_layout(c, 9);
        for (int i = 0; i < 2; ++i) {
            const auto& b = boxes[static_cast<std::size_t>(i)];
            bool edited = e.edited_object_indices.count(i) > 0;
            for (int r = b.row; r < b.row + b.height; ++r)
                for (int col = b.col; col < b.col + b.width; ++col) {
                    EXPECT_EQ(p.mask_w.at(r, col), edited ? kMaskInside : kMaskOutside);
                    EXPECT_EQ(p.mask_l.at(r, col), edited ? kMaskInside : kMaskOutside);
                }
        }
        EXPECT_NO_THROW(validate(p.mask_w));
    }
}

TEST(BuildPair, EditEqualToOriginalRejected) {
    auto c = caption(Dimension::color, {slot(Shape::disc, Color::green, Texture::solid)});
    EXPECT_THROW(build_pair(c, CaptionEdit{c, {0}, EditKind::primary}, 1, 0.05), InvalidRange);
}

// Property: every built pair satisfies the four-way cross-check and the
// background bound; VQA-inconsistent builds are rare.
TEST(BuildPair, PropertyOverGrammar) {
    int built = 0, rejected = 0;
    for (Dimension d : kAllDimensions)
        for (std::uint64_t i = 0; i < 120; ++i) {
            auto c = sample_caption(d, derive_seed(i, 31));
            for (const auto& e : edit_caption(c, i)) {
                try {
                    auto p = build_pair(c, e, derive_seed(i, 32), 0.05);
                    ++built;
                    ASSERT_TRUE(cross_check(p).consistent());
                    ASSERT_LE(max_background_diff(p), 0.1 + 1e-12);
                    ASSERT_EQ(p.dimension, d);
                } catch (const VqaInconsistency&) {
                    ++rejected;
                }
            }
        }
    EXPECT_GT(built, 0);
    EXPECT_LE(rejected, built / 50) << rejected << " of " << built + rejected << " rejected";
}

// --- filtering ---------------------------------------------------------------

TEST(FilterPairs, NoCorruptionKeepsAll) {
    auto res = small_pipeline(40, 3);
    auto f = filter_pairs(res.pairs, 0.0, 1);
    EXPECT_EQ(f.kept.size(), res.pairs.size());
    EXPECT_TRUE(f.discarded.empty());
    for (Dimension d : kAllDimensions) EXPECT_DOUBLE_EQ(f.stats.keep_rate(d), 1.0);
}

TEST(FilterPairs, InjectedCorruptionDiscardedExactly) {
    auto res = small_pipeline(200, 8);
    ASSERT_EQ(res.pairs.size(), 1000u);
    auto f = filter_pairs(res.pairs, 0.2, 17);
    int injected = FilterStats::total(f.stats.injected);
    int discarded = FilterStats::total(f.stats.discarded);
    EXPECT_GT(injected, 150);
    EXPECT_LT(injected, 250);
    EXPECT_EQ(discarded, injected);
    EXPECT_EQ(f.stats.injected, f.stats.discarded);
    EXPECT_EQ(static_cast<int>(f.kept.size()), 1000 - injected);
    for (const auto& p : f.kept) EXPECT_TRUE(cross_check(p).consistent());
}

TEST(FilterPairs, EmptyInput) {
    auto f = filter_pairs({}, 0.3, 1);
    EXPECT_TRUE(f.kept.empty());
    EXPECT_TRUE(f.discarded.empty());
    EXPECT_EQ(f.stats, FilterStats{});
}

TEST(FilterPairs, RateOutOfRange) {
    EXPECT_THROW(filter_pairs({}, 1.0, 1), InvalidRange);
    EXPECT_THROW(filter_pairs({}, -0.1, 1), InvalidRange);
}

// --- pipeline and manifest ---------------------------------------------------

TEST(Pipeline, MixCountsLargestRemainder) {
    std::vector<Dimension> all(kAllDimensions.begin(), kAllDimensions.end());
    EXPECT_EQ(mix_counts(1000, all), (std::array<int, kDimensionCount>{507, 93, 191, 87, 122}));
    for (int total : {1, 7, 64, 999, 12345}) {
        auto m = mix_counts(total, all);
        int s = 0;
        for (int v : m) s += v;
        EXPECT_EQ(s, total);
    }
    auto two = mix_counts(10, {Dimension::shape, Dimension::spatial});
    EXPECT_EQ(two[1] + two[3], 10);
    EXPECT_EQ(two[0], 0);
}

TEST(Pipeline, ManifestCountsConsistent) {
    PipelineConfig cfg;
    cfg.total = 150;
    cfg.seed = 4;
    cfg.corruption_rate = 0.1;
    auto res = run_pipeline(cfg);
    const auto& m = res.manifest;
    std::array<int, kDimensionCount> per_dim{};
    for (const auto& p : res.pairs) ++per_dim[static_cast<std::size_t>(p.dimension)];
    EXPECT_EQ(per_dim, m.realized);
    for (std::size_t d = 0; d < kDimensionCount; ++d) {
        EXPECT_LE(m.realized[d], m.requested[d]);
        EXPECT_EQ(m.filter.input[d], m.filter.kept[d] + m.filter.discarded[d]);
        EXPECT_EQ(m.filter.input[d], m.requested[d]);
    }
    EXPECT_EQ(FilterStats::total(m.requested), 150);
    EXPECT_EQ(m.config_hash, pipeline_config_hash(cfg));
}

TEST(Pipeline, ReproducibleBitForBit) {
    auto a = small_pipeline(15, 21, 0.1);
    auto b = small_pipeline(15, 21, 0.1);
    EXPECT_EQ(a.manifest, b.manifest);
    EXPECT_EQ(a.pairs, b.pairs);
    auto c = small_pipeline(15, 22, 0.1);
    EXPECT_NE(a.pairs, c.pairs);
}

TEST(Pipeline, ConfigHashSensitive) {
    PipelineConfig a, b;
    b.jitter = 0.04;
    EXPECT_NE(pipeline_config_hash(a), pipeline_config_hash(b));
    EXPECT_EQ(pipeline_config_hash(a), pipeline_config_hash(PipelineConfig{}));
}

TEST(Pipeline, InvalidJitterRejected) {
    PipelineConfig cfg;
    cfg.jitter = 0.2;
    EXPECT_THROW(run_pipeline(cfg), InvalidRange);
}

// --- serialization -----------------------------------------------------------

TEST(DatasetIo, RoundTripHundredPairs) {
    auto res = small_pipeline(20, 12);
    ASSERT_EQ(res.pairs.size(), 100u);
    auto path = temp_path("roundtrip.jsonl");
    write_dataset(res.pairs, res.manifest, path, to_json(PipelineConfig{}));
    auto ds = read_dataset(path);
    EXPECT_EQ(ds.pairs, res.pairs);
    EXPECT_EQ(ds.manifest, res.manifest);
    std::array<int, kDimensionCount> per_dim{};
    for (const auto& p : ds.pairs) ++per_dim[static_cast<std::size_t>(p.dimension)];
    EXPECT_EQ(per_dim, ds.manifest.realized);
    std::filesystem::remove(path);
}

TEST(DatasetIo, MaskRunLengthRoundTrip) {
    for (auto m : {RegionMask::uniform(4, 0.5), region_mask_from_boxes({BBox{0, 0, 2, 2}}, 4, 1.0, 0.5),
                   region_mask_from_boxes({BBox{1, 1, 2, 3}, BBox{3, 0, 1, 1}}, 4, 1.0, 0.5),
                   region_mask_from_boxes({BBox{0, 0, 4, 4}}, 4, 1.0, 0.5)}) {
        EXPECT_EQ(mask_from_json(to_json(m)), m);
    }
    auto j = to_json(region_mask_from_boxes({BBox{0, 0, 2, 2}}, 4, 1.0, 0.5));
    EXPECT_EQ(j.at("first"), "in");
    EXPECT_EQ(j.at("runs"), json({2, 2, 2, 10}));
}

TEST(DatasetIo, TruncatedFileReportsLine) {
    auto res = small_pipeline(2, 5);
    ASSERT_EQ(res.pairs.size(), 10u);
    auto text = serialize_dataset(res.pairs, res.manifest);
    // keep header + 6 records + half of record 7 (line 8)
    std::size_t pos = 0;
    for (int i = 0; i < 7; ++i) pos = text.find('\n', pos) + 1;
    auto next = text.find('\n', pos);
    auto cut = text.substr(0, pos + (next - pos) / 2);
    try {
        deserialize_dataset(cut);
        FAIL() << "expected malformed_record";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind, FormatError::Kind::malformed_record);
        EXPECT_EQ(e.line, 8);
    }
    // cut on a line boundary: the first missing record is line 8
    try {
        deserialize_dataset(text.substr(0, pos));
        FAIL() << "expected malformed_record";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind, FormatError::Kind::malformed_record);
        EXPECT_EQ(e.line, 8);
    }
}

TEST(DatasetIo, VersionMismatch) {
    auto res = small_pipeline(1, 6);
    auto text = serialize_dataset(res.pairs, res.manifest);
    auto nl = text.find('\n');
    auto header = json::parse(text.substr(0, nl));
    header["version"] = 2;
    try {
        deserialize_dataset(header.dump() + text.substr(nl));
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind, FormatError::Kind::version_mismatch);
    }
}

TEST(DatasetIo, ChecksumFailure) {
    auto res = small_pipeline(1, 6);
    auto text = serialize_dataset(res.pairs, res.manifest);
    auto a = text.find('\n') + 1;
    auto b = text.find('\n', a);
    auto rec = json::parse(text.substr(a, b - a));
    rec["layout_seed"] = rec["layout_seed"].get<std::uint64_t>() + 1;
    try {
        deserialize_dataset(text.substr(0, a) + rec.dump() + text.substr(b));
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind, FormatError::Kind::checksum_failure);
    }
}

TEST(DatasetIo, BadRecordReportsLine) {
    auto res = small_pipeline(1, 6);
    auto text = serialize_dataset(res.pairs, res.manifest);
    std::size_t a = 0;
    for (int i = 0; i < 3; ++i) a = text.find('\n', a) + 1;  // start of line 4
    auto b = text.find('\n', a);
    auto rec = json::parse(text.substr(a, b - a));
    rec["y_w"]["objects"][0]["color"] = "mauve";
    try {
        deserialize_dataset(text.substr(0, a) + rec.dump() + text.substr(b));
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.kind, FormatError::Kind::malformed_record);
        EXPECT_EQ(e.line, 4);
    }
}

TEST(DatasetIo, EmptyDataset) {
    auto ds = deserialize_dataset(serialize_dataset({}, DatasetManifest{}));
    EXPECT_TRUE(ds.pairs.empty());
    EXPECT_THROW(deserialize_dataset(""), FormatError);
}

TEST(CaptionKeys, CoverWinnersAndLosers) {
    auto res = small_pipeline(3, 2);
    auto keys = caption_keys(res.pairs);
    for (const auto& p : res.pairs) {
        EXPECT_TRUE(keys.count(content_key(p.y_w)));
        EXPECT_TRUE(keys.count(content_key(p.y_l)));
    }
}
