#include <omp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#ifdef PRINTKIND_HAVE_PNG
#include <png.h>
#endif

#include "printkind/errors.hpp"
#include "printkind/image.hpp"
#include "printkind/io.hpp"
#include "printkind/manifest.hpp"
#include "printkind/pipeline.hpp"
#include "printkind/segment.hpp"
#include "temp_dir.hpp"

using namespace printkind;

namespace {

// 50% black/white speckle, the kind of halftone texture closing has to fuse.
void paint_noise_rect(Image& page, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h, unsigned seed) {
    std::mt19937 rng(seed);
    for (std::size_t y = y0; y < y0 + h; ++y)
        for (std::size_t x = x0; x < x0 + w; ++x) page.at(x, y) = (rng() & 1) ? 0 : 255;
}

void paint_bar(Image& page, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
    for (std::size_t y = y0; y < y0 + h; ++y)
        for (std::size_t x = x0; x < x0 + w; ++x) page.at(x, y) = 10;
}

CropRecord rec(std::string id, std::string book, Label label, std::string page = "p0") {
    CropRecord r;
    r.crop_id = std::move(id);
    r.book_id = std::move(book);
    r.page_id = std::move(page);
    r.label = label;
    r.path = "crops/" + r.crop_id + ".pgm";
    return r;
}

// Books named <prefix><i> with the given crop counts.
void add_books(Manifest& m, Label label, const std::string& prefix, const std::vector<std::size_t>& counts) {
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const std::string book = prefix + std::to_string(100 + b);
        for (std::size_t i = 0; i < counts[b]; ++i) {
            m.records.push_back(rec(book + "_" + std::to_string(i), book, label, "p" + std::to_string(i / 10)));
        }
    }
}

struct ThreadScope {
    int saved = omp_get_max_threads();
    explicit ThreadScope(int n) { omp_set_num_threads(n); }
    ~ThreadScope() { omp_set_num_threads(saved); }
};

} // namespace

TEST(Pnm, GrayAndColorRoundTrip) {
    Image gray(3, 2, 1);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) gray.pixels[i] = static_cast<std::uint8_t>(40 * i);
    EXPECT_EQ(decode_pnm(encode_pnm(gray)), gray);
    Image rgb(2, 2, 3, 7);
    rgb.at(1, 1, 2) = 200;
    EXPECT_EQ(decode_pnm(encode_pnm(rgb)), rgb);
}

TEST(Pnm, HeaderCommentsAccepted) {
    const std::string bytes = std::string("P5\n# scanner note\n2 1\n255\n") + char(5) + char(250);
    const Image im = decode_pnm(bytes);
    EXPECT_EQ(im.width, 2u);
    EXPECT_EQ(im.at(1, 0), 250);
}

TEST(Pnm, MalformedInputRejected) {
    EXPECT_THROW(decode_pnm("P2\n1 1\n255\n0"), DataError);
    EXPECT_THROW(decode_pnm("P5\n4 4\n255\nab"), DataError);
    EXPECT_THROW(decode_pnm("P5\n1 1\n65535\nab"), DataError);
    EXPECT_THROW(decode_pnm("P5\nx 1\n255\na"), DataError);
}

TEST(Grayscale, Rec601Weights) {
    Image rgb(3, 1, 3, 0);
    rgb.at(0, 0, 0) = 255; // 0.299 * 255 = 76.2
    rgb.at(1, 0, 1) = 255; // 0.587 * 255 = 149.7
    rgb.at(2, 0, 2) = 255; // 0.114 * 255 = 29.1
    const Image g = to_grayscale(rgb);
    EXPECT_EQ(g.channels, 1u);
    EXPECT_EQ(g.at(0, 0), 76);
    EXPECT_EQ(g.at(1, 0), 150);
    EXPECT_EQ(g.at(2, 0), 29);
}

TEST(ReadImage, PngWhenAvailable) {
    if (!png_supported()) GTEST_SKIP() << "built without libpng";
#ifdef PRINTKIND_HAVE_PNG
    TempDir dir;
    const auto path = dir / "page.png";
    std::vector<std::uint8_t> rgb{255, 0, 0, 0, 255, 0};
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = 2;
    png.height = 1;
    png.format = PNG_FORMAT_RGB;
    ASSERT_TRUE(png_image_write_to_file(&png, path.c_str(), 0, rgb.data(), 0, nullptr));
    const Image im = read_image(path);
    EXPECT_EQ(im.channels, 3u);
    EXPECT_EQ(to_grayscale(im).at(1, 0), 150);
#endif
}

TEST(Otsu, SplitsBimodalHistogram) {
    Image im(10, 10, 1, 200);
    for (std::size_t i = 0; i < 40; ++i) im.pixels[i] = 30;
    const int t = otsu_threshold(im);
    EXPECT_GE(t, 30);
    EXPECT_LT(t, 200);
    EXPECT_EQ(otsu_threshold(Image(4, 4, 1, 255)), -1);
}

TEST(SegmentPage, BlankPageHasNoRegions) {
    EXPECT_TRUE(segment_page(Image(300, 200, 1, 255)).empty());
}

TEST(SegmentPage, NoiseRectangleFoundWithinClosingRadius) {
    Image page(500, 450, 1, 255);
    paint_noise_rect(page, 50, 40, 300, 300, 1);
    const auto boxes = segment_page(page);
    ASSERT_EQ(boxes.size(), 1u);
    const long r = 5;
    EXPECT_NEAR(static_cast<long>(boxes[0].x), 50, r);
    EXPECT_NEAR(static_cast<long>(boxes[0].y), 40, r);
    EXPECT_NEAR(static_cast<long>(boxes[0].width), 300, r);
    EXPECT_NEAR(static_cast<long>(boxes[0].height), 300, r);
    EXPECT_GT(boxes[0].ink_density, 0.4);
    EXPECT_LT(boxes[0].ink_density, 0.6);
}

TEST(SegmentPage, TextLinesRejected) {
    Image page(700, 900, 1, 255);
    paint_noise_rect(page, 50, 40, 300, 300, 2);
    for (std::size_t i = 0; i < 12; ++i) paint_bar(page, 40, 380 + 40 * i, 600, 20);
    const auto boxes = segment_page(page);
    ASSERT_EQ(boxes.size(), 1u);
    EXPECT_NEAR(static_cast<long>(boxes[0].y), 40, 5);
}

TEST(SegmentPage, SolidBlockRejectedByDensity) {
    Image page(400, 400, 1, 255);
    paint_bar(page, 100, 100, 200, 200);
    EXPECT_TRUE(segment_page(page).empty());
    SegmentConfig loose;
    loose.max_density = 1.0;
    EXPECT_EQ(segment_page(page, loose).size(), 1u);
}

TEST(SegmentPage, RegionsSortedTopToBottomLeftToRight) {
    Image page(800, 700, 1, 255);
    paint_noise_rect(page, 450, 20, 200, 200, 3);
    paint_noise_rect(page, 20, 400, 200, 200, 4);
    paint_noise_rect(page, 20, 30, 200, 200, 5);
    const auto boxes = segment_page(page);
    ASSERT_EQ(boxes.size(), 3u);
    EXPECT_LT(boxes[0].y, boxes[1].y);
    EXPECT_LT(boxes[1].y, boxes[2].y);
    EXPECT_GT(boxes[0].x, 400u); // y = 20 beats y = 30
    EXPECT_EQ(boxes[1].x, boxes[2].x);
}

TEST(ExtractCrops, GridArithmetic) {
    Image page(400, 300, 1, 9);
    const auto crops = extract_crops(page, {10, 20, 256, 128, 0.5}, 128);
    ASSERT_EQ(crops.size(), 2u);
    EXPECT_EQ(crops[0].x - 10, 0u);
    EXPECT_EQ(crops[1].x - 10, 128u);
    EXPECT_EQ(crops[1].y, 20u);
    EXPECT_TRUE(extract_crops(page, {0, 0, 100, 280, 0.5}).empty());
    EXPECT_EQ(extract_crops(page, {0, 0, 256, 256, 0.5}, 64).size(), 9u);
    EXPECT_THROW(extract_crops(page, {0, 0, 256, 256, 0.5}, 0), DataError);
}

TEST(ExtractCrops, WindowIsVerbatimCopy) {
    Image page(300, 300);
    std::mt19937 rng(6);
    for (auto& p : page.pixels) p = static_cast<std::uint8_t>(rng());
    const auto crops = extract_crops(page, {37, 51, 128, 128, 0.5});
    ASSERT_EQ(crops.size(), 1u);
    for (std::size_t y = 0; y < 128; ++y)
        for (std::size_t x = 0; x < 128; ++x) ASSERT_EQ(crops[0].pixels.at(x, y), page.at(37 + x, 51 + y));
}

TEST(Manifest, CsvRoundTrip) {
    Manifest m;
    m.records.push_back(rec("a", "b1", Label::wood_engraving));
    m.records.push_back(rec("b", "b2", Label::lithography));
    m.records[1].x = 128;
    m.records[1].split = Split::test;
    const std::string text = format_manifest(m);
    EXPECT_EQ(text.substr(0, text.find('\n')), "crop_id,book_id,page_id,x,y,label,split,path");
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_EQ(parse_manifest(text).records, m.records);
}

TEST(Manifest, ParseErrorsNameTheLine) {
    const std::string header = "crop_id,book_id,page_id,x,y,label,split,path\n";
    try {
        parse_manifest(header + "a,b,p,0,0,wood_engraving,train,x.pgm\nc,d,p,0,0\n");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_manifest("id,book\n"), DataError);
    EXPECT_THROW(parse_manifest(header + "a,b,p,0,0,woodcut,train,x.pgm\n"), DataError);
    EXPECT_THROW(parse_manifest(header + "a,b,p,-1,0,lithography,train,x.pgm\n"), DataError);
    EXPECT_THROW(parse_manifest(header + "a,b,p,0,0,lithography,train,x\na,c,p,0,0,lithography,train,y\n"),
                 DataError);
}

TEST(Manifest, BookLabelFile) {
    const auto labels = parse_book_labels("book_id,label\nh1,lithography\nh2,wood_engraving\n");
    EXPECT_EQ(labels.at("h1"), Label::lithography);
    EXPECT_THROW(parse_book_labels("book,label\n"), DataError);
    EXPECT_THROW(parse_book_labels("book_id,label\nh1,lithography\nh1,lithography\n"), DataError);
}

TEST(Balance, HandDerivedQuotas) {
    const std::map<std::string, std::size_t> avail{{"b1", 10}, {"b2", 10}, {"b3", 1}};
    const auto q = balance_quotas(avail, 12);
    EXPECT_EQ(q.at("b1"), 6u);
    EXPECT_EQ(q.at("b2"), 5u);
    EXPECT_EQ(q.at("b3"), 1u);
    EXPECT_THROW(balance_quotas(avail, 22), DataError);
}

TEST(Balance, RemainderGoesToLargestSurplus) {
    // floor(10 / 3) = 3 each; one leftover slot, b2 has the most surplus.
    const auto q = balance_quotas({{"b1", 4}, {"b2", 9}, {"b3", 5}}, 10);
    EXPECT_EQ(q.at("b1"), 3u);
    EXPECT_EQ(q.at("b2"), 4u);
    EXPECT_EQ(q.at("b3"), 3u);
}

TEST(Balance, TableOneShape) {
    Manifest m;
    std::mt19937 rng(11);
    std::vector<std::size_t> wood(14), litho(18);
    for (auto& c : wood) c = 90 + rng() % 400;
    for (auto& c : litho) c = 40 + rng() % 300;
    add_books(m, Label::wood_engraving, "w", wood);
    add_books(m, Label::lithography, "l", litho);
    ASSERT_GE(m.count(Label::wood_engraving), 2235u);
    ASSERT_GE(m.count(Label::lithography), 2235u);

    const Manifest out = balance_manifest(m, 2235, 7);
    EXPECT_EQ(out.count(Label::wood_engraving), 2235u);
    EXPECT_EQ(out.count(Label::lithography), 2235u);
    // Subset, original order kept.
    std::size_t pos = 0;
    for (const auto& r : out.records) {
        while (pos < m.records.size() && m.records[pos].crop_id != r.crop_id) ++pos;
        ASSERT_LT(pos, m.records.size()) << r.crop_id;
    }
    EXPECT_EQ(balance_manifest(m, 2235, 7).records, out.records);
    EXPECT_NE(balance_manifest(m, 2235, 8).records, out.records);
}

TEST(Balance, ExactQuotaKeepsEverything) {
    Manifest m;
    add_books(m, Label::wood_engraving, "w", {5, 5});
    add_books(m, Label::lithography, "l", {2, 2, 2, 2, 2});
    EXPECT_EQ(balance_manifest(m, 10, 3).records, m.records);
}

TEST(Balance, ShortClassFails) {
    Manifest m;
    add_books(m, Label::wood_engraving, "w", {5, 5});
    add_books(m, Label::lithography, "l", {3});
    EXPECT_THROW(balance_manifest(m, 5, 0), DataError);
}

TEST(Split, EqualBooksQuarterFraction) {
    Manifest m;
    add_books(m, Label::wood_engraving, "w", {100, 100, 100, 100});
    add_books(m, Label::lithography, "l", {100, 100, 100, 100});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Manifest s = split_manifest(m, 0.25, seed);
        std::set<std::string> test_books;
        for (const auto& r : s.records)
            if (r.split == Split::test) test_books.insert(r.book_id);
        EXPECT_EQ(test_books.size(), 2u);
        EXPECT_EQ(s.count(Split::test), 200u);
    }
}

TEST(Split, ZeroFractionAllTrainAndDeterministic) {
    Manifest m;
    add_books(m, Label::wood_engraving, "w", {10, 20, 30});
    add_books(m, Label::lithography, "l", {15, 25});
    EXPECT_EQ(split_manifest(m, 0.0, 1).count(Split::train), m.records.size());
    EXPECT_EQ(split_manifest(m, 0.3, 5).records, split_manifest(m, 0.3, 5).records);
    EXPECT_THROW(split_manifest(m, 1.0, 5), DataError);
}

TEST(Split, NoBookStraddlesSplits) {
    std::mt19937 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        Manifest m;
        std::vector<std::size_t> a(2 + rng() % 6), b(2 + rng() % 6);
        for (auto& c : a) c = 1 + rng() % 40;
        for (auto& c : b) c = 1 + rng() % 40;
        add_books(m, Label::wood_engraving, "w", a);
        add_books(m, Label::lithography, "l", b);
        const Manifest s = split_manifest(m, 0.05 + 0.1 * (trial % 6), static_cast<std::uint64_t>(trial));
        std::map<std::string, Split> seen;
        for (const auto& r : s.records) {
            auto [it, fresh] = seen.emplace(r.book_id, r.split);
            ASSERT_TRUE(fresh || it->second == r.split) << r.book_id;
        }
    }
}

TEST(Split, SingleBookClassFails) {
    Manifest m;
    add_books(m, Label::wood_engraving, "w", {10, 10});
    add_books(m, Label::lithography, "l", {30});
    EXPECT_THROW(split_manifest(m, 0.2, 0), DataError);
    EXPECT_NO_THROW(split_manifest(m, 0.2, 0, SplitLevel::image));
}

TEST(Split, ImageLevelKeepsPagesTogether) {
    Manifest m;
    add_books(m, Label::wood_engraving, "w", {40, 40});
    add_books(m, Label::lithography, "l", {40, 40});
    const Manifest s = split_manifest(m, 0.3, 9, SplitLevel::image);
    std::map<std::string, Split> pages;
    for (const auto& r : s.records) {
        auto [it, fresh] = pages.emplace(r.book_id + "/" + r.page_id, r.split);
        ASSERT_TRUE(fresh || it->second == r.split);
    }
    EXPECT_GT(s.count(Split::test), 0u);
    EXPECT_EQ(parse_split_level("crop"), SplitLevel::crop);
    EXPECT_THROW(parse_split_level("shelf"), DataError);
}

TEST(CropPages, DeterministicAcrossThreadCounts) {
    TempDir dir;
    const auto root = dir / "pages";
    for (int b = 0; b < 2; ++b) {
        for (int p = 0; p < 3; ++p) {
            Image page(420, 300, 1, 255);
            paint_noise_rect(page, 20 + 10 * p, 30, 300, 260, static_cast<unsigned>(10 * b + p));
            const Label label = b == 0 ? Label::wood_engraving : Label::lithography;
            write_pnm(root / std::string(to_string(label)) / ("book" + std::to_string(b)) /
                          ("page" + std::to_string(p) + ".pgm"),
                      page);
        }
    }
    CropConfig cfg;
    Manifest one, three;
    {
        ThreadScope t(1);
        one = crop_pages(root, dir / "out1", cfg);
    }
    {
        ThreadScope t(3);
        three = crop_pages(root, dir / "out3", cfg);
    }
    ASSERT_EQ(one.records.size(), 2u * 3u * 4u); // 300x260 box: 2x2 crops
    EXPECT_EQ(format_manifest(one), format_manifest(three));
    for (const auto& r : one.records) {
        EXPECT_EQ(read_file(dir / "out1" / r.path), read_file(dir / "out3" / r.path));
        const Image crop = read_image(dir / "out1" / r.path);
        const Image page =
            read_image(root / std::string(to_string(r.label)) / r.book_id / (r.page_id + ".pgm"));
        for (std::size_t y = 0; y < 128; ++y)
            for (std::size_t x = 0; x < 128; ++x) ASSERT_EQ(crop.at(x, y), page.at(r.x + x, r.y + y));
    }
    EXPECT_EQ(one.records.front().book_id, "book0");

    cfg.book_labels = std::map<std::string, Label>{{"book0", Label::lithography}, {"book1", Label::lithography}};
    EXPECT_THROW(crop_pages(root, dir / "out4", cfg), DataError);
}

TEST(AtomicWrite, ReplacesWholeFile) {
    TempDir dir;
    write_file_atomic(dir / "a/b.txt", "first");
    write_file_atomic(dir / "a/b.txt", "second");
    EXPECT_EQ(read_file(dir / "a/b.txt"), "second");
    EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir / "a"), {}), 1);
}
