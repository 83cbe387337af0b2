#include "printkind/pipeline.hpp"

#include <algorithm>
#include <exception>

#include "printkind/errors.hpp"
#include "printkind/image.hpp"

namespace printkind {

namespace fs = std::filesystem;

std::vector<PageRef> scan_pages(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("page root '" + root.string() + "' is not a directory");
    std::vector<PageRef> pages;
    for (Label label : kLabels) {
        const fs::path label_dir = root / std::string(to_string(label));
        if (!fs::is_directory(label_dir)) continue;
        for (const auto& book : fs::directory_iterator(label_dir)) {
            if (!book.is_directory()) continue;
            for (const auto& file : fs::directory_iterator(book.path())) {
                if (!file.is_regular_file()) continue;
                std::string ext = file.path().extension().string();
                std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
                if (ext != ".pgm" && ext != ".ppm" && ext != ".pnm" && ext != ".png") continue;
                pages.push_back({file.path(), book.path().filename().string(), file.path().stem().string(), label});
            }
        }
    }
    std::sort(pages.begin(), pages.end(), [](const PageRef& a, const PageRef& b) {
        return a.book_id != b.book_id ? a.book_id < b.book_id : a.page_id < b.page_id;
    });
    for (std::size_t i = 1; i < pages.size(); ++i) {
        if (pages[i].book_id == pages[i - 1].book_id && pages[i].label != pages[i - 1].label) {
            throw DataError("book '" + pages[i].book_id + "' appears under both labels");
        }
        if (pages[i].book_id == pages[i - 1].book_id && pages[i].page_id == pages[i - 1].page_id) {
            throw DataError("page '" + pages[i].page_id + "' of book '" + pages[i].book_id + "' exists twice");
        }
    }
    return pages;
}

Manifest crop_pages(const fs::path& root, const fs::path& out_dir, const CropConfig& cfg) {
    if (cfg.channels != 1 && cfg.channels != 3) throw DataError("channels must be 1 or 3");
    const auto pages = scan_pages(root);
    if (cfg.book_labels) {
        for (const auto& p : pages) {
            const auto it = cfg.book_labels->find(p.book_id);
            if (it == cfg.book_labels->end()) throw DataError("book '" + p.book_id + "' has no expert label");
            if (it->second != p.label) {
                throw DataError("book '" + p.book_id + "' is filed under " + std::string(to_string(p.label)) +
                                " but labelled " + std::string(to_string(it->second)));
            }
        }
    }

    std::vector<std::vector<CropRecord>> per_page(pages.size());
    std::vector<std::exception_ptr> errors(pages.size());
    const long long count = static_cast<long long>(pages.size());
#pragma omp parallel for schedule(dynamic)
    for (long long ii = 0; ii < count; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        try {
            const PageRef& ref = pages[i];
            Image page = read_image(ref.path);
            if (cfg.channels == 1) {
                page = to_grayscale(page);
            } else if (page.channels != 3) {
                throw DataError("'" + ref.path.string() + "' is not an RGB image");
            }
            const auto regions = segment_page(page, cfg.segment);
            const char* ext = cfg.channels == 1 ? ".pgm" : ".ppm";
            for (std::size_t r = 0; r < regions.size(); ++r) {
                for (auto& window : extract_crops(page, regions[r], cfg.stride)) {
                    CropRecord rec;
                    rec.crop_id = ref.book_id + "_" + ref.page_id + "_r" + std::to_string(r) + "_" +
                                  std::to_string(window.x) + "_" + std::to_string(window.y);
                    rec.book_id = ref.book_id;
                    rec.page_id = ref.page_id;
                    rec.x = window.x;
                    rec.y = window.y;
                    rec.label = ref.label;
                    rec.path = (fs::path("crops") / ref.book_id / (rec.crop_id + ext)).generic_string();
                    write_pnm(out_dir / rec.path, window.pixels);
                    per_page[i].push_back(std::move(rec));
                }
            }
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    Manifest manifest;
    for (auto& page : per_page)
        for (auto& rec : page) manifest.records.push_back(std::move(rec));
    manifest.validate();
    return manifest;
}

} // namespace printkind
