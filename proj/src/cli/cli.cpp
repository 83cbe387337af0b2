#include "printkind/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "printkind/checkpoint.hpp"
#include "printkind/errors.hpp"
#include "printkind/gradcheck.hpp"
#include "printkind/heads.hpp"
#include "printkind/image.hpp"
#include "printkind/io.hpp"
#include "printkind/pipeline.hpp"
#include "printkind/synth.hpp"
#include "printkind/trainer.hpp"

namespace printkind {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Json default_config() {
    return Json::parse(R"({
  "seed": 42,
  "threads": 0,
  "deterministic": true,
  "synth": {"out": "", "books_per_class": 10, "crops_per_book": 200, "crops_per_page": 8, "hard": false},
  "segment": {"page": "", "out": "", "closing_radius": 5, "min_area": 16384, "min_density": 0.05,
              "max_density": 0.95},
  "crop": {"root": "", "out": "", "stride": 128, "channels": 1, "book_labels": ""},
  "balance": {"manifest": "", "out": "", "per_class": 2235},
  "split": {"manifest": "", "out": "", "test_fraction": 0.2, "level": "book"},
  "train": {"manifest": "", "out": "", "arch": "Big-Filters", "plan": [], "channels": 1, "epochs": 30,
            "batch": 32, "lr": 0.01, "momentum": 0.9, "stop_at": 0.0, "subset": 0},
  "eval": {"model": "", "manifest": "", "split": "test", "out": "", "export_misclassified": 0},
  "gradcheck": {"seeds": 20, "eps": 0.001, "tolerance": 0.0001},
  "features": {
    "train": {"features": "", "test": "", "out": "", "head": "fcn", "hidden": 512, "epochs": 50, "batch": 32,
              "lr": 0.01, "momentum": 0.9, "lambda": 0.01},
    "synth": {"out": "", "test_out": "", "dim": 2, "per_class": 200, "test_per_class": 200, "sigma": 1.0,
              "margin": 2.0}
  }
})");
}

void merge_config(Json& base, const Json& overlay) {
    if (!base.is_object() || !overlay.is_object()) {
        base = overlay;
        return;
    }
    for (const auto& [key, value] : overlay.items()) {
        if (base.contains(key) && base[key].is_object() && value.is_object()) {
            merge_config(base[key], value);
        } else {
            base[key] = value;
        }
    }
}

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

} // namespace

std::string suggest(std::string_view token, std::span<const std::string> candidates) {
    std::string best;
    std::size_t best_d = std::max<std::size_t>(2, token.size() / 3) + 1;
    for (const auto& c : candidates) {
        const std::size_t d = edit_distance(token, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace {

// Config keys the user may set but that do not exist are almost always typos.
void check_known_keys(const Json& defaults, const Json& overlay, const std::string& where) {
    if (!overlay.is_object()) throw DataError("config" + where + " must be a JSON object");
    for (const auto& [key, value] : overlay.items()) {
        if (!defaults.contains(key)) {
            std::vector<std::string> names;
            for (const auto& [k, v] : defaults.items()) names.push_back(k);
            const std::string hint = suggest(key, names);
            throw DataError("unknown config key '" + where + (where.empty() ? "" : ".") + key + "'" +
                            (hint.empty() ? "" : "; did you mean '" + hint + "'?"));
        }
        if (defaults[key].is_object()) check_known_keys(defaults[key], value, where.empty() ? key : where + "." + key);
    }
}

Json load_config_file(const fs::path& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
}

std::string flag_to_key(std::string flag) {
    std::replace(flag.begin(), flag.end(), '-', '_');
    return flag;
}

// A CLI flag that overrides one config key; the string is converted using the default's type.
struct Binding {
    CLI::Option* option = nullptr;
    std::vector<std::string> path; // key path inside the config
    std::string text;
    bool flag_value = false;
    bool is_flag = false;
};

class Bindings {
public:
    // Long option `--name` for config key path + name (dashes become underscores).
    void value(CLI::App* app, const std::vector<std::string>& section, const std::string& name, const std::string& help) {
        auto b = std::make_unique<Binding>();
        b->path = section;
        b->path.push_back(flag_to_key(name));
        b->option = app->add_option("--" + name, b->text, help);
        items_.push_back(std::move(b));
    }

    void flag(CLI::App* app, const std::vector<std::string>& section, const std::string& spec, const std::string& key,
              const std::string& help) {
        auto b = std::make_unique<Binding>();
        b->path = section;
        b->path.push_back(key);
        b->is_flag = true;
        b->option = app->add_flag(spec, b->flag_value, help);
        items_.push_back(std::move(b));
    }

    void apply(Json& cfg) const {
        for (const auto& b : items_) {
            if (b->option->count() == 0) continue;
            Json* slot = &cfg;
            for (const auto& k : b->path) slot = &(*slot)[k];
            const std::string name = b->option->get_name();
            if (b->is_flag) {
                *slot = b->flag_value;
            } else {
                *slot = convert(*slot, b->text, name);
            }
        }
    }

private:
    static Json convert(const Json& like, const std::string& text, const std::string& name) {
        const auto bad = [&] { return UsageError(name + ": invalid value '" + text + "'"); };
        try {
            std::size_t used = 0;
            if (like.is_number_unsigned() || like.is_number_integer()) {
                if (!text.empty() && text[0] == '-') throw bad();
                const auto v = std::stoull(text, &used);
                if (used != text.size()) throw bad();
                return v;
            }
            if (like.is_number_float()) {
                const double v = std::stod(text, &used);
                if (used != text.size()) throw bad();
                return v;
            }
            if (like.is_array()) {
                Json arr = Json::array();
                std::stringstream ss(text);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    if (item.empty() || item[0] == '-') throw bad();
                    arr.push_back(std::stoull(item, &used));
                    if (used != item.size()) throw bad();
                }
                return arr;
            }
        } catch (const std::logic_error&) {
            throw bad();
        }
        return text;
    }

    std::vector<std::unique_ptr<Binding>> items_;
};

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

struct Run {
    std::string command; // e.g. "train" or "features train"
    Json cfg;            // fully resolved
    std::ostream& out;
    std::ostream& err;
    std::string started;

    const Json& section() const {
        const auto space = command.find(' ');
        if (space == std::string::npos) return cfg.at(command);
        return cfg.at(command.substr(0, space)).at(command.substr(space + 1));
    }

    Json resolved() const {
        Json j;
        j["command"] = command;
        j["seed"] = cfg["seed"];
        j["threads"] = cfg["threads"];
        j["deterministic"] = cfg["deterministic"];
        j[command] = section();
        if (command == "crop") j["segment"] = cfg["segment"];
        return j;
    }

    // Resolved config and the timestamp sidecar for an output directory or file.
    void write_provenance(const fs::path& target, bool is_dir) const {
        const fs::path config = is_dir ? target / "config.json" : fs::path(target.string() + ".config.json");
        const fs::path sidecar = is_dir ? target / "run-info.json" : fs::path(target.string() + ".run-info.json");
        write_file_atomic(config, resolved().dump(2) + "\n");
        Json info;
        info["started"] = started;
        info["finished"] = timestamp_utc();
        write_file_atomic(sidecar, info.dump(2) + "\n");
    }
};

std::string required_path(const Json& section, const std::string& key) {
    const std::string v = section.at(key).get<std::string>();
    if (v.empty()) throw UsageError("--" + [&] {
        std::string flag = key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        return flag;
    }() + " is required");
    return v;
}

std::uint64_t seed_of(const Run& run) { return run.cfg.at("seed").get<std::uint64_t>(); }

SegmentConfig segment_config(const Json& s) {
    SegmentConfig c;
    c.closing_radius = s.at("closing_radius").get<std::size_t>();
    c.min_area = s.at("min_area").get<std::size_t>();
    c.min_density = s.at("min_density").get<double>();
    c.max_density = s.at("max_density").get<double>();
    if (!(c.min_density <= c.max_density)) throw DataError("min density exceeds max density");
    return c;
}

int cmd_synth(const Run& run) {
    const Json& s = run.section();
    const fs::path out = required_path(s, "out");
    const SynthPreset& preset = synth_preset(s.at("hard").get<bool>() ? "hard" : "reference");
    const std::size_t books = s.at("books_per_class").get<std::size_t>();
    if (books < 1) throw DataError("need at least one book per class");
    CorpusPlan plan = plan_corpus(preset, books, books, s.at("crops_per_book").get<std::size_t>(), seed_of(run));
    plan.crops_per_page = s.at("crops_per_page").get<std::size_t>();
    if (plan.crops_per_page < 1) throw DataError("crops per page must be at least 1");
    const Manifest m = gen_corpus(plan, out);
    run.write_provenance(out, true);
    run.out << "wrote " << m.records.size() << " crops (" << preset.name << " preset) to " << out.string() << "\n";
    return 0;
}

int cmd_segment(const Run& run) {
    const Json& s = run.cfg.at("segment");
    const fs::path page = required_path(s, "page");
    const auto boxes = segment_page(to_grayscale(read_image(page)), segment_config(s));
    std::ostringstream csv;
    csv << "x,y,width,height,ink_density\n";
    for (const auto& b : boxes) {
        csv << b.x << "," << b.y << "," << b.width << "," << b.height << "," << std::setprecision(6) << b.ink_density
            << "\n";
    }
    const std::string out = s.at("out").get<std::string>();
    if (out.empty()) {
        run.out << csv.str();
    } else {
        write_file_atomic(out, csv.str());
        run.write_provenance(out, false);
        run.out << boxes.size() << " region(s) written to " << out << "\n";
    }
    return 0;
}

int cmd_crop(const Run& run) {
    const Json& s = run.section();
    CropConfig cfg;
    cfg.segment = segment_config(run.cfg.at("segment"));
    cfg.stride = s.at("stride").get<std::size_t>();
    cfg.channels = s.at("channels").get<std::size_t>();
    if (cfg.stride < 1) throw DataError("stride must be at least 1");
    if (cfg.channels != 1 && cfg.channels != 3) throw DataError("--channels must be 1 or 3");
    const std::string labels = s.at("book_labels").get<std::string>();
    if (!labels.empty()) cfg.book_labels = read_book_labels(labels);
    const fs::path out = required_path(s, "out");
    const Manifest m = crop_pages(required_path(s, "root"), out, cfg);
    write_manifest(out / "manifest.csv", m);
    run.write_provenance(out, true);
    run.out << "wrote " << m.records.size() << " crops (" << m.count(Label::wood_engraving) << " wood_engraving, "
            << m.count(Label::lithography) << " lithography) to " << out.string() << "\n";
    return 0;
}

int cmd_balance(const Run& run) {
    const Json& s = run.section();
    const fs::path out = required_path(s, "out");
    const Manifest m = balance_manifest(read_manifest(required_path(s, "manifest")), s.at("per_class").get<std::size_t>(),
                                        seed_of(run));
    write_manifest(out, m);
    run.write_provenance(out, false);
    run.out << "balanced to " << m.count(Label::wood_engraving) << " crops per class\n";
    return 0;
}

int cmd_split(const Run& run) {
    const Json& s = run.section();
    const fs::path out = required_path(s, "out");
    const double fraction = s.at("test_fraction").get<double>();
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw DataError("test fraction must be in [0, 1]");
    const Manifest m = split_manifest(read_manifest(required_path(s, "manifest")), fraction, seed_of(run),
                                      parse_split_level(s.at("level").get<std::string>()));
    write_manifest(out, m);
    run.write_provenance(out, false);
    run.out << "train " << m.count(Split::train) << ", test " << m.count(Split::test) << "\n";
    return 0;
}

int cmd_train(const Run& run) {
    const Json& s = run.section();
    const fs::path manifest_path = required_path(s, "manifest");
    const fs::path out = required_path(s, "out");
    TrainConfig cfg;
    cfg.arch = s.at("arch").get<std::string>();
    cfg.channels = s.at("plan").get<std::vector<std::size_t>>();
    cfg.epochs = s.at("epochs").get<std::size_t>();
    cfg.batch_size = s.at("batch").get<std::size_t>();
    cfg.learning_rate = s.at("lr").get<double>();
    cfg.momentum = s.at("momentum").get<double>();
    cfg.seed = seed_of(run);
    cfg.deterministic = run.cfg.at("deterministic").get<bool>();
    cfg.validate();
    const double stop_at = s.at("stop_at").get<double>();
    const std::size_t subset = s.at("subset").get<std::size_t>();
    const std::size_t channels = s.at("channels").get<std::size_t>();

    const Manifest manifest = read_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    CropSet train_set = load_crops(manifest, base, Split::train, channels);
    if (train_set.count() == 0) throw DataError("the manifest has no train rows");
    if (subset > 0) train_set = take_per_class(train_set, subset);
    const CropSet test_set = load_crops(manifest, base, Split::test, channels);
    const CropSet* test = test_set.count() ? &test_set : nullptr;

    auto result = train(train_set, test, cfg, [&](const EpochLog& e, Model&) {
        run.out << "epoch " << e.epoch << "  loss " << std::fixed << std::setprecision(4) << e.train_loss
                << "  train_acc " << e.train_acc;
        if (e.test_acc) run.out << "  test_acc " << *e.test_acc;
        run.out << std::defaultfloat << "\n" << std::flush;
        return !(stop_at > 0.0 && e.test_acc && *e.test_acc >= stop_at);
    });

    fs::create_directories(out);
    write_file_atomic(out / "train_log.csv", format_train_log(result.log));
    save_checkpoint(result.model, out / "model.ckpt");
    if (test) write_file_atomic(out / "metrics.json", metrics_json(evaluate(result.model, test_set, manifest)));
    run.write_provenance(out, true);
    run.out << "model written to " << (out / "model.ckpt").string() << "\n";
    return 0;
}

int cmd_eval(const Run& run) {
    const Json& s = run.section();
    const fs::path manifest_path = required_path(s, "manifest");
    Model model = load_checkpoint(required_path(s, "model"));
    const Manifest manifest = read_manifest(manifest_path);
    const Split split = parse_split(s.at("split").get<std::string>());
    const Metrics m = evaluate(model, manifest, manifest_path.parent_path(), split);
    run.out << "accuracy " << m.accuracy << " on " << m.count << " crops; image accuracy " << m.image_accuracy
            << " on " << m.images << " images\n";
    run.out << "confusion (rows true, columns predicted): [[" << m.confusion[0][0] << ", " << m.confusion[0][1]
            << "], [" << m.confusion[1][0] << ", " << m.confusion[1][1] << "]]\n";
    const std::string out = s.at("out").get<std::string>();
    const std::size_t limit = s.at("export_misclassified").get<std::size_t>();
    if (!out.empty()) {
        write_file_atomic(fs::path(out) / "metrics.json", metrics_json(m));
        if (limit > 0) {
            const std::size_t n = export_misclassified(m, manifest, manifest_path.parent_path(),
                                                       fs::path(out) / "misclassified", limit);
            run.out << n << " misclassified crop(s) exported\n";
        }
        run.write_provenance(out, true);
    } else if (limit > 0) {
        throw UsageError("--export-misclassified needs --out");
    }
    return 0;
}

int cmd_gradcheck(const Run& run, bool all) {
    if (!all) throw UsageError("gradcheck: pass --all to run the gradient-check suite");
    const Json& s = run.section();
    const double tol = s.at("tolerance").get<double>();
    const auto entries = run_grad_suite(s.at("seeds").get<std::size_t>(), s.at("eps").get<double>());
    bool ok = true;
    for (const auto& e : entries) {
        const bool pass = e.max_rel_error < tol;
        ok &= pass;
        run.out << std::left << std::setw(16) << e.kind << " max_rel_error " << std::scientific << std::setprecision(3)
                << e.max_rel_error << std::defaultfloat << "  cases " << e.cases << "  " << (pass ? "PASS" : "FAIL")
                << "\n";
    }
    run.out << (ok ? "all gradients within " : "gradient check failed; tolerance ") << tol << "\n";
    return ok ? 0 : 3;
}

int cmd_features_synth(const Run& run) {
    const Json& s = run.section();
    const fs::path out = required_path(s, "out");
    const std::string test_out = s.at("test_out").get<std::string>();
    BlobConfig cfg;
    cfg.dim = s.at("dim").get<std::size_t>();
    const std::size_t per_class = s.at("per_class").get<std::size_t>();
    const std::size_t test_per_class = test_out.empty() ? 0 : s.at("test_per_class").get<std::size_t>();
    cfg.per_class = per_class + test_per_class;
    cfg.sigma = s.at("sigma").get<double>();
    cfg.margin = s.at("margin").get<double>();
    cfg.seed = seed_of(run);
    const FeatureSet all = make_blobs(cfg).features;
    // Rows alternate classes, so the first 2 * per_class rows hold per_class of each.
    const auto slice = [&](std::size_t begin, std::size_t end) {
        FeatureSet f;
        f.dim = all.dim;
        f.values.assign(all.values.begin() + static_cast<std::ptrdiff_t>(begin * all.dim),
                        all.values.begin() + static_cast<std::ptrdiff_t>(end * all.dim));
        f.labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(begin), all.labels.begin() + static_cast<std::ptrdiff_t>(end));
        f.crop_ids.assign(all.crop_ids.begin() + static_cast<std::ptrdiff_t>(begin),
                          all.crop_ids.begin() + static_cast<std::ptrdiff_t>(end));
        return f;
    };
    write_file_atomic(out, format_feature_csv(slice(0, 2 * per_class)));
    if (!test_out.empty()) write_file_atomic(test_out, format_feature_csv(slice(2 * per_class, all.rows())));
    run.write_provenance(out, false);
    run.out << "wrote " << 2 * per_class << " feature rows to " << out.string() << "\n";
    return 0;
}

int cmd_features_train(const Run& run) {
    const Json& s = run.section();
    const FeatureSet train = read_feature_file(required_path(s, "features"));
    const std::string test_path = s.at("test").get<std::string>();
    const FeatureSet test = test_path.empty() ? train : read_feature_file(test_path);
    const std::string head = s.at("head").get<std::string>();
    const std::string out = s.at("out").get<std::string>();

    Metrics m;
    std::string log;
    if (head == "fcn") {
        FcnConfig cfg;
        cfg.hidden = s.at("hidden").get<std::size_t>();
        cfg.epochs = s.at("epochs").get<std::size_t>();
        cfg.batch_size = s.at("batch").get<std::size_t>();
        cfg.learning_rate = s.at("lr").get<double>();
        cfg.momentum = s.at("momentum").get<double>();
        cfg.seed = seed_of(run);
        auto r = train_fcn_head(train, cfg);
        m = eval_head(r.head, test);
        log = "epoch,train_loss\n";
        for (std::size_t i = 0; i < r.epoch_loss.size(); ++i) log += std::to_string(i + 1) + "," + std::to_string(r.epoch_loss[i]) + "\n";
    } else if (head == "svm") {
        SvmConfig cfg;
        cfg.lambda = s.at("lambda").get<double>();
        cfg.epochs = s.at("epochs").get<std::size_t>();
        cfg.seed = seed_of(run);
        auto r = train_linear_svm(train, cfg);
        m = eval_head(r.svm, test);
        log = "epoch,objective\n";
        for (std::size_t i = 0; i < r.epoch_objective.size(); ++i) {
            log += std::to_string(i + 1) + "," + std::to_string(r.epoch_objective[i]) + "\n";
        }
    } else {
        throw UsageError("--head must be fcn or svm, not '" + head + "'");
    }
    run.out << head << " head: accuracy " << m.accuracy << " on " << m.count << " " << (test_path.empty() ? "train" : "test")
            << " rows\n";
    if (!out.empty()) {
        write_file_atomic(fs::path(out) / "metrics.json", metrics_json(m));
        write_file_atomic(fs::path(out) / "train_log.csv", log);
        run.write_provenance(out, true);
    }
    return 0;
}

std::vector<std::string> option_names(const CLI::App& app) {
    std::vector<std::string> names;
    for (const auto* opt : app.get_options()) {
        for (const auto& l : opt->get_lnames()) names.push_back("--" + l);
    }
    for (const auto* sub : app.get_subcommands({})) {
        for (auto& n : option_names(*sub)) names.push_back(std::move(n));
    }
    return names;
}

std::vector<std::string> subcommand_names(const CLI::App& app) {
    std::vector<std::string> names;
    for (const auto* sub : app.get_subcommands({})) names.push_back(sub->get_name());
    return names;
}

// Explains a parse failure, naming the closest known subcommand or flag.
std::string explain(const CLI::App& app, std::span<const std::string> args, const std::string& base) {
    const auto flags = option_names(app);
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string token = args[i].substr(0, args[i].find('='));
        if (token.rfind("--", 0) != 0 || std::find(flags.begin(), flags.end(), token) != flags.end()) continue;
        const std::string hint = suggest(token, flags);
        return "unknown option '" + token + "'" + (hint.empty() ? "" : "; did you mean '" + hint + "'?");
    }
    // First bare word that is neither a known subcommand nor an option value.
    const CLI::App* level = &app;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("-", 0) == 0) {
            const CLI::Option* opt = nullptr;
            for (const CLI::App* l = level; l && !opt; l = l->get_parent()) opt = l->get_option_no_throw(a);
            if (opt && opt->get_expected_min() > 0 && a.find('=') == std::string::npos) ++i;
            continue;
        }
        const auto subs = subcommand_names(*level);
        if (subs.empty()) break;
        if (std::find(subs.begin(), subs.end(), a) != subs.end()) {
            level = level->get_subcommand(a);
            continue;
        }
        const std::string hint = suggest(a, subs);
        return "unknown command '" + a + "'" + (hint.empty() ? "" : "; did you mean '" + hint + "'?");
    }
    return base;
}

} // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    const std::string started = timestamp_utc();
    CLI::App app{"Classify printing technique (wood engraving vs lithography) from 128x128 illustration crops.",
                 "printkind"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", "printkind 1.0");

    const Json defaults = default_config();
    Bindings bind;
    std::string config_path;
    app.add_option("--config", config_path, "JSON config; overrides ./printkind.json, flags override both");
    bind.value(&app, {}, "seed", "Seed for every random choice");
    bind.value(&app, {}, "threads", "Worker thread cap (0 = OpenMP default)");
    bind.flag(&app, {}, "--deterministic,!--no-deterministic", "deterministic", "Deterministic numerics (default on)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic engraving/lithography crop corpus");
    bind.value(synth, {"synth"}, "out", "Output directory");
    bind.value(synth, {"synth"}, "books-per-class", "Books per class");
    bind.value(synth, {"synth"}, "crops-per-book", "Crops per book");
    bind.value(synth, {"synth"}, "crops-per-page", "Crops grouped into one synthetic page");
    bind.flag(synth, {"synth"}, "--hard", "hard", "Use the hard preset (overlapping texture parameters)");

    const auto segment_flags = [&](CLI::App* sub) {
        bind.value(sub, {"segment"}, "closing-radius", "Closing radius in pixels");
        bind.value(sub, {"segment"}, "min-area", "Minimum region bounding-box area");
        bind.value(sub, {"segment"}, "min-density", "Minimum ink density");
        bind.value(sub, {"segment"}, "max-density", "Maximum ink density");
    };
    auto* segment = app.add_subcommand("segment", "Find illustration regions on one page (CSV to stdout or --out)");
    bind.value(segment, {"segment"}, "page", "Page image (.pgm/.ppm/.png)");
    bind.value(segment, {"segment"}, "out", "Write the region CSV here instead of stdout");
    segment_flags(segment);

    auto* crop = app.add_subcommand("crop", "Segment every page of <root>/<label>/<book>/ and cut 128x128 crops");
    bind.value(crop, {"crop"}, "root", "Page tree root");
    bind.value(crop, {"crop"}, "out", "Output directory (crops/ and manifest.csv)");
    bind.value(crop, {"crop"}, "stride", "Crop grid stride");
    bind.value(crop, {"crop"}, "channels", "1 (gray) or 3 (RGB)");
    bind.value(crop, {"crop"}, "book-labels", "CSV book_id,label; must agree with the directories");
    segment_flags(crop);

    auto* balance = app.add_subcommand("balance", "Sample an equal number of crops per class, uniformly per book");
    bind.value(balance, {"balance"}, "manifest", "Input manifest");
    bind.value(balance, {"balance"}, "out", "Output manifest");
    bind.value(balance, {"balance"}, "per-class", "Crops kept per class");

    auto* split = app.add_subcommand("split", "Assign train/test by whole book, page or crop");
    bind.value(split, {"split"}, "manifest", "Input manifest");
    bind.value(split, {"split"}, "out", "Output manifest");
    bind.value(split, {"split"}, "test-fraction", "Target share of each class in test");
    bind.value(split, {"split"}, "level", "book, image or crop");

    auto* trn = app.add_subcommand("train", "Train a CNN on the train split of a manifest");
    bind.value(trn, {"train"}, "manifest", "Manifest with train (and optionally test) rows");
    bind.value(trn, {"train"}, "out", "Output directory");
    bind.value(trn, {"train"}, "arch", "Preset name or architecture text, e.g. 'Conv(3)-Pool*2'");
    bind.value(trn, {"train"}, "plan", "Conv output channels, comma separated");
    bind.value(trn, {"train"}, "channels", "Input channels, 1 or 3");
    bind.value(trn, {"train"}, "epochs", "Epochs");
    bind.value(trn, {"train"}, "batch", "Mini-batch size");
    bind.value(trn, {"train"}, "lr", "Learning rate");
    bind.value(trn, {"train"}, "momentum", "Momentum");
    bind.value(trn, {"train"}, "stop-at", "Stop once test accuracy reaches this (0 = never)");
    bind.value(trn, {"train"}, "subset", "Use only the first N train crops of each class (0 = all)");

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
    bind.value(ev, {"eval"}, "model", "Checkpoint file");
    bind.value(ev, {"eval"}, "manifest", "Manifest");
    bind.value(ev, {"eval"}, "split", "train or test");
    bind.value(ev, {"eval"}, "out", "Directory for metrics.json");
    bind.value(ev, {"eval"}, "export-misclassified", "Copy up to N misclassified crops into <out>/misclassified");

    auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks of every layer kind");
    bool grad_all = false;
    grad->add_flag("--all", grad_all, "Run the full suite");
    bind.value(grad, {"gradcheck"}, "seeds", "Random cases per layer kind");
    bind.value(grad, {"gradcheck"}, "eps", "Finite-difference step");
    bind.value(grad, {"gradcheck"}, "tolerance", "Maximum relative error");

    auto* feats = app.add_subcommand("features", "Classify precomputed feature vectors");
    feats->require_subcommand(1);
    auto* ftrain = feats->add_subcommand("train", "Train and evaluate an FCN or linear SVM head");
    bind.value(ftrain, {"features", "train"}, "features", "Training feature CSV");
    bind.value(ftrain, {"features", "train"}, "test", "Held-out feature CSV (default: evaluate on train)");
    bind.value(ftrain, {"features", "train"}, "out", "Output directory");
    bind.value(ftrain, {"features", "train"}, "head", "fcn or svm");
    bind.value(ftrain, {"features", "train"}, "hidden", "FCN hidden width");
    bind.value(ftrain, {"features", "train"}, "epochs", "Epochs");
    bind.value(ftrain, {"features", "train"}, "batch", "FCN mini-batch size");
    bind.value(ftrain, {"features", "train"}, "lr", "FCN learning rate");
    bind.value(ftrain, {"features", "train"}, "momentum", "FCN momentum");
    bind.value(ftrain, {"features", "train"}, "lambda", "SVM regularization");
    auto* fsynth = feats->add_subcommand("synth", "Write a two-blob feature fixture");
    bind.value(fsynth, {"features", "synth"}, "out", "Training CSV");
    bind.value(fsynth, {"features", "synth"}, "test-out", "Held-out CSV drawn from the same blobs");
    bind.value(fsynth, {"features", "synth"}, "dim", "Feature dimension");
    bind.value(fsynth, {"features", "synth"}, "per-class", "Training rows per class");
    bind.value(fsynth, {"features", "synth"}, "test-per-class", "Held-out rows per class");
    bind.value(fsynth, {"features", "synth"}, "sigma", "Blob standard deviation");
    bind.value(fsynth, {"features", "synth"}, "margin", "Gap between the 3-sigma shells");

    std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rev.begin(), rev.end());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "printkind: " << explain(app, args, e.what()) << "\nRun with --help for usage.\n";
        return 1;
    }

    try {
        Json cfg = defaults;
        const auto layer = [&](const fs::path& path) {
            const Json file = load_config_file(path);
            check_known_keys(defaults, file, "");
            merge_config(cfg, file);
        };
        if (fs::exists("printkind.json")) layer("printkind.json");
        if (!config_path.empty()) layer(config_path);
        bind.apply(cfg);

        const int threads = cfg.at("threads").get<int>();
        if (threads < 0) throw UsageError("--threads must be non-negative");
        if (threads > 0) omp_set_num_threads(threads);

        const auto make_run = [&](std::string command) { return Run{std::move(command), cfg, out, err, started}; };
        if (*synth) return cmd_synth(make_run("synth"));
        if (*segment) return cmd_segment(make_run("segment"));
        if (*crop) return cmd_crop(make_run("crop"));
        if (*balance) return cmd_balance(make_run("balance"));
        if (*split) return cmd_split(make_run("split"));
        if (*trn) return cmd_train(make_run("train"));
        if (*ev) return cmd_eval(make_run("eval"));
        if (*grad) return cmd_gradcheck(make_run("gradcheck"), grad_all);
        if (*ftrain) return cmd_features_train(make_run("features train"));
        if (*fsynth) return cmd_features_synth(make_run("features synth"));
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        err << "printkind: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        err << "printkind: numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const Json::exception& e) {
        err << "printkind: bad config value: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "printkind: " << e.what() << "\n";
        return 2;
    }
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace printkind
