#include "adglab/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "adglab/common.hpp"
#include "adglab/rng.hpp"

namespace adglab {

void SplitConfig::validate() const {
    auto frac = [](double f, const char* name) {
        if (!(f > 0.0) || !(f < 1.0))
            throw ValidationError(std::string("split: ") + name + " must be in (0,1)");
    };
    frac(novel_fraction, "novel_fraction");
    frac(testval_fraction, "testval_fraction");
    frac(trainval_fraction, "trainval_fraction");
    if (!(iou_threshold > 0.0) || iou_threshold > 1.0)
        throw ValidationError("split: iou_threshold must be in (0,1]");
}

double iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a[2], b[2]) - std::max(a[0], b[0]));
    const double iy = std::max(0.0, std::min(a[3], b[3]) - std::max(a[1], b[1]));
    const double inter = ix * iy;
    if (inter <= 0.0) return 0.0;
    const double area_a = (a[2] - a[0]) * (a[3] - a[1]);
    const double area_b = (b[2] - b[0]) * (b[3] - b[1]);
    return inter / (area_a + area_b - inter);
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

void check_box(const Box& b, int instance_id) {
    if (!(b[2] > b[0]) || !(b[3] > b[1]))
        throw ValidationError("merge_pairs: degenerate box on instance " +
                              std::to_string(instance_id));
}

}  // namespace

Dataset merge_pairs(const Dataset& annotations, double iou_threshold) {
    if (!(iou_threshold > 0.0) || iou_threshold > 1.0)
        throw ValidationError("merge_pairs: threshold must be in (0,1]");
    for (const Instance& x : annotations) {
        check_box(x.human_box, x.instance_id);
        check_box(x.object_box, x.instance_id);
    }

    // group indices by image, preserving input order
    std::map<int, std::vector<int>> by_image;
    for (std::size_t i = 0; i < annotations.size(); ++i)
        by_image[annotations[i].image_id].push_back(static_cast<int>(i));

    UnionFind uf(annotations.size());
    for (const auto& [img, ids] : by_image) {
        (void)img;
        for (std::size_t a = 0; a < ids.size(); ++a) {
            for (std::size_t b = a + 1; b < ids.size(); ++b) {
                const Instance& xa = annotations[static_cast<std::size_t>(ids[a])];
                const Instance& xb = annotations[static_cast<std::size_t>(ids[b])];
                if (xa.object_label != xb.object_label || xa.subject_label != xb.subject_label)
                    continue;
                if (iou(xa.human_box, xb.human_box) >= iou_threshold &&
                    iou(xa.object_box, xb.object_box) >= iou_threshold)
                    uf.unite(ids[a], ids[b]);
            }
        }
    }

    // merge components; representative is the first member in input order
    std::map<int, std::vector<int>> components;
    for (std::size_t i = 0; i < annotations.size(); ++i)
        components[uf.find(static_cast<int>(i))].push_back(static_cast<int>(i));

    Dataset merged;
    merged.reserve(components.size());
    std::vector<std::pair<int, int>> order;  // (first index, root)
    for (const auto& [root, members] : components) order.push_back({members.front(), root});
    std::sort(order.begin(), order.end());
    for (const auto& [first, root] : order) {
        Instance out = annotations[static_cast<std::size_t>(first)];
        std::set<int> preds(out.predicate_labels.begin(), out.predicate_labels.end());
        for (int m : components[root])
            preds.insert(annotations[static_cast<std::size_t>(m)].predicate_labels.begin(),
                         annotations[static_cast<std::size_t>(m)].predicate_labels.end());
        out.predicate_labels.assign(preds.begin(), preds.end());
        merged.push_back(std::move(out));
    }
    return merged;
}

CategorySet categories_of(const Dataset& data) {
    CategorySet cats;
    for (const Instance& x : data)
        for (int k : x.predicate_labels) cats.insert({k, x.object_label});
    return cats;
}

CarveResult category_disjoint_carve(const Dataset& instances, double novel_fraction,
                                    std::uint64_t seed, const std::string& stage) {
    CarveResult res;

    // per-predicate object instance counts
    std::map<int, std::map<int, int>> count;  // predicate -> object -> #instances
    for (const Instance& x : instances)
        for (int k : x.predicate_labels) ++count[k][x.object_label];

    // Tentative category assignment: per predicate, pick the object subset
    // whose instance count best matches the target fraction (greedy best
    // fit over a seeded order; at least one object on each side).
    CategorySet novel_cats;
    for (const auto& [pred, objs] : count) {
        if (objs.size() < 2) {
            res.warnings.push_back(stage + ": predicate " + std::to_string(pred) +
                                   " has a single object; kept entirely on the seen side");
            continue;
        }
        std::vector<std::pair<int, int>> obj_counts(objs.begin(), objs.end());
        CounterRng rng(seed, CounterRng::stream_key(("carve:" + stage).c_str(),
                                                    static_cast<std::uint64_t>(pred)));
        rng.shuffle(obj_counts);
        int total = 0;
        for (const auto& [o, n] : obj_counts) total += n;
        const double target = novel_fraction * total;

        std::vector<bool> taken(obj_counts.size(), false);
        double cum = 0.0;
        std::size_t ntaken = 0;
        while (ntaken + 1 < obj_counts.size()) {
            // best next object, judged by distance to the target; the first
            // pick is mandatory so each side gets at least one object
            const bool must_take = (ntaken == 0);
            int best = -1;
            double best_dist = must_take ? std::numeric_limits<double>::infinity()
                                         : std::abs(cum - target);
            for (std::size_t i = 0; i < obj_counts.size(); ++i) {
                if (taken[i]) continue;
                const double dist = std::abs(cum + obj_counts[i].second - target);
                if (dist < best_dist) {
                    best = static_cast<int>(i);
                    best_dist = dist;
                }
            }
            if (best < 0) break;  // stopping is better than any remaining pick
            taken[static_cast<std::size_t>(best)] = true;
            cum += obj_counts[static_cast<std::size_t>(best)].second;
            ++ntaken;
        }
        for (std::size_t i = 0; i < obj_counts.size(); ++i)
            if (taken[i]) novel_cats.insert({pred, obj_counts[i].first});
    }

    // Instance assignment with conflict cascades. Seen instances drag their
    // categories to the seen side; novel purity outranks novel size.
    std::vector<int> side(instances.size(), 0);  // 0 seen, 1 novel, 2 dropped
    auto assign_pass = [&]() {
        bool changed = false;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            if (side[i] == 2) continue;
            bool all_novel = true;
            for (int k : instances[i].predicate_labels)
                if (!novel_cats.count({k, instances[i].object_label})) all_novel = false;
            const int want = all_novel ? 1 : 0;
            if (side[i] != want) {
                side[i] = want;
                changed = true;
            }
            if (want == 0) {
                // drag this instance's categories to the seen side
                for (int k : instances[i].predicate_labels)
                    changed |= novel_cats.erase({k, instances[i].object_label}) > 0;
            }
        }
        return changed;
    };
    while (assign_pass()) {
    }

    // Image disjointness: a straddling image goes whole to its majority
    // side (ties to seen) and the minority members are dropped with a
    // logged reason. Converting them instead would either leak novel
    // categories into the seen pool (cascading the novel side away) or put
    // seen categories into the novel split.
    std::map<int, std::pair<int, int>> img_counts;  // image -> (seen, novel)
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (side[i] == 2) continue;
        auto& c = img_counts[instances[i].image_id];
        if (side[i] == 0) ++c.first;
        else ++c.second;
    }
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (side[i] == 2) continue;
        const auto& c = img_counts.at(instances[i].image_id);
        if (c.first == 0 || c.second == 0) continue;  // image already pure
        const bool majority_novel = c.second > c.first;
        if (majority_novel && side[i] == 0) {
            side[i] = 2;
            res.dropped.push_back(
                {instances[i].instance_id, stage + ": seen minority in a majority-novel image"});
        } else if (!majority_novel && side[i] == 1) {
            side[i] = 2;
            res.dropped.push_back(
                {instances[i].instance_id, stage + ": novel minority in a majority-seen image"});
        }
    }

    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (side[i] == 0) res.seen.push_back(instances[i]);
        else if (side[i] == 1) res.novel.push_back(instances[i]);
    }
    return res;
}

namespace {

// i.i.d. train/trainval split that keeps every trainval category inside
// train's category set: each category with >= 2 instances pins one instance
// to train and one to trainval, sole-category instances go to train, the
// rest fill trainval up to the target fraction in a seeded order.
void split_train_trainval(const Dataset& pool, double trainval_fraction, std::uint64_t seed,
                          Dataset& train, Dataset& trainval,
                          std::vector<std::string>& warnings) {
    std::map<Category, std::vector<int>> by_cat;
    for (std::size_t i = 0; i < pool.size(); ++i)
        for (int k : pool[i].predicate_labels)
            by_cat[{k, pool[i].object_label}].push_back(static_cast<int>(i));

    enum { Free = 0, PinTrain = 1, PinTrainval = 2 };
    std::vector<int> pin(pool.size(), Free);
    for (auto& [cat, ids] : by_cat) {
        if (ids.size() < 2) {
            pin[static_cast<std::size_t>(ids.front())] = PinTrain;
            continue;
        }
        CounterRng rng(seed, CounterRng::stream_key("trainval_pin",
                                                    (static_cast<std::uint64_t>(cat.first) << 20) ^
                                                        static_cast<std::uint64_t>(cat.second)));
        std::vector<int> order = ids;
        rng.shuffle(order);
        // one representative on each side; multi-label instances may already
        // be pinned by another category, which still serves
        bool has_train = false, has_trainval = false;
        for (int i : order) {
            if (pin[static_cast<std::size_t>(i)] == PinTrain) has_train = true;
            if (pin[static_cast<std::size_t>(i)] == PinTrainval) has_trainval = true;
        }
        for (int i : order) {
            if (has_train) break;
            if (pin[static_cast<std::size_t>(i)] == Free) {
                pin[static_cast<std::size_t>(i)] = PinTrain;
                has_train = true;
            }
        }
        for (int i : order) {
            if (has_trainval) break;
            if (pin[static_cast<std::size_t>(i)] == Free) {
                pin[static_cast<std::size_t>(i)] = PinTrainval;
                has_trainval = true;
            }
        }
        if (!has_trainval)
            warnings.push_back("trainval: category (" + std::to_string(cat.first) + "," +
                               std::to_string(cat.second) +
                               ") has no free instance for trainval");
    }

    std::vector<int> free_ids;
    std::size_t pinned_trainval = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pin[i] == Free) free_ids.push_back(static_cast<int>(i));
        if (pin[i] == PinTrainval) ++pinned_trainval;
    }
    CounterRng rng(seed, CounterRng::stream_key("trainval_fill"));
    rng.shuffle(free_ids);
    const std::size_t target =
        static_cast<std::size_t>(std::llround(trainval_fraction * static_cast<double>(pool.size())));
    std::size_t need = target > pinned_trainval ? target - pinned_trainval : 0;
    std::vector<bool> to_trainval(pool.size(), false);
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (pin[i] == PinTrainval) to_trainval[i] = true;
    for (int id : free_ids) {
        if (need == 0) break;
        to_trainval[static_cast<std::size_t>(id)] = true;
        --need;
    }
    for (std::size_t i = 0; i < pool.size(); ++i)
        (to_trainval[i] ? trainval : train).push_back(pool[i]);

    // safety net: a trainval category absent from train is force-moved
    CategorySet train_cats = categories_of(train);
    Dataset fixed_trainval;
    for (Instance& x : trainval) {
        bool ok = true;
        for (int k : x.predicate_labels)
            if (!train_cats.count({k, x.object_label})) ok = false;
        if (ok) {
            fixed_trainval.push_back(std::move(x));
        } else {
            for (int k : x.predicate_labels) train_cats.insert({k, x.object_label});
            train.push_back(std::move(x));
        }
    }
    trainval = std::move(fixed_trainval);
}

std::set<int> image_ids_of(const Dataset& data) {
    std::set<int> ids;
    for (const Instance& x : data) ids.insert(x.image_id);
    return ids;
}

bool disjoint_images(const Dataset& a, const Dataset& b) {
    const std::set<int> ia = image_ids_of(a);
    for (const Instance& x : b)
        if (ia.count(x.image_id)) return false;
    return true;
}

bool disjoint_categories(const CategorySet& a, const CategorySet& b) {
    for (const Category& c : b)
        if (a.count(c)) return false;
    return true;
}

}  // namespace

SplitResult make_split(const Dataset& instances, const SplitConfig& cfg) {
    cfg.validate();
    if (instances.empty()) throw ValidationError("split: empty dataset");

    SplitResult res;
    CarveResult novel = category_disjoint_carve(instances, cfg.novel_fraction, cfg.seed, "test");
    res.test = std::move(novel.novel);
    res.warnings = std::move(novel.warnings);
    res.dropped = std::move(novel.dropped);
    if (res.test.empty())
        res.warnings.push_back("test: novel carve is empty");

    CarveResult val =
        category_disjoint_carve(novel.seen, cfg.testval_fraction, cfg.seed + 1, "testval");
    res.testval = std::move(val.novel);
    for (auto& w : val.warnings) res.warnings.push_back(std::move(w));
    for (auto& d : val.dropped) res.dropped.push_back(std::move(d));
    if (res.testval.empty())
        res.warnings.push_back("testval: carve is empty");

    split_train_trainval(val.seen, cfg.trainval_fraction, cfg.seed + 2, res.train, res.trainval,
                         res.warnings);

    res.train_categories = categories_of(res.train);
    res.trainval_categories = categories_of(res.trainval);
    res.testval_categories = categories_of(res.testval);
    res.test_categories = categories_of(res.test);
    res.check_invariants(instances.size());
    return res;
}

void SplitResult::check_invariants(std::size_t input_size) const {
    CategorySet seen = train_categories;
    seen.insert(trainval_categories.begin(), trainval_categories.end());
    if (!disjoint_categories(seen, testval_categories))
        throw InvariantError("split: testval categories overlap train+trainval");
    CategorySet all_seen = seen;
    all_seen.insert(testval_categories.begin(), testval_categories.end());
    if (!disjoint_categories(all_seen, test_categories))
        throw InvariantError("split: test categories overlap train+trainval+testval");
    for (const Category& c : trainval_categories)
        if (!train_categories.count(c))
            throw InvariantError("split: trainval category missing from train");

    Dataset seen_pool = train;
    seen_pool.insert(seen_pool.end(), trainval.begin(), trainval.end());
    if (!disjoint_images(seen_pool, testval))
        throw InvariantError("split: testval shares images with train+trainval");
    Dataset non_test = seen_pool;
    non_test.insert(non_test.end(), testval.begin(), testval.end());
    if (!disjoint_images(non_test, test))
        throw InvariantError("split: test shares images with the seen splits");

    const std::size_t placed =
        train.size() + trainval.size() + testval.size() + test.size() + dropped.size();
    if (placed != input_size)
        throw InvariantError("split: not a partition (" + std::to_string(placed) + " of " +
                             std::to_string(input_size) + " accounted for)");
}

void save_split(const SplitResult& split, const SplitConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    save_dataset(split.train, out_dir + "/train.jsonl");
    save_dataset(split.trainval, out_dir + "/trainval.jsonl");
    save_dataset(split.testval, out_dir + "/testval.jsonl");
    save_dataset(split.test, out_dir + "/test.jsonl");

    auto cats_json = [](const CategorySet& cats) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [k, o] : cats) arr.push_back({k, o});
        return arr;
    };
    auto count_images = [](const Dataset& d) {
        std::set<int> ids;
        for (const Instance& x : d) ids.insert(x.image_id);
        return ids.size();
    };
    nlohmann::json drops = nlohmann::json::array();
    for (const auto& [id, why] : split.dropped) drops.push_back({{"instance_id", id}, {"reason", why}});
    nlohmann::json j{
        {"seed", cfg.seed},
        {"fractions",
         {{"novel", cfg.novel_fraction},
          {"testval", cfg.testval_fraction},
          {"trainval", cfg.trainval_fraction}}},
        {"iou_threshold", cfg.iou_threshold},
        {"counts",
         {{"train", {{"instances", split.train.size()}, {"images", count_images(split.train)}}},
          {"trainval",
           {{"instances", split.trainval.size()}, {"images", count_images(split.trainval)}}},
          {"testval",
           {{"instances", split.testval.size()}, {"images", count_images(split.testval)}}},
          {"test", {{"instances", split.test.size()}, {"images", count_images(split.test)}}}}},
        {"categories",
         {{"train", cats_json(split.train_categories)},
          {"trainval", cats_json(split.trainval_categories)},
          {"testval", cats_json(split.testval_categories)},
          {"test", cats_json(split.test_categories)}}},
        {"warnings", split.warnings},
        {"dropped", drops}};
    write_file_atomic(out_dir + "/split_manifest.json", j.dump(2) + "\n");
}

SplitResult load_split(const std::string& dir) {
    SplitResult res;
    res.train = load_dataset(dir + "/train.jsonl");
    res.trainval = load_dataset(dir + "/trainval.jsonl");
    res.testval = load_dataset(dir + "/testval.jsonl");
    res.test = load_dataset(dir + "/test.jsonl");
    res.train_categories = categories_of(res.train);
    res.trainval_categories = categories_of(res.trainval);
    res.testval_categories = categories_of(res.testval);
    res.test_categories = categories_of(res.test);
    return res;
}

}  // namespace adglab
