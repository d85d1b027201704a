#include "adglab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "adglab/common.hpp"
#include "adglab/rng.hpp"

namespace adglab {

void GeneratorConfig::validate() const {
    if (num_objects < 2 || num_predicates < 2)
        throw ValidationError("generator: need at least 2 objects and 2 predicates");
    if (pairs_per_predicate < 2 || pairs_per_predicate > num_objects)
        throw ValidationError(
            "generator: pairs_per_predicate must be in [2, num_objects] so that every "
            "predicate co-occurs with at least two objects");
    if (zipf_exponent < 0.0) throw ValidationError("generator: zipf_exponent must be >= 0");
    if (noise_std < 0.0 || human_noise_std < 0.0 || spatial_noise_std < 0.0)
        throw ValidationError("generator: noise std must be >= 0");
    if (nuisance_strength < 0.0 || nuisance_strength > 1.0)
        throw ValidationError("generator: nuisance_strength must be in [0,1]");
    if (total_instances <= 0) throw ValidationError("generator: total_instances must be > 0");
    if (union_dim < 2 || human_dim < 1 || spatial_dim < 7)
        throw ValidationError("generator: dims too small (spatial needs 6 geometry dims)");
    if (max_instances_per_image < 1)
        throw ValidationError("generator: max_instances_per_image must be >= 1");
    if (image_category_concentration < 0.0 || image_category_concentration > 1.0)
        throw ValidationError("generator: image_category_concentration must be in [0,1]");
}

namespace {

struct GivensRotation {
    int p, q;
    double angle;
};

// Object nuisance: a product of Givens rotations with angles scaled by
// nuisance_strength. Exactly orthogonal for any strength; identity at 0.
std::vector<GivensRotation> nuisance_rotations(const GeneratorConfig& cfg, int object_id) {
    CounterRng rng(cfg.seed, CounterRng::stream_key("nuisance", static_cast<std::uint64_t>(object_id)));
    std::vector<GivensRotation> rots;
    const int count = 2 * cfg.union_dim;
    rots.reserve(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r) {
        const int p = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.union_dim)));
        int q = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.union_dim - 1)));
        if (q >= p) ++q;
        const double base = 3.14159265358979323846 * (2.0 * rng.next_double() - 1.0);
        rots.push_back({p, q, cfg.nuisance_strength * base});
    }
    return rots;
}

void apply_rotations(const std::vector<GivensRotation>& rots, std::vector<double>& x) {
    for (const auto& r : rots) {
        const double c = std::cos(r.angle), s = std::sin(r.angle);
        const double xp = x[static_cast<std::size_t>(r.p)];
        const double xq = x[static_cast<std::size_t>(r.q)];
        x[static_cast<std::size_t>(r.p)] = c * xp - s * xq;
        x[static_cast<std::size_t>(r.q)] = s * xp + c * xq;
    }
}

std::vector<double> signal_vector(std::uint64_t seed, const char* label, int id, int dim,
                                  double scale) {
    CounterRng rng(seed, CounterRng::stream_key(label, static_cast<std::uint64_t>(id)));
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& e : v) e = scale * rng.next_gaussian();
    return v;
}

// Per-predicate spatial archetype: where the object box sits relative to the
// human box and how large it is.
struct Archetype {
    double dx, dy;        // offset of object center in human-size units
    double wratio, hratio;  // object size relative to human size
};

Archetype archetype_for(const GeneratorConfig& cfg, int predicate_id) {
    CounterRng rng(cfg.seed, CounterRng::stream_key("archetype", static_cast<std::uint64_t>(predicate_id)));
    Archetype a;
    a.dx = 1.6 * (rng.next_double() - 0.5);
    a.dy = 1.6 * (rng.next_double() - 0.5);
    a.wratio = 0.4 + 1.2 * rng.next_double();
    a.hratio = 0.4 + 1.2 * rng.next_double();
    return a;
}

double box_iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a[2], b[2]) - std::max(a[0], b[0]));
    const double iy = std::max(0.0, std::min(a[3], b[3]) - std::max(a[1], b[1]));
    const double inter = ix * iy;
    const double areaA = (a[2] - a[0]) * (a[3] - a[1]);
    const double areaB = (b[2] - b[0]) * (b[3] - b[1]);
    return inter <= 0.0 ? 0.0 : inter / (areaA + areaB - inter);
}

// Translation- and scale-invariant encoding of the box pair. Because the
// boxes are synthesised from the predicate's archetype alone, these are
// object-invariant by construction.
std::vector<double> box_geometry(const Box& h, const Box& o) {
    const double hw = h[2] - h[0], hh = h[3] - h[1];
    const double ow = o[2] - o[0], oh = o[3] - o[1];
    const double hcx = 0.5 * (h[0] + h[2]), hcy = 0.5 * (h[1] + h[3]);
    const double ocx = 0.5 * (o[0] + o[2]), ocy = 0.5 * (o[1] + o[3]);
    return {(ocx - hcx) / hw, (ocy - hcy) / hh, std::log(ow / hw), std::log(oh / hh),
            box_iou(h, o), ow * oh / (hw * hh)};
}

}  // namespace

GeneratedDataset generate(const GeneratorConfig& cfg) {
    cfg.validate();

    // Objects co-occurring with each predicate.
    std::vector<std::vector<int>> predicate_objects(static_cast<std::size_t>(cfg.num_predicates));
    for (int k = 0; k < cfg.num_predicates; ++k) {
        std::vector<int> all(static_cast<std::size_t>(cfg.num_objects));
        std::iota(all.begin(), all.end(), 0);
        CounterRng rng(cfg.seed, CounterRng::stream_key("pairs", static_cast<std::uint64_t>(k)));
        rng.shuffle(all);
        all.resize(static_cast<std::size_t>(cfg.pairs_per_predicate));
        std::sort(all.begin(), all.end());
        predicate_objects[static_cast<std::size_t>(k)] = std::move(all);
    }

    // Category list in a seeded order; rank r gets Zipf weight 1/(r+1)^s.
    struct Category {
        int predicate, object;
    };
    std::vector<Category> categories;
    for (int k = 0; k < cfg.num_predicates; ++k)
        for (int o : predicate_objects[static_cast<std::size_t>(k)]) categories.push_back({k, o});
    {
        CounterRng rng(cfg.seed, CounterRng::stream_key("category_order"));
        rng.shuffle(categories);
    }
    std::vector<double> cdf(categories.size());
    double wsum = 0.0;
    for (std::size_t r = 0; r < categories.size(); ++r) {
        wsum += std::pow(static_cast<double>(r + 1), -cfg.zipf_exponent);
        cdf[r] = wsum;
    }
    for (double& c : cdf) c /= wsum;

    // Precompute per-predicate signals/archetypes and per-object rotations.
    std::vector<std::vector<double>> union_signal, human_signal, spatial_signal;
    std::vector<Archetype> archetypes;
    for (int k = 0; k < cfg.num_predicates; ++k) {
        union_signal.push_back(signal_vector(cfg.seed, "union_signal", k, cfg.union_dim, 1.0));
        human_signal.push_back(
            signal_vector(cfg.seed, "human_signal", k, cfg.human_dim, cfg.human_signal_scale));
        spatial_signal.push_back(signal_vector(cfg.seed, "spatial_signal", k,
                                               cfg.spatial_dim - 6, cfg.spatial_signal_scale));
        archetypes.push_back(archetype_for(cfg, k));
    }
    std::vector<std::vector<GivensRotation>> rotations;
    for (int o = 0; o < cfg.num_objects; ++o) rotations.push_back(nuisance_rotations(cfg, o));

    GeneratedDataset out;
    out.cooccurrence.assign(static_cast<std::size_t>(cfg.num_predicates),
                            std::vector<int>(static_cast<std::size_t>(cfg.num_objects), 0));

    int instance_id = 0;
    int image_id = 0;
    while (instance_id < cfg.total_instances) {
        CounterRng img_rng(cfg.seed, CounterRng::stream_key("image", static_cast<std::uint64_t>(image_id)));
        const int in_image = 1 + static_cast<int>(img_rng.next_below(
                                     static_cast<std::uint64_t>(cfg.max_instances_per_image)));
        const double img_u = img_rng.next_double();
        const std::size_t image_cat = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), img_u) - cdf.begin());
        for (int j = 0; j < in_image && instance_id < cfg.total_instances; ++j) {
            CounterRng rng(cfg.seed,
                           CounterRng::stream_key("instance", static_cast<std::uint64_t>(instance_id)));
            // instances mostly inherit the image category; otherwise a fresh
            // Zipf draw (the marginal distribution stays Zipf either way)
            std::size_t c = image_cat;
            if (rng.next_double() >= cfg.image_category_concentration) {
                const double u = rng.next_double();
                c = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) -
                                             cdf.begin());
            }
            const int k = categories[c].predicate;
            const int o = categories[c].object;

            Instance x;
            x.image_id = image_id;
            x.instance_id = instance_id;
            x.subject_label = 0;
            x.object_label = o;
            x.predicate_labels = {k};

            // boxes from the predicate archetype plus jitter
            const Archetype& a = archetypes[static_cast<std::size_t>(k)];
            const double hw = 0.15 + 0.15 * rng.next_double();
            const double hh = 0.15 + 0.15 * rng.next_double();
            const double hcx = 0.3 + 0.4 * rng.next_double();
            const double hcy = 0.3 + 0.4 * rng.next_double();
            const double jitter = 0.05;
            const double ocx = hcx + a.dx * hw + jitter * (rng.next_double() - 0.5);
            const double ocy = hcy + a.dy * hh + jitter * (rng.next_double() - 0.5);
            const double ow = std::max(0.02, a.wratio * hw * (1.0 + 0.2 * (rng.next_double() - 0.5)));
            const double oh = std::max(0.02, a.hratio * hh * (1.0 + 0.2 * (rng.next_double() - 0.5)));
            x.human_box = {hcx - hw / 2, hcy - hh / 2, hcx + hw / 2, hcy + hh / 2};
            x.object_box = {ocx - ow / 2, ocy - oh / 2, ocx + ow / 2, ocy + oh / 2};

            // union features: rotate (signal + noise) by the object nuisance
            std::vector<double> u_feat = union_signal[static_cast<std::size_t>(k)];
            for (double& e : u_feat) e += cfg.noise_std * rng.next_gaussian();
            apply_rotations(rotations[static_cast<std::size_t>(o)], u_feat);
            x.features.union_box = std::move(u_feat);

            std::vector<double> h_feat = human_signal[static_cast<std::size_t>(k)];
            for (double& e : h_feat) e += cfg.human_noise_std * rng.next_gaussian();
            x.features.human = std::move(h_feat);

            std::vector<double> s_feat = box_geometry(x.human_box, x.object_box);
            for (double e : spatial_signal[static_cast<std::size_t>(k)])
                s_feat.push_back(e);
            for (std::size_t d = 6; d < s_feat.size(); ++d)
                s_feat[d] += cfg.spatial_noise_std * rng.next_gaussian();
            x.features.spatial = std::move(s_feat);

            x.validate(cfg.num_objects, cfg.num_predicates);
            ++out.cooccurrence[static_cast<std::size_t>(k)][static_cast<std::size_t>(o)];
            out.instances.push_back(std::move(x));
            ++instance_id;
        }
        ++image_id;
    }
    return out;
}

std::vector<double> expected_union_mean(const GeneratorConfig& cfg, int predicate_id,
                                        int object_id) {
    std::vector<double> mean = signal_vector(cfg.seed, "union_signal", predicate_id,
                                             cfg.union_dim, 1.0);
    apply_rotations(nuisance_rotations(cfg, object_id), mean);
    return mean;
}

void write_dataset_manifest(const GeneratorConfig& cfg, const GeneratedDataset& data,
                            const std::string& dataset_path, const std::string& manifest_path) {
    char checksum[32];
    std::snprintf(checksum, sizeof(checksum), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(read_file(dataset_path))));
    nlohmann::json j{
        {"config",
         {{"num_objects", cfg.num_objects},
          {"num_predicates", cfg.num_predicates},
          {"pairs_per_predicate", cfg.pairs_per_predicate},
          {"zipf_exponent", cfg.zipf_exponent},
          {"noise_std", cfg.noise_std},
          {"nuisance_strength", cfg.nuisance_strength},
          {"total_instances", cfg.total_instances},
          {"seed", cfg.seed},
          {"union_dim", cfg.union_dim},
          {"human_dim", cfg.human_dim},
          {"spatial_dim", cfg.spatial_dim},
          {"max_instances_per_image", cfg.max_instances_per_image},
          {"image_category_concentration", cfg.image_category_concentration},
          {"human_signal_scale", cfg.human_signal_scale},
          {"spatial_signal_scale", cfg.spatial_signal_scale},
          {"human_noise_std", cfg.human_noise_std},
          {"spatial_noise_std", cfg.spatial_noise_std},
          {"prng", "splitmix64-counter"}}},
        {"instances", data.instances.size()},
        {"images", data.instances.empty() ? 0 : data.instances.back().image_id + 1},
        {"cooccurrence", data.cooccurrence},
        {"checksum_fnv1a64", checksum}};
    write_file_atomic(manifest_path, j.dump(2) + "\n");
}

}  // namespace adglab
