#include "adglab/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "adglab/common.hpp"
#include "adglab/rng.hpp"

namespace adglab {

std::string to_string(DgVariant v) {
    switch (v) {
        case DgVariant::None: return "none";
        case DgVariant::AdgKld: return "adg-kld";
        case DgVariant::CadgKld: return "cadg-kld";
        case DgVariant::CadgJsd: return "cadg-jsd";
        case DgVariant::DeepC: return "deepc";
    }
    return "none";
}

DgVariant variant_from_string(const std::string& s) {
    if (s == "none" || s == "baseline") return DgVariant::None;
    if (s == "adg-kld") return DgVariant::AdgKld;
    if (s == "cadg-kld") return DgVariant::CadgKld;
    if (s == "cadg-jsd") return DgVariant::CadgJsd;
    if (s == "deepc") return DgVariant::DeepC;
    throw ValidationError("unknown DG variant: " + s);
}

void ModelConfig::validate() const {
    if (num_objects < 1 || num_predicates < 1)
        throw ValidationError("model: need at least one object and predicate class");
    if (human_dim < 1 || union_dim < 1 || spatial_dim < 1)
        throw ValidationError("model: input dims must be positive");
    if (hidden_dim < 1 || feature_dim < 1 || embedding_dim < 1)
        throw ValidationError("model: layer dims must be positive");
    if (discriminator_hidden && discriminator_hidden_dim < 1)
        throw ValidationError("model: discriminator hidden dim must be positive");
}

int ModelConfig::discriminator_input_dim() const {
    switch (variant) {
        case DgVariant::AdgKld: return feature_dim;
        case DgVariant::CadgKld:
        case DgVariant::DeepC: return feature_dim + embedding_dim;
        case DgVariant::CadgJsd: return feature_dim + 2 * embedding_dim;
        case DgVariant::None: return 0;
    }
    return 0;
}

int ModelConfig::discriminator_output_dim() const {
    return variant == DgVariant::CadgJsd ? 1 : num_objects;
}

namespace {

Tensor init_weight(std::uint64_t seed, const char* name, int rows, int cols) {
    CounterRng rng(seed, CounterRng::stream_key(name));
    Tensor t(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    for (double& e : t.v) e = bound * (2.0 * rng.next_double() - 1.0);
    return t;
}

Tensor init_embedding(std::uint64_t seed, const char* name, int rows, int cols) {
    CounterRng rng(seed, CounterRng::stream_key(name));
    Tensor t(rows, cols);
    for (double& e : t.v) e = 0.1 * (2.0 * rng.next_double() - 1.0);
    return t;
}

Tensor batch_matrix(const Dataset& batch, const std::vector<double> BranchInputs::*field) {
    if (batch.empty()) throw ValidationError("batch_matrix: empty batch");
    const int cols = static_cast<int>((batch[0].features.*field).size());
    Tensor t(static_cast<int>(batch.size()), cols);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto& v = batch[r].features.*field;
        if (static_cast<int>(v.size()) != cols)
            throw ValidationError("batch_matrix: inconsistent feature dims");
        for (int c = 0; c < cols; ++c) t.at(static_cast<int>(r), c) = v[static_cast<std::size_t>(c)];
    }
    return t;
}

}  // namespace

Tensor human_matrix(const Dataset& batch) { return batch_matrix(batch, &BranchInputs::human); }
Tensor union_matrix(const Dataset& batch) { return batch_matrix(batch, &BranchInputs::union_box); }
Tensor spatial_matrix(const Dataset& batch) { return batch_matrix(batch, &BranchInputs::spatial); }

PredicateModel::PredicateModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::uint64_t s = cfg_.init_seed;
    ex_w1_ = Param("extractor.w1", init_weight(s, "extractor.w1", cfg_.union_dim, cfg_.hidden_dim));
    ex_b1_ = Param("extractor.b1", Tensor(1, cfg_.hidden_dim));
    ex_w2_ = Param("extractor.w2", init_weight(s, "extractor.w2", cfg_.hidden_dim, cfg_.hidden_dim));
    ex_b2_ = Param("extractor.b2", Tensor(1, cfg_.hidden_dim));
    ex_w3_ = Param("extractor.w3", init_weight(s, "extractor.w3", cfg_.hidden_dim, cfg_.feature_dim));
    ex_b3_ = Param("extractor.b3", Tensor(1, cfg_.feature_dim));
    u_w_ = Param("union_head.w", init_weight(s, "union_head.w", cfg_.feature_dim, cfg_.num_predicates));
    u_b_ = Param("union_head.b", Tensor(1, cfg_.num_predicates));
    h_w_ = Param("human_head.w", init_weight(s, "human_head.w", cfg_.human_dim, cfg_.num_predicates));
    h_b_ = Param("human_head.b", Tensor(1, cfg_.num_predicates));
    sp_w_ = Param("spatial_head.w",
                  init_weight(s, "spatial_head.w", cfg_.spatial_dim, cfg_.num_predicates));
    sp_b_ = Param("spatial_head.b", Tensor(1, cfg_.num_predicates));
    pred_emb_ = Param("predicate_embedding",
                      init_embedding(s, "predicate_embedding", cfg_.num_predicates,
                                     cfg_.embedding_dim));
    obj_emb_ = Param("object_embedding",
                     init_embedding(s, "object_embedding", cfg_.num_objects, cfg_.embedding_dim));

    disc_hidden_ = cfg_.discriminator_hidden;
    if (cfg_.has_discriminator()) {
        const int din = cfg_.discriminator_input_dim();
        const int dout = cfg_.discriminator_output_dim();
        if (disc_hidden_) {
            const int dh = cfg_.discriminator_hidden_dim;
            d_w1_ = Param("discriminator.w1", init_weight(s, "discriminator.w1", din, dh));
            d_b1_ = Param("discriminator.b1", Tensor(1, dh));
            d_w2_ = Param("discriminator.w2", init_weight(s, "discriminator.w2", dh, dout));
            d_b2_ = Param("discriminator.b2", Tensor(1, dout));
        } else {
            d_w1_ = Param("discriminator.w1", init_weight(s, "discriminator.w1", din, dout));
            d_b1_ = Param("discriminator.b1", Tensor(1, dout));
        }
    }
}

std::vector<Param*> PredicateModel::main_params() {
    return {&ex_w1_, &ex_b1_, &ex_w2_, &ex_b2_, &ex_w3_, &ex_b3_,
            &u_w_,  &u_b_,  &h_w_,  &h_b_,  &sp_w_,  &sp_b_};
}

std::vector<Param*> PredicateModel::adversarial_params() {
    if (!cfg_.has_discriminator()) return {};
    std::vector<Param*> group{&d_w1_, &d_b1_};
    if (disc_hidden_) {
        group.push_back(&d_w2_);
        group.push_back(&d_b2_);
    }
    if (cfg_.conditional()) {
        group.push_back(&pred_emb_);
        if (cfg_.variant == DgVariant::CadgJsd) group.push_back(&obj_emb_);
    }
    return group;
}

std::vector<Param*> PredicateModel::all_params() {
    std::vector<Param*> all = main_params();
    all.push_back(&pred_emb_);
    all.push_back(&obj_emb_);
    if (cfg_.has_discriminator()) {
        all.push_back(&d_w1_);
        all.push_back(&d_b1_);
        if (disc_hidden_) {
            all.push_back(&d_w2_);
            all.push_back(&d_b2_);
        }
    }
    return all;
}

PredicateModel::Bound PredicateModel::bind(Tape& tape, bool train_main, bool train_adversarial) {
    Bound b;
    auto place = [&](Param& p, bool trained) {
        Ref r = trained ? tape.leaf(p.value) : tape.constant(p.value);
        if (trained) b.trained.push_back({&p, r});
        return r;
    };
    const auto adv = adversarial_params();
    auto in_adv = [&](const Param& p) {
        for (const Param* q : adv)
            if (q == &p) return true;
        return false;
    };
    b.ex_w1 = place(ex_w1_, train_main);
    b.ex_b1 = place(ex_b1_, train_main);
    b.ex_w2 = place(ex_w2_, train_main);
    b.ex_b2 = place(ex_b2_, train_main);
    b.ex_w3 = place(ex_w3_, train_main);
    b.ex_b3 = place(ex_b3_, train_main);
    b.u_w = place(u_w_, train_main);
    b.u_b = place(u_b_, train_main);
    b.h_w = place(h_w_, train_main);
    b.h_b = place(h_b_, train_main);
    b.sp_w = place(sp_w_, train_main);
    b.sp_b = place(sp_b_, train_main);
    b.pred_emb = place(pred_emb_, train_adversarial && in_adv(pred_emb_));
    b.obj_emb = place(obj_emb_, train_adversarial && in_adv(obj_emb_));
    if (cfg_.has_discriminator()) {
        b.d_w1 = place(d_w1_, train_adversarial);
        b.d_b1 = place(d_b1_, train_adversarial);
        if (disc_hidden_) {
            b.d_w2 = place(d_w2_, train_adversarial);
            b.d_b2 = place(d_b2_, train_adversarial);
        }
    }
    return b;
}

void PredicateModel::read_gradients(const Tape& tape, const Bound& bound) {
    for (const auto& [param, ref] : bound.trained) param->grad = tape.grad(ref);
}

Ref PredicateModel::extract(Tape& t, const Bound& b, Ref union_batch) const {
    auto h1 = t.relu(t.add(t.matmul(union_batch, b.ex_w1), b.ex_b1));
    auto h2 = t.relu(t.add(t.matmul(h1, b.ex_w2), b.ex_b2));
    return t.add(t.matmul(h2, b.ex_w3), b.ex_b3);
}

Ref PredicateModel::union_logits(Tape& t, const Bound& b, Ref features) const {
    return t.add(t.matmul(features, b.u_w), b.u_b);
}

Ref PredicateModel::human_logits(Tape& t, const Bound& b, Ref human_batch) const {
    return t.add(t.matmul(human_batch, b.h_w), b.h_b);
}

Ref PredicateModel::spatial_logits(Tape& t, const Bound& b, Ref spatial_batch) const {
    return t.add(t.matmul(spatial_batch, b.sp_w), b.sp_b);
}

namespace {

Ref discriminator_forward(Tape& t, const PredicateModel::Bound& b, bool hidden, Ref input) {
    if (!hidden) return t.add(t.matmul(input, b.d_w1), b.d_b1);
    auto h = t.relu(t.add(t.matmul(input, b.d_w1), b.d_b1));
    return t.add(t.matmul(h, b.d_w2), b.d_b2);
}

}  // namespace

Ref PredicateModel::adg_discriminator_logits(Tape& t, const Bound& b, Ref features) const {
    if (cfg_.variant != DgVariant::AdgKld)
        throw ValidationError("adg discriminator requested for variant " + to_string(cfg_.variant));
    return discriminator_forward(t, b, disc_hidden_, features);
}

Ref PredicateModel::cadg_discriminator_logits(Tape& t, const Bound& b, Ref features,
                                              const std::vector<int>& predicate_ids) const {
    if (cfg_.variant != DgVariant::CadgKld && cfg_.variant != DgVariant::DeepC)
        throw ValidationError("cadg discriminator requested for variant " +
                              to_string(cfg_.variant));
    for (int k : predicate_ids)
        if (k < 0 || k >= cfg_.num_predicates)
            throw ValidationError("cadg discriminator: predicate id out of range");
    auto emb = t.gather_rows(b.pred_emb, predicate_ids);
    auto input = t.concat_cols({features, emb});
    return discriminator_forward(t, b, disc_hidden_, input);
}

Ref PredicateModel::jsd_discriminator_logit(Tape& t, const Bound& b, Ref features,
                                            const std::vector<int>& object_ids,
                                            const std::vector<int>& predicate_ids) const {
    if (cfg_.variant != DgVariant::CadgJsd)
        throw ValidationError("jsd discriminator requested for variant " + to_string(cfg_.variant));
    for (int k : predicate_ids)
        if (k < 0 || k >= cfg_.num_predicates)
            throw ValidationError("jsd discriminator: predicate id out of range");
    for (int o : object_ids)
        if (o < 0 || o >= cfg_.num_objects)
            throw ValidationError("jsd discriminator: object id out of range");
    auto oe = t.gather_rows(b.obj_emb, object_ids);
    auto pe = t.gather_rows(b.pred_emb, predicate_ids);
    auto input = t.concat_cols({features, oe, pe});
    return discriminator_forward(t, b, disc_hidden_, input);
}

std::vector<PredictionScores> PredicateModel::predict(const Dataset& batch) {
    if (batch.empty()) return {};
    Tape t;
    Bound b = bind(t, false, false);
    auto f = extract(t, b, t.constant(union_matrix(batch)));
    auto su = t.sigmoid(union_logits(t, b, f));
    auto sh = t.sigmoid(human_logits(t, b, t.constant(human_matrix(batch))));
    auto ssp = t.sigmoid(spatial_logits(t, b, t.constant(spatial_matrix(batch))));
    auto triplet = t.mul(t.add(sh, su), ssp);

    std::vector<PredictionScores> out(batch.size());
    const Tensor& vsu = t.value(su);
    const Tensor& vsh = t.value(sh);
    const Tensor& vssp = t.value(ssp);
    const Tensor& vtr = t.value(triplet);
    const int K = cfg_.num_predicates;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        out[r].s_u.resize(static_cast<std::size_t>(K));
        out[r].s_h.resize(static_cast<std::size_t>(K));
        out[r].s_sp.resize(static_cast<std::size_t>(K));
        out[r].triplet.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            out[r].s_u[static_cast<std::size_t>(k)] = vsu.at(static_cast<int>(r), k);
            out[r].s_h[static_cast<std::size_t>(k)] = vsh.at(static_cast<int>(r), k);
            out[r].s_sp[static_cast<std::size_t>(k)] = vssp.at(static_cast<int>(r), k);
            out[r].triplet[static_cast<std::size_t>(k)] = vtr.at(static_cast<int>(r), k);
        }
    }
    return out;
}

PredictionScores PredicateModel::predict_one(const BranchInputs& x) {
    Instance inst;
    inst.features = x;
    inst.predicate_labels = {0};
    inst.human_box = {0, 0, 1, 1};
    inst.object_box = {0, 0, 1, 1};
    Dataset batch{inst};
    return predict(batch)[0];
}

std::vector<double> PredicateModel::discriminate_adg(const std::vector<double>& f_u) {
    Tape t;
    Bound b = bind(t, false, false);
    auto f = t.constant(Tensor(1, static_cast<int>(f_u.size()), f_u));
    auto probs = t.softmax_rows(adg_discriminator_logits(t, b, f));
    return t.value(probs).v;
}

std::vector<double> PredicateModel::discriminate_cadg_kld(const std::vector<double>& f_u,
                                                          int predicate_id) {
    Tape t;
    Bound b = bind(t, false, false);
    auto f = t.constant(Tensor(1, static_cast<int>(f_u.size()), f_u));
    auto probs = t.softmax_rows(cadg_discriminator_logits(t, b, f, {predicate_id}));
    return t.value(probs).v;
}

double PredicateModel::discriminate_cadg_jsd(const std::vector<double>& f_u, int object_id,
                                             int predicate_id) {
    Tape t;
    Bound b = bind(t, false, false);
    auto f = t.constant(Tensor(1, static_cast<int>(f_u.size()), f_u));
    auto p = t.sigmoid(jsd_discriminator_logit(t, b, f, {object_id}, {predicate_id}));
    return t.value(p).item();
}

std::vector<std::vector<double>> PredicateModel::extract_features(const Dataset& batch) {
    if (batch.empty()) return {};
    Tape t;
    Bound b = bind(t, false, false);
    auto f = extract(t, b, t.constant(union_matrix(batch)));
    const Tensor& vf = t.value(f);
    std::vector<std::vector<double>> out(batch.size());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        out[r].resize(static_cast<std::size_t>(vf.cols));
        for (int c = 0; c < vf.cols; ++c) out[r][static_cast<std::size_t>(c)] = vf.at(static_cast<int>(r), c);
    }
    return out;
}

namespace {

constexpr char kCheckpointMagic[9] = "ADGLCKP1";

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

nlohmann::json config_to_json(const ModelConfig& c) {
    return nlohmann::json{{"num_objects", c.num_objects},
                          {"num_predicates", c.num_predicates},
                          {"human_dim", c.human_dim},
                          {"union_dim", c.union_dim},
                          {"spatial_dim", c.spatial_dim},
                          {"hidden_dim", c.hidden_dim},
                          {"feature_dim", c.feature_dim},
                          {"embedding_dim", c.embedding_dim},
                          {"variant", to_string(c.variant)},
                          {"discriminator_hidden", c.discriminator_hidden},
                          {"discriminator_hidden_dim", c.discriminator_hidden_dim},
                          {"init_seed", c.init_seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.num_objects = j.at("num_objects").get<int>();
    c.num_predicates = j.at("num_predicates").get<int>();
    c.human_dim = j.at("human_dim").get<int>();
    c.union_dim = j.at("union_dim").get<int>();
    c.spatial_dim = j.at("spatial_dim").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.embedding_dim = j.at("embedding_dim").get<int>();
    c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.discriminator_hidden = j.at("discriminator_hidden").get<bool>();
    c.discriminator_hidden_dim = j.at("discriminator_hidden_dim").get<int>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void PredicateModel::save_checkpoint(const std::string& path) const {
    std::ostringstream out(std::ios::binary);
    out.write(kCheckpointMagic, 8);
    const std::string cfg_json = config_to_json(cfg_).dump();
    write_u32(out, static_cast<std::uint32_t>(cfg_json.size()));
    out.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));

    auto* self = const_cast<PredicateModel*>(this);
    const auto params = self->all_params();
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const Param* p : params) {
        write_u32(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_u32(out, static_cast<std::uint32_t>(p->value.rows));
        write_u32(out, static_cast<std::uint32_t>(p->value.cols));
        out.write(reinterpret_cast<const char*>(p->value.v.data()),
                  static_cast<std::streamsize>(p->value.v.size() * sizeof(double)));
    }
    write_file_atomic(path, out.str());
}

PredicateModel PredicateModel::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw ValidationError("bad checkpoint magic in " + path);
    const std::uint32_t cfg_len = read_u32(in);
    std::string cfg_json(cfg_len, '\0');
    in.read(cfg_json.data(), cfg_len);
    PredicateModel model(config_from_json(nlohmann::json::parse(cfg_json)));

    const std::uint32_t count = read_u32(in);
    auto params = model.all_params();
    if (count != params.size())
        throw ValidationError("checkpoint parameter count mismatch in " + path);
    for (Param* p : params) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t rows = read_u32(in);
        const std::uint32_t cols = read_u32(in);
        if (name != p->name || static_cast<int>(rows) != p->value.rows ||
            static_cast<int>(cols) != p->value.cols)
            throw ValidationError("checkpoint tensor mismatch: expected " + p->name + " got " +
                                  name);
        in.read(reinterpret_cast<char*>(p->value.v.data()),
                static_cast<std::streamsize>(p->value.v.size() * sizeof(double)));
        if (!in) throw ValidationError("truncated checkpoint: " + path);
    }
    return model;
}

}  // namespace adglab
