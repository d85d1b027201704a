#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adglab/data.hpp"
#include "adglab/sgd.hpp"
#include "adglab/tape.hpp"

namespace adglab {

enum class DgVariant { None, AdgKld, CadgKld, CadgJsd, DeepC };

std::string to_string(DgVariant v);
DgVariant variant_from_string(const std::string& s);

struct ModelConfig {
    int num_objects = 12;    // M, domains
    int num_predicates = 10; // K, classes
    int human_dim = 8;
    int union_dim = 16;
    int spatial_dim = 12;
    int hidden_dim = 64;     // extractor MLP hidden width (two hidden layers)
    int feature_dim = 16;    // f_u width
    int embedding_dim = 50;
    DgVariant variant = DgVariant::None;
    // Linear discriminator head by default; one hidden layer for the
    // theorem-verification settings that need a near-optimal discriminator.
    bool discriminator_hidden = false;
    int discriminator_hidden_dim = 64;
    std::uint64_t init_seed = 1;

    void validate() const;
    int discriminator_input_dim() const;
    int discriminator_output_dim() const;  // M for KLD variants, 1 for JSD
    bool has_discriminator() const { return variant != DgVariant::None; }
    bool conditional() const {
        return variant == DgVariant::CadgKld || variant == DgVariant::CadgJsd ||
               variant == DgVariant::DeepC;
    }
};

// Per-predicate probabilities from the three branches and the triplet
// ranking score (s_h + s_u) * s_sp.
struct PredictionScores {
    std::vector<double> s_h, s_u, s_sp, triplet;
};

// The three-branch predicate predictor. The union branch runs through the
// extractor F (whose features the DG regularizers act on); human and
// spatial branches go straight to their heads. Embeddings and the
// discriminator head form the adversarial parameter group, everything else
// the main group.
class PredicateModel {
public:
    explicit PredicateModel(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }

    std::vector<Param*> main_params();
    std::vector<Param*> adversarial_params();
    std::vector<Param*> all_params();

    // Tape bindings for one step. Parameters of a non-training group are
    // bound as constants, so their values are bit-identical afterwards.
    struct Bound {
        Ref ex_w1, ex_b1, ex_w2, ex_b2, ex_w3, ex_b3;
        Ref u_w, u_b, h_w, h_b, sp_w, sp_b;
        Ref pred_emb, obj_emb;
        Ref d_w1, d_b1, d_w2, d_b2;
        std::vector<std::pair<Param*, Ref>> trained;
    };
    Bound bind(Tape& tape, bool train_main, bool train_adversarial);
    // Copies tape gradients of the trained group into Param::grad.
    void read_gradients(const Tape& tape, const Bound& bound);

    // f_u = F(union features): two hidden relu layers then a linear map.
    Ref extract(Tape& tape, const Bound& b, Ref union_batch) const;
    Ref union_logits(Tape& tape, const Bound& b, Ref features) const;
    Ref human_logits(Tape& tape, const Bound& b, Ref human_batch) const;
    Ref spatial_logits(Tape& tape, const Bound& b, Ref spatial_batch) const;

    // Discriminator logit builders (log-space heads are taken by the caller).
    Ref adg_discriminator_logits(Tape& tape, const Bound& b, Ref features) const;
    Ref cadg_discriminator_logits(Tape& tape, const Bound& b, Ref features,
                                  const std::vector<int>& predicate_ids) const;
    Ref jsd_discriminator_logit(Tape& tape, const Bound& b, Ref features,
                                const std::vector<int>& object_ids,
                                const std::vector<int>& predicate_ids) const;

    // Inference over a batch of instances, full scoring.
    std::vector<PredictionScores> predict(const Dataset& batch);
    PredictionScores predict_one(const BranchInputs& x);

    // Softmax domain posterior of the unconditional discriminator.
    std::vector<double> discriminate_adg(const std::vector<double>& f_u);
    std::vector<double> discriminate_cadg_kld(const std::vector<double>& f_u, int predicate_id);
    // P(feature is from the (object, predicate) conditional rather than the
    // class pool), in (0,1).
    double discriminate_cadg_jsd(const std::vector<double>& f_u, int object_id, int predicate_id);

    // Extract features without gradients, one row per instance.
    std::vector<std::vector<double>> extract_features(const Dataset& batch);

    void save_checkpoint(const std::string& path) const;
    static PredicateModel load_checkpoint(const std::string& path);

private:
    ModelConfig cfg_;
    Param ex_w1_, ex_b1_, ex_w2_, ex_b2_, ex_w3_, ex_b3_;
    Param u_w_, u_b_, h_w_, h_b_, sp_w_, sp_b_;
    Param pred_emb_, obj_emb_;
    Param d_w1_, d_b1_, d_w2_, d_b2_;
    bool disc_hidden_ = false;
};

// Batch matrices for a list of instances.
Tensor human_matrix(const Dataset& batch);
Tensor union_matrix(const Dataset& batch);
Tensor spatial_matrix(const Dataset& batch);

}  // namespace adglab
