#pragma once

// Straight-line re-implementation of the model forward pass with plain
// loops, independent of the tape. Reads parameters by name.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "adglab/model.hpp"

namespace adglab::testsupport {

class ForwardOracle {
public:
    explicit ForwardOracle(PredicateModel& model) {
        for (Param* p : model.all_params()) params_[p->name] = &p->value;
        cfg_ = model.config();
    }

    std::vector<double> linear(const std::vector<double>& x, const std::string& w,
                               const std::string& b) const {
        const Tensor& W = tensor(w);
        const Tensor& B = tensor(b);
        std::vector<double> out(static_cast<std::size_t>(W.cols), 0.0);
        for (int c = 0; c < W.cols; ++c) {
            double s = B.at(0, c);
            for (int r = 0; r < W.rows; ++r) s += x[static_cast<std::size_t>(r)] * W.at(r, c);
            out[static_cast<std::size_t>(c)] = s;
        }
        return out;
    }

    static std::vector<double> relu(std::vector<double> x) {
        for (double& e : x) e = e > 0.0 ? e : 0.0;
        return x;
    }

    static std::vector<double> sigmoid(std::vector<double> x) {
        for (double& e : x) e = 1.0 / (1.0 + std::exp(-e));
        return x;
    }

    std::vector<double> extract(const std::vector<double>& union_feat) const {
        auto h1 = relu(linear(union_feat, "extractor.w1", "extractor.b1"));
        auto h2 = relu(linear(h1, "extractor.w2", "extractor.b2"));
        return linear(h2, "extractor.w3", "extractor.b3");
    }

    PredictionScores predict(const BranchInputs& x) const {
        PredictionScores s;
        s.s_u = sigmoid(linear(extract(x.union_box), "union_head.w", "union_head.b"));
        s.s_h = sigmoid(linear(x.human, "human_head.w", "human_head.b"));
        s.s_sp = sigmoid(linear(x.spatial, "spatial_head.w", "spatial_head.b"));
        s.triplet.resize(s.s_u.size());
        for (std::size_t k = 0; k < s.s_u.size(); ++k)
            s.triplet[k] = (s.s_h[k] + s.s_u[k]) * s.s_sp[k];
        return s;
    }

private:
    const Tensor& tensor(const std::string& name) const { return *params_.at(name); }

    std::map<std::string, const Tensor*> params_;
    ModelConfig cfg_;
};

}  // namespace adglab::testsupport
