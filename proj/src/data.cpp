#include "adglab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adglab/common.hpp"

namespace adglab {

void Instance::validate(int num_objects, int num_predicates) const {
    auto check_box = [&](const Box& b, const char* which) {
        if (!(b[2] > b[0]) || !(b[3] > b[1]))
            throw ValidationError("instance " + std::to_string(instance_id) + ": degenerate " +
                                  which + " box");
    };
    check_box(human_box, "human");
    check_box(object_box, "object");
    if (predicate_labels.empty())
        throw ValidationError("instance " + std::to_string(instance_id) +
                              ": empty predicate set");
    if (object_label < 0 || object_label >= num_objects)
        throw ValidationError("instance " + std::to_string(instance_id) +
                              ": object label out of range");
    for (int k : predicate_labels)
        if (k < 0 || k >= num_predicates)
            throw ValidationError("instance " + std::to_string(instance_id) +
                                  ": predicate label out of range");
    for (double v : features.human)
        if (!std::isfinite(v)) throw ValidationError("instance features must be finite");
    for (double v : features.union_box)
        if (!std::isfinite(v)) throw ValidationError("instance features must be finite");
    for (double v : features.spatial)
        if (!std::isfinite(v)) throw ValidationError("instance features must be finite");
}

namespace {

nlohmann::json instance_to_json(const Instance& x) {
    return nlohmann::json{{"image_id", x.image_id},
                          {"instance_id", x.instance_id},
                          {"human_box", x.human_box},
                          {"object_box", x.object_box},
                          {"subject", x.subject_label},
                          {"object", x.object_label},
                          {"predicates", x.predicate_labels},
                          {"human_feat", x.features.human},
                          {"union_feat", x.features.union_box},
                          {"spatial_feat", x.features.spatial}};
}

Instance instance_from_json(const nlohmann::json& j) {
    Instance x;
    x.image_id = j.at("image_id").get<int>();
    x.instance_id = j.at("instance_id").get<int>();
    x.human_box = j.at("human_box").get<Box>();
    x.object_box = j.at("object_box").get<Box>();
    x.subject_label = j.at("subject").get<int>();
    x.object_label = j.at("object").get<int>();
    x.predicate_labels = j.at("predicates").get<std::vector<int>>();
    std::sort(x.predicate_labels.begin(), x.predicate_labels.end());
    x.features.human = j.at("human_feat").get<std::vector<double>>();
    x.features.union_box = j.at("union_feat").get<std::vector<double>>();
    x.features.spatial = j.at("spatial_feat").get<std::vector<double>>();
    return x;
}

}  // namespace

void save_dataset(const Dataset& data, const std::string& path) {
    std::ostringstream out;
    for (const Instance& x : data) out << instance_to_json(x).dump() << "\n";
    write_file_atomic(path, out.str());
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset file: " + path);
    Dataset data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            data.push_back(instance_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": bad instance record: " + e.what());
        }
    }
    return data;
}

std::vector<std::vector<int>> frequency_table(const Dataset& data, int num_predicates,
                                              int num_objects) {
    std::vector<std::vector<int>> counts(
        static_cast<std::size_t>(num_predicates),
        std::vector<int>(static_cast<std::size_t>(num_objects), 0));
    for (const Instance& x : data)
        for (int k : x.predicate_labels) ++counts[k][x.object_label];
    return counts;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write file: " + tmp);
        out << content;
        if (!out) throw ValidationError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ValidationError("cannot rename " + tmp + " to " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace adglab
