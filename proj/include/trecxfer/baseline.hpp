#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trecxfer/common.hpp"
#include "trecxfer/mapping.hpp"
#include "trecxfer/text.hpp"

// Hashed n-gram logistic regression. A small stand-in classifier so the whole
// label-transfer loop can run without neural infrastructure; it is not meant to
// match a fine-tuned transformer.

namespace trecxfer::baseline {

inline constexpr int kHashBits = 20;
inline constexpr std::uint32_t kDim = 1u << kHashBits;
inline constexpr int kMaxNgram = 3;

/// Sparse (bucket, weight) pairs with unique buckets in ascending order.
struct HashedFeatureVector {
    std::vector<std::pair<std::uint32_t, double>> entries;

    double norm() const
    {
        double s = 0.0;
        for (const auto& [i, w] : entries) {
            s += w * w;
        }
        return std::sqrt(s);
    }

    friend bool operator==(const HashedFeatureVector&, const HashedFeatureVector&) = default;
};

inline std::uint32_t bucket_of(std::string_view tagged_ngram)
{
    return static_cast<std::uint32_t>(text::fnv1a64(tagged_ngram) % kDim);
}

/// Hashed counts of 1..3-grams from the excerpt ("t|" namespace) and from the
/// auxiliary sentence ("a|" namespace), scaled to unit L2 norm.
inline HashedFeatureVector featurize(std::string_view excerpt, std::string_view aux)
{
    std::vector<std::uint32_t> buckets;
    auto add = [&](std::string_view prefix, std::string_view src) {
        std::string tagged;
        text::for_each_ngram(text::tokenize(src), kMaxNgram, [&](std::string_view g) {
            tagged.assign(prefix);
            tagged += g;
            buckets.push_back(bucket_of(tagged));
        });
    };
    add("t|", excerpt);
    add("a|", aux);
    std::sort(buckets.begin(), buckets.end());

    HashedFeatureVector v;
    for (std::size_t i = 0; i < buckets.size();) {
        std::size_t j = i;
        while (j < buckets.size() && buckets[j] == buckets[i]) {
            ++j;
        }
        v.entries.emplace_back(buckets[i], static_cast<double>(j - i));
        i = j;
    }
    const double n = v.norm();
    if (n > 0.0) {
        for (auto& [i, w] : v.entries) {
            w /= n;
        }
    }
    return v;
}

struct Example {
    HashedFeatureVector features;
    bool label = false;
};

struct TrainConfig {
    int epochs = 10;
    double lr = 0.5;
    std::uint64_t seed = 0;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LinearModel {
    TaskKey task;
    std::vector<double> weights = std::vector<double>(kDim, 0.0);
    double bias = 0.0;
    TrainConfig config;

    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

inline double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double score(const LinearModel& m, const HashedFeatureVector& x)
{
    double z = m.bias;
    for (const auto& [i, w] : x.entries) {
        z += m.weights[i] * w;
    }
    return z;
}

inline double predict_proba(const LinearModel& m, const HashedFeatureVector& x) { return sigmoid(score(m, x)); }

/// Mean negative log-likelihood.
inline double logistic_loss(const LinearModel& m, std::span<const Example> data)
{
    double total = 0.0;
    for (const auto& ex : data) {
        const double z = score(m, ex.features);
        // log(1 + exp(-y z)) with y in {-1, +1}, computed without overflow
        const double yz = ex.label ? z : -z;
        total += yz > 0 ? std::log1p(std::exp(-yz)) : -yz + std::log1p(std::exp(yz));
    }
    return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

struct TrainResult {
    LinearModel model;
    /// Training loss after each epoch.
    std::vector<double> epoch_loss;
};

/// Plain SGD on logistic loss, visiting examples in a seeded shuffle each epoch.
/// Throws if the data holds only one class.
inline TrainResult train(std::span<const Example> data, TaskKey task, const TrainConfig& cfg)
{
    const auto positives = std::count_if(data.begin(), data.end(), [](const Example& e) { return e.label; });
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(data.size())) {
        throw std::invalid_argument(std::string(to_string(task.kind)) + " task " + std::to_string(task.id) +
                                    ": training data needs both classes (" + std::to_string(positives) +
                                    " positive of " + std::to_string(data.size()) + ")");
    }
    if (cfg.epochs < 1 || !(cfg.lr > 0.0)) {
        throw std::invalid_argument("training needs epochs >= 1 and lr > 0");
    }
    TrainResult out;
    out.model.task = task;
    out.model.config = cfg;
    auto& m = out.model;

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    SplitMix64 rng(cfg.seed);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (auto idx : order) {
            const auto& ex = data[idx];
            const double g = predict_proba(m, ex.features) - (ex.label ? 1.0 : 0.0);
            for (const auto& [i, w] : ex.features.entries) {
                m.weights[i] -= cfg.lr * g * w;
            }
            m.bias -= cfg.lr * g;
        }
        out.epoch_loss.push_back(logistic_loss(m, data));
    }
    return out;
}

inline constexpr std::string_view kModelFormat = "trecxfer-linear-model";
inline constexpr int kModelVersion = 1;

/// JSON model file holding hyperparameters and only the non-zero weights.
inline std::string format_model_json(const LinearModel& m)
{
    nlohmann::ordered_json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["task_kind"] = to_string(m.task.kind);
    j["task_id"] = m.task.id;
    j["seed"] = m.config.seed;
    j["epochs"] = m.config.epochs;
    j["lr"] = m.config.lr;
    j["dim"] = kDim;
    j["bias"] = m.bias;
    auto w = nlohmann::ordered_json::array();
    for (std::uint32_t i = 0; i < kDim; ++i) {
        if (m.weights[i] != 0.0) {
            w.push_back({i, m.weights[i]});
        }
    }
    j["weights"] = std::move(w);
    return j.dump() + "\n";
}

inline LinearModel parse_model_json(std::string_view text, const std::string& source = "model.json")
{
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format").get<std::string>() != kModelFormat || j.at("version").get<int>() != kModelVersion) {
            throw SchemaError(source + ": unsupported model format or version");
        }
        if (j.at("dim").get<std::uint32_t>() != kDim) {
            throw SchemaError(source + ": model dimension differs from 2^20");
        }
        LinearModel m;
        auto kind = task_kind_from_string(j.at("task_kind").get<std::string>());
        if (!kind) {
            throw SchemaError(source + ": bad task_kind");
        }
        m.task = {*kind, j.at("task_id").get<int>()};
        m.config.seed = j.at("seed").get<std::uint64_t>();
        m.config.epochs = j.at("epochs").get<int>();
        m.config.lr = j.at("lr").get<double>();
        m.bias = j.at("bias").get<double>();
        for (const auto& pair : j.at("weights")) {
            auto i = pair.at(0).get<std::uint32_t>();
            if (i >= kDim) {
                throw SchemaError(source + ": weight index out of range");
            }
            m.weights[i] = pair.at(1).get<double>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(source + ": " + e.what());
    }
}

inline void save_model(const LinearModel& m, const std::filesystem::path& path) { write_file(path, format_model_json(m)); }

inline LinearModel load_model(const std::filesystem::path& path)
{
    return parse_model_json(read_file(path), path.string());
}

}  // namespace trecxfer::baseline
