#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sce/client.hpp"

namespace sce {

struct ReadabilityScore {
    double reading_ease = 0.0;  // 206.835 - 1.015*(W/S) - 84.6*(Sy/W)
    double grade_level = 0.0;   // 0.39*(W/S) + 11.8*(Sy/W) - 15.59
    int words = 0;
    int sentences = 0;
    int syllables = 0;
};

// Sentence splitting on .!? runs; syllables by vowel-group counting with
// a silent-e adjustment, minimum one per word.
ReadabilityScore flesch_reading_ease(std::string_view text);

// 1 - cos(e1, e2); in [0, 2]. Both vectors must be non-zero and share a
// dimension.
double drift(const EmbeddingVector& e1, const EmbeddingVector& e2);

using Matrix = std::vector<std::vector<double>>;

// Per-dimension zero mean and unit variance (population sd); constant
// dimensions map to all-zero columns. Needs at least 2 rows.
Matrix zscore_normalize(const Matrix& matrix);

enum class ClusterMetric { euclid_raw, euclid_norm, cosine_raw, cosine_norm };

std::string_view cluster_metric_name(ClusterMetric m);

// Seeded 2-means: k-means++ initialization, Lloyd iterations capped at
// 100 or centroid shift < 1e-6. The _norm variants standardize first,
// the cosine variants cluster unit-normalized rows.
std::vector<int> kmeans2(const Matrix& matrix, ClusterMetric metric, std::uint64_t seed);

// Per-cluster |#valid - #invalid|.
std::pair<int, int> cluster_deltas(const std::vector<int>& assignments,
                                   const std::vector<bool>& validity);

// Mean of delta0 + delta1 over the evaluated pairs.
double sep_score(const std::vector<std::pair<int, int>>& deltas);

enum class RepresentationVariant {
    first_generated_token,
    last_generated_token,
    last_input_token,
    sentence_embedding,
};

RepresentationVariant representation_variant_from_name(std::string_view name);
std::string_view representation_variant_name(RepresentationVariant v);

struct RepresentationSet {
    Matrix vectors;
    std::vector<bool> labels;  // validity flag per row
    RepresentationVariant variant = RepresentationVariant::sentence_embedding;
    std::string source;  // "embedding_endpoint" or "imported_file"
};

// File format: one JSON header line {"dim": d, "variant": name}, then one
// whitespace-separated row of reals per example, in store order.
RepresentationSet load_vectors(const std::filesystem::path& path, std::vector<bool> validity);

}  // namespace sce
