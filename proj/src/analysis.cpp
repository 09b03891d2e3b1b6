#include "sce/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sce/rng.hpp"

namespace sce {

namespace {

bool is_vowel(char c) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

// Vowel groups with a silent trailing-e adjustment ("-le" endings keep
// their syllable), clamped to at least one.
int syllables_in_word(std::string_view word) {
    std::string letters;
    for (char c : word) {
        if (std::isalpha(static_cast<unsigned char>(c)))
            letters.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (letters.empty()) return 0;
    int groups = 0;
    bool in_group = false;
    for (char c : letters) {
        if (is_vowel(c)) {
            if (!in_group) ++groups;
            in_group = true;
        } else {
            in_group = false;
        }
    }
    std::size_t n = letters.size();
    if (n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]) &&
        !(n >= 3 && letters[n - 1] == 'e' && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]))) {
        --groups;
    }
    return std::max(groups, 1);
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

Matrix unit_normalize_rows(const Matrix& m) {
    Matrix out = m;
    for (auto& row : out) {
        double norm = 0.0;
        for (double v : row) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0)
            throw std::invalid_argument("cosine metric undefined for a zero row");
        for (double& v : row) v /= norm;
    }
    return out;
}

void check_matrix(const Matrix& m) {
    if (m.empty()) throw std::invalid_argument("empty matrix");
    std::size_t d = m.front().size();
    if (d == 0) throw std::invalid_argument("zero-dimensional rows");
    for (const auto& row : m) {
        if (row.size() != d) throw std::invalid_argument("ragged matrix");
        for (double v : row)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite matrix entry");
    }
}

}  // namespace

ReadabilityScore flesch_reading_ease(std::string_view text) {
    ReadabilityScore score;
    std::string word;
    bool sentence_open = false;
    auto close_word = [&] {
        if (word.empty()) return;
        int syl = syllables_in_word(word);
        if (syl > 0) {
            ++score.words;
            score.syllables += syl;
            sentence_open = true;
        }
        word.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            close_word();
        } else if (c == '.' || c == '!' || c == '?') {
            close_word();
            if (sentence_open) {
                ++score.sentences;  // runs of terminators close one sentence
                sentence_open = false;
            }
        } else {
            word.push_back(c);
        }
    }
    close_word();
    if (sentence_open) ++score.sentences;  // trailing sentence without a terminator

    if (score.words == 0 || score.sentences == 0)
        throw std::invalid_argument("readability needs at least one word and one sentence");
    double wps = static_cast<double>(score.words) / score.sentences;
    double spw = static_cast<double>(score.syllables) / score.words;
    score.reading_ease = 206.835 - 1.015 * wps - 84.6 * spw;
    score.grade_level = 0.39 * wps + 11.8 * spw - 15.59;
    return score;
}

double drift(const EmbeddingVector& e1, const EmbeddingVector& e2) {
    if (e1.dim() != e2.dim()) throw std::invalid_argument("drift: dimension mismatch");
    if (e1.dim() == 0) throw std::invalid_argument("drift: empty vectors");
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (int i = 0; i < e1.dim(); ++i) {
        dot += e1.values[i] * e2.values[i];
        n1 += e1.values[i] * e1.values[i];
        n2 += e2.values[i] * e2.values[i];
    }
    if (n1 == 0.0 || n2 == 0.0) throw std::invalid_argument("drift: zero vector");
    return 1.0 - dot / (std::sqrt(n1) * std::sqrt(n2));
}

Matrix zscore_normalize(const Matrix& matrix) {
    check_matrix(matrix);
    std::size_t n = matrix.size();
    if (n < 2) throw std::invalid_argument("zscore_normalize needs at least 2 rows");
    std::size_t d = matrix.front().size();
    Matrix out(n, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (const auto& row : matrix) mean += row[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& row : matrix) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(n);  // population convention
        double sd = std::sqrt(var);
        if (sd == 0.0) continue;  // constant dimension becomes all zeros
        for (std::size_t i = 0; i < n; ++i) out[i][j] = (matrix[i][j] - mean) / sd;
    }
    return out;
}

std::string_view cluster_metric_name(ClusterMetric m) {
    switch (m) {
        case ClusterMetric::euclid_raw: return "euclid_raw";
        case ClusterMetric::euclid_norm: return "euclid_norm";
        case ClusterMetric::cosine_raw: return "cosine_raw";
        case ClusterMetric::cosine_norm: return "cosine_norm";
    }
    return "?";
}

namespace {

struct LloydResult {
    std::vector<int> assignment;
    double objective = std::numeric_limits<double>::infinity();
};

LloydResult lloyd_once(const Matrix& data, Rng& rng) {
    const std::size_t n = data.size();
    const std::size_t d = data.front().size();

    // k-means++ for k=2: first centroid uniform, second D^2-weighted
    Matrix centroids(2);
    centroids[0] = data[rng.uniform_index(n)];
    std::vector<double> d2(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = squared_distance(data[i], centroids[0]);
        total += d2[i];
    }
    if (total == 0.0) {
        centroids[1] = centroids[0];  // unreachable when rows differ
    } else {
        double pick = rng.uniform01() * total;
        std::size_t chosen = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (pick < acc) {
                chosen = i;
                break;
            }
        }
        centroids[1] = data[chosen];
    }

    LloydResult result;
    result.assignment.assign(n, 0);
    double prev_objective = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100; ++iter) {
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d0 = squared_distance(data[i], centroids[0]);
            double d1 = squared_distance(data[i], centroids[1]);
            result.assignment[i] = d1 < d0 ? 1 : 0;
            objective += std::min(d0, d1);
        }
        // Lloyd's objective never increases; tolerate rounding noise only
        if (objective > prev_objective + 1e-9 * (1.0 + prev_objective))
            throw std::logic_error("kmeans2 objective increased");
        prev_objective = objective;
        result.objective = objective;

        Matrix next(2, std::vector<double>(d, 0.0));
        std::size_t counts[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[result.assignment[i]];
            for (std::size_t j = 0; j < d; ++j) next[result.assignment[i]][j] += data[i][j];
        }
        for (int k = 0; k < 2; ++k) {
            if (counts[k] == 0) {
                next[k] = centroids[k];  // keep an emptied centroid in place
                continue;
            }
            for (std::size_t j = 0; j < d; ++j) next[k][j] /= static_cast<double>(counts[k]);
        }
        double shift = std::sqrt(squared_distance(next[0], centroids[0])) +
                       std::sqrt(squared_distance(next[1], centroids[1]));
        centroids = std::move(next);
        if (shift < 1e-6) break;
    }
    return result;
}

constexpr int kKmeansRestarts = 10;

}  // namespace

std::vector<int> kmeans2(const Matrix& matrix, ClusterMetric metric, std::uint64_t seed) {
    check_matrix(matrix);
    if (matrix.size() < 2) throw std::invalid_argument("kmeans2 needs at least 2 rows");

    Matrix data = matrix;
    if (metric == ClusterMetric::euclid_norm || metric == ClusterMetric::cosine_norm)
        data = zscore_normalize(data);
    if (metric == ClusterMetric::cosine_raw || metric == ClusterMetric::cosine_norm)
        data = unit_normalize_rows(data);

    bool all_identical = std::all_of(data.begin(), data.end(),
                                     [&](const auto& row) { return row == data.front(); });
    if (all_identical) throw std::invalid_argument("kmeans2: all rows identical");

    // Lloyd converges to a local optimum that depends on the seeding, so
    // take the best of several seeded restarts (first wins ties).
    LloydResult best;
    for (int restart = 0; restart < kKmeansRestarts; ++restart) {
        Rng rng = derive_rng(seed, "kmeans2", static_cast<std::uint64_t>(restart));
        LloydResult result = lloyd_once(data, rng);
        if (result.objective < best.objective) best = std::move(result);
    }
    return best.assignment;
}

std::pair<int, int> cluster_deltas(const std::vector<int>& assignments,
                                   const std::vector<bool>& validity) {
    if (assignments.size() != validity.size())
        throw std::invalid_argument("cluster_deltas: length mismatch");
    int valid0 = 0, invalid0 = 0, valid1 = 0, invalid1 = 0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == 0)
            (validity[i] ? valid0 : invalid0)++;
        else
            (validity[i] ? valid1 : invalid1)++;
    }
    return {std::abs(valid0 - invalid0), std::abs(valid1 - invalid1)};
}

double sep_score(const std::vector<std::pair<int, int>>& deltas) {
    if (deltas.empty()) throw std::invalid_argument("sep_score: empty list");
    double sum = 0.0;
    for (const auto& [d0, d1] : deltas) sum += d0 + d1;
    return sum / static_cast<double>(deltas.size());
}

RepresentationVariant representation_variant_from_name(std::string_view name) {
    if (name == "first_generated_token") return RepresentationVariant::first_generated_token;
    if (name == "last_generated_token") return RepresentationVariant::last_generated_token;
    if (name == "last_input_token") return RepresentationVariant::last_input_token;
    if (name == "sentence_embedding") return RepresentationVariant::sentence_embedding;
    throw std::invalid_argument("unknown representation variant: " + std::string(name));
}

std::string_view representation_variant_name(RepresentationVariant v) {
    switch (v) {
        case RepresentationVariant::first_generated_token: return "first_generated_token";
        case RepresentationVariant::last_generated_token: return "last_generated_token";
        case RepresentationVariant::last_input_token: return "last_input_token";
        case RepresentationVariant::sentence_embedding: return "sentence_embedding";
    }
    return "?";
}

RepresentationSet load_vectors(const std::filesystem::path& path, std::vector<bool> validity) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vector file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("vector file is empty");
    nlohmann::json header = nlohmann::json::parse(line);
    RepresentationSet set;
    set.source = "imported_file";
    set.variant = representation_variant_from_name(header.at("variant").get<std::string>());
    std::size_t dim = header.at("dim").get<std::size_t>();
    if (dim == 0) throw std::runtime_error("vector file declares dim 0");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row_in(line);
        std::vector<double> row;
        double v;
        while (row_in >> v) row.push_back(v);
        if (row.size() != dim)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": row has " +
                                     std::to_string(row.size()) + " values, expected " +
                                     std::to_string(dim));
        for (double x : row)
            if (!std::isfinite(x))
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": non-finite value");
        set.vectors.push_back(std::move(row));
    }
    if (set.vectors.size() != validity.size())
        throw std::runtime_error("vector file has " + std::to_string(set.vectors.size()) +
                                 " rows but " + std::to_string(validity.size()) +
                                 " validity flags were supplied");
    set.labels = std::move(validity);
    return set;
}

}  // namespace sce
