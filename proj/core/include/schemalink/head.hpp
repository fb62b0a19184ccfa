#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "schemalink/ground_truth.hpp"
#include "schemalink/schema.hpp"

namespace schemalink {

/// Dense row-major matrix of doubles. All head arithmetic is 64-bit; the
/// interchange format may store 32-bit floats, widened on load.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Token-level input to the head: final-layer hidden states plus the
/// positions of the candidate marker pairs. Markers must strictly
/// alternate: alpha[0] < omega[0] < alpha[1] < omega[1] < ...
struct TokenSequence {
    std::vector<int> tokens;  // may be empty when positions are explicit
    int open_marker_id = -1;
    int close_marker_id = -1;
    Matrix hidden;  // T x d
    std::vector<std::size_t> alpha;
    std::vector<std::size_t> omega;
    std::vector<QualifiedColumn> candidates;  // optional; aligned with marker pairs when present

    /// Derives alpha/omega by scanning the token ids for the marker ids.
    static TokenSequence from_tokens(std::vector<int> tokens, int open_marker_id,
                                     int close_marker_id, Matrix hidden);

    /// Uses explicit marker positions (the interchange-format path).
    static TokenSequence from_positions(std::vector<std::size_t> alpha,
                                        std::vector<std::size_t> omega, Matrix hidden);

    std::size_t marker_pairs() const { return alpha.size(); }
    std::size_t hidden_dim() const { return hidden.cols(); }

    /// Throws ValidationError on unbalanced or misordered markers or
    /// positions outside the hidden matrix.
    void validate() const;
};

/// Linear relevance projection: weight is (2d) x R, bias has length R.
/// R = 1 scores plain column relevance; R = 5 scores one output per role
/// in canonical role order.
struct HeadParameters {
    Matrix weight;
    std::vector<double> bias;

    static HeadParameters zeros(std::size_t hidden_dim, std::size_t outputs);

    std::size_t outputs() const { return bias.size(); }
};

/// Per-candidate logits and probabilities, aligned with the marker pairs
/// of the sequence that produced them. Keeps the gathered feature matrix
/// so that loss gradients can be computed from the scores alone.
struct ScoreSet {
    Matrix features;       // M x 2d
    Matrix logits;         // M x R
    Matrix probabilities;  // M x R

    std::size_t candidate_count() const { return logits.rows(); }
    std::size_t outputs() const { return logits.cols(); }
};

/// Row i is hidden[alpha[i]] concatenated with hidden[omega[i]].
Matrix gather_candidates(const TokenSequence& seq);

/// logits = gather(seq) * weight + bias; probabilities = sigmoid(logits).
ScoreSet forward(const TokenSequence& seq, const HeadParameters& params);

double sigmoid(double z);

struct BceResult {
    double loss = 0.0;
    Matrix weight_gradient;            // (2d) x R
    std::vector<double> bias_gradient;  // R
};

/// Mean binary cross entropy over all M*R elements, computed in logit form
/// (finite for |logit| up to ~700), with analytic gradients for the head
/// parameters. labels must be an M x R 0/1 matrix.
BceResult bce_loss(const ScoreSet& scores, const Matrix& labels);

/// Reduction to one relevance logit per candidate: identity for R = 1,
/// per-candidate maximum over role logits otherwise.
std::vector<double> coarse_relevance(const ScoreSet& scores);

// Interchange format for externally produced hidden states. Binary layout
// (little-endian), documented in the README:
//   magic "SLHS" | u32 version=1 | u32 flags (bit0: 1=float64, 0=float32)
//   u64 T | u64 d | u64 M
//   M x u64 alpha | M x u64 omega
//   M x (u16 len, bytes table, u16 len, bytes column)
//   T*d floats, row-major
enum class HiddenDType { Float32, Float64 };

void write_hidden_state_file(const std::string& path, const TokenSequence& seq,
                             HiddenDType dtype = HiddenDType::Float64);
TokenSequence read_hidden_state_file(const std::string& path);

/// JSON debug variant of the same payload, for small hand-written tests.
std::string hidden_state_to_json(const TokenSequence& seq);
TokenSequence hidden_state_from_json(std::string_view text);

}  // namespace schemalink
