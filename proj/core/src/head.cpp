#include "schemalink/head.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "schemalink/errors.hpp"

namespace schemalink {

using nlohmann::json;

TokenSequence TokenSequence::from_tokens(std::vector<int> tokens, int open_marker_id,
                                         int close_marker_id, Matrix hidden) {
    TokenSequence seq;
    seq.tokens = std::move(tokens);
    seq.open_marker_id = open_marker_id;
    seq.close_marker_id = close_marker_id;
    seq.hidden = std::move(hidden);
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        if (seq.tokens[i] == open_marker_id) seq.alpha.push_back(i);
        if (seq.tokens[i] == close_marker_id) seq.omega.push_back(i);
    }
    seq.validate();
    return seq;
}

TokenSequence TokenSequence::from_positions(std::vector<std::size_t> alpha,
                                            std::vector<std::size_t> omega, Matrix hidden) {
    TokenSequence seq;
    seq.alpha = std::move(alpha);
    seq.omega = std::move(omega);
    seq.hidden = std::move(hidden);
    seq.validate();
    return seq;
}

void TokenSequence::validate() const {
    if (alpha.size() != omega.size()) {
        throw ValidationError("marker mismatch: " + std::to_string(alpha.size()) +
                              " open markers vs " + std::to_string(omega.size()) + " close");
    }
    if (!tokens.empty() && tokens.size() != hidden.rows()) {
        throw ValidationError("token count does not match hidden row count");
    }
    std::size_t previous_close = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (i > 0 && alpha[i] <= previous_close) {
            throw ValidationError("marker pair " + std::to_string(i) +
                                  " opens before the previous pair closes");
        }
        if (alpha[i] >= omega[i]) {
            throw ValidationError("marker pair " + std::to_string(i) +
                                  " closes at or before it opens");
        }
        if (omega[i] >= hidden.rows()) {
            throw ValidationError("marker position " + std::to_string(omega[i]) +
                                  " outside the hidden matrix");
        }
        previous_close = omega[i];
    }
    if (!candidates.empty() && candidates.size() != alpha.size()) {
        throw ValidationError("candidate list does not match marker pair count");
    }
}

HeadParameters HeadParameters::zeros(std::size_t hidden_dim, std::size_t outputs) {
    HeadParameters params;
    params.weight = Matrix(2 * hidden_dim, outputs);
    params.bias.assign(outputs, 0.0);
    return params;
}

Matrix gather_candidates(const TokenSequence& seq) {
    seq.validate();
    const std::size_t d = seq.hidden.cols();
    Matrix out(seq.marker_pairs(), 2 * d);
    for (std::size_t i = 0; i < seq.marker_pairs(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out.at(i, j) = seq.hidden.at(seq.alpha[i], j);
            out.at(i, d + j) = seq.hidden.at(seq.omega[i], j);
        }
    }
    return out;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

ScoreSet forward(const TokenSequence& seq, const HeadParameters& params) {
    Matrix features = gather_candidates(seq);
    if (params.weight.rows() != features.cols()) {
        throw ValidationError("head weight expects input dimension " +
                              std::to_string(params.weight.rows()) + ", sequence provides " +
                              std::to_string(features.cols()));
    }
    if (params.bias.size() != params.weight.cols()) {
        throw ValidationError("head bias length does not match weight output dimension");
    }
    const std::size_t m = features.rows();
    const std::size_t k = features.cols();
    const std::size_t r = params.weight.cols();

    ScoreSet scores;
    scores.logits = Matrix(m, r);
    scores.probabilities = Matrix(m, r);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            double acc = params.bias[j];
            for (std::size_t t = 0; t < k; ++t) {
                acc += features.at(i, t) * params.weight.at(t, j);
            }
            scores.logits.at(i, j) = acc;
            scores.probabilities.at(i, j) = sigmoid(acc);
        }
    }
    scores.features = std::move(features);
    return scores;
}

BceResult bce_loss(const ScoreSet& scores, const Matrix& labels) {
    const std::size_t m = scores.logits.rows();
    const std::size_t r = scores.logits.cols();
    if (labels.rows() != m || labels.cols() != r) {
        throw ValidationError("label matrix is " + std::to_string(labels.rows()) + "x" +
                              std::to_string(labels.cols()) + ", expected " + std::to_string(m) +
                              "x" + std::to_string(r));
    }
    if (scores.features.rows() != m) {
        throw ValidationError("score set lacks the feature matrix needed for gradients");
    }
    const std::size_t k = scores.features.cols();
    const double n = static_cast<double>(m * r);

    BceResult result;
    result.weight_gradient = Matrix(k, r);
    result.bias_gradient.assign(r, 0.0);
    if (m == 0) return result;

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            double z = scores.logits.at(i, j);
            double y = labels.at(i, j);
            if (y != 0.0 && y != 1.0) {
                throw ValidationError("labels must be 0 or 1");
            }
            // max(z,0) - z*y + log1p(exp(-|z|)): the standard overflow-free form.
            result.loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));

            double delta = (sigmoid(z) - y) / n;
            result.bias_gradient[j] += delta;
            for (std::size_t t = 0; t < k; ++t) {
                result.weight_gradient.at(t, j) += scores.features.at(i, t) * delta;
            }
        }
    }
    result.loss /= n;
    return result;
}

std::vector<double> coarse_relevance(const ScoreSet& scores) {
    std::vector<double> out(scores.candidate_count());
    for (std::size_t i = 0; i < scores.candidate_count(); ++i) {
        double best = scores.logits.at(i, 0);
        for (std::size_t j = 1; j < scores.outputs(); ++j) {
            best = std::max(best, scores.logits.at(i, j));
        }
        out[i] = best;
    }
    return out;
}

// --- interchange format ---------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'L', 'H', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagFloat64 = 1u;

template <typename T>
void write_raw(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ParseError("hidden-state file '" + path + "' is truncated");
    return value;
}

void write_string(std::ofstream& out, const std::string& s) {
    if (s.size() > 0xffff) throw ValidationError("identifier too long for container format");
    write_raw<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in, const std::string& path) {
    auto len = read_raw<std::uint16_t>(in, path);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw ParseError("hidden-state file '" + path + "' is truncated");
    return s;
}

}  // namespace

void write_hidden_state_file(const std::string& path, const TokenSequence& seq,
                             HiddenDType dtype) {
    seq.validate();
    std::string temp = path + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write hidden-state file '" + path + "'");
        out.write(kMagic, 4);
        write_raw<std::uint32_t>(out, kVersion);
        write_raw<std::uint32_t>(out, dtype == HiddenDType::Float64 ? kFlagFloat64 : 0u);
        write_raw<std::uint64_t>(out, seq.hidden.rows());
        write_raw<std::uint64_t>(out, seq.hidden.cols());
        write_raw<std::uint64_t>(out, seq.marker_pairs());
        for (std::size_t a : seq.alpha) write_raw<std::uint64_t>(out, a);
        for (std::size_t w : seq.omega) write_raw<std::uint64_t>(out, w);
        for (std::size_t i = 0; i < seq.marker_pairs(); ++i) {
            const QualifiedColumn qc =
                i < seq.candidates.size() ? seq.candidates[i] : QualifiedColumn{};
            write_string(out, qc.table);
            write_string(out, qc.column);
        }
        for (double value : seq.hidden.data()) {
            if (dtype == HiddenDType::Float64) {
                write_raw<double>(out, value);
            } else {
                write_raw<float>(out, static_cast<float>(value));
            }
        }
        if (!out) throw IoError("failed writing hidden-state file '" + path + "'");
    }
    std::rename(temp.c_str(), path.c_str());
}

TokenSequence read_hidden_state_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open hidden-state file '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError("'" + path + "' is not a hidden-state container (bad magic)");
    }
    auto version = read_raw<std::uint32_t>(in, path);
    if (version != kVersion) {
        throw ParseError("unsupported hidden-state container version " + std::to_string(version));
    }
    auto flags = read_raw<std::uint32_t>(in, path);
    bool is64 = (flags & kFlagFloat64) != 0;
    auto t = read_raw<std::uint64_t>(in, path);
    auto d = read_raw<std::uint64_t>(in, path);
    auto m = read_raw<std::uint64_t>(in, path);

    std::vector<std::size_t> alpha(m), omega(m);
    for (auto& a : alpha) a = static_cast<std::size_t>(read_raw<std::uint64_t>(in, path));
    for (auto& w : omega) w = static_cast<std::size_t>(read_raw<std::uint64_t>(in, path));

    std::vector<QualifiedColumn> candidates(m);
    for (auto& qc : candidates) {
        qc.table = read_string(in, path);
        qc.column = read_string(in, path);
    }

    Matrix hidden(static_cast<std::size_t>(t), static_cast<std::size_t>(d));
    for (double& value : hidden.data()) {
        value = is64 ? read_raw<double>(in, path)
                     : static_cast<double>(read_raw<float>(in, path));
    }

    TokenSequence seq = TokenSequence::from_positions(std::move(alpha), std::move(omega),
                                                      std::move(hidden));
    seq.candidates = std::move(candidates);
    seq.validate();
    return seq;
}

std::string hidden_state_to_json(const TokenSequence& seq) {
    json candidates = json::array();
    for (const QualifiedColumn& qc : seq.candidates) {
        candidates.push_back(json::array({qc.table, qc.column}));
    }
    json hidden = json::array();
    for (std::size_t i = 0; i < seq.hidden.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < seq.hidden.cols(); ++j) row.push_back(seq.hidden.at(i, j));
        hidden.push_back(std::move(row));
    }
    json doc = {{"alpha", seq.alpha},
                {"omega", seq.omega},
                {"candidates", candidates},
                {"hidden", hidden}};
    return doc.dump();
}

TokenSequence hidden_state_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ParseError(std::string("hidden-state json: ") + err.what(), err.byte);
    }
    std::vector<std::size_t> alpha = doc.at("alpha").get<std::vector<std::size_t>>();
    std::vector<std::size_t> omega = doc.at("omega").get<std::vector<std::size_t>>();
    const json& rows = doc.at("hidden");
    std::size_t t = rows.size();
    std::size_t d = t > 0 ? rows.at(0).size() : 0;
    Matrix hidden(t, d);
    for (std::size_t i = 0; i < t; ++i) {
        if (rows.at(i).size() != d) throw ValidationError("hidden rows have inconsistent widths");
        for (std::size_t j = 0; j < d; ++j) hidden.at(i, j) = rows.at(i).at(j).get<double>();
    }
    TokenSequence seq =
        TokenSequence::from_positions(std::move(alpha), std::move(omega), std::move(hidden));
    if (doc.contains("candidates")) {
        for (const json& pair : doc.at("candidates")) {
            seq.candidates.push_back(
                QualifiedColumn{pair.at(0).get<std::string>(), pair.at(1).get<std::string>()});
        }
        seq.validate();
    }
    return seq;
}

}  // namespace schemalink
