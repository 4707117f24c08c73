#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rca/diagnosis.hpp"
#include "rca/retrieval.hpp"

namespace rca::evaluation {

/// Token-level embedder for BERTScore. Deterministic; one vector per token.
class TokenEmbedder {
public:
    virtual ~TokenEmbedder() = default;
    virtual std::vector<std::string> tokenize(const std::string &text) const = 0;
    virtual std::vector<retrieval::Vector> embed_tokens(const std::vector<std::string> &tokens) const = 0;
};

/// Lowercased alphanumeric tokens, each embedded as hashed character trigrams.
class HashedTokenEmbedder final : public TokenEmbedder {
public:
    explicit HashedTokenEmbedder(std::size_t dimension = 256) : provider_(dimension) {}

    std::vector<std::string> tokenize(const std::string &text) const override;
    std::vector<retrieval::Vector> embed_tokens(const std::vector<std::string> &tokens) const override;

private:
    retrieval::TrigramEmbeddingProvider provider_;
};

struct BertScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Greedy max-cosine matching without IDF weighting or baseline rescaling.
BertScore bertscore(const std::string &candidate, const std::string &reference, const TokenEmbedder &embedder);

/// Cosine of the two sentence embeddings.
double sentence_cosine(const std::string &candidate, const std::string &reference,
                       const retrieval::EmbeddingProvider &provider);

struct EvalCase {
    std::string usecase;
    std::string predicted;
    std::string gold;
};

struct EvalResult {
    std::string usecase;
    diagnosis::PromptMode mode = diagnosis::PromptMode::FewShot;
    double bertscore_precision = 0.0;
    double bertscore_recall = 0.0;
    double bertscore_f1 = 0.0;
    double sbert_cosine = 0.0;
    bool failed = false;
    std::string error;
};

struct EvalSuite {
    std::vector<EvalResult> results;  // one per case, input order
    std::string table;
};

/// Scores every case; a failing case is flagged and the rest continue.
EvalSuite run_eval_suite(const std::vector<EvalCase> &cases, diagnosis::PromptMode mode,
                         const TokenEmbedder &embedder, const retrieval::EmbeddingProvider &provider);

/// Columns SNo, Usecase, F1, P, R, S-Bert Score; scores rounded to 2 decimals.
std::string render_table(const std::vector<EvalResult> &results);

/// `[{"usecase", "predicted", "gold"}]`
std::vector<EvalCase> parse_cases(std::string_view raw);
std::string results_to_json(const std::vector<EvalResult> &results);

}  // namespace rca::evaluation
