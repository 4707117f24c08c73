#include "rca/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace rca::evaluation {

using nlohmann::json;

std::vector<std::string> HashedTokenEmbedder::tokenize(const std::string &text) const {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<retrieval::Vector> HashedTokenEmbedder::embed_tokens(const std::vector<std::string> &tokens) const {
    std::vector<retrieval::Vector> out;
    out.reserve(tokens.size());
    for (const auto &t : tokens) out.push_back(provider_.embed(t));
    return out;
}

BertScore bertscore(const std::string &candidate, const std::string &reference, const TokenEmbedder &embedder) {
    const auto cand_tokens = embedder.tokenize(candidate);
    const auto ref_tokens = embedder.tokenize(reference);
    if (cand_tokens.empty()) throw EvaluationError("candidate text has no tokens");
    if (ref_tokens.empty()) throw EvaluationError("reference text has no tokens");
    const auto cand = embedder.embed_tokens(cand_tokens);
    const auto ref = embedder.embed_tokens(ref_tokens);
    if (cand.size() != cand_tokens.size() || ref.size() != ref_tokens.size())
        throw EvaluationError("token embedder must return one vector per token");

    std::vector<double> best_for_cand(cand.size(), -1.0);
    std::vector<double> best_for_ref(ref.size(), -1.0);
    for (std::size_t i = 0; i < cand.size(); ++i) {
        for (std::size_t j = 0; j < ref.size(); ++j) {
            const double sim = retrieval::cosine(cand[i], ref[j]);
            best_for_cand[i] = std::max(best_for_cand[i], sim);
            best_for_ref[j] = std::max(best_for_ref[j], sim);
        }
    }
    BertScore s;
    for (double v : best_for_cand) s.precision += v;
    for (double v : best_for_ref) s.recall += v;
    s.precision /= static_cast<double>(cand.size());
    s.recall /= static_cast<double>(ref.size());
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

double sentence_cosine(const std::string &candidate, const std::string &reference,
                       const retrieval::EmbeddingProvider &provider) {
    if (candidate.empty() || reference.empty()) throw EvaluationError("sentence cosine needs non-empty texts");
    try {
        return retrieval::cosine(provider.embed(candidate), provider.embed(reference));
    } catch (const retrieval::RetrievalError &e) {
        throw EvaluationError(std::string("sentence cosine: ") + e.what());
    }
}

EvalSuite run_eval_suite(const std::vector<EvalCase> &cases, diagnosis::PromptMode mode,
                         const TokenEmbedder &embedder, const retrieval::EmbeddingProvider &provider) {
    if (cases.empty()) throw EvaluationError("evaluation suite needs at least one case");
    EvalSuite suite;
    for (const auto &c : cases) {
        EvalResult r;
        r.usecase = c.usecase;
        r.mode = mode;
        try {
            if (c.predicted.find_first_not_of(" \t\r\n") == std::string::npos)
                throw EvaluationError("empty prediction");
            const auto bs = bertscore(c.predicted, c.gold, embedder);
            r.bertscore_precision = bs.precision;
            r.bertscore_recall = bs.recall;
            r.bertscore_f1 = bs.f1;
            r.sbert_cosine = sentence_cosine(c.predicted, c.gold, provider);
        } catch (const std::exception &e) {
            r = EvalResult{};
            r.usecase = c.usecase;
            r.mode = mode;
            r.failed = true;
            r.error = e.what();
        }
        suite.results.push_back(std::move(r));
    }
    suite.table = render_table(suite.results);
    return suite;
}

namespace {

std::string two_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string render_table(const std::vector<EvalResult> &results) {
    const std::vector<std::string> header = {"SNo", "Usecase", "F1", "P", "R", "S-Bert Score"};
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto &r = results[i];
        if (r.failed) {
            rows.push_back({std::to_string(i + 1), r.usecase, "FAILED", "-", "-", "-"});
        } else {
            rows.push_back({std::to_string(i + 1), r.usecase, two_decimals(r.bertscore_f1),
                            two_decimals(r.bertscore_precision), two_decimals(r.bertscore_recall),
                            two_decimals(r.sbert_cosine)});
        }
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto &row : rows) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string> &cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out << " | ";
            out << cells[c];
            if (c + 1 < cells.size()) out << std::string(width[c] - cells[c].size(), ' ');
        }
        out << "\n";
    };
    emit(header);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << "-+-";
        out << std::string(width[c], '-');
    }
    out << "\n";
    for (const auto &row : rows) emit(row);
    return out.str();
}

std::vector<EvalCase> parse_cases(std::string_view raw) {
    try {
        const auto j = json::parse(raw.begin(), raw.end());
        if (!j.is_array()) throw EvaluationError("evaluation cases must be a JSON array");
        std::vector<EvalCase> cases;
        for (const auto &c : j) {
            cases.push_back({c.at("usecase").get<std::string>(), c.at("predicted").get<std::string>(),
                             c.at("gold").get<std::string>()});
        }
        return cases;
    } catch (const json::exception &e) {
        throw EvaluationError(std::string("invalid evaluation cases: ") + e.what());
    }
}

std::string results_to_json(const std::vector<EvalResult> &results) {
    json out = json::array();
    for (const auto &r : results) {
        json row = {{"usecase", r.usecase},
                    {"mode", diagnosis::to_string(r.mode)},
                    {"bertscore_precision", r.bertscore_precision},
                    {"bertscore_recall", r.bertscore_recall},
                    {"bertscore_f1", r.bertscore_f1},
                    {"sbert_cosine", r.sbert_cosine},
                    {"failed", r.failed}};
        if (r.failed) row["error"] = r.error;
        out.push_back(std::move(row));
    }
    return out.dump(2) + "\n";
}

}  // namespace rca::evaluation
