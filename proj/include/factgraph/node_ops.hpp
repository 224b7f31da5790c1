#pragma once

#include "factgraph/errors.hpp"
#include "factgraph/gateway.hpp"
#include "factgraph/graph.hpp"
#include "factgraph/prompts.hpp"
#include "factgraph/retrieval.hpp"

#include <optional>
#include <string>

namespace factgraph {

/// THINK's structured result. Exactly one of conclusion/missing is populated:
/// conclusion iff sufficient, missing iff not.
struct ThinkOutcome {
    bool sufficient = false;
    std::string conclusion;
    std::string missing;
};

enum class VerdictLabel { SUPPORTS, REFUTES, UNCERTAIN };
std::string to_string(VerdictLabel label);
/// Case-insensitive; returns nullopt for anything else.
std::optional<VerdictLabel> verdict_label_from_string(const std::string& s);

/// The run's answer. `forced` marks verdicts produced in budget-exhausted
/// binary mode, where UNCERTAIN is never returned.
struct Verdict {
    VerdictLabel label = VerdictLabel::UNCERTAIN;
    std::string explanation;
    bool forced = false;
};

nlohmann::ordered_json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

/// A REFINE node was planned without any parent context to disambiguate from.
class RefinePrecondition : public Error {
public:
    using Error::Error;
};

struct SearchExecution {
    std::string query;
    EvidenceSet raw_results;  // what the retriever returned, rank-ordered
    EvidenceSet merged;       // raw results merged with the input's evidence
    std::string output;       // query plus a one-line result summary
};

/// SEARCH: one model call turns the node input into a query, the retriever
/// answers it, and the results are merged (fresh results first) with the
/// evidence already carried by the input. Empty results are not an error.
SearchExecution exec_search(const NodeInput& input, const std::string& claim, Gateway& gateway,
                            Retriever& retriever, const TemplateStore& templates, int k = 10);

/// REFINE: rewrites the task into a precise, self-contained query using
/// parent context. Throws RefinePrecondition when there is no context, and
/// Error when the model returns an empty rewrite.
std::string exec_refine(const NodeInput& input, const std::string& claim, Gateway& gateway,
                        const TemplateStore& templates);

/// THINK: asks for {sufficient, conclusion | missing}; one re-ask on an
/// unparseable response, then fail-safe insufficiency ("reasoning unparseable").
ThinkOutcome exec_think(const NodeInput& input, const std::string& claim, GraphMode mode,
                        Gateway& gateway, const TemplateStore& templates);

/// JUDGE: asks for {label, explanation}. Unforced: an unparseable response is
/// re-asked once, then UNCERTAIN. Forced: UNCERTAIN or unparseable responses
/// are re-asked once, then mapped to REFUTES; the result never carries
/// UNCERTAIN. At most two model calls either way.
Verdict exec_judge(const NodeInput& input, const std::string& claim, Gateway& gateway,
                   const TemplateStore& templates, bool forced);

/// Response parsers, exposed for direct testing.
std::optional<ThinkOutcome> parse_think_response(const std::string& raw);
std::optional<Verdict> parse_judge_response(const std::string& raw);

}  // namespace factgraph
