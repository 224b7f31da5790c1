#include "factgraph/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace factgraph {

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            size_t close = text.find('}', i + 1);
            if (close != std::string::npos) {
                std::string key = text.substr(i + 1, close - i - 1);
                auto it = vars.find(key);
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i++];
    }
    return out;
}

namespace {

const char* kPlanInitial =
    R"(You are planning how to verify a factual claim. Decompose the verification into a small dependency graph of typed steps.

Claim: {claim_json}

Step types:
- SEARCH: retrieve evidence for one focused query.
- REFINE: rewrite an earlier step's task into a precise, self-contained query using the evidence gathered so far.
- THINK: reason over the evidence from its dependencies and state an intermediate conclusion.
- JUDGE: weigh the complete body of evidence and deliver the verdict on the claim.

Respond with a JSON array of at most {max_nodes} step objects and no other text.
Each step object: {schema}

Rules:
- give each step a short unique id; "dependencies" may only name ids from this array; no cycles.
- a step may have at most one REFINE dependency.
- steps that do not need each other's results must not depend on each other, so they can run concurrently.
- exactly one step is terminal (no other step depends on it); it gathers every chain and must have type {sink_type}.
)";

const char* kPlanSubtree =
    R"(A verification step failed while checking a claim. Plan a small replacement sub-graph that recovers what is missing so verification can continue.

Claim: {claim_json}

What failed and what was known at that point:
{failure_context}

Step types:
- SEARCH: retrieve evidence for one focused query.
- REFINE: rewrite an earlier step's task into a precise, self-contained query using the evidence gathered so far.
- THINK: reason over the evidence from its dependencies and state an intermediate conclusion.
- JUDGE: weigh the complete body of evidence and deliver the verdict on the claim.

Respond with a JSON array of at most {max_nodes} step objects and no other text.
Each step object: {schema}

Rules:
- give each step a short unique id; "dependencies" may only name ids from this array; no cycles.
- a step may have at most one REFINE dependency.
- exactly one step is terminal (no other step depends on it); its result will stand in for the failed step, so it must have type {sink_type}.
)";

const char* kSearchQuery =
    R"(Write one focused search query that would retrieve the evidence this verification step needs. Respond with the query text only, on a single line.

Claim under verification: {claim_json}

Step context:
{context}
)";

const char* kRefine =
    R"(Rewrite this step's task as one precise, self-contained search query. Resolve every pronoun and vague reference using the parent outputs and evidence below. Do not judge whether the claim is true. Respond with the rewritten query only, on a single line.

Claim under verification: {claim_json}

Step context:
{context}
)";

const char* kThink =
    R"(You are an intermediate reasoning step in a {mode} fact-verification run. Synthesize the evidence below and decide whether it settles this step's task.

Claim under verification: {claim_json}

Step context:
{context}

Respond with a single JSON object and no other text:
{"sufficient": true, "conclusion": "<what the evidence establishes>"}
or
{"sufficient": false, "missing": "<precisely what information is still needed>"}
)";

const char* kJudge =
    R"(You are the final verdict step of a fact-verification run. Weigh the complete body of evidence below and judge the claim.

Claim: {claim_json}

Step context:
{context}

Respond with a single JSON object and no other text:
{"label": "SUPPORTS" | "REFUTES" | "UNCERTAIN", "explanation": "<grounds for the verdict>"}
Use UNCERTAIN only when the evidence genuinely cannot settle the claim.
)";

const char* kJudgeForced =
    R"(You are the final verdict step of a fact-verification run. The evidence-gathering budget is exhausted, so you must commit to a binary verdict now.

Claim: {claim_json}

Step context:
{context}

Respond with a single JSON object and no other text:
{"label": "SUPPORTS" | "REFUTES", "explanation": "<grounds for the verdict>"}
UNCERTAIN is not acceptable; choose the better-supported label.
)";

}  // namespace

TemplateStore TemplateStore::builtin() {
    TemplateStore store;
    store.templates_ = {
        {"plan_initial", kPlanInitial}, {"plan_subtree", kPlanSubtree},
        {"search_query", kSearchQuery}, {"refine", kRefine},
        {"think", kThink},              {"judge", kJudge},
        {"judge_forced", kJudgeForced},
    };
    return store;
}

TemplateStore TemplateStore::from_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw Error("templates: '" + dir + "' is not a readable directory");
    }
    TemplateStore store = builtin();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("templates: cannot read '" + path.string() + "'");
        std::stringstream buffer;
        buffer << in.rdbuf();
        store.templates_[path.stem().string()] = buffer.str();
    }
    return store;
}

const std::string& TemplateStore::raw(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw Error("templates: unknown template '" + name + "'");
    return it->second;
}

std::string TemplateStore::render(const std::string& name,
                                  const std::map<std::string, std::string>& vars) const {
    return render_template(raw(name), vars);
}

std::vector<std::string> TemplateStore::names() const {
    std::vector<std::string> out;
    for (const auto& [name, text] : templates_) out.push_back(name);
    return out;
}

}  // namespace factgraph
