#pragma once

// Builds the first candidate domain from a natural-language description, one
// action per backend query.

#include "forge/generator.hpp"
#include "forge/pddl.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace forge {

enum class DescriptionClass { Simple, Detailed };

const char* to_string(DescriptionClass c);
DescriptionClass parse_description_class(const std::string& s);

struct DomainDescription {
    using Texts = std::map<std::string, std::string>;  // class -> text

    Texts overall;
    std::vector<std::pair<std::string, Texts>> predicates;  // document order
    std::vector<std::pair<std::string, Texts>> actions;     // generation order

    // Keys "overall", "predicates", "actions"; entries keyed "simple" and
    // "detailed". std::invalid_argument on a malformed document.
    static DomainDescription parse(const std::string& json_text);

    std::vector<std::string> action_names() const;
    bool has_predicate(const std::string& name) const;
};

// Text of one entry for a class, falling back to the other class when absent.
std::string text_for(const DomainDescription::Texts& texts, DescriptionClass c);

// System prompt and context examples that seed every history.
struct PromptSet {
    std::string system;
    std::vector<std::pair<std::string, std::string>> examples;  // (user, assistant)

    static PromptSet builtin();
    // Reads system_prompt.txt and exampleN_user.txt / exampleN_assistant.txt.
    static PromptSet load(const std::filesystem::path& dir);

    History initial_history() const;
};

struct TypeDecl {
    std::string name;
    std::string parent = kRootType;
    std::string gloss;
};

struct GlossedPredicate {
    PredicateDecl decl;
    std::string gloss;
};

// Types and predicates accumulated over the actions generated so far.
struct Vocabulary {
    std::vector<TypeDecl> types;
    std::vector<GlossedPredicate> predicates;

    const TypeDecl* type(const std::string& name) const;
    const GlossedPredicate* predicate(const std::string& name) const;
};

// User prompt for the action at `index` of the description.
std::string render_action_prompt(const DomainDescription& desc, DescriptionClass c, std::size_t index,
                                 const Vocabulary& known);

struct ActionReply {
    ActionSchema action;
    Vocabulary declared;  // the reply's predicates and types blocks
};

// Reads the ```pddl, ```predicates and ```types blocks of a reply.
// SourceError on malformed content.
ActionReply parse_action_reply(std::string_view response);

// Two declarations of one predicate that disagree. Not repairable.
class SignatureConflict : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Merges a reply into the vocabulary. Predicates and types the action uses
// must be declared in the reply or earlier; such omissions and ill-formed
// atoms raise SourceError so the model can fix them. Conflicting predicate
// signatures raise SignatureConflict.
Vocabulary merge_reply(const Vocabulary& known, const ActionReply& reply);

struct ConstructionResult {
    bool ok = false;
    std::string failure;
    Domain domain;
    History transcript;
    std::map<std::string, std::string> predicate_glossary;
    std::map<std::string, std::string> type_glossary;
    std::map<std::string, std::size_t> per_action_attempts;
    std::size_t llm_calls = 0;
};

struct ConstructionOptions {
    std::string domain_name = "generated";
    std::size_t retry_limit = 5;
    PromptSet prompts = PromptSet::builtin();
};

ConstructionResult build_initial_domain(const DomainDescription& desc, DescriptionClass c, Backend& backend,
                                        const ConstructionOptions& opts = {});

// The result's action names equal the description's action keys.
bool action_name_contract(const DomainDescription& desc, const ConstructionResult& result);

}  // namespace forge
