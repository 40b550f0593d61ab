#pragma once

// Generation backends: chat histories, a remote chat-completions client and
// two deterministic offline backends.

#include "forge/pddl.hpp"
#include "forge/pddl_text.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string_view>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace forge {

enum class Role { System, User, Assistant };

const char* to_string(Role role);
Role parse_role(const std::string& s);

struct Message {
    Role role;
    std::string content;

    bool operator==(const Message&) const = default;
};

// Append-only conversation.
class History {
public:
    History() = default;
    explicit History(std::vector<Message> messages) : messages_(std::move(messages)) {}

    void append(Message m) { messages_.push_back(std::move(m)); }
    void append(Role role, std::string content) { messages_.push_back({role, std::move(content)}); }

    const std::vector<Message>& messages() const { return messages_; }
    std::size_t size() const { return messages_.size(); }
    bool empty() const { return messages_.empty(); }
    const Message& back() const { return messages_.back(); }

    // Last message with the given role, if any.
    const Message* last(Role role) const;
    std::size_t count(Role role) const;

    // First message is the system prompt, user/assistant contents are
    // nonempty and no two assistant messages are adjacent.
    bool well_formed() const;

    // "### role" headed dump used for transcript files.
    std::string dump() const;

    bool operator==(const History&) const = default;

private:
    std::vector<Message> messages_;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Line that names the requested action in construction prompts.
inline constexpr std::string_view kActionNameLabel = "Action name: ";
// Opening of every feedback prompt.
inline constexpr std::string_view kFeedbackOpening = "Given the above generated domain";

class Backend {
public:
    virtual ~Backend() = default;
    // One assistant message for the conversation so far. Throws BackendError.
    virtual Message complete(const History& history) = 0;
};

// ---------------------------------------------------------------------------
// Scripted backend

// Responses separated by lines containing only "---".
std::vector<std::string> parse_script(std::string_view text);

class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<std::string> responses) : responses_(std::move(responses)) {}

    Message complete(const History& history) override;
    std::size_t calls() const;

private:
    std::vector<std::string> responses_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Mutation backend

struct DefectEdit {
    enum class Kind { RemovePrecondition, RemoveAdd, RemoveDel, AddPrecondition, RenamePredicateInAction };

    Kind kind;
    std::string action;
    Atom atom;          // lifted, unused for renames
    std::string from;   // renames only
    std::string to;

    // Predicates whose mention in feedback points at this defect.
    std::vector<std::string> predicates() const;
    std::string str() const;
    bool operator==(const DefectEdit&) const = default;
};

// One edit per line, e.g. "remove-add stack (on ?x ?y)" or
// "rename-predicate-in-action stack on on-top". ';' starts a comment.
std::vector<DefectEdit> parse_defects(std::string_view text);

// Applies one edit; throws ConfigError when it does not fit the domain.
Domain apply_defect(const Domain& domain, const DefectEdit& edit);

// Whether the edit is still visible in `domain`.
bool defect_present(const Domain& domain, const DefectEdit& edit);

// Undoes one edit on a domain derived from `base`. Predicates introduced by a
// rename and no longer used are dropped.
Domain revert_defect(const Domain& domain, const DefectEdit& edit, const Domain& base);

// True if `feedback` mentions the defect's action or predicates outside its
// first fenced block (the problem).
bool feedback_touches(const std::string& feedback, const DefectEdit& defect);

// Plays a model that starts from a ground-truth domain with seeded defects.
// Construction prompts get the requested action of the defective domain.
// Feedback prompts revise the latest domain of the conversation (the
// defective one if none was printed yet): each defect still present and
// touched by the feedback is repaired with probability `repair_probability`.
// Draws come from an RNG seeded by the backend seed and the conversation, so
// replies do not depend on call order.
class MutationBackend : public Backend {
public:
    MutationBackend(Domain base, std::vector<DefectEdit> defects, double repair_probability, std::uint64_t seed);

    Message complete(const History& history) override;

    const Domain& base() const { return base_; }
    const Domain& defective() const { return defective_; }
    const std::vector<DefectEdit>& defects() const { return defects_; }

    // Domain the conversation currently refers to.
    Domain domain_for(const History& history) const;

private:
    Domain base_;
    Domain defective_;
    std::vector<DefectEdit> defects_;
    double repair_probability_;
    std::uint64_t seed_;
};

// Reply in the construction response format for one action of `domain`.
std::string action_reply(const Domain& domain, const std::string& action);

// ---------------------------------------------------------------------------
// Remote backend

class TokenBucket {
public:
    TokenBucket(double rate_per_second, double capacity);
    void acquire();

private:
    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct RemoteConfig {
    std::string endpoint;    // e.g. https://api.openai.com/v1/chat/completions
    std::string model_name;
    double temperature = 0.0;
    std::optional<std::int64_t> seed;
    std::string api_key_env;  // empty: no Authorization header
    double timeout_seconds = 120.0;
    int max_retries = 3;
    double initial_backoff_seconds = 1.0;
    double requests_per_second = 1.0;  // <= 0 disables rate limiting
};

class RemoteBackend : public Backend {
public:
    // Reads the API key from the named environment variable; ConfigError if
    // the variable is named but unset.
    explicit RemoteBackend(RemoteConfig cfg);

    Message complete(const History& history) override;

    // Request body for a history (no credentials).
    std::string request_body(const History& history) const;

private:
    RemoteConfig cfg_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_;
    std::unique_ptr<TokenBucket> bucket_;
};

// ---------------------------------------------------------------------------
// Configuration

struct BackendConfig {
    enum class Kind { Remote, Scripted, Mutation };

    Kind kind = Kind::Mutation;
    RemoteConfig remote;
    std::string script_path;
    std::string defect_base_path;  // ground-truth domain the mutation backend edits
    std::string defect_spec_path;
    double repair_probability = 1.0;

    // ConfigError on missing required fields.
    void check() const;
};

BackendConfig::Kind parse_backend_kind(const std::string& s);
const char* to_string(BackendConfig::Kind kind);

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Syntax repair

std::string render_syntax_repair(const SourceError& error);

template <class T>
struct RepairOutcome {
    std::optional<T> value;
    std::vector<SourceError> errors;
    std::size_t calls = 0;

    bool ok() const { return value.has_value(); }
};

// Queries the backend until `parse` accepts a response, appending each
// response and, after each failure but the last, a repair request to
// `history`. `parse` maps the response text to a value or throws SourceError.
template <class Parse>
auto syntax_repair_loop(Backend& backend, History& history, Parse&& parse, std::size_t retry_limit)
    -> RepairOutcome<std::decay_t<std::invoke_result_t<Parse&, const std::string&>>> {
    using T = std::decay_t<std::invoke_result_t<Parse&, const std::string&>>;
    if (retry_limit == 0) {
        throw std::invalid_argument("syntax_repair_loop: retry_limit must be positive");
    }
    RepairOutcome<T> out;
    for (std::size_t attempt = 0; attempt < retry_limit; ++attempt) {
        Message reply = backend.complete(history);
        ++out.calls;
        history.append(reply);
        try {
            out.value.emplace(parse(reply.content));
            return out;
        } catch (const SourceError& e) {
            out.errors.push_back(e);
            if (attempt + 1 < retry_limit) {
                history.append(Role::User, render_syntax_repair(e));
            }
        }
    }
    return out;
}

}  // namespace forge
