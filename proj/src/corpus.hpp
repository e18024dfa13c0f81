#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "queries.hpp"

namespace khop {

// Word-level vocabulary: every template word, relation name, entity name and
// filler name is exactly one token. Construction order is fixed, so two
// builds from the same graph produce identical id tables.
class Vocab {
public:
    static Vocab build(const EntityGraph& g);

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    TokenId id(const std::string& word) const;
    const std::string& word(TokenId id) const;

    std::vector<TokenId> encode(const std::string& text) const;
    std::string decode(const std::vector<TokenId>& ids) const;

    TokenId pad_id() const { return pad_; }
    TokenId bos_id() const { return bos_; }
    TokenId answer_slot_id() const { return slot_; }

    TokenId entity_token(EntityId e) const { return entity_base_ + e; }
    bool is_entity_token(TokenId t) const {
        return t >= entity_base_ && t < entity_base_ + num_entities_;
    }
    EntityId token_entity(TokenId t) const { return t - entity_base_; }

    std::uint64_t checksum() const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
    TokenId pad_ = 0;
    TokenId bos_ = 1;
    TokenId slot_ = 3;
    TokenId entity_base_ = 0;
    int num_entities_ = 0;
};

// Surface form of the answer slot that follows "Answer :".
inline const char* answer_slot_word() { return "_"; }

// One sentence per relation in fixed relation-id order; top-layer entities
// get filler facts drawn from the reserved name pool.
std::string render_profile(const EntityGraph& g, EntityId e);

// "Who is the <r_k> of ... of the <r_1> of <source> ? \n Answer : _"
std::string render_question(const Query& q, const EntityGraph& g);

struct RenderedInstance {
    std::string text;             // includes the answer token for questions
    std::vector<TokenId> tokens;  // encode(text)
    int length = 0;
    int answer_position = -1;     // answer slot (the final prompt position)
    int entity_position = -1;     // source entity token
    std::vector<int> hop_positions; // hop i relation at [i-1]
};

RenderedInstance render_question_instance(const Vocab& v, const EntityGraph& g, const Query& q);
RenderedInstance render_profile_instance(const Vocab& v, const EntityGraph& g, EntityId e);

} // namespace khop
