#include "corpus.hpp"

#include <sstream>

#include "names.hpp"
#include "rng.hpp"

namespace khop {

namespace {

const char* const kTemplateWords[] = {
    "Who", "is", "the", "of", "?", "Answer", ":", "'s", ".",
};

} // namespace

Vocab Vocab::build(const EntityGraph& g) {
    Vocab v;
    auto push = [&v](const std::string& w) {
        require(v.ids_.emplace(w, static_cast<TokenId>(v.tokens_.size())).second,
                ErrorCode::state, "Vocab: duplicate word '" + w + "'");
        v.tokens_.push_back(w);
    };
    push("<pad>");
    push("<bos>");
    push("\n");
    push(answer_slot_word());
    v.pad_ = 0;
    v.bos_ = 1;
    v.slot_ = 3;
    for (const char* w : kTemplateWords) {
        push(w);
    }
    for (const auto& r : g.relation_names) {
        push(r);
    }
    v.entity_base_ = static_cast<TokenId>(v.tokens_.size());
    v.num_entities_ = g.num_entities();
    for (const auto& e : g.entity_names) {
        push(e);
    }
    for (const char* f : filler_namespace()) {
        if (v.ids_.find(f) == v.ids_.end()) {
            push(f);
        }
    }
    return v;
}

TokenId Vocab::id(const std::string& word) const {
    auto it = ids_.find(word);
    require(it != ids_.end(), ErrorCode::invalid_argument,
            "Vocab: unknown word '" + word + "'");
    return it->second;
}

const std::string& Vocab::word(TokenId id) const {
    require(id >= 0 && id < size(), ErrorCode::invalid_argument, "Vocab: id out of range");
    return tokens_[id];
}

std::vector<TokenId> Vocab::encode(const std::string& text) const {
    std::vector<TokenId> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(' ', start);
        if (end == std::string::npos) {
            end = text.size();
        }
        if (end > start) {
            out.push_back(id(text.substr(start, end - start)));
        }
        if (end == text.size()) {
            break;
        }
        start = end + 1;
    }
    return out;
}

std::string Vocab::decode(const std::vector<TokenId>& ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += word(ids[i]);
    }
    return out;
}

std::uint64_t Vocab::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : tokens_) {
        h = fnv1a64(t.data(), t.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

std::string render_profile(const EntityGraph& g, EntityId e) {
    require(e >= 0 && e < g.num_entities(), ErrorCode::invalid_argument,
            "render_profile: entity out of range");
    std::ostringstream out;
    const std::string& subj = g.entity_names[e];
    if (g.has_edges(e)) {
        for (RelationId r = 0; r < g.num_relations(); ++r) {
            if (r > 0) {
                out << ' ';
            }
            out << subj << " 's " << g.relation_names[r] << " is "
                << g.entity_names[g.edge(e, r)] << " .";
        }
    } else {
        // Filler facts: objects from the reserved pool, distinct within one
        // profile, derived from the graph seed so profiles are reproducible.
        auto pool = filler_namespace();
        Rng rng = Rng(g.seed).stream("filler", static_cast<std::uint64_t>(e));
        auto picks = rng.sample_indices(pool.size(), g.num_relations());
        for (RelationId r = 0; r < g.num_relations(); ++r) {
            if (r > 0) {
                out << ' ';
            }
            out << subj << " 's " << g.relation_names[r] << " is " << pool[picks[r]] << " .";
        }
    }
    return out.str();
}

std::string render_question(const Query& q, const EntityGraph& g) {
    std::ostringstream out;
    out << "Who is";
    for (int hop = q.hops(); hop >= 1; --hop) {
        out << " the " << g.relation_names[q.relations[hop - 1]] << " of";
    }
    out << ' ' << g.entity_names[q.source] << " ? \n Answer : " << answer_slot_word();
    return out.str();
}

RenderedInstance render_question_instance(const Vocab& v, const EntityGraph& g, const Query& q) {
    RenderedInstance inst;
    inst.text = render_question(q, g) + " " + g.entity_names[q.answer];
    inst.tokens = v.encode(inst.text);
    inst.length = static_cast<int>(inst.tokens.size());
    inst.hop_positions.assign(q.hops(), -1);
    // The question lists relations outermost-first: hop k at the first slot.
    for (int i = 0; i < q.hops(); ++i) {
        int hop = q.hops() - i;
        inst.hop_positions[hop - 1] = 3 + 3 * i;
    }
    inst.entity_position = 2 + 3 * q.hops();
    inst.answer_position = inst.length - 2;
    require(inst.tokens[inst.answer_position] == v.answer_slot_id(), ErrorCode::internal,
            "render_question_instance: answer slot misplaced");
    return inst;
}

RenderedInstance render_profile_instance(const Vocab& v, const EntityGraph& g, EntityId e) {
    RenderedInstance inst;
    inst.text = render_profile(g, e);
    inst.tokens = v.encode(inst.text);
    inst.length = static_cast<int>(inst.tokens.size());
    return inst;
}

} // namespace khop
