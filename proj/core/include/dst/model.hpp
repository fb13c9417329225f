#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dst/embeddings.hpp"
#include "dst/guesser.hpp"
#include "dst/qdec.hpp"
#include "dst/qenc.hpp"
#include "dst/state.hpp"
#include "dst/strack.hpp"
#include "dst/vrds.hpp"

namespace dst {

struct ModelConfig {
    int d = 64;
    int d_img = 32;
    int vocab_size = 0;  // set from the vocabulary file
    int dec_layers = 2;
    int enc_layers = 2;
    int heads = 2;
    int ffn_mult = 2;
    int max_q_len = 8;
    int ctx_len = 64;
    double dropout = 0.1;
    double tau = 1.0;
    bool tau_anneal = false;  // optional linear anneal to tau_min over training
    double tau_min = 0.5;

    void validate() const {
        // vocab_size 0 means "not yet bound to a vocab file"; the Model ctor
        // re-validates once it is known.
        if (d < 2 || d_img < 1 || (vocab_size != 0 && vocab_size < 6))
            throw std::runtime_error("config: bad model dimensions");
        if (dec_layers < 1 || enc_layers < 1) throw std::runtime_error("config: layers must be >= 1");
        if (heads < 1 || d % heads != 0) throw std::runtime_error("config: heads must divide d");
        if (ffn_mult < 1) throw std::runtime_error("config: ffn_mult must be >= 1");
        if (max_q_len < 1 || ctx_len < 8) throw std::runtime_error("config: bad sequence limits");
        if (dropout < 0.0 || dropout >= 1.0) throw std::runtime_error("config: dropout must be in [0,1)");
        if (tau <= 0.0) throw std::runtime_error("config: tau must be positive");
    }
};

template <typename Real>
struct Model {
    ModelConfig cfg;
    Embeddings<Real> emb;
    Decoder<Real> dec;
    Encoder<Real> enc;
    VrdsParams<Real> vrds_p;
    StrackParams<Real> strack_p;
    GuesserParams<Real> guess_p;
    ParamRegistry<Real> reg;

    static ModelConfig checked(ModelConfig c) {
        c.validate();
        if (c.vocab_size < 6)
            throw std::runtime_error("model: vocab_size must be bound before construction");
        return c;
    }

    Model(const ModelConfig& c, uint64_t seed)
        : cfg(checked(c)),
          emb(c.vocab_size, c.d, c.max_q_len + 2, c.ctx_len),
          dec(c.dec_layers, c.d, c.d * c.ffn_mult, c.vocab_size, c.heads, c.dropout),
          enc(c.enc_layers, c.d, c.d * c.ffn_mult, c.heads, c.dropout, c.ctx_len),
          vrds_p("vrds", c.d),
          strack_p("strack", c.d),
          guess_p("guess", c.d, c.d_img) {
        vrds_p.dropout = c.dropout;
        strack_p.tau = c.tau;
        strack_p.dropout = c.dropout;
        emb.register_into(reg);
        dec.register_into(reg);
        enc.register_into(reg);
        vrds_p.register_into(reg);
        strack_p.register_into(reg);
        guess_p.register_into(reg);
        emb.init(seed);
        dec.init(seed);
        enc.init(seed);
        vrds_p.init(seed);
        strack_p.init(seed);
        guess_p.init(seed);
    }

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
};

// Encodes the caption alone and applies the Add content networks to an empty
// state, producing the k=1 starting point. The 0xd empty state exists only
// here.
template <typename Real>
StateVars<Real> init_state_vars(Graph<Real>& g, Model<Real>& m, const std::vector<int>& caption) {
    if (caption.empty()) throw std::invalid_argument("init_from_caption: empty caption");
    StateVars<Real> empty;
    empty.k = 0;
    auto f0 = m.enc.encode_fact(g, m.emb, {}, caption, empty);
    StateVars<Real> s;
    s.me = m.strack_p.add_e.apply(g, f0, m.strack_p.dropout);
    s.mv = m.strack_p.add_v.apply(g, f0, m.strack_p.dropout);
    s.k = 1;
    return s;
}

template <typename Real>
DialogueState init_from_caption(Model<Real>& m, const std::vector<int>& caption) {
    Graph<Real> g(false, 0);
    auto s = init_state_vars(g, m, caption);
    DialogueState out;
    out.me = g.value(s.me).template cast<double>();
    out.mv = g.value(s.mv).template cast<double>();
    out.t = 0;
    return out;
}

}  // namespace dst
