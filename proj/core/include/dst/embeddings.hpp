#pragma once

#include "dst/param.hpp"

namespace dst {

// Token table shared by decoder and encoder, positional tables for each, and
// the four segment embeddings used by the fact encoder's packed layout.
template <typename Real>
struct Embeddings {
    Parameter<Real> tok;      // |V| x d
    Parameter<Real> pos_dec;  // max decoder length x d
    Parameter<Real> pos_enc;  // encoder context window x d
    Parameter<Real> seg;      // 4 x d

    Embeddings(int vocab, int d, int max_dec, int ctx)
        : tok("emb.tok", vocab, d),
          pos_dec("emb.pos_dec", max_dec, d),
          pos_enc("emb.pos_enc", ctx, d),
          seg("emb.seg", 4, d) {}

    void register_into(ParamRegistry<Real>& reg) {
        reg.add(tok);
        reg.add(pos_dec);
        reg.add(pos_enc);
        reg.add(seg);
    }

    void init(uint64_t seed) {
        const int d = tok.value.cols;
        init_uniform(tok, seed, d);
        init_uniform(pos_dec, seed, d);
        init_uniform(pos_enc, seed, d);
        init_uniform(seg, seed, d);
    }
};

}  // namespace dst
