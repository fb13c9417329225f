#pragma once

#include <string>
#include <vector>

#include "dst/attention.hpp"
#include "dst/embeddings.hpp"
#include "dst/graph.hpp"
#include "dst/state.hpp"
#include "dst/vocab.hpp"

namespace dst {

template <typename Real>
struct EncoderLayer {
    LnParams<Real> ln1, ln2;
    MhaParams<Real> self_attn;
    BlockFfnParams<Real> ffn;

    EncoderLayer(const std::string& name, int d, int ffn_hidden)
        : ln1(name + ".ln1", d), ln2(name + ".ln2", d), self_attn(name + ".self", d),
          ffn(name + ".ffn", d, ffn_hidden) {}

    void register_into(ParamRegistry<Real>& reg) {
        ln1.register_into(reg);
        self_attn.register_into(reg);
        ln2.register_into(reg);
        ffn.register_into(reg);
    }

    void init(uint64_t seed) {
        ln1.init();
        ln2.init();
        self_attn.init(seed);
        ffn.init(seed);
    }
};

// Bidirectional fact encoder over the packed layout
//   [CLS] q [SEP] a [SEP] e_1..e_k [SEP] v_1..v_k
// where e/v rows are the state matrices injected as pre-embedded vectors.
// The fact f is the output at [CLS]. Segments: 0 question (incl [CLS] and its
// [SEP]), 1 answer, 2 words state, 3 images state; each [SEP] takes the
// segment of the block it closes. At round 0 the caption sits in the answer
// segment and the state blocks are empty.
template <typename Real>
struct Encoder {
    std::vector<EncoderLayer<Real>> layers;
    LnParams<Real> lnf;
    int heads;
    double dropout;
    int ctx_len;

    Encoder(int num_layers, int d, int ffn_hidden, int heads_, double dropout_, int ctx_len_)
        : lnf("enc.lnf", d), heads(heads_), dropout(dropout_), ctx_len(ctx_len_) {
        for (int i = 0; i < num_layers; ++i)
            layers.emplace_back("enc.l" + std::to_string(i), d, ffn_hidden);
    }

    void register_into(ParamRegistry<Real>& reg) {
        for (auto& l : layers) l.register_into(reg);
        lnf.register_into(reg);
    }

    void init(uint64_t seed) {
        for (auto& l : layers) l.init(seed);
        lnf.init();
    }

    // state.k may be 0 (caption bootstrap). [PAD] tokens inside q/a are
    // masked out as keys and skipped for position numbering, so appending
    // padding never changes f.
    GVar<Real> encode_fact(Graph<Real>& g, Embeddings<Real>& emb, const std::vector<int>& question,
                           const std::vector<int>& answer, const StateVars<Real>& state) {
        std::vector<int> tok_ids{Vocab::kCls};
        std::vector<int> seg_ids{0};
        tok_ids.insert(tok_ids.end(), question.begin(), question.end());
        seg_ids.insert(seg_ids.end(), question.size(), 0);
        tok_ids.push_back(Vocab::kSep);
        seg_ids.push_back(0);
        tok_ids.insert(tok_ids.end(), answer.begin(), answer.end());
        seg_ids.insert(seg_ids.end(), answer.size(), 1);
        tok_ids.push_back(Vocab::kSep);
        seg_ids.push_back(1);

        const int n_tok = static_cast<int>(tok_ids.size());
        const int total = n_tok + (state.k > 0 ? 2 * state.k + 1 : 0);
        if (total > ctx_len)
            throw std::runtime_error("encode_fact: packed length " + std::to_string(total) +
                                     " exceeds context window " + std::to_string(ctx_len));

        std::vector<bool> hidden(static_cast<size_t>(total), false);
        std::vector<int> pos_ids(static_cast<size_t>(total));
        {
            int rank = 0;
            for (int i = 0; i < n_tok; ++i) {
                pos_ids[static_cast<size_t>(i)] = rank;
                if (tok_ids[static_cast<size_t>(i)] == Vocab::kPad)
                    hidden[static_cast<size_t>(i)] = true;
                else
                    ++rank;
            }
            for (int i = n_tok; i < total; ++i) pos_ids[static_cast<size_t>(i)] = rank++;
        }

        auto x = g.embed_rows(g.param(emb.tok), tok_ids);
        if (state.k > 0) {
            auto sep = g.embed_rows(g.param(emb.tok), std::vector<int>{Vocab::kSep});
            x = g.concat_rows(g.concat_rows(g.concat_rows(x, state.me), sep), state.mv);
            for (int i = 0; i < state.k; ++i) seg_ids.push_back(2);
            seg_ids.push_back(2);
            for (int i = 0; i < state.k; ++i) seg_ids.push_back(3);
        }
        x = g.add(x, g.embed_rows(g.param(emb.pos_enc), pos_ids));
        x = g.add(x, g.embed_rows(g.param(emb.seg), seg_ids));

        bool any_hidden = false;
        for (bool h : hidden) any_hidden = any_hidden || h;
        Mat<Real> mask;
        if (any_hidden) mask = key_padding_mask<Real>(total, hidden);

        for (auto& l : layers) {
            auto a = l.ln1.apply(g, x);
            x = g.add(x, mha(g, a, a, l.self_attn, heads, any_hidden ? &mask : nullptr, dropout));
            x = g.add(x, l.ffn.apply(g, l.ln2.apply(g, x), dropout));
        }
        return g.slice_rows(lnf.apply(g, x), 0, 1);
    }
};

}  // namespace dst
