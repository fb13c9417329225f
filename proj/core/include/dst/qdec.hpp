#pragma once

#include <string>
#include <vector>

#include "dst/attention.hpp"
#include "dst/embeddings.hpp"
#include "dst/graph.hpp"
#include "dst/vocab.hpp"

namespace dst {

template <typename Real>
struct DecoderLayer {
    LnParams<Real> ln1, ln2, ln3;
    MhaParams<Real> self_attn, cross_attn;
    BlockFfnParams<Real> ffn;

    DecoderLayer(const std::string& name, int d, int ffn_hidden)
        : ln1(name + ".ln1", d),
          ln2(name + ".ln2", d),
          ln3(name + ".ln3", d),
          self_attn(name + ".self", d),
          cross_attn(name + ".cross", d),
          ffn(name + ".ffn", d, ffn_hidden) {}

    void register_into(ParamRegistry<Real>& reg) {
        ln1.register_into(reg);
        self_attn.register_into(reg);
        ln2.register_into(reg);
        cross_attn.register_into(reg);
        ln3.register_into(reg);
        ffn.register_into(reg);
    }

    void init(uint64_t seed) {
        ln1.init();
        ln2.init();
        ln3.init();
        self_attn.init(seed);
        cross_attn.init(seed);
        ffn.init(seed);
    }
};

// Pre-LN transformer decoder. Cross-attention memory is the 2k-row
// concatenation of the state matrices; the context vector z enters only
// through position 0 (added to the [SOS] embedding).
template <typename Real>
struct Decoder {
    std::vector<DecoderLayer<Real>> layers;
    LnParams<Real> lnf;
    Parameter<Real> w_der;  // d x |V|
    int heads;
    double dropout;

    Decoder(int num_layers, int d, int ffn_hidden, int vocab, int heads_, double dropout_)
        : lnf("dec.lnf", d), w_der("dec.w_der", d, vocab), heads(heads_), dropout(dropout_) {
        for (int i = 0; i < num_layers; ++i)
            layers.emplace_back("dec.l" + std::to_string(i), d, ffn_hidden);
    }

    void register_into(ParamRegistry<Real>& reg) {
        for (auto& l : layers) l.register_into(reg);
        lnf.register_into(reg);
        reg.add(w_der);
    }

    void init(uint64_t seed) {
        for (auto& l : layers) l.init(seed);
        lnf.init();
        init_uniform(w_der, seed, w_der.value.rows);
    }

    // input_ids start with [SOS]; returns one logit row per input position.
    GVar<Real> forward(Graph<Real>& g, Embeddings<Real>& emb, const std::vector<int>& input_ids,
                       GVar<Real> z, GVar<Real> memory) {
        const int m = static_cast<int>(input_ids.size());
        if (m < 1) throw std::invalid_argument("decoder: empty input");
        if (m > emb.pos_dec.value.rows) throw std::invalid_argument("decoder: input exceeds positional table");
        std::vector<int> pos_ids(input_ids.size());
        for (int i = 0; i < m; ++i) pos_ids[static_cast<size_t>(i)] = i;
        auto x = g.add(g.embed_rows(g.param(emb.tok), input_ids), g.embed_rows(g.param(emb.pos_dec), pos_ids));
        if (m == 1) {
            x = g.add(x, z);
        } else {
            auto head = g.add(g.slice_rows(x, 0, 1), z);
            x = g.concat_rows(head, g.slice_rows(x, 1, m));
        }
        const Mat<Real> mask = causal_mask<Real>(m);
        for (auto& l : layers) {
            auto a = l.ln1.apply(g, x);
            x = g.add(x, mha(g, a, a, l.self_attn, heads, &mask, dropout));
            x = g.add(x, mha(g, l.ln2.apply(g, x), memory, l.cross_attn, heads,
                             static_cast<const Mat<Real>*>(nullptr), dropout));
            x = g.add(x, l.ffn.apply(g, l.ln3.apply(g, x), dropout));
        }
        return g.matmul(lnf.apply(g, x), g.param(w_der));
    }

    // Gold must be non-empty and end with [EOS]; logits row j is conditioned
    // on [SOS] and gold tokens before j.
    GVar<Real> teacher_forcing_logits(Graph<Real>& g, Embeddings<Real>& emb, GVar<Real> z,
                                      GVar<Real> memory, const std::vector<int>& gold) {
        if (gold.empty()) throw std::invalid_argument("teacher_forcing_logits: empty gold sequence");
        if (gold.back() != Vocab::kEos)
            throw std::invalid_argument("teacher_forcing_logits: gold must end with [EOS]");
        std::vector<int> input;
        input.push_back(Vocab::kSos);
        input.insert(input.end(), gold.begin(), gold.end() - 1);
        return forward(g, emb, input, z, memory);
    }

    // Greedy decode inside an eval-mode graph; returned tokens exclude [SOS]
    // and [EOS]. The prefix is re-run each step (no cache; lengths are tiny).
    std::vector<int> decode_greedy(Graph<Real>& g, Embeddings<Real>& emb, GVar<Real> z, GVar<Real> memory,
                                   int max_len) {
        if (max_len < 1) throw std::invalid_argument("decode_greedy: max_len must be >= 1");
        if (g.train_mode()) throw std::logic_error("decode_greedy: requires an eval-mode graph");
        std::vector<int> out;
        std::vector<int> input{Vocab::kSos};
        for (int step = 0; step < max_len; ++step) {
            auto logits = forward(g, emb, input, z, memory);
            const Mat<Real>& L = g.value(logits);
            const int last = L.rows - 1;
            int best = 0;
            for (int j = 1; j < L.cols; ++j)
                if (L.at(last, j) > L.at(last, best)) best = j;
            if (best == Vocab::kEos) break;
            out.push_back(best);
            input.push_back(best);
        }
        return out;
    }
};

}  // namespace dst
