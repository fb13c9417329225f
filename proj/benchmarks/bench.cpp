#include <benchmark/benchmark.h>

#include "dst/episode.hpp"
#include "dst/game.hpp"
#include "dst/graph.hpp"
#include "dst/model.hpp"
#include "dst/rng.hpp"
#include "dst/rsre.hpp"
#include "dst/vocab.hpp"
#include "dst/world.hpp"

namespace {

dst::Mat<float> random_mat(int r, int c, uint64_t key) {
    dst::Rng rng(key);
    dst::Mat<float> m(r, c);
    for (auto& x : m.v) x = static_cast<float>(rng.normal() * 0.1);
    return m;
}

void bm_matmul_64(benchmark::State& state) {
    dst::Mat<float> a = random_mat(64, 64, 1);
    dst::Mat<float> b = random_mat(64, 64, 2);
    for (auto _ : state) {
        dst::Graph<float> g(false, 0);
        auto c = g.matmul(g.input(a), g.input(b));
        benchmark::DoNotOptimize(g.value(c).v.data());
    }
}
BENCHMARK(bm_matmul_64);

void bm_rsre_forward(benchmark::State& state) {
    const int k = 8, d = 64;
    dst::RsreParams<float> p("b.rsre", d);
    dst::ParamRegistry<float> reg;
    p.register_into(reg);
    p.init(7);
    dst::Mat<float> m = random_mat(k, d, 3);
    for (auto _ : state) {
        dst::Graph<float> g(false, 0);
        auto v = g.input(m);
        auto out = dst::rsre(g, v, v, p);
        benchmark::DoNotOptimize(g.value(out.out).v.data());
    }
}
BENCHMARK(bm_rsre_forward);

void bm_rsre_backward(benchmark::State& state) {
    const int k = 8, d = 64;
    dst::RsreParams<float> p("b.rsre", d);
    dst::ParamRegistry<float> reg;
    p.register_into(reg);
    p.init(7);
    dst::Mat<float> m = random_mat(k, d, 3);
    for (auto _ : state) {
        reg.zero_grads();
        dst::Graph<float> g(false, 0);
        auto v = g.input(m);
        auto out = dst::rsre(g, v, v, p);
        auto loss = g.sum_all(out.out);
        g.backward(loss);
        benchmark::DoNotOptimize(reg.all().front()->grad.v.data());
    }
}
BENCHMARK(bm_rsre_backward);

struct EpisodeFixture {
    dst::World world;
    dst::Vocab vocab;
    dst::Dataset ds;
    dst::ModelConfig mc;
    dst::Model<float>* model;

    EpisodeFixture() {
        dst::WorldConfig wc;
        wc.seed = 5;
        wc.num_images = 64;
        wc.family_size = 8;
        world = dst::World::generate(wc);
        vocab = dst::Vocab::build(dst::grammar_words());
        dst::DatasetConfig dc;
        dc.pool_size = 16;
        dc.rounds = 5;
        ds = dst::build_dataset(world, dc);
        mc.vocab_size = vocab.size();
        model = new dst::Model<float>(mc, 5);
    }
};

EpisodeFixture& fixture() {
    static EpisodeFixture f;
    return f;
}

void bm_episode_train_step(benchmark::State& state) {
    EpisodeFixture& f = fixture();
    const dst::Episode& ep = f.ds.train.front();
    dst::RunOptions ro;
    ro.train_graph = true;
    ro.questions = dst::QuestionSource::Gold;
    ro.compute_loss = true;
    for (auto _ : state) {
        f.model->reg.zero_grads();
        dst::Graph<float> g(true, 11);
        dst::Rng rng(12);
        auto res = dst::run_episode(g, *f.model, f.world, ep, f.vocab, ro, rng);
        g.backward(res.total);
        benchmark::DoNotOptimize(res.loss.total);
    }
}
BENCHMARK(bm_episode_train_step)->Unit(benchmark::kMillisecond);

void bm_episode_eval(benchmark::State& state) {
    EpisodeFixture& f = fixture();
    const dst::Episode& ep = f.ds.train.front();
    dst::RunOptions ro;
    ro.train_graph = false;
    ro.questions = dst::QuestionSource::Generated;
    for (auto _ : state) {
        dst::Graph<float> g(false, 13);
        dst::Rng rng(14);
        auto res = dst::run_episode(g, *f.model, f.world, ep, f.vocab, ro, rng);
        benchmark::DoNotOptimize(res.transcript.final_rank);
    }
}
BENCHMARK(bm_episode_eval)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
