#include "doctest.h"

#include "pfm/errors.hpp"
#include "pfm/experiment.hpp"
#include "pfm/synthetic.hpp"

#include <set>

using namespace pfm;

namespace {

RetrievalConfig small_config() {
    RetrievalConfig cfg;
    cfg.anchor_count = 40;
    cfg.nearest_anchors = 5;
    return cfg;
}

LabeledDataset small_bench() {
    BridgeBenchmarkConfig cfg;
    cfg.cluster_size = 40;
    cfg.bridge_size = 12;
    cfg.distractor_size = 30;
    cfg.dim = 6;
    return make_bridge_benchmark(cfg);
}

} // namespace

TEST_CASE("bridge benchmark layout") {
    const auto bench = make_bridge_benchmark({});
    REQUIRE(bench.labels.has_value());
    CHECK(bench.data.size() == 150 + 150 + 40 + 150);
    CHECK(bench.data.dim() == 16);
    CHECK(bench.labels->class_names() == std::vector<std::string>{"A", "B", "C"});
    std::size_t bridges = 0;
    for (std::size_t i = 0; i < bench.data.size(); ++i) {
        const auto row = bench.labels->row(i);
        bridges += row[0] && row[1];
        CHECK(int(row[0]) + int(row[1]) + int(row[2]) >= 1);
    }
    CHECK(bridges == 40);
    const auto again = make_bridge_benchmark({});
    CHECK(again.data.features() == bench.data.features());
}

TEST_CASE("viable pairs need enough uniquely related items") {
    // 0:{A} 1:{B} 2..6:{A,B} 7:{A} 8:{C}
    std::vector<std::uint8_t> bits;
    const std::vector<std::array<int, 3>> rows{{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 1, 0}, {1, 1, 0},
                                               {1, 1, 0}, {1, 1, 0}, {1, 0, 0}, {0, 0, 1}};
    for (const auto& r : rows)
        for (int v : r)
            bits.push_back(static_cast<std::uint8_t>(v));
    const LabelMatrix labels(rows.size(), 3, bits);
    CHECK(is_viable_pair(labels, {0, 1}));
    CHECK_FALSE(is_viable_pair(labels, {0, 1}, 6));
    CHECK_FALSE(is_viable_pair(labels, {0, 7}));
    CHECK_FALSE(is_viable_pair(labels, {0, 8}));
    CHECK_FALSE(is_viable_pair(labels, {0, 0}));
    const auto rel = pair_relevance(labels, {0, 1});
    CHECK(rel[0] == 0.0);
    CHECK(rel[1] == 0.0);
    CHECK(rel[2] == 1.0);
    CHECK(rel[7] == 0.0);

    const auto batch = make_query_pair_batch(labels, 5, 9);
    std::set<std::pair<std::size_t, std::size_t>> drawn;
    for (const auto& p : batch.pairs)
        drawn.insert({std::min(p.a, p.b), std::max(p.a, p.b)});
    CHECK(drawn == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 7}});

    const LabelMatrix none(3, 1, {1, 1, 1});
    CHECK_THROWS_AS(make_query_pair_batch(none, 3, 1), ValidationError);
}

TEST_CASE("pair batches are seeded, distinct and viable") {
    const auto bench = small_bench();
    const auto a = make_query_pair_batch(*bench.labels, 30, 77);
    const auto b = make_query_pair_batch(*bench.labels, 30, 77);
    REQUIRE(a.pairs.size() == 30);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        CHECK(a.pairs[i].a == b.pairs[i].a);
        CHECK(a.pairs[i].b == b.pairs[i].b);
        CHECK(is_viable_pair(*bench.labels, a.pairs[i]));
        CHECK(seen.insert({std::min(a.pairs[i].a, a.pairs[i].b), std::max(a.pairs[i].a, a.pairs[i].b)}).second);
    }
    const auto c = make_query_pair_batch(*bench.labels, 30, 78);
    bool differs = false;
    for (std::size_t i = 0; i < c.pairs.size(); ++i)
        differs = differs || c.pairs[i].a != a.pairs[i].a || c.pairs[i].b != a.pairs[i].b;
    CHECK(differs);
}

TEST_CASE("single pair and single model reduce to a direct computation") {
    const auto bench = small_bench();
    const auto model = build_emr_model(bench.data, small_config(), 4);
    const auto batch = make_query_pair_batch(*bench.labels, 1, 5);
    const auto pair = batch.pairs[0];
    ExperimentOptions opts;
    opts.k_max = 10;
    const auto report = run_query_pair_experiment(bench.data, *bench.labels, std::span(&model, 1), batch, opts);
    const auto rel = pair_relevance(*bench.labels, pair);
    const QuerySet qs{{pair.a, pair.b}};
    const std::vector<std::pair<std::string, RetrievalResult>> direct{
        {"pfm", pfm_retrieve(bench.data, model, qs, 10)},
        {"mq_avg", mq_avg_retrieve(bench.data, model, qs, 10)},
        {"mq_max", mq_max_retrieve(bench.data, model, qs, 10)},
    };
    for (const auto& [name, res] : direct) {
        std::vector<double> rels;
        for (const auto& it : res.ranked_items)
            rels.push_back(rel[it.item_index]);
        REQUIRE(report.ndcg_at_k.count(name));
        for (std::size_t k = 1; k <= 10; ++k)
            CHECK(report.ndcg_at_k.at(name)[k - 1] == doctest::Approx(ndcg_at_k(rels, k)).epsilon(1e-12));
    }
}

TEST_CASE("report shape and determinism") {
    const auto bench = small_bench();
    const std::vector<EmrModel> models{build_emr_model(bench.data, small_config(), 1),
                                       build_emr_model(bench.data, small_config(), 2)};
    const auto batch = make_query_pair_batch(*bench.labels, 12, 3);
    ExperimentOptions opts;
    opts.k_max = 15;
    opts.profile_fronts = 3;
    opts.grid_size = 21;
    const auto a = run_query_pair_experiment(bench.data, *bench.labels, models, batch, opts);
    const auto b = run_query_pair_experiment(bench.data, *bench.labels, models, batch, opts);
    CHECK(a.ndcg_at_k.size() == 3);
    for (const auto& [name, curve] : a.ndcg_at_k) {
        CHECK(curve.size() == 15);
        CHECK(curve == b.ndcg_at_k.at(name));
        for (double v : curve) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    CHECK(a.pair_count == 12);
    CHECK(a.model_count == 2);
    CHECK(a.pair_seed == 3);
    CHECK(a.front_profiles.curves.size() == 3);
    CHECK(a.front_profiles.grid.size() == 21);
    CHECK(a.front_profiles.contributors[0] == 24);

    ExperimentOptions no_pfm = opts;
    no_pfm.methods = {Method::mq_avg};
    const auto c = run_query_pair_experiment(bench.data, *bench.labels, models, batch, no_pfm);
    CHECK(c.front_profiles.curves.empty());
    CHECK(c.ndcg_at_k.at("mq_avg") == a.ndcg_at_k.at("mq_avg"));
}

TEST_CASE("experiment argument checks") {
    const auto bench = small_bench();
    const auto model = build_emr_model(bench.data, small_config(), 1);
    const auto batch = make_query_pair_batch(*bench.labels, 2, 3);
    ExperimentOptions opts;
    CHECK_THROWS_AS(run_query_pair_experiment(bench.data, *bench.labels, {}, batch, opts), ValidationError);
    opts.methods = {Method::scalarized};
    CHECK_THROWS_AS(run_query_pair_experiment(bench.data, *bench.labels, std::span(&model, 1), batch, opts),
                    ValidationError);
    opts.methods = {Method::pfm};
    opts.k_max = 0;
    CHECK_THROWS_AS(run_query_pair_experiment(bench.data, *bench.labels, std::span(&model, 1), batch, opts),
                    ValidationError);
    CHECK_THROWS_AS(run_query_pair_experiment(bench.data, *bench.labels, std::span(&model, 1), QueryPairBatch{},
                                              ExperimentOptions{}),
                    ValidationError);
}
