#include "doctest.h"
#include "oracles.hpp"

#include "pfm/engine.hpp"
#include "pfm/errors.hpp"
#include "pfm/synthetic.hpp"

#include <cmath>
#include <future>
#include <set>

using namespace pfm;

namespace {

RetrievalConfig config(std::size_t anchors, std::size_t s) {
    RetrievalConfig cfg;
    cfg.anchor_count = anchors;
    cfg.nearest_anchors = s;
    return cfg;
}

std::vector<std::size_t> indices(const RetrievalResult& r) {
    std::vector<std::size_t> out;
    for (const auto& it : r.ranked_items)
        out.push_back(it.item_index);
    return out;
}

ScoreMatrix score_rows(const std::vector<std::vector<double>>& rows) {
    ScoreMatrix s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return s;
}

std::vector<std::size_t> all_items(std::size_t n) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = i;
    return out;
}

struct Fixture {
    FeatureDataset ds = oracle::random_dataset(400, 5, 12);
    EmrModel model = build_emr_model(ds, config(32, 5), 3);
};

} // namespace

TEST_CASE("method names") {
    for (auto m : {Method::pfm, Method::mq_avg, Method::mq_max, Method::scalarized})
        CHECK(parse_method(method_name(m)) == m);
    CHECK_THROWS_AS(parse_method("borda"), ValidationError);
}

TEST_CASE("single query: pfm equals descending score order and both baselines") {
    Fixture f;
    const QuerySet qs{{7}};
    const auto r = emr_rank_query(f.model, 7).scores;
    auto expected = candidate_items(f.ds.size(), qs);
    std::stable_sort(expected.begin(), expected.end(), [&](auto a, auto b) { return r(a) > r(b); });
    expected.resize(50);
    CHECK(indices(pfm_retrieve(f.ds, f.model, qs, 50)) == expected);
    CHECK(indices(mq_avg_retrieve(f.ds, f.model, qs, 50)) == expected);
    CHECK(indices(mq_max_retrieve(f.ds, f.model, qs, 50)) == expected);
}

TEST_CASE("duplicated query rows reduce to the single-query order") {
    Fixture f;
    const auto r = emr_rank_query(f.model, 7).scores;
    ScoreMatrix two(2, r.size());
    two.row(0) = r.transpose();
    two.row(1) = r.transpose();
    ScoreMatrix one(1, r.size());
    one.row(0) = r.transpose();
    const auto cands = candidate_items(f.ds.size(), QuerySet{{7}});
    const auto a = rank_by_pareto(dissimilarities(two), cands, 100);
    const auto b = rank_by_pareto(dissimilarities(one), cands, 100);
    CHECK(indices(a) == indices(b));
    for (const auto& it : a.ranked_items)
        CHECK(it.coords[0] == it.coords[1]);
}

TEST_CASE("pfm result structure") {
    Fixture f;
    const QuerySet qs{{4, 222}};
    const auto res = pfm_retrieve(f.ds, f.model, qs, 120);
    REQUIRE(res.ranked_items.size() == 120);
    const auto scores = query_scores(f.model, qs);
    const auto dis = dissimilarities(scores);
    const auto cands = candidate_items(f.ds.size(), qs);
    const auto pts = dis.points(cands);
    const auto fronts = oracle::peel_fronts(pts);
    std::size_t prev_front = 1;
    std::size_t expect_pos = 0;
    for (const auto& it : res.ranked_items) {
        CHECK(it.item_index != 4);
        CHECK(it.item_index != 222);
        CHECK(it.front_index >= prev_front);
        if (it.front_index != prev_front)
            expect_pos = 0;
        CHECK(it.position_in_front == expect_pos++);
        prev_front = it.front_index;
        const auto local = static_cast<std::size_t>(std::lower_bound(cands.begin(), cands.end(), it.item_index) -
                                                    cands.begin());
        CHECK(fronts[local] == it.front_index);
        CHECK(it.coords[0] == doctest::Approx(1.0 - scores(0, static_cast<Eigen::Index>(it.item_index))));
        CHECK_FALSE(it.score.has_value());
    }
    // positions within each front follow the middle-out order of that front
    const auto layering = non_dominated_sort(pts);
    std::size_t at = 0;
    for (std::size_t fr = 0; fr < layering.depth() && at < res.ranked_items.size(); ++fr) {
        for (auto local : middle_out_order(layering.fronts[fr], pts)) {
            if (at == res.ranked_items.size())
                break;
            CHECK(res.ranked_items[at++].item_index == cands[local]);
        }
    }
}

TEST_CASE("whole fronts: nothing retrieved is dominated by anything left out") {
    Fixture f;
    const QuerySet qs{{10, 300, 150}};
    const auto dis = dissimilarities(query_scores(f.model, qs));
    const auto cands = candidate_items(f.ds.size(), qs);
    const auto pts = dis.points(cands);
    const auto layering = non_dominated_sort(pts);
    const std::size_t k = layering.fronts[0].size() + layering.fronts[1].size() + layering.fronts[2].size();
    const auto res = rank_by_pareto(dis, cands, k);
    const auto picked = indices(res);
    const std::set<std::size_t> taken(picked.begin(), picked.end());
    for (auto j : cands) {
        if (taken.count(j))
            continue;
        for (auto i : taken)
            CHECK_FALSE(dominates(std::vector<double>{dis.d(0, j), dis.d(1, j), dis.d(2, j)},
                                  std::vector<double>{dis.d(0, i), dis.d(1, i), dis.d(2, i)}));
    }
}

TEST_CASE("pfm order depends on scores only through their per-query order") {
    Fixture f;
    const QuerySet qs{{1, 2}};
    const auto scores = query_scores(f.model, qs);
    ScoreMatrix warped = scores;
    warped.row(0) = scores.row(0).array().exp();
    warped.row(1) = 3.0 * scores.row(1).array() - 7.0;
    const auto cands = candidate_items(f.ds.size(), qs);
    CHECK(indices(rank_by_pareto(dissimilarities(scores), cands, 200)) ==
          indices(rank_by_pareto(dissimilarities(warped), cands, 200)));
}

TEST_CASE("k handling") {
    Fixture f;
    const QuerySet qs{{0, 1}};
    CHECK(pfm_retrieve(f.ds, f.model, qs, 10000).ranked_items.size() == 398);
    CHECK(mq_avg_retrieve(f.ds, f.model, qs, 10000).ranked_items.size() == 398);
    CHECK_THROWS_AS(pfm_retrieve(f.ds, f.model, qs, 0), ValidationError);
    CHECK_THROWS_AS(mq_max_retrieve(f.ds, f.model, qs, 0), ValidationError);
    CHECK_THROWS_AS(pfm_retrieve(f.ds, f.model, QuerySet{{0, 0}}, 5), ValidationError);
    CHECK_THROWS_AS(pfm_retrieve(f.ds, f.model, QuerySet{{400}}, 5), ValidationError);
}

TEST_CASE("mq-avg matches ranking the summed indicator") {
    Fixture f;
    const QuerySet qs{{5, 77, 301}};
    Eigen::VectorXd y = Eigen::VectorXd::Zero(400);
    for (auto q : qs.items)
        y(static_cast<Eigen::Index>(q)) = 1.0;
    const auto summed = emr_rank(f.model, y).scores;
    const auto res = mq_avg_retrieve(f.ds, f.model, qs, 397);
    for (const auto& it : res.ranked_items)
        CHECK(std::abs(*it.score - summed(static_cast<Eigen::Index>(it.item_index)) / 3.0) <= 1e-10);
    auto expected = candidate_items(400, qs);
    std::stable_sort(expected.begin(), expected.end(), [&](auto a, auto b) { return summed(a) > summed(b); });
    CHECK(indices(res) == expected);
}

TEST_CASE("fusion baselines on hand-made scores") {
    const auto s = score_rows({{1.0, 0.4, 0.6}, {0.0, 0.4, 0.6}});
    const auto cands = all_items(3);
    // (1, 0) beats (0.4, 0.4) on the average
    CHECK(indices(rank_by_fusion(s, std::vector<std::size_t>{0, 1}, Method::mq_avg, {}, 2)) ==
          std::vector<std::size_t>{0, 1});
    // (1, 0) beats (0.6, 0.6) on the maximum
    CHECK(indices(rank_by_fusion(s, std::vector<std::size_t>{0, 2}, Method::mq_max, {}, 2)) ==
          std::vector<std::size_t>{0, 2});
    // ties fall back to the item index
    const auto tie = score_rows({{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}});
    CHECK(indices(rank_by_fusion(tie, cands, Method::mq_avg, {}, 3)) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("mq-max ignores which query produced the maximum") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScoreMatrix s(2, 60);
    for (Eigen::Index j = 0; j < 60; ++j) {
        s(0, j) = u(rng);
        s(1, j) = u(rng);
    }
    ScoreMatrix swapped = s;
    for (Eigen::Index j = 0; j < 60; j += 3)
        std::swap(swapped(0, j), swapped(1, j));
    const auto cands = all_items(60);
    CHECK(indices(rank_by_fusion(s, cands, Method::mq_max, {}, 60)) ==
          indices(rank_by_fusion(swapped, cands, Method::mq_max, {}, 60)));
}

TEST_CASE("scalarization special cases") {
    Fixture f;
    const QuerySet qs{{3, 90}};
    const std::vector<double> uniform{0.5, 0.5};
    CHECK(indices(scalarized_retrieve(f.ds, f.model, qs, uniform, 100)) ==
          indices(mq_avg_retrieve(f.ds, f.model, qs, 100)));
    const std::vector<double> first{1.0, 0.0};
    const auto r = emr_rank_query(f.model, 3).scores;
    auto expected = candidate_items(400, qs);
    std::stable_sort(expected.begin(), expected.end(), [&](auto a, auto b) { return r(a) > r(b); });
    expected.resize(100);
    CHECK(indices(scalarized_retrieve(f.ds, f.model, qs, first, 100)) == expected);
    CHECK_THROWS_AS(scalarized_retrieve(f.ds, f.model, qs, std::vector<double>{0.0, 0.0}, 5), ValidationError);
    CHECK_THROWS_AS(scalarized_retrieve(f.ds, f.model, qs, std::vector<double>{-1.0, 2.0}, 5), ValidationError);
    CHECK_THROWS_AS(scalarized_retrieve(f.ds, f.model, qs, std::vector<double>{1.0}, 5), DimensionError);
}

TEST_CASE("every scalarization winner lies on the first front") {
    Fixture f;
    for (std::size_t q = 0; q < 10; ++q) {
        const QuerySet qs{{q, 399 - q}};
        const auto scores = query_scores(f.model, qs);
        const auto cands = candidate_items(400, qs);
        const auto fronts = oracle::peel_fronts(dissimilarities(scores).points(cands));
        for (int g = 0; g <= 100; ++g) {
            const std::vector<double> w{g / 100.0, 1.0 - g / 100.0};
            const auto top = rank_by_fusion(scores, cands, Method::scalarized, w, 1).ranked_items[0].item_index;
            const auto local = static_cast<std::size_t>(std::lower_bound(cands.begin(), cands.end(), top) -
                                                        cands.begin());
            CHECK(fronts[local] == 1);
        }
    }
}

TEST_CASE("concave first front: middle points are never a scalarization winner") {
    // d on the quarter circle d1^2 + d2^2 = 1, bulging away from the origin
    const std::size_t n = 21;
    std::vector<std::vector<double>> rows(2, std::vector<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const double t = M_PI / 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);
        rows[0][j] = 1.0 - std::cos(t);
        rows[1][j] = 1.0 - std::sin(t);
    }
    const auto s = score_rows(rows);
    const auto cands = all_items(n);
    std::set<std::size_t> winners;
    for (int g = 0; g <= 100; ++g) {
        const std::vector<double> w{g / 100.0, 1.0 - g / 100.0};
        winners.insert(rank_by_fusion(s, cands, Method::scalarized, w, 1).ranked_items[0].item_index);
    }
    CHECK(winners == std::set<std::size_t>{0, n - 1});
    const auto res = rank_by_pareto(dissimilarities(s), cands, n);
    for (const auto& it : res.ranked_items)
        CHECK(it.front_index == 1);
    CHECK(res.ranked_items[0].item_index == 10);
}

TEST_CASE("bridge items sit in the middle of the first front") {
    const auto data = make_bridge_benchmark({});
    const auto model = build_emr_model(data.data, config(64, 5), 1);
    const auto& ds = data.data;
    int bridge_first = 0, trials = 0;
    for (std::size_t t = 0; t < 20; ++t) {
        const QuerySet qs{{*ds.index_of("a" + std::string(t < 10 ? "0000" : "000") + std::to_string(t)),
                           *ds.index_of("b" + std::string(t < 10 ? "0000" : "000") + std::to_string(t))}};
        const auto dis = dissimilarities(query_scores(model, qs));
        const auto cands = candidate_items(ds.size(), qs);
        const auto pts = dis.points(cands);
        const auto fronts = oracle::peel_fronts(pts);
        const auto res = rank_by_pareto(dis, cands, ds.size());
        double bridge_pos = 0, pure_pos = 0;
        int bridge_n = 0, pure_n = 0;
        for (const auto& it : res.ranked_items) {
            if (it.front_index != 1)
                break;
            const auto local = static_cast<std::size_t>(
                std::lower_bound(cands.begin(), cands.end(), it.item_index) - cands.begin());
            CHECK(fronts[local] == 1);
            if (ds.id(it.item_index).rfind("ab", 0) == 0) {
                bridge_pos += static_cast<double>(it.position_in_front);
                ++bridge_n;
            } else {
                pure_pos += static_cast<double>(it.position_in_front);
                ++pure_n;
            }
        }
        if (bridge_n > 0 && pure_n > 0) {
            ++trials;
            bridge_first += bridge_pos / bridge_n < pure_pos / pure_n;
        }
    }
    MESSAGE("bridge items earlier on average in " << bridge_first << " of " << trials << " mixed fronts");
    CHECK(trials > 0);
    CHECK(bridge_first * 4 >= trials * 3);
}

TEST_CASE("front exploration") {
    Fixture f;
    const QuerySet qs{{8, 9}};
    const auto dis = dissimilarities(query_scores(f.model, qs));
    const auto cands = candidate_items(400, qs);
    const auto view = explore_fronts(dis, cands, 3);
    REQUIRE(view.ordered_fronts.size() == 3);
    const auto res = rank_by_pareto(dis, cands, 400);
    std::size_t at = 0;
    for (const auto& front : view.ordered_fronts)
        for (auto local : front)
            CHECK(res.ranked_items[at++].item_index == view.candidates[local]);
    CHECK(explore_fronts(dis, cands, 100000).ordered_fronts.size() == view.layering.depth());
}

TEST_CASE("concurrent retrievals on one model match serial results") {
    Fixture f;
    std::vector<QuerySet> batches;
    for (std::size_t i = 0; i < 16; ++i)
        batches.push_back(QuerySet{{i, 200 + i}});
    std::vector<std::vector<std::size_t>> serial;
    for (const auto& qs : batches)
        serial.push_back(indices(pfm_retrieve(f.ds, f.model, qs, 60)));
    std::vector<std::future<std::vector<std::size_t>>> jobs;
    for (const auto& qs : batches)
        jobs.push_back(std::async(std::launch::async, [&f, qs] { return indices(pfm_retrieve(f.ds, f.model, qs, 60)); }));
    for (std::size_t i = 0; i < jobs.size(); ++i)
        CHECK(jobs[i].get() == serial[i]);
}
