#include "pfm/serialize.hpp"

#include "pfm/errors.hpp"

#include <array>
#include <charconv>
#include <set>

namespace pfm {

namespace {

std::string num(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

Json query_ids_json(const FeatureDataset& ds, const QuerySet& qs) {
    Json out = Json::array();
    for (auto q : qs.items)
        out.push_back(ds.id(q));
    return out;
}

template <typename T>
T field(const Json& j, const char* key, T fallback) {
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ValidationError(std::string("config field '") + key + "' has the wrong type");
    }
}

} // namespace

Json config_to_json(const RetrievalConfig& cfg) {
    return Json{{"alpha", cfg.alpha},
                {"anchor_count", cfg.anchor_count},
                {"nearest_anchors", cfg.nearest_anchors},
                {"sigma", cfg.sigma},
                {"k_return", cfg.k_return},
                {"kmeans_iterations", cfg.kmeans_iterations}};
}

RetrievalConfig config_from_json(const Json& j) {
    if (j.is_null())
        return {};
    if (!j.is_object())
        throw ValidationError("config must be a JSON object");
    static const std::set<std::string> known = {"alpha",     "anchor_count", "nearest_anchors",
                                                "sigma",     "k_return",     "kmeans_iterations"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key))
            throw ValidationError("unknown config field '" + key + "'");
    }
    RetrievalConfig cfg;
    cfg.alpha = field(j, "alpha", cfg.alpha);
    cfg.anchor_count = field(j, "anchor_count", cfg.anchor_count);
    cfg.nearest_anchors = field(j, "nearest_anchors", cfg.nearest_anchors);
    cfg.sigma = field(j, "sigma", cfg.sigma);
    cfg.k_return = field(j, "k_return", cfg.k_return);
    cfg.kmeans_iterations = field(j, "kmeans_iterations", cfg.kmeans_iterations);
    return cfg;
}

Json retrieval_result_json(const RetrievalResult& result, const FeatureDataset& ds) {
    Json out{{"method", method_name(result.method)}};
    if (result.method == Method::scalarized)
        out["weights"] = result.weights;
    Json items = Json::array();
    for (const auto& it : result.ranked_items) {
        Json e{{"item_id", ds.id(it.item_index)},
               {"front", it.front_index},
               {"position", it.position_in_front},
               {"coords", it.coords}};
        if (it.score)
            e["score"] = *it.score;
        items.push_back(std::move(e));
    }
    out["items"] = std::move(items);
    return out;
}

Json query_response_json(const RetrievalResult& result, const FeatureDataset& ds, const QuerySet& qs) {
    Json out{{"method", method_name(result.method)}, {"queries", query_ids_json(ds, qs)}};
    if (result.method == Method::scalarized)
        out["weights"] = result.weights;
    Json fronts = Json::array();
    std::size_t current = 0;
    for (const auto& it : result.ranked_items) {
        if (fronts.empty() || it.front_index != current) {
            fronts.push_back(Json::array());
            current = it.front_index;
        }
        Json e{{"item_id", ds.id(it.item_index)}, {"coords", it.coords}, {"position", it.position_in_front}};
        if (it.score)
            e["score"] = *it.score;
        fronts.back().push_back(std::move(e));
    }
    out["fronts"] = std::move(fronts);
    return out;
}

Json front_view_json(const FrontView& view, const FeatureDataset& ds, const QuerySet& qs) {
    Json fronts = Json::array();
    for (const auto& front : view.ordered_fronts) {
        Json items = Json::array();
        for (std::size_t pos = 0; pos < front.size(); ++pos) {
            const auto c = view.points[front[pos]];
            items.push_back(Json{{"item_id", ds.id(view.candidates[front[pos]])},
                                 {"coords", std::vector<double>(c.begin(), c.end())},
                                 {"position", pos}});
        }
        fronts.push_back(std::move(items));
    }
    return Json{{"queries", query_ids_json(ds, qs)},
                {"depth", view.ordered_fronts.size()},
                {"total_depth", view.layering.depth()},
                {"fronts", std::move(fronts)}};
}

Json layering_json(const ParetoLayering& layering) {
    return Json{{"depth", layering.depth()}, {"front_of", layering.front_of}, {"fronts", layering.fronts}};
}

Json metric_report_json(const MetricReport& report) {
    Json methods = Json::array();
    for (auto m : report.methods)
        methods.push_back(method_name(m));
    Json ndcg = Json::object();
    for (const auto& [name, curve] : report.ndcg_at_k)
        ndcg[name] = curve;
    Json out{{"methods", std::move(methods)},
             {"ndcg_at_k", std::move(ndcg)},
             {"meta",
              {{"pair_count", report.pair_count},
               {"model_count", report.model_count},
               {"k_max", report.k_max},
               {"pair_seed", report.pair_seed},
               {"model_seeds", report.model_seeds}}}};
    if (!report.front_profiles.curves.empty()) {
        out["front_profiles"] = {{"grid", report.front_profiles.grid},
                                 {"curves", report.front_profiles.curves},
                                 {"contributors", report.front_profiles.contributors}};
    }
    return out;
}

std::string metric_report_csv(const MetricReport& report) {
    std::string out = "k";
    for (auto m : report.methods)
        out += "," + method_name(m);
    out += "\n";
    for (std::size_t k = 1; k <= report.k_max; ++k) {
        out += std::to_string(k);
        for (auto m : report.methods)
            out += "," + num(report.ndcg_at_k.at(method_name(m)).at(k - 1));
        out += "\n";
    }
    return out;
}

std::string front_profiles_csv(const FrontProfiles& profiles) {
    std::string out = "grid";
    for (std::size_t f = 0; f < profiles.curves.size(); ++f)
        out += ",front" + std::to_string(f + 1);
    out += "\n";
    for (std::size_t g = 0; g < profiles.grid.size(); ++g) {
        out += num(profiles.grid[g]);
        for (const auto& curve : profiles.curves)
            out += "," + num(curve[g]);
        out += "\n";
    }
    return out;
}

Json continuum_table_json(const ContinuumTable& table) {
    Json rows = Json::array();
    for (const auto& r : table.rows)
        rows.push_back(
            {{"n", r.n}, {"max_relative_error", r.max_relative_error}, {"scaled_depth_at_one", r.scaled_depth_at_one}});
    return Json{{"c_hat", table.c_hat}, {"non_increasing", table.non_increasing}, {"rows", std::move(rows)}};
}

std::string continuum_table_csv(const ContinuumTable& table) {
    std::string out = "n,max_relative_error,scaled_depth_at_one\n";
    for (const auto& r : table.rows)
        out += std::to_string(r.n) + "," + num(r.max_relative_error) + "," + num(r.scaled_depth_at_one) + "\n";
    return out;
}

Json probe_report_json(const std::vector<ProbeLevel>& levels) {
    Json out = Json::array();
    for (const auto& l : levels) {
        Json e{{"level", l.level}, {"skipped", l.skipped}};
        if (l.skipped) {
            e["note"] = l.note;
        } else {
            e["front"] = l.front;
            e["curve_points"] = l.curve_points;
            e["defect"] = l.defect;
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string probe_report_csv(const std::vector<ProbeLevel>& levels) {
    std::string out = "level,front,curve_points,defect,skipped,note\n";
    for (const auto& l : levels)
        out += num(l.level) + "," + std::to_string(l.front) + "," + std::to_string(l.curve_points) + "," +
               num(l.defect) + "," + (l.skipped ? "1" : "0") + "," + l.note + "\n";
    return out;
}

} // namespace pfm
