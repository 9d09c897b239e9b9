#pragma once

#include "pfm/asymptotics.hpp"
#include "pfm/dataset.hpp"
#include "pfm/engine.hpp"
#include "pfm/experiment.hpp"

#include "json.hpp"

#include <string>

namespace pfm {

using Json = nlohmann::json;

Json config_to_json(const RetrievalConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
RetrievalConfig config_from_json(const Json& j);

/// Flat list: {method, weights?, items: [{item_id, front, position, coords, score?}]}.
Json retrieval_result_json(const RetrievalResult& result, const FeatureDataset& ds);

/// Grouped by front: {method, weights?, queries, fronts: [[{item_id, coords, position, score?}]]}.
/// Score-based methods produce a single group.
Json query_response_json(const RetrievalResult& result, const FeatureDataset& ds, const QuerySet& qs);

/// {queries, depth, fronts: [[{item_id, coords, position}]]}; depth is the number of fronts returned.
Json front_view_json(const FrontView& view, const FeatureDataset& ds, const QuerySet& qs);

Json layering_json(const ParetoLayering& layering);

Json metric_report_json(const MetricReport& report);
/// One row per k, one column per method.
std::string metric_report_csv(const MetricReport& report);
/// One row per grid point, one column per front.
std::string front_profiles_csv(const FrontProfiles& profiles);

Json continuum_table_json(const ContinuumTable& table);
std::string continuum_table_csv(const ContinuumTable& table);
Json probe_report_json(const std::vector<ProbeLevel>& levels);
std::string probe_report_csv(const std::vector<ProbeLevel>& levels);

} // namespace pfm
