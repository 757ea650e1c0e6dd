#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "url_lens/pipeline/run_config.hpp"
#include "url_lens/pipeline/stages.hpp"

namespace url_lens::pipeline {

/// Scalar metrics aggregated across seeds, as JSON pointers into a per-agent record.
const std::vector<std::string>& reported_scalars();

std::string display_name(agents::AgentKind kind);

/// Median-over-seeds summary, table1.csv and figures under report/.
/// `gaps` is set when any agent or seed lacks metrics.
std::vector<std::string> build_report(const RunConfig& config, const Layout& layout, const std::string& config_hash,
                                      bool& gaps);

/// Median of the finite values; NaN when there are none.
double median(std::vector<double> values);

/// Per-agent summary CSV: Agent, Coverage (%), Entropy, Silhouette, Davies-Bouldin.
std::string table1_csv(const nlohmann::ordered_json& agents_summary, const std::vector<agents::AgentKind>& order,
                       const std::string& config_hash, const char* field);

}  // namespace url_lens::pipeline
