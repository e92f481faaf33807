#pragma once

// On-disk formats: model, template set and evaluation report as JSON; essence,
// loss histories, orderings and plot data as CSV/TSV. Every file carries the
// config hash and seed of the run that produced it. Text formats put them in
// a leading "# config_hash=... seed=..." line, which all readers skip.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "narrative/essence.hpp"
#include "narrative/eval.hpp"
#include "narrative/fitcurve.hpp"
#include "narrative/templates.hpp"

namespace nd {

using json = nlohmann::json;

struct Provenance {
  std::string config_hash;  // 16 hex digits
  std::uint64_t seed = 0;
};

/// FNV-1a of the compact dump (object keys are sorted by nlohmann::json).
std::string config_hash(const json& config);

std::string provenance_line(const Provenance& p);

json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j);  // missing keys keep defaults
json to_json(const GAConfig& c);
GAConfig ga_config_from_json(const json& j);

json model_to_json(const EssenceModel& model, const TrainConfig& config,
                   double best_validation_loss, const Provenance& p);
EssenceModel model_from_json(const json& j);

json templates_to_json(const TemplateSet& set, double final_cost, const Provenance& p);
TemplateSet templates_from_json(const json& j);

json report_to_json(const EvalReport& r, const Provenance& p);
EvalReport report_from_json(const json& j);

json fit_to_json(const std::string& album_id, std::size_t template_index, const FitResult& fit);

/// Stable text form of a JSON document (2-space indent, trailing newline).
std::string dump(const json& j);
json load_json(const std::filesystem::path& path);

/// Essence table: track_id,essence_1..essence_d.
struct EssenceRow {
  std::string track_id;
  std::vector<double> values;
};
std::string format_essence_csv(const std::vector<EssenceRow>& rows, const Provenance& p);
std::vector<EssenceRow> parse_essence_csv(std::string_view text, const std::string& source);

std::string format_history_csv(const std::vector<EpochRecord>& history, const Provenance& p);
std::string format_cost_history_csv(const std::vector<double>& history, const Provenance& p);

/// condition<TAB>mean<TAB>stderr
std::string format_plot_tsv(const EvalReport& r, const Provenance& p);

/// x followed by one column per template, sampled on `points` evenly spaced x.
std::string format_curve_tsv(const TemplateSet& set, std::size_t points, const Provenance& p);
std::string format_curve_svg(const TemplateSet& set, std::size_t points, const Provenance& p);

}  // namespace nd
