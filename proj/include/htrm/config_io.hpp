#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "htrm/experiments.hpp"
#include "htrm/field_models.hpp"

namespace htrm {

inline constexpr const char* kToolName = "htrm";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSummarySchema = 1;

nlohmann::json model_to_json(const FieldModel& model);
FieldModel model_from_json(const nlohmann::json& j);

nlohmann::json truncation_to_json(const TruncationParams& t);
TruncationParams truncation_from_json(const nlohmann::json& j, double alpha);

// Full document with every field spelled out.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Hash of the canonical serialization; threads and output paths do not enter it.
std::string config_fingerprint(const ExperimentConfig& cfg);
// "htrm <version> fingerprint=<hex>"
std::string output_stamp(const std::string& fingerprint);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;  // '#' lines, without the marker

    std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace htrm
