#pragma once

// nlohmann::json conversions shared by the library sources. Not installed.

#include <json.hpp>

#include "culsim/classifiers.hpp"
#include "culsim/dialogue.hpp"
#include "culsim/textrep.hpp"

namespace culsim::detail {

nlohmann::json labels_to_json(const LabelVector& bits);
LabelVector labels_from_json(const nlohmann::json& j);

nlohmann::json hyperparameters_to_json(const Hyperparameters& params);
Hyperparameters hyperparameters_from_json(const nlohmann::json& j);

nlohmann::json vectorizer_to_json(const VectorizerModel& model);
VectorizerModel vectorizer_from_json(const nlohmann::json& j);

nlohmann::json classifier_to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const nlohmann::json& j);

nlohmann::json event_to_json(const Event& event);
nlohmann::json turn_record_to_json(const TurnRecord& record);
TurnRecord turn_record_from_json(const nlohmann::json& j);

}  // namespace culsim::detail
