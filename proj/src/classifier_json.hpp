#pragma once

#include <json.hpp>

#include "malgroup/classifier.hpp"

namespace malgroup::detail {

nlohmann::json tree_json_obj(const TreeNode& tree);
TreePtr tree_from_json_obj(const nlohmann::json& j);
nlohmann::json forest_json_obj(const ForestModel& forest);
ForestModel forest_from_obj(const nlohmann::json& j);

}  // namespace malgroup::detail
