#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sonarflow {

std::string_view version();

/// (name, version) of the linked third-party libraries.
std::vector<std::pair<std::string, std::string>> dependency_versions();

}  // namespace sonarflow
