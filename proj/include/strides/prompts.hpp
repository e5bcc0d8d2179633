#pragma once

#include <map>
#include <string>
#include <string_view>

namespace strides::prompts {

// Versioned template assets for every agent role. Template variables use
// {name} placeholders; literal braces in the embedded JSON schemas are left
// untouched by render() because only known keys are substituted.

extern const std::string_view kDirectReasoning;
extern const std::string_view kTheoryArchitect;
extern const std::string_view kMethodology;
extern const std::string_view kDataRetrieval;
extern const std::string_view kSimulationParams;
extern const std::string_view kAnalysisPlan;
extern const std::string_view kCritic;
extern const std::string_view kSummary;
extern const std::string_view kGrader;
extern const std::string_view kRepairInstruction;

// Pure: the same template and variables always produce byte-identical text.
// Unknown placeholders are preserved verbatim.
std::string render(std::string_view tmpl,
                   const std::map<std::string, std::string>& vars);

}  // namespace strides::prompts
