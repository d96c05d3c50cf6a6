#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rankreward {

/// How a trajectory is cut into PRM steps.
enum class StepSplitter {
  kBlankLine,  // paragraphs separated by one or more blank lines
  kOrdinal,    // a new step starts at lines like "Step 3", "3.", "3)"
  kLine,       // every nonblank line
};

std::string_view to_string(StepSplitter s);
StepSplitter parse_step_splitter(std::string_view name);

/// Trimmed, nonempty steps in order. Text before the first ordinal marker is its own step.
std::vector<std::string> split_steps(std::string_view trajectory, StepSplitter mode);

}  // namespace rankreward
