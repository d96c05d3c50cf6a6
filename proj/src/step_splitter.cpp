#include "rankreward/step_splitter.hpp"

#include <stdexcept>

#include "rankreward/text.hpp"

namespace rankreward {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool starts_ordinal(std::string_view line) {
  line = text::trim(line);
  if (text::starts_with_ci(line, "step")) {
    std::size_t i = 4;
    while (i < line.size() && line[i] == ' ') ++i;
    return i < line.size() && is_digit(line[i]);
  }
  std::size_t i = 0;
  while (i < line.size() && is_digit(line[i])) ++i;
  return i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')') &&
         (i + 1 == line.size() || line[i + 1] == ' ');
}

void flush(std::string& current, std::vector<std::string>& out) {
  const auto t = text::trim(current);
  if (!t.empty()) out.emplace_back(t);
  current.clear();
}

}  // namespace

std::string_view to_string(StepSplitter s) {
  switch (s) {
    case StepSplitter::kBlankLine: return "blank_line";
    case StepSplitter::kOrdinal: return "ordinal";
    case StepSplitter::kLine: return "line";
  }
  return "blank_line";
}

StepSplitter parse_step_splitter(std::string_view name) {
  if (name == "blank_line") return StepSplitter::kBlankLine;
  if (name == "ordinal") return StepSplitter::kOrdinal;
  if (name == "line") return StepSplitter::kLine;
  throw std::invalid_argument("unknown step splitter '" + std::string(name) + "'");
}

std::vector<std::string> split_steps(std::string_view trajectory, StepSplitter mode) {
  std::vector<std::string> out;
  std::string current;
  for (std::string_view line : text::lines(trajectory)) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    switch (mode) {
      case StepSplitter::kLine:
        current = std::string(line);
        flush(current, out);
        continue;
      case StepSplitter::kBlankLine:
        if (text::trim(line).empty()) {
          flush(current, out);
          continue;
        }
        break;
      case StepSplitter::kOrdinal:
        if (starts_ordinal(line)) flush(current, out);
        break;
    }
    if (!current.empty()) current += '\n';
    current += line;
  }
  flush(current, out);
  return out;
}

}  // namespace rankreward
